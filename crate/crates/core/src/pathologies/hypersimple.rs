//! Deficiency sets of injections and the discrete space they make compact.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covers::{cover_check_bruteforce, lift_cover_relation_to_closure, CoverAnswer, CoverRelation, Exactness};
use crate::foundations::{unpair, EnumSet, FinSet};
use crate::separation::DiscreteWitness;
use crate::spaces::{subbase_closure, Family, Idx, SpaceBase};

type NatFn = Arc<dyn Fn(u64) -> u64 + Send + Sync>;
type NatPred = Arc<dyn Fn(u64) -> bool + Send + Sync>;

/// A one-to-one `f`, optionally with an exact range test.
#[derive(Clone)]
pub struct Injection {
    pub name: String,
    pub f: NatFn,
    pub range_oracle: Option<NatPred>,
    /// Exact membership in the deficiency set.
    pub deficiency_oracle: Option<NatPred>,
}

impl fmt::Debug for Injection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Injection({})", self.name)
    }
}

impl Injection {
    pub fn new(name: impl Into<String>, f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        Injection { name: name.into(), f: Arc::new(f), range_oracle: None, deficiency_oracle: None }
    }

    pub fn apply(&self, x: u64) -> u64 {
        (self.f)(x)
    }

    pub fn in_range(&self, v: u64) -> Option<bool> {
        self.range_oracle.as_ref().map(|r| r(v))
    }

    pub fn identity() -> Self {
        let mut i = Injection::new("identity", |x| x);
        i.range_oracle = Some(Arc::new(|_| true));
        i.deficiency_oracle = Some(Arc::new(|_| false));
        i
    }

    /// The prefix, then `max + 1, max + 2, ...`.
    pub fn from_prefix(prefix: Vec<u64>) -> Self {
        let top = prefix.iter().copied().max().map_or(0, |m| m + 1);
        let len = prefix.len() as u64;
        let p = Arc::new(prefix);
        let p2 = p.clone();
        let mut i = Injection::new(format!("prefix{:?}", p.as_slice()), move |x| if x < len { p[x as usize] } else { top + (x - len) });
        i.range_oracle = Some(Arc::new(move |v| v >= top || p2.contains(&v)));
        i
    }

    /// `f(2k) = 3k`, `f(2k+1) = 6k+1`: evens and 1 stay out of the deficiency
    /// set, each odd `x >= 3` enters it at stage `x + 1`.
    pub fn fixture() -> Self {
        let mut i = Injection::new("fixture", |x| if x % 2 == 0 { 3 * (x / 2) } else { 6 * (x / 2) + 1 });
        i.range_oracle = Some(Arc::new(|v| v % 3 == 0 || v % 6 == 1));
        i.deficiency_oracle = Some(Arc::new(|x| x % 2 == 1 && x >= 3));
        i
    }

    /// First pair `x < y <= n` with equal values.
    pub fn injectivity_violation(&self, n: u64) -> Option<(u64, u64)> {
        let mut seen = std::collections::HashMap::new();
        for x in 0..=n {
            if let Some(&y) = seen.get(&self.apply(x)) {
                return Some((y, x));
            }
            seen.insert(self.apply(x), x);
        }
        None
    }
}

/// Stage `s`: `{x < s : some y with x < y <= s has f(y) < f(x)}`.
pub fn deficiency_set(f: &Injection) -> EnumSet<u64> {
    let f = f.clone();
    EnumSet::new(format!("deficiency({})", f.name), move |s| {
        let vals: Vec<u64> = (0..=s).map(|x| f.apply(x)).collect();
        let mut suffix_min = u64::MAX;
        let mut out = Vec::new();
        for x in (0..s as usize).rev() {
            suffix_min = suffix_min.min(vals[x + 1]);
            if suffix_min < vals[x] {
                out.push(x as u64);
            }
        }
        out.into_iter().collect()
    })
}

/// A set given by stages together with exact membership and entry stages.
#[derive(Clone)]
pub struct OracleSet {
    pub code: EnumSet<u64>,
    /// Stage at which `y` enters, `None` if never.
    pub entry: Arc<dyn Fn(u64) -> Option<u64> + Send + Sync>,
}

impl fmt::Debug for OracleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OracleSet({})", self.code.note)
    }
}

impl OracleSet {
    pub fn contains(&self, y: u64) -> bool {
        (self.entry)(y).is_some()
    }

    pub fn in_stage(&self, y: u64, n: u64) -> bool {
        (self.entry)(y).is_some_and(|e| e <= n)
    }

    pub fn empty() -> Self {
        OracleSet { code: EnumSet::empty(), entry: Arc::new(|_| None) }
    }

    /// First `y <= n` where the entry oracle and the stage sets `<= stages` disagree.
    pub fn oracle_disagreement(&self, n: u64, stages: u64) -> Option<u64> {
        let last = self.code.stage_of(stages);
        (0..=n).find(|&y| {
            let by_code = last.contains(&y).then(|| (0..=stages).find(|&s| self.code.member_at(&y, s)).unwrap_or(stages));
            match ((self.entry)(y), by_code) {
                (Some(e), Some(c)) => e != c,
                (Some(e), None) => e <= stages,
                (None, Some(_)) => true,
                (None, None) => false,
            }
        })
    }
}

/// The deficiency set of the fixture injection with its exact oracle.
pub fn fixture_deficiency() -> OracleSet {
    let f = Injection::fixture();
    OracleSet { code: deficiency_set(&f), entry: Arc::new(|y| (y % 2 == 1 && y >= 3).then_some(y + 1)) }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum BExtraction {
    /// `b` misses `A` and meets every tested `s_n`.
    Found {
        b: FinSet<u64>,
        r0: u64,
    },
    /// Pairwise disjoint `d_i = s_{n_i} minus a_{m_i}`, each meeting the complement of `A`.
    DisjointFamily {
        d: Vec<FinSet<u64>>,
    },
    UnknownAtBound,
}

/// `r(m,n) = min(s_n minus a_m)` for `n <= bound` and `m` up to `bound` or,
/// if later, the stage by which every element of `A` in those `s_n` has
/// entered. If every value is at most `cap`, returns
/// `b = {x <= r0 : x not in A}`; otherwise builds disjoint `d_i` whose minima
/// climb past the previous maxima.
pub fn hypersimple_b_extraction(a: &OracleSet, s: &dyn Fn(u64) -> FinSet<u64>, bound: u64, cap: u64) -> BExtraction {
    let settle = (0..=bound).flat_map(|n| s(n).iter().filter_map(|&x| (a.entry)(x)).collect::<Vec<_>>()).max().unwrap_or(0);
    let m_top = bound.max(settle);
    let stages: Vec<FinSet<u64>> = (0..=m_top).map(|m| a.code.stage_of(m)).collect();
    let r = |m: u64, n: u64| FinSet::min(&s(n).difference(&stages[m as usize])).copied();
    let mut r0 = 0;
    for n in 0..=bound {
        if !s(n).iter().any(|&x| !a.contains(x)) {
            return BExtraction::UnknownAtBound;
        }
        for m in 0..=m_top {
            match r(m, n) {
                Some(v) => r0 = r0.max(v),
                None => return BExtraction::UnknownAtBound,
            }
        }
    }
    if r0 <= cap {
        let b: FinSet<u64> = (0..=r0).filter(|&x| !a.contains(x)).collect();
        return BExtraction::Found { b, r0 };
    }
    let mut d: Vec<FinSet<u64>> = Vec::new();
    let mut floor: Option<u64> = None;
    for m in 0..=m_top {
        for n in 0..=bound {
            let dn = s(n).difference(&stages[m as usize]);
            let Some(&lo) = FinSet::min(&dn) else { continue };
            if floor.is_none_or(|f| lo > f) && dn.iter().any(|&x| !a.contains(x)) {
                floor = FinSet::max(&dn).copied();
                d.push(dn);
            }
        }
    }
    if d.is_empty() {
        BExtraction::UnknownAtBound
    } else {
        BExtraction::DisjointFamily { d }
    }
}

/// `b` misses `A` and meets `s_n` for `n <= bound`.
pub fn verify_b(a: &OracleSet, s: &dyn Fn(u64) -> FinSet<u64>, b: &FinSet<u64>, bound: u64) -> bool {
    b.iter().all(|&x| !a.contains(x)) && (0..=bound).all(|n| s(n).iter().any(|x| b.contains(x)))
}

pub fn verify_disjoint_family(a: &OracleSet, d: &[FinSet<u64>]) -> bool {
    d.iter().all(|di| di.iter().any(|&x| !a.contains(x)))
        && d.iter().enumerate().all(|(i, di)| d[i + 1..].iter().all(|dj| di.intersect(dj).is_empty()))
}

/// `<x,y>` with `x <= y`, slot `n = <a,b>` holding `<a, a+b>`.
pub fn hyper_index(x: u64, y: u64) -> Idx {
    Idx::pair(Idx::N(x), Idx::N(y))
}

fn hyper_parts(i: &Idx) -> Option<(u64, u64)> {
    match i.nat_tuple()?.as_slice() {
        [x, y] if x <= y => Some((*x, *y)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetKind {
    Finite { max: u64 },
    Cofinite { from: u64 },
}

pub struct HypersimpleSpace {
    pub subbase: Family,
    pub base: SpaceBase,
    pub discrete: DiscreteWitness,
    /// Exact relation on the subbase, positive side checked against brute force.
    pub sub_cover: CoverRelation,
    pub cover: CoverRelation,
    pub set: OracleSet,
}

/// `B_<x,y> = {n : n = x or y in a_n}` closed under finite intersections.
pub fn hypersimple_space(a: &OracleSet, n: u64) -> HypersimpleSpace {
    let (a1, a2) = (a.clone(), a.clone());
    let subbase = Family::new(
        "hypersimple",
        |_| true,
        Some,
        |i| hyper_parts(i).is_some(),
        |k| {
            let (p, q) = unpair(k);
            hyper_index(p, p + q)
        },
        move |m, i| hyper_parts(i).is_some_and(|(x, y)| m == x || a1.in_stage(y, m)),
    );
    let base = subbase_closure(&subbase).map_family(|f| f.renamed("hypersimple"));
    let discrete = DiscreteWitness::new(move |x| {
        let y = (x..).find(|&y| !a2.contains(y)).expect("set is not cofinite");
        Idx::set(vec![hyper_index(x, y)])
    });
    let sub_cover = hypersimple_cover_relation(a, &subbase, n);
    let cover = lift_cover_relation_to_closure(&sub_cover).expect("exact").renamed("hypersimple*");
    HypersimpleSpace { subbase, base, discrete, sub_cover, cover, set: a.clone() }
}

/// Positive side: at the least `n` where some `y0` of `t` is in `a_n`, every
/// `x < n` must be the first coordinate of a member of `t`. When no `y` of
/// `t` is ever in `A` the union is finite. Brute force on points `<= n`
/// guards the positive answers.
pub fn hypersimple_cover_relation(a: &OracleSet, subbase: &Family, n: u64) -> CoverRelation {
    let (a, fam) = (a.clone(), subbase.clone());
    CoverRelation::new("hypersimple", Exactness::Exact, move |t| {
        let mut parts = Vec::with_capacity(t.len());
        for i in t.iter() {
            match hyper_parts(i) {
                Some(p) => parts.push(p),
                None => return CoverAnswer::NotCovers { witness: None },
            }
        }
        let first = parts.iter().filter_map(|&(_, y)| (a.entry)(y)).min();
        let brute = cover_check_bruteforce(&fam, t, n);
        match first {
            None => {
                let top = parts.iter().map(|p| p.0).max().map_or(0, |m| m + 1);
                let witness = (0..=top).find(|&m| !parts.iter().any(|&(x, _)| x == m));
                CoverAnswer::NotCovers { witness }
            }
            Some(m) => match (0..m).find(|&x| !parts.iter().any(|&(x2, _)| x2 == x)) {
                Some(x) => CoverAnswer::not_covers(x),
                None => match brute {
                    CoverAnswer::NotCovers { witness: Some(x) } => CoverAnswer::Conflict { witness: x },
                    _ => CoverAnswer::Covers,
                },
            },
        }
    })
}

/// Finite or cofinite, by the oracle: a closure index is cofinite iff all its `y` lie in `A`.
pub fn classify_basic(a: &OracleSet, i: &Idx) -> Option<SetKind> {
    let v = i.as_set()?;
    let mut from = 0u64;
    let mut max_x: Option<u64> = None;
    for j in v {
        let (x, y) = hyper_parts(j)?;
        match (a.entry)(y) {
            Some(e) => from = from.max(e),
            None => max_x = Some(max_x.map_or(x, |m: u64| m.min(x))),
        }
    }
    Some(match max_x {
        Some(m) => SetKind::Finite { max: m },
        None => SetKind::Cofinite { from },
    })
}

/// The classification agrees with brute force on points `<= n`.
pub fn classification_holds(base: &Family, a: &OracleSet, i: &Idx, n: u64) -> bool {
    match classify_basic(a, i) {
        Some(SetKind::Finite { max }) => base.basic_set(i, n).iter().all(|&x| x <= max),
        Some(SetKind::Cofinite { from }) => (from..=n).all(|x| base.contains(x, i)),
        None => false,
    }
}

impl CoverRelation {
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::validate_discrete_witness;

    #[test]
    fn deficiency_examples() {
        let id = deficiency_set(&Injection::identity());
        assert!((0..20).all(|s| id.stage_of(s).is_empty()));
        let f = Injection::from_prefix(vec![3, 0, 5, 1]);
        let d = deficiency_set(&f);
        assert!(d.member_at(&0, 2));
        assert!(!d.member_at(&1, 4));
    }

    #[test]
    fn fixture_oracle_matches_stages() {
        let a = fixture_deficiency();
        assert_eq!(a.oracle_disagreement(64, 256), None);
    }

    #[test]
    fn b_extraction_examples() {
        let empty = OracleSet::empty();
        match hypersimple_b_extraction(&empty, &|n| FinSet::singleton(n), 10, 1000) {
            BExtraction::Found { b, .. } => assert_eq!(b, FinSet::range(0, 10)),
            other => panic!("{other:?}"),
        }
        match hypersimple_b_extraction(&empty, &|_| FinSet::singleton(0), 10, 1000) {
            BExtraction::Found { b, .. } => assert_eq!(b, FinSet::singleton(0)),
            other => panic!("{other:?}"),
        }
        let a = fixture_deficiency();
        let s = |n: u64| FinSet::from(vec![n, n + 1]);
        match hypersimple_b_extraction(&a, &s, 32, 1000) {
            BExtraction::Found { b, .. } => assert!(verify_b(&a, &s, &b, 32)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn space_examples() {
        let a = fixture_deficiency();
        let h = hypersimple_space(&a, 64);
        // 4 is not in A.
        assert_eq!(h.subbase.basic_set(&hyper_index(2, 4), 64), vec![2]);
        // 3 enters at stage 4.
        let big = h.subbase.basic_set(&hyper_index(2, 3), 64);
        assert!(big.contains(&2) && (4..=64).all(|x| big.contains(&x)));
        assert!(validate_discrete_witness(&h.base, &h.discrete, 64).is_valid());
        let t: FinSet<Idx> = vec![hyper_index(0, 0), hyper_index(1, 2), hyper_index(0, 3)].into_iter().collect();
        let got = h.sub_cover.decide(&t);
        assert_eq!(got.covers(), cover_check_bruteforce(&h.subbase, &t, 64).covers());
    }
}
