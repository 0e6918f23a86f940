//! Indexed families of subsets, bases with intersection witnesses, and the
//! constructions on them: subbase closure, subspaces, products, open codes
//! and effectively continuous maps.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foundations::{pair, unpair, EnumSet};

/// An index into a family of basic sets.
///
/// Plain naturals cover most families; tuples index products and pair-indexed
/// subbases; sets index subbase closures.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Idx {
    N(u64),
    S(Vec<Idx>),
    T { t: Vec<Idx> },
}

impl Idx {
    pub fn set(items: impl IntoIterator<Item = Idx>) -> Idx {
        let mut v: Vec<Idx> = items.into_iter().collect();
        v.sort();
        v.dedup();
        Idx::S(v)
    }

    pub fn tup(items: Vec<Idx>) -> Idx {
        Idx::T { t: items }
    }

    pub fn pair(a: Idx, b: Idx) -> Idx {
        Idx::T { t: vec![a, b] }
    }

    pub fn nats(items: &[u64]) -> Idx {
        Idx::T { t: items.iter().map(|&x| Idx::N(x)).collect() }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Idx::N(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&[Idx]> {
        match self {
            Idx::S(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_tup(&self) -> Option<&[Idx]> {
        match self {
            Idx::T { t } => Some(t),
            _ => None,
        }
    }

    /// A tuple of naturals, if that is what this index is.
    pub fn nat_tuple(&self) -> Option<Vec<u64>> {
        self.as_tup()?.iter().map(Idx::as_nat).collect()
    }

    pub fn union(&self, other: &Idx) -> Option<Idx> {
        let (a, b) = (self.as_set()?, other.as_set()?);
        Some(Idx::set(a.iter().chain(b.iter()).cloned()))
    }
}

impl fmt::Debug for Idx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Idx::N(n) => write!(f, "{n}"),
            Idx::S(v) => f.debug_set().entries(v.iter()).finish(),
            Idx::T { t } => {
                write!(f, "<")?;
                for (k, x) in t.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x:?}")?;
                }
                write!(f, ">")
            }
        }
    }
}

pub type PointPred = Arc<dyn Fn(u64) -> bool + Send + Sync>;
pub type PointEnum = Arc<dyn Fn(u64) -> Option<u64> + Send + Sync>;
pub type PointList = Arc<dyn Fn(u64) -> Vec<u64> + Send + Sync>;
pub type IndexPred = Arc<dyn Fn(&Idx) -> bool + Send + Sync>;
pub type IndexEnum = Arc<dyn Fn(u64) -> Idx + Send + Sync>;
pub type MemberFn = Arc<dyn Fn(u64, &Idx) -> bool + Send + Sync>;
pub type WitnessFn = Arc<dyn Fn(u64, &Idx, &Idx) -> Idx + Send + Sync>;

/// A sequence of subsets of a countable set `X`, indexed by an enumerable index set.
#[derive(Clone)]
pub struct Family {
    pub name: String,
    pub point_member: PointPred,
    /// Enumeration of `X`; slot `n` may be empty.
    pub point_enum: PointEnum,
    pub points_fn: PointList,
    pub index_member: IndexPred,
    pub index_enum: IndexEnum,
    pub member: MemberFn,
    /// How far index searches go by default.
    pub search_bound: u64,
    /// `Some(n)` when `points(n)` already lists all of `X`.
    pub finite_at: Option<u64>,
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family({})", self.name)
    }
}

fn default_points(pm: PointPred, pe: PointEnum) -> PointList {
    Arc::new(move |n| {
        let mut v: Vec<u64> = (0..=n).filter_map(|k| pe(k)).filter(|&x| pm(x)).collect();
        v.sort_unstable();
        v.dedup();
        v
    })
}

impl Family {
    pub fn new(
        name: impl Into<String>,
        point_member: impl Fn(u64) -> bool + Send + Sync + 'static,
        point_enum: impl Fn(u64) -> Option<u64> + Send + Sync + 'static,
        index_member: impl Fn(&Idx) -> bool + Send + Sync + 'static,
        index_enum: impl Fn(u64) -> Idx + Send + Sync + 'static,
        member: impl Fn(u64, &Idx) -> bool + Send + Sync + 'static,
    ) -> Family {
        let pm: PointPred = Arc::new(point_member);
        let pe: PointEnum = Arc::new(point_enum);
        Family {
            name: name.into(),
            points_fn: default_points(pm.clone(), pe.clone()),
            point_member: pm,
            point_enum: pe,
            index_member: Arc::new(index_member),
            index_enum: Arc::new(index_enum),
            member: Arc::new(member),
            search_bound: 32,
            finite_at: None,
        }
    }

    /// Points of `X` reached by the first `n + 1` enumeration slots, ascending.
    pub fn points(&self, n: u64) -> Vec<u64> {
        (self.points_fn)(n)
    }

    pub fn is_point(&self, x: u64) -> bool {
        (self.point_member)(x)
    }

    /// Indices reached by the first `sb + 1` enumeration slots, in enumeration order.
    pub fn indices(&self, sb: u64) -> Vec<Idx> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for n in 0..=sb {
            let i = (self.index_enum)(n);
            if (self.index_member)(&i) && seen.insert(i.clone()) {
                out.push(i);
            }
        }
        out
    }

    pub fn contains(&self, x: u64, i: &Idx) -> bool {
        (self.member)(x, i)
    }

    pub fn is_index(&self, i: &Idx) -> bool {
        (self.index_member)(i)
    }

    pub fn is_finite_within(&self, n: u64) -> bool {
        self.finite_at.is_some_and(|f| f <= n)
    }

    /// Members of `U_i` among `pts`.
    pub fn mask(&self, i: &Idx, pts: &[u64]) -> FixedBitSet {
        let mut m = FixedBitSet::with_capacity(pts.len());
        for (k, &x) in pts.iter().enumerate() {
            if self.contains(x, i) {
                m.insert(k);
            }
        }
        m
    }

    pub fn basic_set(&self, i: &Idx, n: u64) -> Vec<u64> {
        self.points(n).into_iter().filter(|&x| self.contains(x, i)).collect()
    }

    pub fn with_search_bound(mut self, sb: u64) -> Self {
        self.search_bound = sb;
        self
    }

    pub fn with_finite_at(mut self, n: u64) -> Self {
        self.finite_at = Some(n);
        self
    }

    pub fn with_points(mut self, f: impl Fn(u64) -> Vec<u64> + Send + Sync + 'static) -> Self {
        self.points_fn = Arc::new(f);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// A base: a family together with the intersection witness `k`.
#[derive(Clone)]
pub struct SpaceBase {
    pub family: Family,
    pub witness_fn: WitnessFn,
}

impl Deref for SpaceBase {
    type Target = Family;
    fn deref(&self) -> &Family {
        &self.family
    }
}

impl fmt::Debug for SpaceBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpaceBase({})", self.family.name)
    }
}

impl SpaceBase {
    pub fn new(family: Family, witness: impl Fn(u64, &Idx, &Idx) -> Idx + Send + Sync + 'static) -> Self {
        SpaceBase { family, witness_fn: Arc::new(witness) }
    }

    pub fn witness(&self, x: u64, i: &Idx, j: &Idx) -> Idx {
        (self.witness_fn)(x, i, j)
    }

    /// Left fold of the witness along `idxs` at the point `x`; `None` for an empty list.
    pub fn fold_witness(&self, x: u64, idxs: &[Idx]) -> Option<Idx> {
        let mut it = idxs.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, j| self.witness(x, &acc, j)))
    }

    pub fn map_family(mut self, f: impl FnOnce(Family) -> Family) -> Self {
        self.family = f(self.family);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Coverage { x: u64 },
    WitnessNotIndex { x: u64, i: Idx, j: Idx, k: Idx },
    WitnessMissesPoint { x: u64, i: Idx, j: Idx, k: Idx },
    WitnessTooLarge { x: u64, i: Idx, j: Idx, k: Idx, y: u64 },
    ContinuityMissesPoint { x: u64, j: Idx, i: Idx },
    ContinuityNotInside { x: u64, j: Idx, i: Idx, y: u64 },
    NotSingleton { x: u64, index: Idx, other: Option<u64> },
    HausdorffMisses { x0: u64, x1: u64 },
    HausdorffOverlap { x0: u64, x1: u64, y: u64 },
}

/// Counterexamples found within the stated bounds; empty means valid at scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub total_violations: u64,
    pub points: u64,
    pub search_bound: u64,
    pub instances_checked: u64,
}

const REPORT_CAP: usize = 64;

impl ValidationReport {
    pub fn new(points: u64, search_bound: u64) -> Self {
        ValidationReport { violations: vec![], total_violations: 0, points, search_bound, instances_checked: 0 }
    }

    pub fn push(&mut self, v: Violation) {
        self.total_violations += 1;
        if self.violations.len() < REPORT_CAP {
            self.violations.push(v);
        }
    }

    pub fn is_valid(&self) -> bool {
        self.total_violations == 0
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.total_violations += other.total_violations;
        self.instances_checked += other.instances_checked;
        for v in other.violations {
            if self.violations.len() < REPORT_CAP {
                self.violations.push(v);
            }
        }
    }
}

/// Memoized point masks of basic sets over a fixed point list.
pub struct MaskCache<'a> {
    fam: &'a Family,
    pub pts: Vec<u64>,
    pos: HashMap<u64, usize>,
    cache: HashMap<Idx, FixedBitSet>,
}

impl<'a> MaskCache<'a> {
    pub fn new(fam: &'a Family, pts: Vec<u64>) -> Self {
        let pos = pts.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        MaskCache { fam, pts, pos, cache: HashMap::new() }
    }

    pub fn get(&mut self, i: &Idx) -> &FixedBitSet {
        if !self.cache.contains_key(i) {
            let m = self.fam.mask(i, &self.pts);
            self.cache.insert(i.clone(), m);
        }
        &self.cache[i]
    }

    pub fn position(&self, x: u64) -> Option<usize> {
        self.pos.get(&x).copied()
    }
}

pub fn validate_base(b: &SpaceBase, n: u64, search_bound: u64) -> ValidationReport {
    let pts = b.points(n);
    let idx = b.indices(search_bound);
    let mut rep = ValidationReport::new(n, search_bound);
    let mut mc = MaskCache::new(&b.family, pts.clone());
    let masks: Vec<FixedBitSet> = idx.iter().map(|i| mc.get(i).clone()).collect();

    let mut covered = FixedBitSet::with_capacity(pts.len());
    for m in &masks {
        covered.union_with(m);
    }
    for (k, &x) in pts.iter().enumerate() {
        rep.instances_checked += 1;
        if !covered.contains(k) {
            rep.push(Violation::Coverage { x });
        }
    }

    for (a, i) in idx.iter().enumerate() {
        for (c, j) in idx.iter().enumerate() {
            let mut both = masks[a].clone();
            both.intersect_with(&masks[c]);
            for p in both.ones() {
                let x = pts[p];
                rep.instances_checked += 1;
                let k = b.witness(x, i, j);
                if !b.is_index(&k) {
                    rep.push(Violation::WitnessNotIndex { x, i: i.clone(), j: j.clone(), k });
                    continue;
                }
                let mk = mc.get(&k);
                if !mk.contains(p) {
                    rep.push(Violation::WitnessMissesPoint { x, i: i.clone(), j: j.clone(), k });
                    continue;
                }
                if let Some(bad) = mk.difference(&both).next() {
                    let y = pts[bad];
                    rep.push(Violation::WitnessTooLarge { x, i: i.clone(), j: j.clone(), k, y });
                }
            }
        }
    }
    rep
}

/// The closure of a family under finite intersections, indexed by finite sets
/// of the family's indices, with `B*_{} = X` and witness `k*(x,s,t) = s | t`.
pub fn subbase_closure(sub: &Family) -> SpaceBase {
    let (im, ie, mem) = (sub.index_member.clone(), sub.index_enum.clone(), sub.member.clone());
    let fam = Family {
        name: format!("closure({})", sub.name),
        point_member: sub.point_member.clone(),
        point_enum: sub.point_enum.clone(),
        points_fn: sub.points_fn.clone(),
        index_member: Arc::new(move |i| match i {
            Idx::S(v) => v.iter().all(|j| im(j)),
            _ => false,
        }),
        index_enum: Arc::new(move |n| Idx::set((0..64).filter(|b| n >> b & 1 == 1).map(|b| ie(b)))),
        member: Arc::new(move |x, i| match i {
            Idx::S(v) => v.iter().all(|j| mem(x, j)),
            _ => false,
        }),
        search_bound: 63,
        finite_at: sub.finite_at,
    };
    SpaceBase::new(fam, |_, s, t| s.union(t).unwrap_or_else(|| Idx::S(vec![])))
}

/// `U'_i = U_i & X'` with the witness restricted.
pub fn subspace(b: &SpaceBase, sub: impl Fn(u64) -> bool + Send + Sync + 'static, name: &str) -> SpaceBase {
    let sub: PointPred = Arc::new(sub);
    let f = &b.family;
    let (pm, pe, pts, mem) = (f.point_member.clone(), f.point_enum.clone(), f.points_fn.clone(), f.member.clone());
    let (s1, s2, s3, s4) = (sub.clone(), sub.clone(), sub.clone(), sub);
    let fam = Family {
        name: format!("{}|{}", f.name, name),
        point_member: Arc::new(move |x| s1(x) && pm(x)),
        point_enum: Arc::new(move |n| pe(n).filter(|&x| s2(x))),
        points_fn: Arc::new(move |n| pts(n).into_iter().filter(|&x| s3(x)).collect()),
        index_member: f.index_member.clone(),
        index_enum: f.index_enum.clone(),
        member: Arc::new(move |x, i| s4(x) && mem(x, i)),
        search_bound: f.search_bound,
        finite_at: f.finite_at,
    };
    SpaceBase { family: fam, witness_fn: b.witness_fn.clone() }
}

/// Product base: points `<x,y>`, indices `<i,j>`, witness
/// `m(<x,y>,<i,j>,<i',j'>) = <k(x,i,i'), l(y,j,j')>`.
///
/// Point slot `n` of the product holds `<e1(a), e2(b)>` where `n = <a,b>`.
pub fn product(b1: &SpaceBase, b2: &SpaceBase) -> SpaceBase {
    let (f1, f2) = (&b1.family, &b2.family);
    let (pm1, pm2) = (f1.point_member.clone(), f2.point_member.clone());
    let (pe1, pe2) = (f1.point_enum.clone(), f2.point_enum.clone());
    let (im1, im2) = (f1.index_member.clone(), f2.index_member.clone());
    let (ie1, ie2) = (f1.index_enum.clone(), f2.index_enum.clone());
    let (m1, m2) = (f1.member.clone(), f2.member.clone());
    let (w1, w2) = (b1.witness_fn.clone(), b2.witness_fn.clone());
    let (pm1b, pm2b) = (pm1.clone(), pm2.clone());
    let pe = {
        let (pe1, pe2) = (pe1.clone(), pe2.clone());
        move |n: u64| {
            let (a, b) = unpair(n);
            Some(pair(pe1(a)?, pe2(b)?))
        }
    };
    let pe_arc: PointEnum = Arc::new(pe);
    let pe_for_points = pe_arc.clone();
    let fam = Family {
        name: format!("({})x({})", f1.name, f2.name),
        point_member: Arc::new(move |z| {
            let (x, y) = unpair(z);
            pm1(x) && pm2(y)
        }),
        point_enum: pe_arc,
        points_fn: Arc::new(move |n| {
            let mut v: Vec<u64> = (0..=n)
                .filter_map(|k| pe_for_points(k))
                .filter(|&z| {
                    let (x, y) = unpair(z);
                    pm1b(x) && pm2b(y)
                })
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        }),
        index_member: Arc::new(move |i| match i.as_tup() {
            Some([a, b]) => im1(a) && im2(b),
            _ => false,
        }),
        index_enum: Arc::new(move |n| {
            let (a, b) = unpair(n);
            Idx::pair(ie1(a), ie2(b))
        }),
        member: Arc::new(move |z, i| match i.as_tup() {
            Some([a, b]) => {
                let (x, y) = unpair(z);
                m1(x, a) && m2(y, b)
            }
            _ => false,
        }),
        search_bound: 48,
        finite_at: None,
    };
    SpaceBase::new(fam, move |z, i, j| {
        let (x, y) = unpair(z);
        match (i.as_tup(), j.as_tup()) {
            (Some([i1, i2]), Some([j1, j2])) => Idx::pair(w1(x, i1, j1), w2(y, i2, j2)),
            _ => i.clone(),
        }
    })
}

/// The grid of product points whose coordinates are among the first `n + 1`
/// points of each factor.
pub fn product_grid(b1: &Family, b2: &Family, n: u64) -> Vec<u64> {
    let (p1, p2) = (b1.points(n), b2.points(n));
    let mut v: Vec<u64> = p1.iter().flat_map(|&x| p2.iter().map(move |&y| pair(x, y))).collect();
    v.sort_unstable();
    v
}

/// An enumerable set of indices standing for the union of their basic sets.
pub type OpenCode = EnumSet<Idx>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum OpenCheck {
    /// Agreement at scale; `first_visible` maps each point of the union to the
    /// stage its covering index appeared, `caveats` lists points of `G` that
    /// the code has not reached by the stage bound while still enumerating.
    Consistent {
        first_visible: BTreeMap<u64, u64>,
        caveats: Vec<u64>,
    },
    Violation {
        x: u64,
    },
}

pub fn effectively_open_check(b: &Family, code: &OpenCode, g: impl Fn(u64) -> bool, n: u64, stages: u64) -> OpenCheck {
    let mut first_visible = BTreeMap::new();
    let mut caveats = Vec::new();
    let sets: Vec<_> = (0..=stages).map(|s| code.stage_of(s)).collect();
    for x in b.points(n) {
        let vis = (0..=stages as usize).find(|&s| sets[s].iter().any(|i| b.contains(x, i)));
        match (g(x), vis) {
            (false, Some(_)) => return OpenCheck::Violation { x },
            (true, Some(s)) => {
                first_visible.insert(x, s as u64);
            }
            (true, None) => {
                if code.is_settled_by(stages) {
                    return OpenCheck::Violation { x };
                }
                caveats.push(x);
            }
            (false, None) => {}
        }
    }
    OpenCheck::Consistent { first_visible, caveats }
}

pub type PointMap = Arc<dyn Fn(u64) -> u64 + Send + Sync>;

/// `phi(x,j)`: an index of a neighbourhood of `x` mapped into `V_j`.
#[derive(Clone)]
pub struct ContinuityWitness {
    pub phi: Arc<dyn Fn(u64, &Idx) -> Idx + Send + Sync>,
}

impl ContinuityWitness {
    pub fn new(phi: impl Fn(u64, &Idx) -> Idx + Send + Sync + 'static) -> Self {
        ContinuityWitness { phi: Arc::new(phi) }
    }
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("continuity witness fails at scale: {0} violations")]
    BadContinuityWitness(u64),
}

pub fn validate_continuity_witness(
    f: &PointMap,
    w: &ContinuityWitness,
    x_space: &Family,
    y_space: &Family,
    n: u64,
    search_bound: u64,
) -> ValidationReport {
    let mut rep = ValidationReport::new(n, search_bound);
    let pts = x_space.points(n);
    for x in &pts {
        for j in y_space.indices(search_bound) {
            if !y_space.contains(f(*x), &j) {
                continue;
            }
            rep.instances_checked += 1;
            let i = (w.phi)(*x, &j);
            if !x_space.contains(*x, &i) {
                rep.push(Violation::ContinuityMissesPoint { x: *x, j, i });
                continue;
            }
            if let Some(&y) = pts.iter().find(|&&y| x_space.contains(y, &i) && !y_space.contains(f(y), &j)) {
                rep.push(Violation::ContinuityNotInside { x: *x, j, i, y });
            }
        }
    }
    rep
}

/// Code for `f^-1[union of V_j, j in B]`; stage `s` holds `phi(x,j)` for the
/// first `s + 1` points `x` and `j` visible in `B` at stage `s` with `f(x) in V_j`.
pub fn preimage_open_code(
    f: &PointMap,
    w: &ContinuityWitness,
    x_space: &Family,
    y_space: &Family,
    bcode: &OpenCode,
    n: u64,
    search_bound: u64,
) -> Result<OpenCode, SpaceError> {
    let rep = validate_continuity_witness(f, w, x_space, y_space, n, search_bound);
    if !rep.is_valid() {
        return Err(SpaceError::BadContinuityWitness(rep.total_violations));
    }
    let (f, w, xs, ys, bc) = (f.clone(), w.clone(), x_space.clone(), y_space.clone(), bcode.clone());
    Ok(EnumSet::new("preimage code", move |s| {
        let js = bc.stage_of(s);
        let mut out = Vec::new();
        for x in xs.points(s) {
            for j in js.iter() {
                if ys.contains(f(x), j) {
                    out.push((w.phi)(x, j));
                }
            }
        }
        out.into_iter().collect()
    }))
}

/// `U_i = {i}` on `{0..n-1}`, witness `k(x,i,j) = i`.
pub fn discrete(n: u64) -> SpaceBase {
    let fam = Family::new(
        format!("discrete:{n}"),
        move |x| x < n,
        move |k| (k < n).then_some(k),
        move |i| matches!(i, Idx::N(k) if *k < n),
        Idx::N,
        |x, i| matches!(i, Idx::N(k) if *k == x),
    )
    .with_search_bound(n.max(1) - 1)
    .with_finite_at(n.max(1) - 1);
    SpaceBase::new(fam, |_, i, _| i.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundations::FinSet;

    fn evens_and_threes() -> Family {
        Family::new(
            "evens-threes",
            |_| true,
            Some,
            |i| matches!(i, Idx::N(0) | Idx::N(1)),
            |n| Idx::N(n % 2),
            |x, i| match i {
                Idx::N(0) => x % 2 == 0,
                Idx::N(1) => x % 3 == 0,
                _ => false,
            },
        )
    }

    #[test]
    fn discrete_base_is_valid() {
        assert!(validate_base(&discrete(10), 64, 9).is_valid());
    }

    #[test]
    fn empty_family_fails_coverage() {
        let fam = Family::new("empty", |x| x == 0, |k| (k == 0).then_some(0), |i| *i == Idx::N(0), |_| Idx::N(0), |_, _| false);
        let b = SpaceBase::new(fam, |_, i, _| i.clone());
        let rep = validate_base(&b, 4, 4);
        assert_eq!(rep.violations, vec![Violation::Coverage { x: 0 }]);
    }

    #[test]
    fn closure_examples() {
        let c = subbase_closure(&evens_and_threes());
        let empty = Idx::S(vec![]);
        assert!((0..=12).all(|x| c.contains(x, &empty)));
        let s = Idx::set(vec![Idx::N(1), Idx::N(2)]);
        let t = Idx::set(vec![Idx::N(2), Idx::N(3)]);
        assert_eq!(c.witness(5, &s, &t), Idx::set(vec![Idx::N(1), Idx::N(2), Idx::N(3)]));
        let both = Idx::set(vec![Idx::N(0), Idx::N(1)]);
        let got: Vec<u64> = (0..=12).filter(|&x| c.contains(x, &both)).collect();
        assert_eq!(got, vec![0, 6, 12]);
        assert!(validate_base(&c, 64, 3).is_valid());
    }

    #[test]
    fn subspace_examples() {
        let d = discrete(10);
        let full = subspace(&d, |_| true, "all");
        for x in 0..12 {
            for i in 0..12 {
                assert_eq!(full.contains(x, &Idx::N(i)), d.contains(x, &Idx::N(i)));
            }
        }
        let none = subspace(&d, |_| false, "none");
        assert!((0..10).all(|i| none.basic_set(&Idx::N(i), 20).is_empty()));
        let ev = subspace(&d, |x| x % 2 == 0, "evens");
        assert!(ev.basic_set(&Idx::N(3), 20).is_empty());
        assert_eq!(ev.basic_set(&Idx::N(4), 20), vec![4]);
        assert!(validate_base(&ev, 64, 9).is_valid());
    }

    #[test]
    fn product_examples() {
        let one = discrete(1);
        let p = product(&one, &one);
        assert_eq!(p.points(10), vec![0]);
        assert!(p.contains(0, &Idx::pair(Idx::N(0), Idx::N(0))));
        let two = discrete(2);
        let p = product(&two, &two);
        let pts = p.points(20);
        assert_eq!(pts.len(), 4);
        for a in 0..2 {
            for b in 0..2 {
                let i = Idx::pair(Idx::N(a), Idx::N(b));
                assert_eq!(p.basic_set(&i, 20), vec![pair(a, b)]);
            }
        }
        let i = Idx::pair(Idx::N(1), Idx::N(0));
        assert_eq!(
            p.witness(pair(1, 0), &i, &i),
            Idx::pair(two.witness(1, &Idx::N(1), &Idx::N(1)), two.witness(0, &Idx::N(0), &Idx::N(0)))
        );
        assert!(validate_base(&p, 20, 20).is_valid());
    }

    #[test]
    fn open_check_examples() {
        let d = discrete(10);
        assert!(matches!(effectively_open_check(&d, &EnumSet::empty(), |_| false, 64, 16), OpenCheck::Consistent { .. }));
        let code = EnumSet::constant(FinSet::singleton(Idx::N(3)));
        match effectively_open_check(&d, &code, |x| x == 3, 64, 16) {
            OpenCheck::Consistent { first_visible, caveats } => {
                assert_eq!(first_visible.keys().copied().collect::<Vec<_>>(), vec![3]);
                assert!(caveats.is_empty());
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(effectively_open_check(&d, &code, |x| x == 3 || x == 4, 64, 16), OpenCheck::Violation { x: 4 });
    }

    #[test]
    fn continuity_examples() {
        let d = discrete(6);
        let id: PointMap = Arc::new(|x| x);
        let w = ContinuityWitness::new(|_, j| j.clone());
        assert!(validate_continuity_witness(&id, &w, &d, &d, 64, 5).is_valid());
        let code = EnumSet::from_entries("b", vec![(Idx::N(2), 0), (Idx::N(4), 3)]);
        let pre = preimage_open_code(&id, &w, &d, &d, &code, 64, 5).unwrap();
        assert!(pre.equal_at_bound(&code, 3) || pre.stage_of(10) == code.stage_of(10));
        assert!(preimage_open_code(&id, &w, &d, &d, &EnumSet::empty(), 64, 5).unwrap().stage_of(10).is_empty());

        let bad = ContinuityWitness::new(|_, _| Idx::N(0));
        let rep = validate_continuity_witness(&id, &bad, &d, &d, 64, 5);
        assert_eq!(rep.violations[0], Violation::ContinuityMissesPoint { x: 1, j: Idx::N(1), i: Idx::N(0) });
        assert!(preimage_open_code(&id, &bad, &d, &d, &code, 64, 5).is_err());
    }

    #[test]
    fn constant_map_preimage_covers() {
        let two = discrete(2);
        let one = discrete(1);
        let f: PointMap = Arc::new(|_| 0);
        let everything = subbase_closure(&evens_and_threes());
        let _ = everything;
        // X is discrete on two points; the preimage of the single basic set is
        // covered by the singletons.
        let w = ContinuityWitness::new(|x, _| Idx::N(x));
        let code = EnumSet::constant(FinSet::singleton(Idx::N(0)));
        let pre = preimage_open_code(&f, &w, &two, &one, &code, 8, 1).unwrap();
        let s = (0..=8).find(|&s| {
            let st = pre.stage_of(s);
            two.points(8).iter().all(|&x| st.iter().any(|i| two.contains(x, i)))
        });
        assert!(s.is_some());
    }
}
