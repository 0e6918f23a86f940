//! Countable linear orders, their interval topologies, gaps and cuts.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{lift_cover_relation_to_closure, CoverAnswer, CoverRelation, Exactness};
use crate::foundations::{bits, pair, unpair, EnumSet, FinSet};
use crate::separation::HausdorffWitness;
use crate::spaces::{Family, Idx, OpenCode, SpaceBase};

/// Endpoint token for `+inf`.
pub const POS_INF: u64 = u64::MAX;
/// Endpoint token for `-inf`.
pub const NEG_INF: u64 = u64::MAX - 1;

type LessFn = Arc<dyn Fn(u64, u64) -> bool + Send + Sync>;
type GapFn = Arc<dyn Fn(u64, u64) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct LinearOrder {
    pub name: String,
    pub less: LessFn,
    pub member: Arc<dyn Fn(u64) -> bool + Send + Sync>,
    /// Every domain point is `<= finite_at`.
    pub finite_at: Option<u64>,
    /// Exact gap test for `x < y`, when known.
    pub gap_oracle: Option<GapFn>,
}

impl fmt::Debug for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearOrder({})", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrderViolation {
    #[error("{x} < {x}")]
    Reflexive { x: u64 },
    #[error("{x} and {y} are incomparable")]
    NotTotal { x: u64, y: u64 },
    #[error("{x} < {y} < {z} but not {x} < {z}")]
    NotTransitive { x: u64, y: u64, z: u64 },
    #[error("{x} < {y} and {y} < {x}")]
    NotAntisymmetric { x: u64, y: u64 },
}

impl LinearOrder {
    pub fn new(
        name: impl Into<String>,
        member: impl Fn(u64) -> bool + Send + Sync + 'static,
        less: impl Fn(u64, u64) -> bool + Send + Sync + 'static,
    ) -> Self {
        LinearOrder { name: name.into(), less: Arc::new(less), member: Arc::new(member), finite_at: None, gap_oracle: None }
    }

    pub fn with_finite_at(mut self, n: u64) -> Self {
        self.finite_at = Some(n);
        self
    }

    pub fn with_gaps(mut self, g: impl Fn(u64, u64) -> bool + Send + Sync + 'static) -> Self {
        self.gap_oracle = Some(Arc::new(g));
        self
    }

    /// Finite order on `0..perm.len()` ranked by `perm`: `x < y` iff `perm[x] < perm[y]`.
    pub fn from_ranks(name: impl Into<String>, perm: Vec<u64>) -> Self {
        let n = perm.len() as u64;
        let p = Arc::new(perm);
        let q = p.clone();
        LinearOrder::new(name, move |x| x < n, move |x, y| x < n && y < n && p[x as usize] < q[y as usize]).with_finite_at(n.max(1) - 1)
    }

    pub fn lt(&self, x: u64, y: u64) -> bool {
        (self.less)(x, y)
    }

    pub fn is_member(&self, x: u64) -> bool {
        (self.member)(x)
    }

    /// Domain points `<= n`.
    pub fn points(&self, n: u64) -> Vec<u64> {
        let top = self.finite_at.map_or(n, |f| f.min(n));
        (0..=top).filter(|&x| self.is_member(x)).collect()
    }

    pub fn cmp(&self, x: u64, y: u64) -> Ordering {
        if x == y {
            Ordering::Equal
        } else if self.lt(x, y) {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    /// Points `<= n` in increasing order.
    pub fn sorted(&self, n: u64) -> Vec<u64> {
        let mut v = self.points(n);
        v.sort_by(|&a, &b| self.cmp(a, b));
        v
    }

    /// Order with endpoint tokens adjoined.
    pub fn ext_lt(&self, a: u64, b: u64) -> bool {
        match (a, b) {
            (NEG_INF, NEG_INF) | (POS_INF, POS_INF) => false,
            (NEG_INF, _) | (_, POS_INF) => true,
            (POS_INF, _) | (_, NEG_INF) => false,
            _ => self.lt(a, b),
        }
    }

    fn is_endpoint(&self, a: u64) -> bool {
        a == NEG_INF || a == POS_INF || self.is_member(a)
    }

    /// Gap test for `x < y`: the oracle when present, otherwise no point `<= scale` in between.
    pub fn is_gap(&self, x: u64, y: u64, scale: u64) -> bool {
        if !self.lt(x, y) {
            return false;
        }
        match &self.gap_oracle {
            Some(g) => g(x, y),
            None => !self.points(scale).into_iter().any(|z| self.lt(x, z) && self.lt(z, y)),
        }
    }
}

/// Exhaustive irreflexivity, totality and transitivity check on points `<= n`.
pub fn validate_order(l: &LinearOrder, n: u64) -> Vec<OrderViolation> {
    let pts = l.points(n);
    let mut out = Vec::new();
    for &x in &pts {
        if l.lt(x, x) {
            out.push(OrderViolation::Reflexive { x });
        }
        for &y in &pts {
            if x < y {
                match (l.lt(x, y), l.lt(y, x)) {
                    (false, false) => out.push(OrderViolation::NotTotal { x, y }),
                    (true, true) => out.push(OrderViolation::NotAntisymmetric { x, y }),
                    _ => {}
                }
            }
        }
    }
    for &x in &pts {
        for &y in &pts {
            if !l.lt(x, y) {
                continue;
            }
            for &z in &pts {
                if l.lt(y, z) && !l.lt(x, z) {
                    out.push(OrderViolation::NotTransitive { x, y, z });
                }
            }
        }
    }
    out
}

/// Endpoint slot `k`: `-inf`, `+inf`, then point `k - 2`.
pub fn endpoint(k: u64) -> u64 {
    match k {
        0 => NEG_INF,
        1 => POS_INF,
        k => k - 2,
    }
}

pub fn interval(a: u64, b: u64) -> Idx {
    Idx::pair(Idx::N(a), Idx::N(b))
}

pub fn interval_ends(i: &Idx) -> Option<(u64, u64)> {
    match i.nat_tuple()?.as_slice() {
        [a, b] => Some((*a, *b)),
        _ => None,
    }
}

/// Open intervals `(a,b)` over `X` with `-inf`/`+inf` adjoined; slot `n = <p,q>`
/// holds `(endpoint(p), endpoint(q))`. Witness takes the larger lower and
/// the smaller upper endpoint.
pub fn ordered_space(l: &LinearOrder) -> SpaceBase {
    let (l1, l2, l3, l4) = (l.clone(), l.clone(), l.clone(), l.clone());
    let fam = Family::new(
        format!("ordered:{}", l.name),
        move |x| l1.is_member(x),
        {
            let l = l.clone();
            move |k| l.is_member(k).then_some(k)
        },
        move |i| interval_ends(i).is_some_and(|(a, b)| l2.is_endpoint(a) && l2.is_endpoint(b)),
        |n| {
            let (p, q) = unpair(n);
            interval(endpoint(p), endpoint(q))
        },
        move |x, i| interval_ends(i).is_some_and(|(a, b)| l3.ext_lt(a, x) && l3.ext_lt(x, b)),
    );
    let fam = match l.finite_at {
        Some(f) => fam.with_finite_at(f).with_search_bound(pair(f + 2, f + 2)),
        None => fam.with_search_bound(pair(9, 9)),
    };
    SpaceBase::new(fam, move |_, i, j| {
        let ((a, b), (c, d)) = match (interval_ends(i), interval_ends(j)) {
            (Some(p), Some(q)) => (p, q),
            _ => return i.clone(),
        };
        let lo = if l4.ext_lt(a, c) { c } else { a };
        let hi = if l4.ext_lt(b, d) { b } else { d };
        interval(lo, hi)
    })
}

/// Ray `<x,0> = (-inf,x)`, `<x,1> = (x,+inf)`.
pub fn ray(x: u64, side: u64) -> Idx {
    Idx::pair(Idx::N(x), Idx::N(side))
}

fn ray_parts(i: &Idx) -> Option<(u64, u64)> {
    match i.nat_tuple()?.as_slice() {
        [x, s] if *s <= 1 => Some((*x, *s)),
        _ => None,
    }
}

/// The ray subbase; slot `n = <x,s>` holds `<x, s mod 2>`.
pub fn ray_family(l: &LinearOrder) -> Family {
    let (l1, l2, l3, l4) = (l.clone(), l.clone(), l.clone(), l.clone());
    let fam = Family::new(
        format!("rays:{}", l.name),
        move |x| l1.is_member(x),
        move |k| l4.is_member(k).then_some(k),
        move |i| ray_parts(i).is_some_and(|(x, _)| l2.is_member(x)),
        |n| {
            let (x, s) = unpair(n);
            ray(x, s % 2)
        },
        move |y, i| match ray_parts(i) {
            Some((x, 0)) => l3.lt(y, x),
            Some((x, _)) => l3.lt(x, y),
            None => false,
        },
    );
    match l.finite_at {
        Some(f) => fam.with_finite_at(f),
        None => fam,
    }
}

/// `t` covers iff it has `<x0,0>` and `<x1,1>` with `x1 < x0`. Otherwise the
/// uncovered points are those between the largest `x0` and the smallest `x1`,
/// and the witness is the first of these that exists.
pub fn ordered_cover_relation(l: &LinearOrder) -> CoverRelation {
    let l = l.clone();
    let first = l.sorted(64).first().copied().or_else(|| l.points(1 << 12).first().copied());
    CoverRelation::new(format!("rays:{}", l.name), Exactness::Exact, move |t| {
        let Some(first) = first else {
            return CoverAnswer::Covers;
        };
        let mut hi0: Option<u64> = None;
        let mut lo1: Option<u64> = None;
        for i in t.iter() {
            match ray_parts(i) {
                Some((x, 0)) => {
                    if hi0.is_none_or(|h| l.lt(h, x)) {
                        hi0 = Some(x);
                    }
                }
                Some((x, _)) => {
                    if lo1.is_none_or(|h| l.lt(x, h)) {
                        lo1 = Some(x);
                    }
                }
                None => return CoverAnswer::NotCovers { witness: None },
            }
        }
        match (hi0, lo1) {
            (Some(a), Some(b)) if l.lt(b, a) => CoverAnswer::Covers,
            (Some(a), _) => CoverAnswer::not_covers(a),
            (None, Some(b)) => CoverAnswer::not_covers(b),
            (None, None) => CoverAnswer::not_covers(first),
        }
    })
}

/// Interval index as the ray-closure index of its two sides (`+inf`/`-inf` sides dropped).
pub fn interval_to_rays(l: &LinearOrder, i: &Idx) -> Option<Idx> {
    let (a, b) = interval_ends(i)?;
    if a == POS_INF || b == NEG_INF {
        let p = l.sorted(64).first().copied()?;
        return Some(Idx::set(vec![ray(p, 0), ray(p, 1)]));
    }
    let mut v = Vec::new();
    if a != NEG_INF {
        v.push(ray(a, 1));
    }
    if b != POS_INF {
        v.push(ray(b, 0));
    }
    Some(Idx::set(v))
}

/// Exact relation for the interval base, through the lifted ray relation.
pub fn interval_cover_relation(l: &LinearOrder) -> CoverRelation {
    let lifted = lift_cover_relation_to_closure(&ordered_cover_relation(l)).expect("ray relation is exact");
    let l = l.clone();
    CoverRelation::new(format!("intervals:{}", l.name), Exactness::Exact, move |t| {
        let mut mapped = FinSet::empty();
        for i in t.iter() {
            match interval_to_rays(&l, i) {
                Some(s) => mapped.insert(s),
                None => return CoverAnswer::NotCovers { witness: None },
            }
        }
        lifted.decide(&mapped)
    })
}

/// Pairs `x < y` of points `<= n` adjacent at scale (or per the oracle).
pub fn gap_set(l: &LinearOrder, n: u64) -> Vec<(u64, u64)> {
    let s = l.sorted(n);
    let mut out = Vec::new();
    for w in s.windows(2) {
        if l.is_gap(w[0], w[1], n) {
            out.push((w[0], w[1]));
        }
    }
    out
}

/// Hausdorff witness from a gap test: a gap `x < y` is separated by `(-inf,y)`
/// and `(x,+inf)`; otherwise by the rays at the first point `z <= n` between.
pub fn hausdorff_from_gaps(l: &LinearOrder, gap: impl Fn(u64, u64) -> bool + Send + Sync + 'static, n: u64) -> HausdorffWitness {
    let gap: GapFn = Arc::new(gap);
    let l = l.clone();
    let pts = Arc::new(l.points(n));
    let sep = Arc::new(move |x: u64, y: u64| -> (Idx, Idx) {
        let (lo, hi, flip) = if l.lt(x, y) { (x, y, false) } else { (y, x, true) };
        if x == y {
            return (interval(NEG_INF, POS_INF), interval(NEG_INF, POS_INF));
        }
        let z = if gap(lo, hi) { None } else { pts.iter().copied().find(|&z| l.lt(lo, z) && l.lt(z, hi)) };
        let (a, b) = match z {
            Some(z) => (interval(NEG_INF, z), interval(z, POS_INF)),
            None => (interval(NEG_INF, hi), interval(lo, POS_INF)),
        };
        if flip {
            (b, a)
        } else {
            (a, b)
        }
    });
    let s2 = sep.clone();
    HausdorffWitness::new(move |x, y| sep(x, y).0, move |x, y| s2(x, y).1)
}

/// Gap test read off a Hausdorff witness: for `x0 < x1`, a gap iff `h0` has
/// upper endpoint `x1` and `h1` lower endpoint `x0`.
pub fn gaps_from_hausdorff(l: &LinearOrder, h: &HausdorffWitness) -> impl Fn(u64, u64) -> bool + Send + Sync {
    let (l, h) = (l.clone(), h.clone());
    move |x0, x1| {
        if !l.lt(x0, x1) {
            return false;
        }
        match (interval_ends(&h.h0(x0, x1)), interval_ends(&h.h1(x0, x1))) {
            (Some((_, b)), Some((c, _))) => b == x1 && c == x0,
            _ => false,
        }
    }
}

/// The successor of `x` among points `<= scale`, if `x` has an immediate one.
fn immediate_successor(l: &LinearOrder, x: u64, scale: u64) -> Option<u64> {
    let s = l.points(scale).into_iter().filter(|&z| l.lt(x, z)).min_by(|&a, &b| l.cmp(a, b))?;
    l.is_gap(x, s, scale).then_some(s)
}

fn immediate_predecessor(l: &LinearOrder, x: u64, scale: u64) -> Option<u64> {
    let s = l.points(scale).into_iter().filter(|&z| l.lt(z, x)).max_by(|&a, &b| l.cmp(a, b))?;
    l.is_gap(s, x, scale).then_some(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Completeness {
    CompleteAtScale,
    /// Neither side has an end within the bound: `lower` climbs, `upper` descends.
    Cut {
        lower: Vec<u64>,
        upper: Vec<u64>,
    },
}

/// Scans the prefix cuts of the sorted points `<= n`. Across each cut, follow
/// immediate successors up from the lower side and immediate predecessors
/// down from the upper side, using points `<= scale`; if both chains run for
/// `chain` steps without meeting, the cut has no end on either side at scale.
pub fn completeness_check(l: &LinearOrder, n: u64, scale: u64, chain: usize) -> Completeness {
    let s = l.sorted(n);
    for k in 1..s.len() {
        let (lo, hi) = (s[k - 1], s[k]);
        let mut up = vec![lo];
        while up.len() <= chain {
            match immediate_successor(l, *up.last().unwrap(), scale) {
                Some(z) if l.lt(z, hi) => up.push(z),
                _ => break,
            }
        }
        if up.len() <= chain {
            continue;
        }
        let mut down = vec![hi];
        while down.len() <= chain {
            match immediate_predecessor(l, *down.last().unwrap(), scale) {
                Some(z) if l.lt(*up.last().unwrap(), z) => down.push(z),
                _ => break,
            }
        }
        if down.len() <= chain {
            continue;
        }
        let mut lower: Vec<u64> = s[..k].to_vec();
        lower.extend(&up[1..]);
        let mut upper: Vec<u64> = down[1..].iter().rev().copied().collect();
        upper.extend(&s[k..]);
        return Completeness::Cut { lower, upper };
    }
    Completeness::CompleteAtScale
}

/// Rays `(-inf,x)` for `x` in the lower side and `(x,+inf)` for `x` in the upper side.
pub fn cut_to_noncover(lower: &[u64], upper: &[u64]) -> OpenCode {
    let mut entries: Vec<(Idx, u64)> = lower.iter().map(|&x| (ray(x, 0), x)).collect();
    entries.extend(upper.iter().map(|&x| (ray(x, 1), x)));
    EnumSet::from_entries("cut rays", entries)
}

/// Serialized order: an explicit rank table or a named builtin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Ranks { name: String, ranks: Vec<u64> },
    Named { named: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("unknown order {0}")]
    Unknown(String),
    #[error("rank table is not a permutation")]
    NotPermutation,
}

impl OrderSpec {
    pub fn build(&self) -> Result<LinearOrder, OrderError> {
        match self {
            OrderSpec::Ranks { name, ranks } => {
                let mut seen: Vec<u64> = ranks.clone();
                seen.sort_unstable();
                if seen.iter().enumerate().any(|(k, &r)| r != k as u64) {
                    return Err(OrderError::NotPermutation);
                }
                Ok(LinearOrder::from_ranks(name.clone(), ranks.clone()))
            }
            OrderSpec::Named { named } => builtin_order(named).ok_or_else(|| OrderError::Unknown(named.clone())),
        }
    }
}

/// `0 < 1 < .. < n-1`.
pub fn chain(n: u64) -> LinearOrder {
    LinearOrder::from_ranks(format!("chain{n}"), (0..n).collect())
}

/// `(N, <)`.
pub fn naturals() -> LinearOrder {
    LinearOrder::new("nat", |_| true, |x, y| x < y).with_gaps(|x, y| y == x + 1)
}

/// `N` followed by a reversed copy: evens ascend, then odds descend.
pub fn nat_plus_reverse() -> LinearOrder {
    let key = |x: u64| if x.is_multiple_of(2) { (0u8, x as i128) } else { (1u8, -(x as i128)) };
    LinearOrder::new("nat+nat*", |_| true, move |x, y| key(x) < key(y))
        .with_gaps(move |x, y| x % 2 == y % 2 && (x as i128 - y as i128).abs() == 2)
}

/// Dyadic rationals in `(0,1)`: point `n` is `0.s1` in binary, `s` the `n`-th string.
pub fn dyadic_dense() -> LinearOrder {
    LinearOrder::new("dyadic", |_| true, |x, y| dyadic_value(x) < dyadic_value(y)).with_gaps(|_, _| false)
}

fn dyadic_value(n: u64) -> u128 {
    let (len, v) = (bits::len(n), n - ((1u64 << bits::len(n)) - 1));
    (((v as u128) << 1) | 1) << (100 - len)
}

pub fn builtin_order(name: &str) -> Option<LinearOrder> {
    Some(match name {
        "nat" => naturals(),
        "nat+nat*" => nat_plus_reverse(),
        "dyadic" => dyadic_dense(),
        s if s.starts_with("chain") => chain(s[5..].parse().ok()?),
        _ => return None,
    })
}
