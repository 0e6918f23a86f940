//! Finite cover relations and subcover extraction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foundations::{pair, unpair, FinSet, StagePredicate};
use crate::spaces::{product_grid, ContinuityWitness, Family, Idx, MaskCache, OpenCode, PointMap, SpaceBase};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum CoverAnswer {
    Covers,
    NotCovers {
        witness: Option<u64>,
    },
    UnknownAtBound,
    /// The positive description accepted a family that brute force refutes at `witness`.
    Conflict {
        witness: u64,
    },
}

impl CoverAnswer {
    pub fn covers(&self) -> bool {
        matches!(self, CoverAnswer::Covers)
    }

    pub fn refuted(&self) -> bool {
        matches!(self, CoverAnswer::NotCovers { .. })
    }

    pub fn not_covers(x: u64) -> Self {
        CoverAnswer::NotCovers { witness: Some(x) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Exactness {
    Exact,
    Bounded,
}

type DecideFn = dyn Fn(&FinSet<Idx>) -> CoverAnswer + Send + Sync;

/// Decides which finite sets of indices index a cover of the whole space.
#[derive(Clone)]
pub struct CoverRelation {
    pub name: String,
    decide: Arc<DecideFn>,
    pub exactness: Exactness,
}

impl fmt::Debug for CoverRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoverRelation({}, {:?})", self.name, self.exactness)
    }
}

impl CoverRelation {
    pub fn new(
        name: impl Into<String>,
        exactness: Exactness,
        decide: impl Fn(&FinSet<Idx>) -> CoverAnswer + Send + Sync + 'static,
    ) -> Self {
        CoverRelation { name: name.into(), decide: Arc::new(decide), exactness }
    }

    pub fn decide(&self, t: &FinSet<Idx>) -> CoverAnswer {
        (self.decide)(t)
    }

    pub fn is_exact(&self) -> bool {
        self.exactness == Exactness::Exact
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("relation {0} is not exact")]
    NotExact(String),
    #[error("map is not onto at scale: {0} has no preimage")]
    NotOnto(u64),
    #[error("continuity witness fails at scale")]
    BadWitness,
}

/// Least point among the first `n + 1` not covered by `t`.
pub fn cover_check_bruteforce(b: &Family, t: &FinSet<Idx>, n: u64) -> CoverAnswer {
    match b.points(n).into_iter().find(|&x| !t.iter().any(|i| b.contains(x, i))) {
        Some(x) => CoverAnswer::not_covers(x),
        None => CoverAnswer::Covers,
    }
}

/// Brute force over the first `n + 1` points; exact when those are all of `X`.
pub fn bruteforce_relation(b: &Family, n: u64) -> CoverRelation {
    let fam = b.clone();
    let ex = if b.is_finite_within(n) { Exactness::Exact } else { Exactness::Bounded };
    CoverRelation::new(format!("brute({})", b.name), ex, move |t| cover_check_bruteforce(&fam, t, n))
}

/// Relation for the closure of a family: `{s_0..s_l}` covers iff every choice
/// tuple from `s_0 x .. x s_l` covers in the family's relation.
pub fn lift_cover_relation_to_closure(c: &CoverRelation) -> Result<CoverRelation, CoverError> {
    if !c.is_exact() {
        return Err(CoverError::NotExact(c.name.clone()));
    }
    let c = c.clone();
    Ok(CoverRelation::new(format!("lift({})", c.name), Exactness::Exact, move |fam| {
        let mut sets = Vec::with_capacity(fam.len());
        for s in fam.iter() {
            match s.as_set() {
                Some([]) => return CoverAnswer::Covers,
                Some(v) => sets.push(v.to_vec()),
                None => return CoverAnswer::NotCovers { witness: None },
            }
        }
        if sets.is_empty() {
            return c.decide(&FinSet::empty());
        }
        for choice in sets.iter().map(|v| v.iter().cloned()).multi_cartesian_product() {
            let t: FinSet<Idx> = choice.into_iter().collect();
            match c.decide(&t) {
                CoverAnswer::Covers => {}
                other => return other,
            }
        }
        CoverAnswer::Covers
    }))
}

/// Both sides of the closure identity on points `<= n`: the union of the
/// intersections, and the intersection over choice tuples of the unions.
pub fn closure_identity_sides(sub: &Family, family: &[Vec<Idx>], n: u64) -> (Vec<u64>, Vec<u64>) {
    let pts = sub.points(n);
    let lhs: Vec<u64> = pts.iter().copied().filter(|&x| family.iter().any(|s| s.iter().all(|i| sub.contains(x, i)))).collect();
    let rhs: Vec<u64> = pts
        .iter()
        .copied()
        .filter(|&x| {
            if family.is_empty() {
                return false;
            }
            family.iter().map(|s| s.iter()).multi_cartesian_product().all(|choice| choice.iter().any(|i| sub.contains(x, i)))
        })
        .collect();
    (lhs, rhs)
}

/// Relation on `Y` through an effectively continuous surjection `f: X -> Y`.
///
/// The positive side collects `s = {phi(x,j) : j in t, f(x) in V_j}` over the
/// first points of `X` and asks `C`; the negative side is brute force on `Y`.
pub fn image_cover_relation(
    c: &CoverRelation,
    x_space: &SpaceBase,
    y_space: &SpaceBase,
    f: &PointMap,
    w: &ContinuityWitness,
    n: u64,
    search_bound: u64,
) -> Result<CoverRelation, CoverError> {
    if !c.is_exact() {
        return Err(CoverError::NotExact(c.name.clone()));
    }
    let xs = x_space.points(n);
    for y in y_space.points(n) {
        if !xs.iter().any(|&x| f(x) == y) {
            return Err(CoverError::NotOnto(y));
        }
    }
    if !crate::spaces::validate_continuity_witness(f, w, x_space, y_space, n, search_bound).is_valid() {
        return Err(CoverError::BadWitness);
    }
    let exact = x_space.is_finite_within(n) && y_space.is_finite_within(n);
    let (c, f, w, ys) = (c.clone(), f.clone(), w.clone(), y_space.family.clone());
    let ex = if exact { Exactness::Exact } else { Exactness::Bounded };
    Ok(CoverRelation::new(format!("image({})", c.name), ex, move |t| {
        let mut s: FinSet<Idx> = FinSet::empty();
        for &x in &xs {
            for j in t.iter().filter(|j| ys.contains(f(x), j)) {
                s.insert((w.phi)(x, j));
            }
        }
        let sigma = c.decide(&s).covers();
        let pi = cover_check_bruteforce(&ys, t, n);
        match (sigma, pi) {
            (true, CoverAnswer::NotCovers { witness: Some(y) }) => CoverAnswer::Conflict { witness: y },
            (true, _) => CoverAnswer::Covers,
            (false, CoverAnswer::NotCovers { witness }) => CoverAnswer::NotCovers { witness },
            (false, _) if exact => CoverAnswer::NotCovers { witness: None },
            (false, _) => CoverAnswer::UnknownAtBound,
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub points: u64,
    pub stages: u64,
    pub search_bound: u64,
}

/// A finite subfamily together with the bounds it was checked at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcoverCertificate {
    pub indices: FinSet<Idx>,
    pub bounds: Bounds,
    pub verified: bool,
}

/// Smallest subfamily of `candidates` covering the marked points, searched in
/// order of size and then largest position; `None` past `max_size`.
pub fn minimal_subcover(masks: &[FixedBitSet], target: &FixedBitSet, max_size: usize) -> Option<Vec<usize>> {
    if target.is_clear() {
        return Some(vec![]);
    }
    let m = masks.len();
    for size in 1..=max_size.min(m) {
        for top in size - 1..m {
            for rest in (0..top).combinations(size - 1) {
                let mut u = masks[top].clone();
                for &k in &rest {
                    u.union_with(&masks[k]);
                }
                if target.is_subset(&u) {
                    let mut v = rest;
                    v.push(top);
                    return Some(v);
                }
            }
        }
    }
    None
}

/// Greedy cover used when the exhaustive search is out of range.
pub fn greedy_subcover(masks: &[FixedBitSet], target: &FixedBitSet) -> Option<Vec<usize>> {
    let mut left = target.clone();
    let mut chosen = Vec::new();
    while !left.is_clear() {
        let (best, gain) =
            masks.iter().enumerate().map(|(k, m)| (k, m.intersection(&left).count())).max_by_key(|&(k, g)| (g, std::cmp::Reverse(k)))?;
        if gain == 0 {
            return None;
        }
        chosen.push(best);
        left.difference_with(&masks[best]);
    }
    chosen.sort_unstable();
    Some(chosen)
}

fn subcover_of(fam: &Family, candidates: &[Idx], pts: &[u64], target: &FixedBitSet, max_size: usize) -> Option<Vec<usize>> {
    let mut mc = MaskCache::new(fam, pts.to_vec());
    let masks: Vec<FixedBitSet> = candidates.iter().map(|i| mc.get(i).clone()).collect();
    minimal_subcover(&masks, target, max_size).or_else(|| greedy_subcover(&masks, target))
}

fn full_mask(len: usize) -> FixedBitSet {
    let mut m = FixedBitSet::with_capacity(len);
    m.insert_range(..);
    m
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum ClosedSubcover {
    Found { a: FinSet<Idx>, a0: SubcoverCertificate },
    UnknownAtBound,
}

/// For `X0 = X minus the union of A1`: find a finite `a` from `A0 | A1` covering
/// `X` and return `a0 = a & A0`, checked to cover `X0` on the first points.
pub fn closed_subspace_subcover(b: &Family, a0: &OpenCode, a1: &OpenCode, n: u64, stages: u64, max_size: usize) -> ClosedSubcover {
    let (s0, s1) = (a0.stage_of(stages), a1.stage_of(stages));
    // Indices supplied by both codes count on the `A1` side; `X0` misses them anyway.
    let cands: Vec<Idx> = s1.iter().chain(s0.difference(&s1).iter()).cloned().collect();
    let pts = b.points(n);
    let Some(pick) = subcover_of(b, &cands, &pts, &full_mask(pts.len()), max_size) else {
        return ClosedSubcover::UnknownAtBound;
    };
    let a: FinSet<Idx> = pick.iter().map(|&k| cands[k].clone()).collect();
    let chosen: FinSet<Idx> = a.iter().filter(|i| s0.contains(i) && !s1.contains(i)).cloned().collect();
    let x0: Vec<u64> = pts.iter().copied().filter(|&x| !s1.iter().any(|i| b.contains(x, i))).collect();
    let verified = x0.iter().all(|&x| chosen.iter().any(|i| b.contains(x, i)));
    ClosedSubcover::Found {
        a,
        a0: SubcoverCertificate { indices: chosen, bounds: Bounds { points: n, stages, search_bound: max_size as u64 }, verified },
    }
}

/// Relation for `X0 = X minus the union of A1`, relative to `X0`:
/// `t` covers `X0` iff `t | s` covers `X` for some finite `s` from `A1`.
pub fn closed_subspace_cover_relation(
    c: &CoverRelation,
    b: &Family,
    a1: &OpenCode,
    n: u64,
    stages: u64,
) -> Result<CoverRelation, CoverError> {
    if !c.is_exact() {
        return Err(CoverError::NotExact(c.name.clone()));
    }
    let s1 = a1.stage_of(stages);
    let exact = a1.is_settled_by(stages);
    let (c, fam) = (c.clone(), b.clone());
    let x0: Vec<u64> = b.points(n).into_iter().filter(|&x| !s1.iter().any(|i| b.contains(x, i))).collect();
    let ex = if exact { Exactness::Exact } else { Exactness::Bounded };
    Ok(CoverRelation::new(format!("closed({})", c.name), ex, move |t| {
        let sigma = c.decide(&t.union(&s1));
        let pi = x0.iter().copied().find(|&x| !t.iter().any(|i| fam.contains(x, i)));
        match (sigma, pi) {
            (CoverAnswer::Covers, Some(x)) => CoverAnswer::Conflict { witness: x },
            (CoverAnswer::Covers, None) => CoverAnswer::Covers,
            (_, Some(x)) => CoverAnswer::not_covers(x),
            (CoverAnswer::NotCovers { witness }, None) if exact => CoverAnswer::NotCovers { witness },
            _ => CoverAnswer::UnknownAtBound,
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum CofiniteOutcome {
    Found {
        certificate: SubcoverCertificate,
        i0: Idx,
    },
    /// Some neighbourhood of the chosen point is not cofinite; `hole` is a point it misses.
    NotCofinite {
        index: Idx,
        hole: u64,
    },
    UnknownAtBound {
        uncovered: u64,
    },
}

/// Selector-driven subcover around a point all of whose neighbourhoods are cofinite.
///
/// `selector` is a limit predicate on index positions (slot numbers in the
/// index enumeration), read at stage `stages`. Cofiniteness of the
/// neighbourhoods of `x0` comes from `cofinite` when given; otherwise a
/// neighbourhood passes when it misses at most half of the first `n + 1` points.
pub fn cofinite_point_subcover(
    b: &Family,
    selector: &StagePredicate,
    x0: u64,
    cofinite: Option<&dyn Fn(&Idx) -> bool>,
    n: u64,
    stages: u64,
    search_bound: u64,
) -> CofiniteOutcome {
    let pts = b.points(n);
    let slots: Vec<(u64, Idx)> = (0..=search_bound).map(|k| (k, (b.index_enum)(k))).filter(|(_, i)| b.is_index(i)).collect();
    for (_, i) in &slots {
        if !b.contains(x0, i) {
            continue;
        }
        let holes: Vec<u64> = pts.iter().copied().filter(|&y| !b.contains(y, i)).collect();
        let ok = match cofinite {
            Some(oracle) => oracle(i),
            None => 2 * holes.len() <= pts.len(),
        };
        if !ok {
            let hole = holes.last().copied().unwrap_or(n + 1);
            return CofiniteOutcome::NotCofinite { index: i.clone(), hole };
        }
    }
    let pick = |x: u64| slots.iter().find(|(k, i)| selector.eval(&[*k], stages) && b.contains(x, i)).map(|(_, i)| i.clone());
    let Some(i0) = pick(x0) else {
        return CofiniteOutcome::UnknownAtBound { uncovered: x0 };
    };
    let mut chosen: FinSet<Idx> = FinSet::singleton(i0.clone());
    for &x in pts.iter().filter(|&&x| !b.contains(x, &i0)) {
        if chosen.iter().any(|i| b.contains(x, i)) {
            continue;
        }
        match pick(x) {
            Some(i) => chosen.insert(i),
            None => return CofiniteOutcome::UnknownAtBound { uncovered: x },
        }
    }
    let verified = cover_check_bruteforce(b, &chosen, n).covers();
    CofiniteOutcome::Found {
        certificate: SubcoverCertificate { indices: chosen, bounds: Bounds { points: n, stages, search_bound }, verified },
        i0,
    }
}

/// Exact relation for a product of rectangles from exact factor relations.
///
/// A family `<i_k,j_k>` covers `X x Y` iff for every split of the family into
/// `M` and its complement, either the `j`s of `M` cover `Y` or the `i`s of the
/// complement cover `X`: a point `<x,y>` escapes exactly when `x` avoids the
/// complement's `U_i` and `y` avoids `M`'s `V_j`.
pub fn product_cover_relation(c1: &CoverRelation, c2: &CoverRelation) -> Result<CoverRelation, CoverError> {
    for c in [c1, c2] {
        if !c.is_exact() {
            return Err(CoverError::NotExact(c.name.clone()));
        }
    }
    let (c1, c2) = (c1.clone(), c2.clone());
    Ok(CoverRelation::new(format!("product({},{})", c1.name, c2.name), Exactness::Exact, move |t| {
        let mut rects = Vec::with_capacity(t.len());
        for r in t.iter() {
            match r.as_tup() {
                Some([i, j]) => rects.push((i.clone(), j.clone())),
                _ => return CoverAnswer::NotCovers { witness: None },
            }
        }
        let m = rects.len();
        for mask in 0u64..(1u64 << m) {
            let js: FinSet<Idx> = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| rects[k].1.clone()).collect();
            let is: FinSet<Idx> = (0..m).filter(|k| mask >> k & 1 == 0).map(|k| rects[k].0.clone()).collect();
            let a = c2.decide(&js);
            if a.covers() {
                continue;
            }
            let b = c1.decide(&is);
            if b.covers() {
                continue;
            }
            let witness = match (b, a) {
                (CoverAnswer::NotCovers { witness: Some(x) }, CoverAnswer::NotCovers { witness: Some(y) }) => Some(pair(x, y)),
                _ => None,
            };
            return CoverAnswer::NotCovers { witness };
        }
        CoverAnswer::Covers
    }))
}

/// Brute-force product check by sectioning: for each first coordinate on the
/// first points, the rectangles over it must cover `Y` under `c2`.
pub fn product_cover_by_sections(x_space: &Family, c2: &CoverRelation, t: &FinSet<Idx>, n: u64) -> CoverAnswer {
    for x in x_space.points(n) {
        let js: FinSet<Idx> = t
            .iter()
            .filter_map(|r| match r.as_tup() {
                Some([i, j]) if x_space.contains(x, i) => Some(j.clone()),
                _ => None,
            })
            .collect();
        match c2.decide(&js) {
            CoverAnswer::Covers => {}
            CoverAnswer::NotCovers { witness: Some(y) } => return CoverAnswer::not_covers(pair(x, y)),
            other => return other,
        }
    }
    CoverAnswer::Covers
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoebMode {
    /// Per-point search through the right factor's cover relation.
    Effective,
    /// Per-index limit predicate on the left factor.
    SigmaTwo,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum LoebOutcome {
    Certificate {
        certificate: SubcoverCertificate,
        points_used: Vec<u64>,
    },
    /// No finite part of `{j : <i,j> in A, x in U_i}` covers `Y`.
    FailurePoint {
        x: u64,
        b: FinSet<Idx>,
    },
    UnknownAtBound,
}

/// Extracts a finite subcover of `X x Y` from a rectangle code `A`.
///
/// Effective mode: for each `x` find `a_x` among the rectangles over `x` whose
/// second sides cover `Y`, shrink to one basic neighbourhood `h(x)` of `x` by
/// folding the witness, pick finitely many `h(x)` covering `X`, and take the
/// union of the `a_x`. The result is checked on the `n x n` grid.
pub fn loeb_product_subcover(
    x_space: &SpaceBase,
    y_space: &SpaceBase,
    c2: &CoverRelation,
    a: &OpenCode,
    n: u64,
    stages: u64,
    mode: LoebMode,
) -> LoebOutcome {
    let rects: Vec<(Idx, Idx)> = a
        .stage_of(stages)
        .iter()
        .filter_map(|r| match r.as_tup() {
            Some([i, j]) => Some((i.clone(), j.clone())),
            _ => None,
        })
        .collect();
    let xs = x_space.points(n);
    let ys = y_space.points(n);
    let y_covers = |js: &FinSet<Idx>| -> CoverAnswer {
        match mode {
            LoebMode::Effective => c2.decide(js),
            LoebMode::SigmaTwo => cover_check_bruteforce(y_space, js, n),
        }
    };

    let mut per_x: BTreeMap<u64, (Idx, Vec<usize>)> = BTreeMap::new();
    match mode {
        LoebMode::Effective => {
            for &x in &xs {
                let over: Vec<usize> = (0..rects.len()).filter(|&k| x_space.contains(x, &rects[k].0)).collect();
                let Some(ax) = smallest_y_cover(&rects, &over, &y_covers) else {
                    let b: FinSet<Idx> = over.iter().map(|&k| rects[k].1.clone()).collect();
                    return if a.is_settled_by(stages) || y_covers(&b).refuted() {
                        LoebOutcome::FailurePoint { x, b }
                    } else {
                        LoebOutcome::UnknownAtBound
                    };
                };
                let is: Vec<Idx> = ax.iter().map(|&k| rects[k].0.clone()).collect();
                let h = match x_space.fold_witness(x, &is) {
                    Some(h) => h,
                    None => match x_space.indices(x_space.search_bound).into_iter().find(|i| x_space.contains(x, i)) {
                        Some(h) => h,
                        None => return LoebOutcome::UnknownAtBound,
                    },
                };
                per_x.insert(x, (h, ax));
            }
        }
        LoebMode::SigmaTwo => {
            // C(i0): some finite a has U_i0 inside every U_i of a and its V_j cover Y.
            let sel = loeb_sigma_two_selector(x_space, &rects, y_space, n, c2.clone());
            let slots = x_space.indices(x_space.search_bound);
            for &x in &xs {
                let found =
                    slots.iter().enumerate().filter(|(_, i)| x_space.contains(x, i)).find_map(|(k, i)| sel(k, i).map(|ax| (i.clone(), ax)));
                match found {
                    Some((i0, ax)) => {
                        per_x.insert(x, (i0, ax));
                    }
                    None => {
                        let over: Vec<usize> = (0..rects.len()).filter(|&k| x_space.contains(x, &rects[k].0)).collect();
                        let b: FinSet<Idx> = over.iter().map(|&k| rects[k].1.clone()).collect();
                        return if y_covers(&b).refuted() { LoebOutcome::FailurePoint { x, b } } else { LoebOutcome::UnknownAtBound };
                    }
                }
            }
        }
    }

    let hs: Vec<Idx> = per_x.values().map(|(h, _)| h.clone()).collect();
    let owners: Vec<u64> = per_x.keys().copied().collect();
    let Some(pick) = subcover_of(x_space, &hs, &xs, &full_mask(xs.len()), 3) else {
        return LoebOutcome::UnknownAtBound;
    };
    let mut chosen: FinSet<Idx> = FinSet::empty();
    let mut used = Vec::new();
    for k in pick {
        used.push(owners[k]);
        for &r in &per_x[&owners[k]].1 {
            chosen.insert(Idx::pair(rects[r].0.clone(), rects[r].1.clone()));
        }
    }
    let grid = product_grid(x_space, y_space, n);
    let _ = ys;
    let verified = grid.iter().all(|&z| {
        let (x, y) = unpair(z);
        chosen.iter().any(|r| match r.as_tup() {
            Some([i, j]) => x_space.contains(x, i) && y_space.contains(y, j),
            _ => false,
        })
    });
    LoebOutcome::Certificate {
        certificate: SubcoverCertificate {
            indices: chosen,
            bounds: Bounds { points: n, stages, search_bound: x_space.search_bound },
            verified,
        },
        points_used: used,
    }
}

fn smallest_y_cover(rects: &[(Idx, Idx)], over: &[usize], y_covers: &dyn Fn(&FinSet<Idx>) -> CoverAnswer) -> Option<Vec<usize>> {
    let all: FinSet<Idx> = over.iter().map(|&k| rects[k].1.clone()).collect();
    if !y_covers(&all).covers() {
        return None;
    }
    for size in 0..=over.len().min(4) {
        for combo in over.iter().copied().combinations(size) {
            let js: FinSet<Idx> = combo.iter().map(|&k| rects[k].1.clone()).collect();
            if y_covers(&js).covers() {
                return Some(combo);
            }
        }
    }
    Some(over.to_vec())
}

/// The limit selector used in the second Loeb mode, returning the witnessing
/// rectangles when it holds at the bound.
fn loeb_sigma_two_selector<'a>(
    x_space: &'a SpaceBase,
    rects: &'a [(Idx, Idx)],
    y_space: &'a SpaceBase,
    n: u64,
    c2: CoverRelation,
) -> impl Fn(usize, &Idx) -> Option<Vec<usize>> + 'a {
    let pts = x_space.points(n);
    move |_, i0| {
        let inside: Vec<usize> =
            (0..rects.len()).filter(|&k| pts.iter().all(|&x| !x_space.contains(x, i0) || x_space.contains(x, &rects[k].0))).collect();
        let js: FinSet<Idx> = inside.iter().map(|&k| rects[k].1.clone()).collect();
        let ok = if c2.is_exact() { c2.decide(&js).covers() } else { cover_check_bruteforce(y_space, &js, n).covers() };
        ok.then_some(inside)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum AlexanderOutcome {
    Certificate { certificate: SubcoverCertificate, height: usize },
    InfiniteBranch { prefix: Vec<Idx> },
}

/// Explores the tree of choice sequences `<i_0..i_{l-1}>`, `i_n in s_n`, whose
/// sets do not cover. If it dies out at length `l`, the closure indices
/// `s_0..s_{l-1}` cover; a node surviving to `depth` is reported instead.
pub fn alexander_wkl_subcover(
    c: &CoverRelation,
    s: &dyn Fn(usize) -> FinSet<Idx>,
    depth: usize,
    n: u64,
) -> Result<AlexanderOutcome, CoverError> {
    if !c.is_exact() {
        return Err(CoverError::NotExact(c.name.clone()));
    }
    let mut frontier: BTreeMap<FinSet<Idx>, Vec<Idx>> = BTreeMap::new();
    if !c.decide(&FinSet::empty()).covers() {
        frontier.insert(FinSet::empty(), vec![]);
    }
    let mut level = 0usize;
    while !frontier.is_empty() {
        if level >= depth {
            let prefix = frontier.into_values().next().unwrap_or_default();
            return Ok(AlexanderOutcome::InfiniteBranch { prefix });
        }
        let choices = s(level);
        let mut next: BTreeMap<FinSet<Idx>, Vec<Idx>> = BTreeMap::new();
        for (set, prefix) in &frontier {
            for i in choices.iter() {
                let mut t = set.clone();
                t.insert(i.clone());
                if next.contains_key(&t) || c.decide(&t).covers() {
                    continue;
                }
                let mut p = prefix.clone();
                p.push(i.clone());
                next.insert(t, p);
            }
        }
        frontier = next;
        level += 1;
    }
    let fam: FinSet<Idx> = (0..level).map(|k| Idx::set(s(k).iter().cloned())).collect();
    let lifted = lift_cover_relation_to_closure(c)?;
    let verified = lifted.decide(&fam).covers();
    Ok(AlexanderOutcome::Certificate {
        certificate: SubcoverCertificate { indices: fam, bounds: Bounds { points: n, stages: 0, search_bound: depth as u64 }, verified },
        height: level,
    })
}

/// A point every listed neighbourhood of which holds at least `window` terms of `xs`.
pub fn accumulation_point_search(b: &Family, xs: &[u64], n: u64, neighbourhoods: &[Idx], window: usize) -> Option<u64> {
    let hits: Vec<usize> = neighbourhoods.iter().map(|i| xs.iter().filter(|&&x| b.contains(x, i)).count()).collect();
    b.points(n).into_iter().find(|&x| {
        let mut any = false;
        for (k, i) in neighbourhoods.iter().enumerate() {
            if b.contains(x, i) {
                any = true;
                if hits[k] < window {
                    return false;
                }
            }
        }
        any
    })
}

/// Accumulation point of a sequence of pairs: first coordinate first, then the
/// second coordinate along the terms lying in every listed neighbourhood of it.
pub fn product_accumulation(
    b1: &Family,
    b2: &Family,
    pairs: &[(u64, u64)],
    n: u64,
    nb1: &[Idx],
    nb2: &[Idx],
    window: usize,
) -> Option<(u64, u64)> {
    let xs: Vec<u64> = pairs.iter().map(|p| p.0).collect();
    let x = accumulation_point_search(b1, &xs, n, nb1, window)?;
    let around: Vec<&Idx> = nb1.iter().filter(|i| b1.contains(x, i)).collect();
    let ys: Vec<u64> = pairs.iter().filter(|(a, _)| around.iter().all(|i| b1.contains(*a, i))).map(|p| p.1).collect();
    let y = accumulation_point_search(b2, &ys, n, nb2, window)?;
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{discrete, subbase_closure};

    fn two_points() -> Family {
        Family::new(
            "two",
            |x| x < 2,
            |k| (k < 2).then_some(k),
            |i| matches!(i, Idx::N(0) | Idx::N(1)),
            |n| Idx::N(n % 2),
            |x, i| *i == Idx::N(x),
        )
        .with_finite_at(1)
    }

    fn fs(v: Vec<Idx>) -> FinSet<Idx> {
        v.into_iter().collect()
    }

    #[test]
    fn brute_force_examples() {
        let d = discrete(3);
        assert_eq!(cover_check_bruteforce(&d, &FinSet::empty(), 10), CoverAnswer::not_covers(0));
        assert!(cover_check_bruteforce(&d, &fs(vec![Idx::N(0), Idx::N(1), Idx::N(2)]), 10).covers());
    }

    #[test]
    fn lifted_relation_examples() {
        let sub = two_points();
        let c = bruteforce_relation(&sub, 4);
        let lifted = lift_cover_relation_to_closure(&c).unwrap();
        assert!(lifted.decide(&fs(vec![Idx::S(vec![])])).covers());
        let s0 = Idx::set(vec![Idx::N(0)]);
        let s1 = Idx::set(vec![Idx::N(1)]);
        assert!(lifted.decide(&fs(vec![s0, s1])).covers());
        let s01 = Idx::set(vec![Idx::N(0), Idx::N(1)]);
        assert!(lifted.decide(&fs(vec![s01])).refuted());
        let bounded = bruteforce_relation(&Family::new("inf", |_| true, Some, |_| true, Idx::N, |_, _| true), 4);
        assert!(lift_cover_relation_to_closure(&bounded).is_err());
    }

    #[test]
    fn product_relation_examples() {
        let two = discrete(2);
        let c = bruteforce_relation(&two, 4);
        let p = product_cover_relation(&c, &c).unwrap();
        let r = |a, b| Idx::pair(Idx::N(a), Idx::N(b));
        assert!(p.decide(&fs(vec![r(0, 0), r(0, 1), r(1, 0), r(1, 1)])).covers());
        assert_eq!(p.decide(&fs(vec![r(0, 0), r(0, 1), r(1, 0)])), CoverAnswer::not_covers(pair(1, 1)));
        let one = discrete(1);
        let c1 = bruteforce_relation(&one, 4);
        let p1 = product_cover_relation(&c1, &c1).unwrap();
        assert!(p1.decide(&fs(vec![r(0, 0)])).covers());
    }

    #[test]
    fn alexander_examples() {
        let sub = two_points();
        let c = bruteforce_relation(&sub, 4);
        let alt = |k: usize| FinSet::singleton(Idx::N((k % 2) as u64));
        match alexander_wkl_subcover(&c, &alt, 64, 4).unwrap() {
            AlexanderOutcome::Certificate { certificate, height } => {
                assert_eq!(height, 2);
                assert!(certificate.verified);
            }
            other => panic!("{other:?}"),
        }
        let stuck = |_: usize| FinSet::singleton(Idx::N(0));
        assert!(matches!(alexander_wkl_subcover(&c, &stuck, 64, 4).unwrap(), AlexanderOutcome::InfiniteBranch { .. }));
        let whole = Family::new("whole", |x| x < 2, |k| (k < 2).then_some(k), |_| true, Idx::N, |_, _| true).with_finite_at(1);
        let cw = bruteforce_relation(&whole, 4);
        let one = |_: usize| FinSet::singleton(Idx::N(0));
        match alexander_wkl_subcover(&cw, &one, 64, 4).unwrap() {
            AlexanderOutcome::Certificate { height, .. } => assert_eq!(height, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn closed_subspace_examples() {
        let d = discrete(5);
        let all: OpenCode = crate::foundations::EnumSet::constant((0..5).map(Idx::N).collect());
        let none: OpenCode = crate::foundations::EnumSet::empty();
        match closed_subspace_subcover(&d, &none, &all, 8, 4, 5) {
            ClosedSubcover::Found { a0, .. } => assert!(a0.indices.is_empty() && a0.verified),
            other => panic!("{other:?}"),
        }
        match closed_subspace_subcover(&d, &all, &none, 8, 4, 5) {
            ClosedSubcover::Found { a, a0 } => assert_eq!(a, a0.indices),
            other => panic!("{other:?}"),
        }
        match closed_subspace_subcover(&d, &all, &all, 8, 4, 5) {
            ClosedSubcover::Found { a0, .. } => assert!(a0.indices.is_empty()),
            other => panic!("{other:?}"),
        }
        let outside: OpenCode = crate::foundations::EnumSet::constant(vec![Idx::N(0), Idx::N(2), Idx::N(4)].into_iter().collect());
        match closed_subspace_subcover(&d, &all, &outside, 8, 4, 5) {
            ClosedSubcover::Found { a0, .. } => assert_eq!(a0.indices, fs(vec![Idx::N(1), Idx::N(3)])),
            other => panic!("{other:?}"),
        }
        let c = bruteforce_relation(&d, 8);
        let rel = closed_subspace_cover_relation(&c, &d, &none, 8, 4).unwrap();
        for t in [fs(vec![Idx::N(0)]), fs((0..5).map(Idx::N).collect())] {
            assert_eq!(rel.decide(&t).covers(), c.decide(&t).covers());
        }
        let rel = closed_subspace_cover_relation(&c, &d, &all, 8, 4).unwrap();
        assert!(rel.decide(&FinSet::empty()).covers());
    }

    #[test]
    fn closure_identity_small() {
        let sub = two_points();
        let fam = vec![vec![Idx::N(0)], vec![Idx::N(1)]];
        let (l, r) = closure_identity_sides(&sub, &fam, 4);
        assert_eq!(l, r);
        let _ = subbase_closure(&sub);
    }

    #[test]
    fn accumulation_examples() {
        let d = discrete(10);
        let nb: Vec<Idx> = (0..10).map(Idx::N).collect();
        assert_eq!(accumulation_point_search(&d, &[5; 64], 64, &nb, 32), Some(5));
        let once: Vec<u64> = (0..10).collect();
        assert_eq!(accumulation_point_search(&d, &once, 64, &nb, 2), None);
        let pairs = vec![(3, 4); 40];
        assert_eq!(product_accumulation(&d, &d, &pairs, 64, &nb, &nb, 32), Some((3, 4)));
    }

    #[test]
    fn minimal_subcover_prefers_small_then_early() {
        let mk = |bits: &[usize]| {
            let mut m = FixedBitSet::with_capacity(4);
            for &b in bits {
                m.insert(b);
            }
            m
        };
        let masks = vec![mk(&[0, 1]), mk(&[2, 3]), mk(&[0, 1, 2, 3]), mk(&[1])];
        let mut target = FixedBitSet::with_capacity(4);
        target.insert_range(..);
        assert_eq!(minimal_subcover(&masks, &target, 4), Some(vec![2]));
        assert_eq!(minimal_subcover(&masks[..2], &target, 4), Some(vec![0, 1]));
    }
}
