//! Effective discreteness, Hausdorff witnesses and the separations built from them.

use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{greedy_subcover, minimal_subcover, CoverRelation};
use crate::foundations::{pair, EnumSet, FinSet};
use crate::spaces::{Family, Idx, MaskCache, OpenCode, SpaceBase, ValidationReport, Violation};

/// `d(x)` with `U_{d(x)} = {x}`.
#[derive(Clone)]
pub struct DiscreteWitness {
    pub d: Arc<dyn Fn(u64) -> Idx + Send + Sync>,
}

impl DiscreteWitness {
    pub fn new(d: impl Fn(u64) -> Idx + Send + Sync + 'static) -> Self {
        DiscreteWitness { d: Arc::new(d) }
    }
}

impl fmt::Debug for DiscreteWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DiscreteWitness")
    }
}

/// `h0(x0,x1)`, `h1(x0,x1)`: disjoint neighbourhoods of distinct points.
#[derive(Clone)]
pub struct HausdorffWitness {
    pub h0: Arc<dyn Fn(u64, u64) -> Idx + Send + Sync>,
    pub h1: Arc<dyn Fn(u64, u64) -> Idx + Send + Sync>,
}

impl fmt::Debug for HausdorffWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("HausdorffWitness")
    }
}

impl HausdorffWitness {
    pub fn new(h0: impl Fn(u64, u64) -> Idx + Send + Sync + 'static, h1: impl Fn(u64, u64) -> Idx + Send + Sync + 'static) -> Self {
        HausdorffWitness { h0: Arc::new(h0), h1: Arc::new(h1) }
    }

    pub fn h0(&self, x0: u64, x1: u64) -> Idx {
        (self.h0)(x0, x1)
    }

    pub fn h1(&self, x0: u64, x1: u64) -> Idx {
        (self.h1)(x0, x1)
    }

    /// For a discrete witness: `h0 = d(x0)`, `h1 = d(x1)`.
    pub fn from_discrete(d: &DiscreteWitness) -> Self {
        let (a, b) = (d.d.clone(), d.d.clone());
        HausdorffWitness::new(move |x0, _| a(x0), move |_, x1| b(x1))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SepError {
    #[error("unknown at bound: {0}")]
    UnknownAtBound(String),
    #[error("open code meets the diagonal at {0}")]
    MeetsDiagonal(u64),
    #[error("pair {0} is not enumerated by the stage bound")]
    NotEnumerated(u64),
    #[error("witness fails validation")]
    BadWitness,
    #[error("result failed its self-check at {0}")]
    SelfCheck(u64),
    #[error("point {0} lies in the closed set")]
    PointInside(u64),
    #[error("closed sets meet at {0}")]
    NotDisjoint(u64),
}

pub fn validate_discrete_witness(b: &Family, d: &DiscreteWitness, n: u64) -> ValidationReport {
    let pts = b.points(n);
    let mut rep = ValidationReport::new(n, b.search_bound);
    for &x in &pts {
        rep.instances_checked += 1;
        let i = (d.d)(x);
        if !b.is_index(&i) || !b.contains(x, &i) {
            rep.push(Violation::NotSingleton { x, index: i, other: None });
            continue;
        }
        if let Some(&y) = pts.iter().find(|&&y| y != x && b.contains(y, &i)) {
            rep.push(Violation::NotSingleton { x, index: i, other: Some(y) });
        }
    }
    rep
}

pub fn validate_hausdorff_witness(b: &Family, h: &HausdorffWitness, n: u64) -> ValidationReport {
    let pts = b.points(n);
    let mut rep = ValidationReport::new(n, b.search_bound);
    let mut mc = MaskCache::new(b, pts.clone());
    for &x0 in &pts {
        for &x1 in &pts {
            if x0 == x1 {
                continue;
            }
            rep.instances_checked += 1;
            let (i, j) = (h.h0(x0, x1), h.h1(x0, x1));
            if !b.contains(x0, &i) || !b.contains(x1, &j) {
                rep.push(Violation::HausdorffMisses { x0, x1 });
                continue;
            }
            let mi = mc.get(&i).clone();
            let both = mi.intersection(mc.get(&j)).next();
            if let Some(k) = both {
                rep.push(Violation::HausdorffOverlap { x0, x1, y: pts[k] });
            }
        }
    }
    rep
}

/// Rectangles `<h0(x0,x1), h1(x0,x1)>` over distinct pairs among the first
/// `s + 1` points at stage `s`.
pub fn diagonal_code_from_hausdorff(b: &Family, h: &HausdorffWitness) -> OpenCode {
    let (fam, h) = (b.clone(), h.clone());
    EnumSet::new("off-diagonal rectangles", move |s| {
        let pts = fam.points(s);
        let mut out = FinSet::empty();
        for &x0 in &pts {
            for &x1 in &pts {
                if x0 != x1 {
                    out.insert(Idx::pair(h.h0(x0, x1), h.h1(x0, x1)));
                }
            }
        }
        out
    })
}

fn rect(r: &Idx) -> Option<(&Idx, &Idx)> {
    match r.as_tup() {
        Some([i, j]) => Some((i, j)),
        _ => None,
    }
}

/// Inverse direction: search the code for a rectangle around `<x0,x1>`.
pub fn hausdorff_from_diagonal_code(b: &Family, a: &OpenCode, n: u64, stages: u64) -> Result<HausdorffWitness, SepError> {
    let pts = b.points(n);
    let last = a.stage_of(stages);
    for r in last.iter() {
        let Some((i, j)) = rect(r) else { continue };
        if let Some(&x) = pts.iter().find(|&&x| b.contains(x, i) && b.contains(x, j)) {
            return Err(SepError::MeetsDiagonal(x));
        }
    }
    let stage_sets: Arc<Vec<FinSet<Idx>>> = Arc::new((0..=stages).map(|s| a.stage_of(s)).collect());
    let fam = b.clone();
    let find = move |x0: u64, x1: u64| -> Option<(Idx, Idx)> {
        stage_sets.iter().find_map(|set| {
            set.iter().filter_map(rect).find(|(i, j)| fam.contains(x0, i) && fam.contains(x1, j)).map(|(i, j)| (i.clone(), j.clone()))
        })
    };
    for &x0 in &pts {
        for &x1 in &pts {
            if x0 != x1 && find(x0, x1).is_none() {
                return Err(SepError::NotEnumerated(pair(x0, x1)));
            }
        }
    }
    let find = Arc::new(find);
    let f2 = find.clone();
    let undefined = Idx::N(u64::MAX);
    let u2 = undefined.clone();
    Ok(HausdorffWitness::new(
        move |x0, x1| find(x0, x1).map(|r| r.0).unwrap_or_else(|| undefined.clone()),
        move |x0, x1| f2(x0, x1).map(|r| r.1).unwrap_or_else(|| u2.clone()),
    ))
}

fn masks_of(b: &Family, idx: &[Idx], pts: &[u64]) -> Vec<FixedBitSet> {
    let mut mc = MaskCache::new(b, pts.to_vec());
    idx.iter().map(|i| mc.get(i).clone()).collect()
}

fn full(len: usize) -> FixedBitSet {
    let mut m = FixedBitSet::with_capacity(len);
    m.insert_range(..);
    m
}

/// A finite set of `X0` points whose `h0`-neighbourhoods cover `X0` at scale,
/// as positions in `x0s`.
fn cover_x0(b: &Family, h: &HausdorffWitness, x0s: &[u64], x1: u64) -> Option<Vec<usize>> {
    let idx: Vec<Idx> = x0s.iter().map(|&x0| h.h0(x0, x1)).collect();
    let masks = masks_of(b, &idx, x0s);
    let target = full(x0s.len());
    minimal_subcover(&masks, &target, 3).or_else(|| greedy_subcover(&masks, &target))
}

fn fold_or_any(b: &SpaceBase, x: u64, idxs: &[Idx]) -> Option<Idx> {
    b.fold_witness(x, idxs).or_else(|| b.indices(b.search_bound).into_iter().find(|i| b.contains(x, i)))
}

/// Code for the complement of a compact `X0`: for each `x1` outside, a finite
/// `c` from `X0` whose `h0(.,x1)` sets are a cover under `C0`, then the fold of
/// the `h1(.,x1)` at `x1`.
pub fn compact_subspace_closed_code(
    b: &SpaceBase,
    h: &HausdorffWitness,
    x0: &(dyn Fn(u64) -> bool + Sync),
    c0: &CoverRelation,
    n: u64,
) -> Result<OpenCode, SepError> {
    let pts = b.points(n);
    let inside: Vec<u64> = pts.iter().copied().filter(|&x| x0(x)).collect();
    let mut entries = Vec::new();
    for (pos, &x1) in pts.iter().enumerate() {
        if x0(x1) {
            continue;
        }
        let hs = |c: &[u64]| c.iter().map(|&y| h.h0(y, x1)).collect::<FinSet<Idx>>();
        if !c0.decide(&hs(&inside)).covers() {
            return Err(SepError::UnknownAtBound(format!("no finite part of X0 separates {x1}")));
        }
        let mut c = inside.clone();
        'search: for size in 0..=inside.len().min(3) {
            for combo in itertools::Itertools::combinations(inside.iter().copied(), size) {
                if c0.decide(&hs(&combo)).covers() {
                    c = combo;
                    break 'search;
                }
            }
        }
        let h1s: Vec<Idx> = c.iter().map(|&y| h.h1(y, x1)).collect();
        let f = fold_or_any(b, x1, &h1s).ok_or_else(|| SepError::UnknownAtBound(format!("no neighbourhood of {x1}")))?;
        entries.push((f, pos as u64));
    }
    let code = EnumSet::from_entries("complement of compact subspace", entries).settled_at(n);
    let union = code.stage_of(n);
    for &x in &pts {
        if x0(x) == union.iter().any(|i| b.contains(x, i)) {
            return Err(SepError::SelfCheck(x));
        }
    }
    Ok(code)
}

/// Result of a separation, with its verification block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub v0: Vec<Idx>,
    pub v1: Vec<Idx>,
    pub verified_disjoint: bool,
    pub verified_covering: bool,
    pub points: u64,
}

#[derive(Clone, Debug)]
pub struct RegularSeparation {
    pub v0: OpenCode,
    pub v1: Idx,
    pub report: SeparationReport,
}

/// `V0 = union of U_{h0(x0,x1)}` over a finite `s` covering `X0`, and `V1` the
/// fold of the `U_{h1(x0,x1)}` at `x1`.
pub fn regular_separation(
    b: &SpaceBase,
    h: &HausdorffWitness,
    x0: &(dyn Fn(u64) -> bool + Sync),
    x1: u64,
    n: u64,
) -> Result<RegularSeparation, SepError> {
    if x0(x1) {
        return Err(SepError::PointInside(x1));
    }
    let pts = b.points(n);
    let inside: Vec<u64> = pts.iter().copied().filter(|&x| x0(x)).collect();
    let s: Vec<u64> = cover_x0(b, h, &inside, x1)
        .ok_or_else(|| SepError::UnknownAtBound("no finite cover of X0".into()))?
        .into_iter()
        .map(|k| inside[k])
        .collect();
    let v0: FinSet<Idx> = s.iter().map(|&y| h.h0(y, x1)).collect();
    let h1s: Vec<Idx> = s.iter().map(|&y| h.h1(y, x1)).collect();
    let v1 = fold_or_any(b, x1, &h1s).ok_or_else(|| SepError::UnknownAtBound(format!("no neighbourhood of {x1}")))?;
    let report = check_separation(b, v0.items(), std::slice::from_ref(&v1), &inside, &[x1], &pts);
    if !report.verified_disjoint || !report.verified_covering {
        return Err(SepError::SelfCheck(x1));
    }
    Ok(RegularSeparation { v0: EnumSet::constant(v0), v1, report })
}

fn check_separation(b: &Family, v0: &[Idx], v1: &[Idx], x0s: &[u64], x1s: &[u64], pts: &[u64]) -> SeparationReport {
    let in_any = |x: u64, v: &[Idx]| v.iter().any(|i| b.contains(x, i));
    SeparationReport {
        v0: v0.to_vec(),
        v1: v1.to_vec(),
        verified_disjoint: pts.iter().all(|&x| !(in_any(x, v0) && in_any(x, v1))),
        verified_covering: x0s.iter().all(|&x| in_any(x, v0)) && x1s.iter().all(|&x| in_any(x, v1)),
        points: pts.len() as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalMode {
    /// Covers of `X0` are decided by its cover relation.
    Effective,
    /// Covers of `X0` are decided by the limit formula at the bound.
    SigmaTwo,
}

#[derive(Clone, Debug)]
pub struct NormalSeparation {
    pub v0: OpenCode,
    pub v1: OpenCode,
    pub report: SeparationReport,
}

/// For each `x1` in `X1`: `r(x1)` covers `X0`, `s(x1)` folds the matching `h1`.
/// A finite `t` from `X1` with the `s(x1)` covering `X1` gives
/// `V1 = union of U_{s(x1)}`; `V0` is the intersection over `t` of the unions of
/// `r(x1)`, coded by folding one chosen index per `x1` at each point of `X0`.
pub fn normal_separation(
    b: &SpaceBase,
    h: &HausdorffWitness,
    x0: &(dyn Fn(u64) -> bool + Sync),
    x1: &(dyn Fn(u64) -> bool + Sync),
    c0: Option<&CoverRelation>,
    mode: NormalMode,
    n: u64,
) -> Result<NormalSeparation, SepError> {
    let pts = b.points(n);
    let in0: Vec<u64> = pts.iter().copied().filter(|&x| x0(x)).collect();
    let in1: Vec<u64> = pts.iter().copied().filter(|&x| x1(x)).collect();
    if let Some(&x) = in0.iter().find(|&&x| x1(x)) {
        return Err(SepError::NotDisjoint(x));
    }
    let mut r: Vec<Vec<Idx>> = Vec::new();
    let mut s_idx: Vec<Idx> = Vec::new();
    for &y in &in1 {
        let s: Vec<u64> = match (mode, c0) {
            (NormalMode::Effective, Some(c0)) => {
                let all: FinSet<Idx> = in0.iter().map(|&z| h.h0(z, y)).collect();
                if !c0.decide(&all).covers() {
                    return Err(SepError::UnknownAtBound(format!("cover relation rejects r({y})")));
                }
                let pos = cover_x0(b, h, &in0, y).ok_or_else(|| SepError::UnknownAtBound(format!("r({y})")))?;
                pos.into_iter().map(|k| in0[k]).collect()
            }
            (NormalMode::Effective, None) => return Err(SepError::UnknownAtBound("effective mode needs a cover relation for X0".into())),
            (NormalMode::SigmaTwo, _) => {
                let pos = cover_x0(b, h, &in0, y).ok_or_else(|| SepError::UnknownAtBound(format!("r({y})")))?;
                pos.into_iter().map(|k| in0[k]).collect()
            }
        };
        r.push(s.iter().map(|&z| h.h0(z, y)).collect());
        let h1s: Vec<Idx> = s.iter().map(|&z| h.h1(z, y)).collect();
        s_idx.push(fold_or_any(b, y, &h1s).ok_or_else(|| SepError::UnknownAtBound(format!("s({y})")))?);
    }
    let masks = masks_of(b, &s_idx, &in1);
    let t = minimal_subcover(&masks, &full(in1.len()), 3)
        .or_else(|| greedy_subcover(&masks, &full(in1.len())))
        .ok_or_else(|| SepError::UnknownAtBound("no finite cover of X1".into()))?;
    let v1: FinSet<Idx> = t.iter().map(|&k| s_idx[k].clone()).collect();
    let mut v0: FinSet<Idx> = FinSet::empty();
    for &z in &in0 {
        let mut pick = Vec::with_capacity(t.len());
        for &k in &t {
            let i = r[k].iter().find(|i| b.contains(z, i)).ok_or(SepError::SelfCheck(z))?;
            pick.push(i.clone());
        }
        v0.insert(fold_or_any(b, z, &pick).ok_or(SepError::SelfCheck(z))?);
    }
    let report = check_separation(b, v0.items(), v1.items(), &in0, &in1, &pts);
    if !report.verified_disjoint || !report.verified_covering {
        return Err(SepError::SelfCheck(0));
    }
    Ok(NormalSeparation { v0: EnumSet::constant(v0), v1: EnumSet::constant(v1), report })
}
