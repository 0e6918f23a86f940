//! The dyadic block machine building a complete, effectively discrete order.
//!
//! Points live in blocks `B_d`, one per dyadic rational `d` in `[0,1]`, each
//! indexed by consecutive integers. A requirement `R_<e,f>` asks for a point
//! between `W_e` and `W_f` whenever `W_e` precedes `W_f`; it is met by moving
//! whole blocks so that `max W_e` and `min W_f` share a block.

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foundations::{pair, EnumSet, FinSet};
use crate::orders::LinearOrder;

/// `num / 2^exp` in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u64,
    exp: u32,
}

const DEPTH: u32 = 40;

impl Dyadic {
    pub fn new(num: u64, exp: u32) -> Option<Dyadic> {
        if exp > DEPTH || num > (1u64 << exp) {
            return None;
        }
        let (mut num, mut exp) = (num, exp);
        while exp > 0 && num % 2 == 0 {
            num /= 2;
            exp -= 1;
        }
        Some(Dyadic { num, exp })
    }

    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    /// Least `n` with `d 2^n` an integer.
    pub fn birthday(&self) -> u32 {
        self.exp
    }

    fn scaled(&self) -> u64 {
        self.num << (DEPTH - self.exp)
    }

    /// `D_n`: all `k / 2^n` for `k <= 2^n`.
    pub fn upto_birthday(n: u32) -> Vec<Dyadic> {
        (0..=(1u64 << n)).filter_map(|k| Dyadic::new(k, n)).collect()
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        self.scaled().cmp(&other.scaled())
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl std::str::FromStr for Dyadic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad dyadic {s:?}");
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        let (n, d): (u64, u64) = (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
        if !d.is_power_of_two() {
            return Err(bad());
        }
        Dyadic::new(n, d.trailing_zeros()).ok_or_else(bad)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Birthday of the block plus the absolute index.
pub fn level(d: Dyadic, index: i64) -> u64 {
    d.birthday() as u64 + index.unsigned_abs()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Block {
    lo: i64,
    pts: VecDeque<u64>,
}

impl Block {
    fn hi(&self) -> i64 {
        self.lo + self.pts.len() as i64 - 1
    }

    fn at(&self, i: i64) -> Option<u64> {
        if i < self.lo {
            return None;
        }
        self.pts.get((i - self.lo) as usize).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReqStatus {
    Waiting,
    /// `max w_e` and `min w_f` were found in one block without moving anything.
    Aligned,
    Shifted,
    /// `max w_e` does not precede `min w_f`, so `W_e` does not precede `W_f`.
    Vacuous,
}

impl ReqStatus {
    pub fn is_final(&self) -> bool {
        !matches!(self, ReqStatus::Waiting)
    }
}

/// The enumerated sets, each as `(element, entry stage)` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub stages: u64,
    /// Padding covers levels up to `min(stage, level_cap)`.
    #[serde(default = "default_level_cap")]
    pub level_cap: u64,
    pub w: Vec<Vec<(u64, u64)>>,
}

impl BlockConfig {
    pub fn new(stages: u64, w: Vec<Vec<(u64, u64)>>) -> Self {
        BlockConfig { stages, level_cap: DEFAULT_LEVEL_CAP, w }
    }

    pub fn sets(&self) -> Vec<EnumSet<u64>> {
        self.w.iter().enumerate().map(|(e, entries)| EnumSet::from_entries(format!("W{e}"), entries.clone())).collect()
    }
}

pub const DEFAULT_LEVEL_CAP: u64 = 8;

fn default_level_cap() -> u64 {
    DEFAULT_LEVEL_CAP
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlockError {
    #[error("W{e} holds {x} at stage {s}, outside 0..{s}")]
    Unbounded { e: usize, x: u64, s: u64 },
    #[error("level cap {0} exceeds the supported depth")]
    CapTooLarge(u64),
    #[error("bad log: {0}")]
    BadLog(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub x: u64,
    pub from: Dyadic,
    pub from_index: i64,
    pub to_index: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Pad { stage: u64, x: u64, block: Dyadic, index: i64 },
    Shift { stage: u64, req: (usize, usize), into: Dyadic, moved: Vec<Move> },
    Status { stage: u64, req: (usize, usize), status: ReqStatus },
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: BlockConfig,
}

#[derive(Clone, Debug)]
pub struct BlockMachineState {
    pub stage: u64,
    blocks: BTreeMap<Dyadic, Block>,
    /// Label to `(block, index)`.
    placement: Vec<(Dyadic, i64)>,
    /// Requirements `(e,f)` in increasing `<e,f>`.
    pub requirements: Vec<(usize, usize)>,
    pub status: BTreeMap<(usize, usize), ReqStatus>,
    pub log: Vec<Event>,
}

impl BlockMachineState {
    fn new(n_sets: usize) -> Self {
        let mut requirements: Vec<(usize, usize)> =
            (0..n_sets).flat_map(|e| (0..n_sets).filter(move |&f| f != e).map(move |f| (e, f))).collect();
        requirements.sort_by_key(|&(e, f)| pair(e as u64, f as u64));
        let status = requirements.iter().map(|&r| (r, ReqStatus::Waiting)).collect();
        BlockMachineState { stage: 0, blocks: BTreeMap::new(), placement: Vec::new(), requirements, status, log: Vec::new() }
    }

    pub fn point_count(&self) -> u64 {
        self.placement.len() as u64
    }

    pub fn place(&self, x: u64) -> Option<(Dyadic, i64)> {
        self.placement.get(x as usize).copied()
    }

    /// Labels of `B_d` from lowest index up.
    pub fn block(&self, d: Dyadic) -> Vec<u64> {
        self.blocks.get(&d).map(|b| b.pts.iter().copied().collect()).unwrap_or_default()
    }

    pub fn block_range(&self, d: Dyadic) -> Option<(i64, i64)> {
        self.blocks.get(&d).filter(|b| !b.pts.is_empty()).map(|b| (b.lo, b.hi()))
    }

    /// Nonempty blocks in dyadic order.
    pub fn nonempty_blocks(&self) -> Vec<Dyadic> {
        self.blocks.iter().filter(|(_, b)| !b.pts.is_empty()).map(|(d, _)| *d).collect()
    }

    /// Points at index `i - 1` and `i + 1` of the block holding `x`.
    pub fn neighbors(&self, x: u64) -> (Option<u64>, Option<u64>) {
        let Some((d, i)) = self.place(x) else { return (None, None) };
        let b = &self.blocks[&d];
        (b.at(i - 1), b.at(i + 1))
    }

    pub fn precedes(&self, x: u64, y: u64) -> bool {
        match (self.place(x), self.place(y)) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }

    /// The current order on the existing labels.
    pub fn order_snapshot(&self) -> LinearOrder {
        let pl = self.placement.clone();
        let n = pl.len() as u64;
        LinearOrder::new("blocks", move |x| x < n, move |x, y| x < n && y < n && pl[x as usize] < pl[y as usize])
            .with_finite_at(n.max(1) - 1)
    }

    fn pad(&mut self, upto: u64) {
        let mut wanted: Vec<(u64, u32, Dyadic, i64)> = Vec::new();
        for b in 0..=upto.min(DEPTH as u64) as u32 {
            for d in Dyadic::upto_birthday(b).into_iter().filter(|d| d.birthday() == b) {
                let r = (upto - b as u64) as i64;
                let (lo, hi) = if d == Dyadic::ZERO {
                    (0, r)
                } else if d == Dyadic::ONE {
                    (-r, 0)
                } else {
                    (-r, r)
                };
                let cur = self.block_range(d);
                for i in lo..=hi {
                    if cur.is_none_or(|(a, z)| i < a || i > z) {
                        wanted.push((level(d, i), b, d, i));
                    }
                }
            }
        }
        wanted.sort();
        // Indices are filled outward from the current ends, so order within a block by distance.
        for (_, _, d, i) in wanted {
            let x = self.placement.len() as u64;
            let blk = self.blocks.entry(d).or_default();
            if blk.pts.is_empty() {
                blk.lo = i;
                blk.pts.push_back(x);
            } else if i == blk.lo - 1 {
                blk.lo -= 1;
                blk.pts.push_front(x);
            } else if i == blk.hi() + 1 {
                blk.pts.push_back(x);
            } else {
                unreachable!("padding leaves a hole in {d} at {i}");
            }
            self.placement.push((d, i));
            self.log.push(Event::Pad { stage: self.stage, x, block: d, index: i });
        }
    }

    fn set_status(&mut self, r: (usize, usize), st: ReqStatus) {
        self.status.insert(r, st);
        self.log.push(Event::Status { stage: self.stage, req: r, status: st });
    }

    /// Moves every nonempty block between `from` and `to` into `B_d`, keeping `B_d`'s indices.
    fn shift(&mut self, r: (usize, usize), d: Dyadic, from: Dyadic, to: Dyadic) {
        let span: Vec<Dyadic> = self.nonempty_blocks().into_iter().filter(|&c| from <= c && c <= to && c != d).collect();
        let mut moved = Vec::new();
        let (left, right): (Vec<Dyadic>, Vec<Dyadic>) = span.into_iter().partition(|&c| c < d);
        let mut below: Vec<u64> = Vec::new();
        for c in &left {
            below.extend(self.blocks.get_mut(c).map(|b| std::mem::take(&mut b.pts)).unwrap_or_default());
        }
        let mut above: Vec<u64> = Vec::new();
        for c in &right {
            above.extend(self.blocks.get_mut(c).map(|b| std::mem::take(&mut b.pts)).unwrap_or_default());
        }
        let target = self.blocks.get_mut(&d).expect("target block exists");
        for &x in below.iter().rev() {
            target.lo -= 1;
            target.pts.push_front(x);
            let (fb, fi) = self.placement[x as usize];
            moved.push(Move { x, from: fb, from_index: fi, to_index: target.lo });
            self.placement[x as usize] = (d, target.lo);
        }
        for &x in &above {
            target.pts.push_back(x);
            let (fb, fi) = self.placement[x as usize];
            let to = target.hi();
            moved.push(Move { x, from: fb, from_index: fi, to_index: to });
            self.placement[x as usize] = (d, to);
        }
        moved.sort_by_key(|m| m.x);
        self.log.push(Event::Shift { stage: self.stage, req: r, into: d, moved });
    }

    /// Invariant violations: index layout, block ends for `B_0`, `B_1`, and padding to `levels`.
    pub fn invariant_violations(&self, levels: u64) -> Vec<String> {
        let mut out = Vec::new();
        for (d, b) in &self.blocks {
            for (k, &x) in b.pts.iter().enumerate() {
                if self.placement.get(x as usize) != Some(&(*d, b.lo + k as i64)) {
                    out.push(format!("{x} misplaced in {d}"));
                }
            }
            if b.pts.is_empty() {
                continue;
            }
            if *d == Dyadic::ZERO && b.lo != 0 {
                out.push(format!("B_0 starts at {}", b.lo));
            }
            if *d == Dyadic::ONE && b.hi() != 0 {
                out.push(format!("B_1 ends at {}", b.hi()));
            }
        }
        let total: usize = self.blocks.values().map(|b| b.pts.len()).sum();
        if total != self.placement.len() {
            out.push(format!("{} labels placed but {total} in blocks", self.placement.len()));
        }
        for b in 0..=levels.min(DEPTH as u64) as u32 {
            for d in Dyadic::upto_birthday(b).into_iter().filter(|d| d.birthday() == b) {
                let r = (levels - b as u64) as i64;
                let need = if d == Dyadic::ZERO {
                    (0, r)
                } else if d == Dyadic::ONE {
                    (-r, 0)
                } else {
                    (-r, r)
                };
                match self.block_range(d) {
                    Some((lo, hi)) if lo <= need.0 && hi >= need.1 => {}
                    got => out.push(format!("{d} holds {got:?}, needs {need:?}")),
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BlockRun {
    pub config: BlockConfig,
    pub state: BlockMachineState,
    /// Invariant violations found after each stage, with the stage.
    pub violations: Vec<(u64, String)>,
    /// `neighbors(x)` for every label after each stage.
    pub neighbor_history: Vec<Vec<(Option<u64>, Option<u64>)>>,
    /// Placements after each stage.
    pub placement_history: Vec<Vec<(Dyadic, i64)>>,
}

impl BlockRun {
    pub fn jsonl(&self) -> String {
        render_log(&self.config, &self.state.log)
    }

    pub fn shift_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m: BTreeMap<(usize, usize), usize> = self.state.requirements.iter().map(|&r| (r, 0)).collect();
        for ev in &self.state.log {
            if let Event::Shift { req, .. } = ev {
                *m.entry(*req).or_default() += 1;
            }
        }
        m
    }

    /// Once `x` has made its last move, each neighbour, once present, stays the same.
    pub fn neighbor_instability(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let n = self.state.point_count();
        for x in 0..n {
            let last_move = (1..self.placement_history.len())
                .filter(|&s| {
                    let (p, q) = (&self.placement_history[s - 1], &self.placement_history[s]);
                    (x as usize) < p.len() && p[x as usize].0 != q[x as usize].0
                })
                .max()
                .unwrap_or(0);
            let hist: Vec<&(Option<u64>, Option<u64>)> =
                self.neighbor_history[last_move..].iter().filter_map(|h| h.get(x as usize)).collect();
            for side in 0..2 {
                let mut seen: Option<u64> = None;
                for (k, h) in hist.iter().enumerate() {
                    let v = if side == 0 { h.0 } else { h.1 };
                    match (seen, v) {
                        (Some(a), Some(b)) if a != b => out.push((x, (last_move + k) as u64)),
                        (Some(_), None) => out.push((x, (last_move + k) as u64)),
                        (None, Some(b)) => seen = Some(b),
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// For each requirement whose sets are ordered at the end, a point between them
    /// and a check against the final order on labels `<= n`.
    pub fn completeness_witnesses(&self, n: u64) -> Vec<RequirementWitness> {
        let sets = self.config.sets();
        let last = self.config.stages.saturating_sub(1);
        let st = &self.state;
        let mut out = Vec::new();
        for &(e, f) in &st.requirements {
            let (we, wf) = (sets[e].stage_of(last), sets[f].stage_of(last));
            let (Some(a), Some(b)) = (max_by_order(st, &we), min_by_order(st, &wf)) else { continue };
            if !st.precedes(a, b) {
                continue;
            }
            let (da, db) = (st.place(a).unwrap().0, st.place(b).unwrap().0);
            let x = if da == db {
                a
            } else {
                // Index 0 of a block strictly between the endpoint blocks, else an endpoint.
                st.nonempty_blocks()
                    .into_iter()
                    .filter(|&c| da < c && c < db)
                    .min_by_key(|c| (c.birthday(), *c))
                    .and_then(|c| st.blocks[&c].at(0))
                    .unwrap_or(a)
            };
            let pts: Vec<u64> = (0..=n.min(st.point_count().saturating_sub(1))).collect();
            let le = |p: u64, q: u64| p == q || st.precedes(p, q);
            let checked =
                we.iter().filter(|&&y| pts.contains(&y)).all(|&y| le(y, x)) && wf.iter().filter(|&&y| pts.contains(&y)).all(|&y| le(x, y));
            let gap = match (st.place(a), st.place(b)) {
                (Some((p, i)), Some((q, j))) if p == q => Some(j - i),
                _ => None,
            };
            out.push(RequirementWitness { req: (e, f), x, checked, same_block_distance: gap });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementWitness {
    pub req: (usize, usize),
    pub x: u64,
    pub checked: bool,
    pub same_block_distance: Option<i64>,
}

fn max_by_order(st: &BlockMachineState, w: &FinSet<u64>) -> Option<u64> {
    w.iter().copied().filter(|&x| st.place(x).is_some()).max_by_key(|&x| st.place(x))
}

fn min_by_order(st: &BlockMachineState, w: &FinSet<u64>) -> Option<u64> {
    w.iter().copied().filter(|&x| st.place(x).is_some()).min_by_key(|&x| st.place(x))
}

/// Checks that each `w_{e,s}` lies in `{0..s-1}` for `s < stages`.
pub fn check_stage_bounded(cfg: &BlockConfig) -> Result<(), BlockError> {
    for (e, entries) in cfg.w.iter().enumerate() {
        if let Some(&(x, s)) = entries.iter().find(|&&(x, s)| x >= s) {
            return Err(BlockError::Unbounded { e, x, s });
        }
    }
    Ok(())
}

/// Runs stages `0..stages`. Each stage pads to level `min(stage, cap)`, then
/// visits the waiting requirements in priority order.
pub fn block_machine_run(cfg: &BlockConfig) -> Result<BlockRun, BlockError> {
    check_stage_bounded(cfg)?;
    if cfg.level_cap > 24 {
        return Err(BlockError::CapTooLarge(cfg.level_cap));
    }
    let sets = cfg.sets();
    let mut st = BlockMachineState::new(sets.len());
    let mut violations = Vec::new();
    let mut neighbor_history = Vec::new();
    let mut placement_history: Vec<Vec<(Dyadic, i64)>> = Vec::new();
    for s in 0..cfg.stages {
        st.stage = s;
        let levels = s.min(cfg.level_cap);
        st.pad(levels);
        for r in st.requirements.clone() {
            if st.status[&r].is_final() {
                continue;
            }
            let (we, wf) = (sets[r.0].stage_of(s), sets[r.1].stage_of(s));
            let (Some(a), Some(b)) = (max_by_order(&st, &we), min_by_order(&st, &wf)) else { continue };
            if !st.precedes(a, b) {
                st.set_status(r, ReqStatus::Vacuous);
                continue;
            }
            let (da, db) = (st.place(a).unwrap().0, st.place(b).unwrap().0);
            if da == db {
                st.set_status(r, ReqStatus::Aligned);
                continue;
            }
            let p = pair(r.0 as u64, r.1 as u64);
            let span: Vec<Dyadic> = st.nonempty_blocks().into_iter().filter(|&c| da <= c && c <= db).collect();
            let old: Vec<Dyadic> = span.iter().copied().filter(|c| c.birthday() as u64 <= p).collect();
            let target = match old.len() {
                1 => old[0],
                0 => *span.iter().min_by_key(|c| (c.birthday(), **c)).expect("span holds a and b"),
                _ => continue,
            };
            st.shift(r, target, da, db);
            st.set_status(r, ReqStatus::Shifted);
            st.pad(levels);
        }
        for v in st.invariant_violations(levels) {
            violations.push((s, v));
        }
        if let Some(prev) = placement_history.last() {
            let order_changed =
                (0..prev.len()).any(|x| (0..prev.len()).any(|y| (prev[x] < prev[y]) != (st.placement[x] < st.placement[y])));
            if order_changed {
                violations.push((s, "order on existing points changed".into()));
            }
        }
        neighbor_history.push((0..st.point_count()).map(|x| st.neighbors(x)).collect());
        placement_history.push(st.placement.clone());
    }
    Ok(BlockRun { config: cfg.clone(), state: st, violations, neighbor_history, placement_history })
}

/// Header line with the configuration, then one event per line.
pub fn render_log(cfg: &BlockConfig, events: &[Event]) -> String {
    let mut out = serde_json::to_string(&Header { config: cfg.clone() }).expect("config serializes");
    out.push('\n');
    for ev in events {
        out.push_str(&serde_json::to_string(ev).expect("event serializes"));
        out.push('\n');
    }
    out
}

/// Reads the configuration from the header, reruns and compares bytes.
pub fn replay(log: &str) -> Result<bool, BlockError> {
    let first = log.lines().next().ok_or_else(|| BlockError::BadLog("empty".into()))?;
    let header: Header = serde_json::from_str(first).map_err(|e| BlockError::BadLog(e.to_string()))?;
    let run = block_machine_run(&header.config)?;
    Ok(run.jsonl() == log)
}

pub fn parse_events(log: &str) -> Result<Vec<Event>, BlockError> {
    log.lines().skip(1).map(|l| serde_json::from_str(l).map_err(|e| BlockError::BadLog(e.to_string()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn dyadics() {
        assert_eq!(Dyadic::upto_birthday(2), vec![d("0"), d("1/4"), d("1/2"), d("3/4"), d("1")]);
        assert_eq!(d("2/4"), d("1/2"));
        assert_eq!(level(d("3/4"), -3), 5);
        assert_eq!(serde_json::to_string(&d("3/8")).unwrap(), "\"3/8\"");
    }

    #[test]
    fn empty_list_three_stages() {
        let run = block_machine_run(&BlockConfig::new(3, vec![])).unwrap();
        assert!(run.violations.is_empty(), "{:?}", run.violations);
        assert_eq!(run.state.nonempty_blocks(), Dyadic::upto_birthday(2));
        assert!(run.state.log.iter().all(|e| matches!(e, Event::Pad { .. })));
        assert_eq!(run.state.block_range(d("0")), Some((0, 2)));
        assert_eq!(run.state.block_range(d("1")), Some((-2, 0)));
        assert_eq!(run.state.block_range(d("1/4")), Some((0, 0)));
        assert!(replay(&run.jsonl()).unwrap());
    }

    #[test]
    fn rejects_unbounded() {
        assert!(block_machine_run(&BlockConfig::new(5, vec![vec![(3, 3)]])).is_err());
    }
}
