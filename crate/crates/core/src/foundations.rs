//! Coding of tuples, finite sequences and finite sets, enumerable sets given
//! as stage sequences, and stage predicates.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoundationError {
    #[error("comprehension needs a monotone predicate, got {0:?}")]
    NotMonotone(PredClass),
    #[error("stage sets decrease between stage {0} and stage {1}")]
    Decreasing(u64, u64),
}

/// Cantor pairing `<x,y> = (x+y)(x+y+1)/2 + y`.
pub fn pair(x: u64, y: u64) -> u64 {
    let s = x.checked_add(y).expect("pair overflow");
    s.checked_mul(s + 1).map(|p| p / 2).and_then(|t| t.checked_add(y)).expect("pair overflow")
}

pub fn unpair(n: u64) -> (u64, u64) {
    let w = ((8 * n as u128 + 1).isqrt() as u64 - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = n - t;
    (w - y, y)
}

/// Right-nested pairing: `<a>` is `a`, `<a,b,c>` is `<a,<b,c>>`.
pub fn tuple_code(items: &[u64]) -> u64 {
    match items {
        [] => 0,
        [a] => *a,
        [a, rest @ ..] => pair(*a, tuple_code(rest)),
    }
}

pub fn tuple_decode(mut n: u64, len: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    for _ in 0..len - 1 {
        let (a, r) = unpair(n);
        out.push(a);
        n = r;
    }
    out.push(n);
    out
}

fn big_pair(x: &BigUint, y: &BigUint) -> BigUint {
    let s = x + y;
    (&s * (&s + 1u32)) / 2u32 + y
}

fn big_unpair(n: &BigUint) -> (BigUint, BigUint) {
    let w = ((n * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = &w * (&w + 1u32) / 2u32;
    let y = n - t;
    (w - &y, y)
}

/// A finite sequence of naturals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FinSeq {
    pub items: Vec<u64>,
}

impl FinSeq {
    pub fn new(items: Vec<u64>) -> Self {
        FinSeq { items }
    }

    /// Bijective code: the empty sequence is 0 and `a::rest` is `1 + <a, code(rest)>`.
    pub fn encode(&self) -> BigUint {
        let mut code = BigUint::from(0u32);
        for &a in self.items.iter().rev() {
            code = big_pair(&BigUint::from(a), &code) + 1u32;
        }
        code
    }

    pub fn decode(code: &BigUint) -> Option<FinSeq> {
        let mut items = Vec::new();
        let mut n = code.clone();
        let zero = BigUint::from(0u32);
        while n != zero {
            let (a, rest) = big_unpair(&(n - 1u32));
            items.push(u64::try_from(a).ok()?);
            n = rest;
        }
        Some(FinSeq { items })
    }
}

/// A finite set kept as a strictly increasing list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(serialize = "T: Serialize + Clone + Ord", deserialize = "T: Deserialize<'de> + Ord"))]
pub struct FinSet<T: Ord = u64> {
    items: Vec<T>,
}

impl<T: Ord> From<Vec<T>> for FinSet<T> {
    fn from(mut items: Vec<T>) -> Self {
        items.sort();
        items.dedup();
        FinSet { items }
    }
}

impl<T: Ord> From<FinSet<T>> for Vec<T> {
    fn from(s: FinSet<T>) -> Vec<T> {
        s.items
    }
}

impl<T: Ord> FromIterator<T> for FinSet<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        FinSet::from(iter.into_iter().collect::<Vec<_>>())
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for FinSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.items.iter()).finish()
    }
}

impl<T: Ord> Default for FinSet<T> {
    fn default() -> Self {
        FinSet { items: Vec::new() }
    }
}

impl<'a, T: Ord> IntoIterator for &'a FinSet<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;
    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

impl<T: Ord + Clone> FinSet<T> {
    pub fn empty() -> Self {
        FinSet { items: Vec::new() }
    }

    pub fn singleton(x: T) -> Self {
        FinSet { items: vec![x] }
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.items.binary_search(x).is_ok()
    }

    pub fn min(&self) -> Option<&T> {
        self.items.first()
    }

    pub fn max(&self) -> Option<&T> {
        self.items.last()
    }

    pub fn insert(&mut self, x: T) {
        if let Err(pos) = self.items.binary_search(&x) {
            self.items.insert(pos, x);
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.items.len() && j < other.items.len() {
            match self.items[i].cmp(&other.items[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.items[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.items[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.items[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.items[i..]);
        out.extend_from_slice(&other.items[j..]);
        FinSet { items: out }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        FinSet { items: self.items.iter().filter(|x| other.contains(x)).cloned().collect() }
    }

    pub fn difference(&self, other: &Self) -> Self {
        FinSet { items: self.items.iter().filter(|x| !other.contains(x)).cloned().collect() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.items.iter().all(|x| other.contains(x))
    }

    /// All subsets with at most `k` elements, smallest first.
    pub fn subsets_upto(&self, k: usize) -> Vec<FinSet<T>> {
        let mut out = vec![FinSet::empty()];
        for size in 1..=k.min(self.len()) {
            for combo in itertools::Itertools::combinations(self.items.iter().cloned(), size) {
                out.push(FinSet { items: combo });
            }
        }
        out
    }
}

impl FinSet<u64> {
    /// Canonical code `sum 2^x`.
    pub fn code(&self) -> BigUint {
        let mut c = BigUint::from(0u32);
        for &x in &self.items {
            c.set_bit(x, true);
        }
        c
    }

    pub fn from_code(code: &BigUint) -> Self {
        FinSet { items: (0..code.bits()).filter(|&b| code.bit(b)).collect() }
    }

    pub fn range(lo: u64, hi_inclusive: u64) -> Self {
        FinSet { items: (lo..=hi_inclusive).collect() }
    }
}

/// Outcome of a semi-decidable query run to a finite stage bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Semi {
    True { stage: u64 },
    FalseAtBound { bound: u64 },
}

impl Semi {
    pub fn is_true(&self) -> bool {
        matches!(self, Semi::True { .. })
    }
}

type StageFn<T> = dyn Fn(u64) -> FinSet<T> + Send + Sync;

/// An enumerable set, given as a nondecreasing sequence of finite stage sets.
#[derive(Clone)]
pub struct EnumSet<T: Ord = u64> {
    stage: Arc<StageFn<T>>,
    pub note: String,
    settled: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Clone + Ord", deserialize = "T: Deserialize<'de> + Ord"))]
pub struct EnumSetJson<T: Ord = u64> {
    pub stages: Vec<FinSet<T>>,
    pub note: String,
}

impl<T: Ord + Clone + Send + Sync + 'static> EnumSet<T> {
    pub fn new(note: impl Into<String>, f: impl Fn(u64) -> FinSet<T> + Send + Sync + 'static) -> Self {
        EnumSet { stage: Arc::new(f), note: note.into(), settled: None }
    }

    pub fn empty() -> Self {
        Self::new("empty", |_| FinSet::empty()).settled_at(0)
    }

    pub fn constant(set: FinSet<T>) -> Self {
        Self::new("constant", move |_| set.clone()).settled_at(0)
    }

    /// Each element appears from its listed stage on.
    pub fn from_entries(note: impl Into<String>, entries: Vec<(T, u64)>) -> Self {
        let last = entries.iter().map(|e| e.1).max().unwrap_or(0);
        Self::new(note, move |s| entries.iter().filter(|e| e.1 <= s).map(|e| e.0.clone()).collect()).settled_at(last)
    }

    /// Declares that no new elements appear after stage `s`.
    pub fn settled_at(mut self, s: u64) -> Self {
        self.settled = Some(s);
        self
    }

    pub fn settled(&self) -> Option<u64> {
        self.settled
    }

    pub fn is_settled_by(&self, s: u64) -> bool {
        self.settled.is_some_and(|t| t <= s)
    }

    pub fn stage_of(&self, s: u64) -> FinSet<T> {
        (self.stage)(s)
    }

    pub fn member_at(&self, x: &T, s: u64) -> bool {
        self.stage_of(s).contains(x)
    }

    /// First stage `<= bound` at which `x` is visible.
    pub fn entry_stage(&self, x: &T, bound: u64) -> Semi {
        match (0..=bound).find(|&s| self.member_at(x, s)) {
            Some(stage) => Semi::True { stage },
            None => Semi::FalseAtBound { bound },
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let (a, b) = (self.stage.clone(), other.stage.clone());
        let settled = match (self.settled, other.settled) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        EnumSet { stage: Arc::new(move |s| a(s).union(&b(s))), note: format!("({}) | ({})", self.note, other.note), settled }
    }

    pub fn intersect_fin(&self, b: &FinSet<T>) -> Self {
        let a = self.stage.clone();
        let b = b.clone();
        EnumSet {
            stage: Arc::new(move |s| a(s).intersect(&b)),
            note: format!("({}) & {}", self.note, "fixed finite set"),
            settled: self.settled,
        }
    }

    pub fn check_nondecreasing(&self, bound: u64) -> Result<(), FoundationError> {
        let mut prev = self.stage_of(0);
        for s in 1..=bound {
            let cur = self.stage_of(s);
            if !prev.is_subset(&cur) {
                return Err(FoundationError::Decreasing(s - 1, s));
            }
            prev = cur;
        }
        Ok(())
    }

    /// Extensional equality of the stage sets up to `bound`.
    pub fn equal_at_bound(&self, other: &Self, bound: u64) -> bool {
        (0..=bound).all(|s| self.stage_of(s) == other.stage_of(s))
    }

    pub fn to_json(&self, bound: u64) -> EnumSetJson<T> {
        EnumSetJson { stages: (0..=bound).map(|s| self.stage_of(s)).collect(), note: self.note.clone() }
    }
}

impl<T: Ord + Clone + Send + Sync + 'static> EnumSetJson<T> {
    /// Stage sets past the recorded ones repeat the last one.
    pub fn into_enumset(self) -> Result<EnumSet<T>, FoundationError> {
        for s in 1..self.stages.len() {
            if !self.stages[s - 1].is_subset(&self.stages[s]) {
                return Err(FoundationError::Decreasing(s as u64 - 1, s as u64));
            }
        }
        let last = self.stages.len().saturating_sub(1) as u64;
        let stages = self.stages;
        Ok(EnumSet::new(self.note, move |s| {
            let k = (s as usize).min(stages.len().saturating_sub(1));
            stages.get(k).cloned().unwrap_or_default()
        })
        .settled_at(last))
    }
}

impl<T: Ord> fmt::Debug for EnumSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnumSet({})", self.note)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PredClass {
    Monotone,
    Limit,
    Raw,
}

type PredFn = dyn Fn(&[u64], u64) -> bool + Send + Sync;

/// A predicate of arguments and a stage, tagged with how it behaves in the stage.
#[derive(Clone)]
pub struct StagePredicate {
    eval: Arc<PredFn>,
    pub class: PredClass,
}

impl fmt::Debug for StagePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StagePredicate({:?})", self.class)
    }
}

impl StagePredicate {
    pub fn new(class: PredClass, f: impl Fn(&[u64], u64) -> bool + Send + Sync + 'static) -> Self {
        StagePredicate { eval: Arc::new(f), class }
    }

    pub fn eval(&self, args: &[u64], s: u64) -> bool {
        (self.eval)(args, s)
    }

    pub fn first_true(&self, args: &[u64], bound: u64) -> Semi {
        match (0..=bound).find(|&s| self.eval(args, s)) {
            Some(stage) => Semi::True { stage },
            None => Semi::FalseAtBound { bound },
        }
    }

    /// Returns the first stage at which a true value reverts to false.
    pub fn monotone_violation(&self, args: &[u64], bound: u64) -> Option<u64> {
        let mut seen = false;
        for s in 0..=bound {
            let v = self.eval(args, s);
            if seen && !v {
                return Some(s);
            }
            seen |= v;
        }
        None
    }

    /// Least stage from which the value stays constant up to `bound`, with that value.
    pub fn stabilization(&self, args: &[u64], bound: u64) -> (u64, bool) {
        let last = self.eval(args, bound);
        let mut stage = bound;
        while stage > 0 && self.eval(args, stage - 1) == last {
            stage -= 1;
        }
        (stage, last)
    }
}

/// `{x <= arg_bound : p(x, s') for some s' <= s}` at stage `s`.
pub fn enumset_from_predicate(p: &StagePredicate, arg_bound: u64) -> Result<EnumSet<u64>, FoundationError> {
    if p.class != PredClass::Monotone {
        return Err(FoundationError::NotMonotone(p.class));
    }
    let p = p.clone();
    Ok(EnumSet::new("comprehension of a monotone predicate", move |s| {
        (0..=arg_bound).filter(|&x| (0..=s).any(|t| p.eval(&[x], t))).collect()
    }))
}

pub fn enumset_union<T: Ord + Clone + Send + Sync + 'static>(a: &EnumSet<T>, b: &EnumSet<T>) -> EnumSet<T> {
    a.union(b)
}

pub fn enumset_intersect_fin<T: Ord + Clone + Send + Sync + 'static>(a: &EnumSet<T>, b: &FinSet<T>) -> EnumSet<T> {
    a.intersect_fin(b)
}

pub fn member_at<T: Ord + Clone + Send + Sync + 'static>(a: &EnumSet<T>, x: &T, s: u64) -> bool {
    a.member_at(x, s)
}

/// Binary strings coded as naturals: `code(s) = 2^|s| - 1 + value(s)`, so the
/// empty string is 0, "0" is 1, "1" is 2, "00" is 3.
pub mod bits {
    pub fn encode(s: &[u8]) -> u64 {
        let mut v: u64 = 0;
        for &b in s {
            v = v * 2 + b as u64;
        }
        (1u64 << s.len()) - 1 + v
    }

    pub fn decode(code: u64) -> Vec<u8> {
        let len = 63 - (code + 1).leading_zeros() as usize;
        let v = code + 1 - (1u64 << len);
        (0..len).rev().map(|i| ((v >> i) & 1) as u8).collect()
    }

    pub fn len(code: u64) -> usize {
        63 - (code + 1).leading_zeros() as usize
    }

    pub fn is_prefix(p: u64, s: u64) -> bool {
        let (a, b) = (decode(p), decode(s));
        a.len() <= b.len() && b[..a.len()] == a[..]
    }

    pub fn show(code: u64) -> String {
        let s: String = decode(code).iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
        if s.is_empty() {
            "e".into()
        } else {
            s
        }
    }

    pub fn parse(s: &str) -> Option<u64> {
        if s == "e" || s.is_empty() {
            return Some(0);
        }
        let v: Option<Vec<u8>> = s
            .chars()
            .map(|c| match c {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect();
        v.map(|v| encode(&v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_roundtrip_small() {
        for x in 0..50 {
            for y in 0..50 {
                assert_eq!(unpair(pair(x, y)), (x, y));
            }
        }
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 0), 1);
        assert_eq!(pair(0, 1), 2);
    }

    #[test]
    fn tuples_roundtrip() {
        let t = [3, 1, 4, 1, 5];
        assert_eq!(tuple_decode(tuple_code(&t), 5), t);
    }

    #[test]
    fn bitstring_codes() {
        assert_eq!(bits::encode(&[]), 0);
        assert_eq!(bits::encode(&[0]), 1);
        assert_eq!(bits::encode(&[1]), 2);
        assert_eq!(bits::encode(&[0, 0]), 3);
        for c in 0..200 {
            assert_eq!(bits::encode(&bits::decode(c)), c);
        }
        assert!(bits::is_prefix(bits::parse("01").unwrap(), bits::parse("011").unwrap()));
        assert!(!bits::is_prefix(bits::parse("1").unwrap(), bits::parse("011").unwrap()));
    }

    #[test]
    fn comprehension_examples() {
        let never = StagePredicate::new(PredClass::Monotone, |_, _| false);
        let e = enumset_from_predicate(&never, 64).unwrap();
        assert!((0..20).all(|s| e.stage_of(s).is_empty()));

        let upto = StagePredicate::new(PredClass::Monotone, |a, s| a[0] <= s);
        let e = enumset_from_predicate(&upto, 64).unwrap();
        assert_eq!(e.stage_of(3), FinSet::from(vec![0, 1, 2, 3]));
        assert!(!e.member_at(&2, 1));
        assert!(e.member_at(&2, 2));

        let zero = StagePredicate::new(PredClass::Monotone, |a, _| a[0] == 0);
        let e = enumset_from_predicate(&zero, 64).unwrap();
        assert!((0..10).all(|s| e.stage_of(s) == FinSet::singleton(0)));
    }

    #[test]
    fn comprehension_rejects_non_monotone() {
        let p = StagePredicate::new(PredClass::Limit, |_, _| true);
        assert_eq!(enumset_from_predicate(&p, 4).unwrap_err(), FoundationError::NotMonotone(PredClass::Limit));
        let p = StagePredicate::new(PredClass::Raw, |_, _| true);
        assert!(enumset_from_predicate(&p, 4).is_err());
    }

    #[test]
    fn union_and_intersection_examples() {
        let a = EnumSet::from_entries("a", vec![(1, 0), (3, 2)]);
        let b = EnumSet::from_entries("b", vec![(3, 1), (5, 2)]);
        assert_eq!(enumset_union(&a, &b).stage_of(2), FinSet::from(vec![1, 3, 5]));
        let e = EnumSet::<u64>::empty();
        for s in 0..5 {
            assert_eq!(enumset_union(&e, &b).stage_of(s), b.stage_of(s));
        }
        let c = EnumSet::from_entries("c", vec![(0, 0), (2, 1), (4, 4)]);
        assert_eq!(enumset_intersect_fin(&c, &FinSet::from(vec![2, 9])).stage_of(4), FinSet::singleton(2));
    }

    #[test]
    fn stabilization_reports_last_change() {
        let p = StagePredicate::new(PredClass::Limit, |a, s| s >= a[0] && (s % 2 == 0 || s >= 10));
        assert_eq!(p.stabilization(&[3], 50), (10, true));
        let q = StagePredicate::new(PredClass::Limit, |_, _| false);
        assert_eq!(q.stabilization(&[0], 50), (0, false));
    }

    #[test]
    fn finset_json_is_sorted_array() {
        let s = FinSet::from(vec![5, 1, 3, 1]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1,3,5]");
        let back: FinSet = serde_json::from_str("[9,2,2]").unwrap();
        assert_eq!(back.items(), &[2, 9]);
    }

    #[test]
    fn enumset_json_form() {
        let a = EnumSet::from_entries("demo", vec![(1, 0), (3, 2)]);
        let j = serde_json::to_value(a.to_json(2)).unwrap();
        assert_eq!(j, serde_json::json!({"stages": [[1], [1], [1, 3]], "note": "demo"}));
    }
}
