//! Two spaces given by subbases: one from a family with limits in `x`, one from the dead ends of a finite tree.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use super::generic::{LimitFamily, LimitVar};
use crate::covers::{bruteforce_relation, CoverRelation};
use crate::foundations::{bits, EnumSet, FinSet};
use crate::separation::DiscreteWitness;
use crate::spaces::{subbase_closure, Family, Idx, SpaceBase};

/// A string of length `<= 64` as `<len, bits>`, bit `k` of the string at bit `k` of the value.
pub fn string_index(s: &[u8]) -> Idx {
    let v = s.iter().enumerate().fold(0u64, |v, (k, &b)| v | (b as u64) << k);
    Idx::nats(&[s.len() as u64, v])
}

pub fn index_string(i: &Idx) -> Option<Vec<u8>> {
    match i.nat_tuple()?.as_slice() {
        &[len, v] if len <= 64 && (len == 64 || v >> len == 0) => Some((0..len).map(|k| (v >> k & 1) as u8).collect()),
        _ => None,
    }
}

/// `f_n(x)`: the limit bit of `n` from `x >= n + 3` on, a hash-like bit below.
pub fn fixture_x_limit() -> LimitFamily {
    let lim = |n: u64| (n.count_ones() % 2) as u8;
    let f = move |n: u64, x: u64| if x >= n + 3 { lim(n) } else { ((x * 7 + n * 3 + x * n) >> 1 & 1) as u8 };
    LimitFamily::new("xlimit", LimitVar::X, f, lim, |n| n + 3)
}

pub struct LimitSubbaseSpace {
    pub subbase: Family,
    pub base: SpaceBase,
    pub discrete: DiscreteWitness,
}

/// `B_s = {x : x = |s| or f_n(x) != s_n for some n < |s|}`, with strings enumerated by code.
pub fn limit_subbase_space(fam: &LimitFamily) -> LimitSubbaseSpace {
    let f = fam.clone();
    let subbase = Family::new(
        "limit-subbase",
        |_| true,
        Some,
        |i| index_string(i).is_some(),
        |k| string_index(&bits::decode(k.min((1u64 << 63) - 2))),
        move |x, i| match index_string(i) {
            Some(s) => x == s.len() as u64 || s.iter().enumerate().any(|(n, &b)| f.f(n as u64, x) != b),
            None => false,
        },
    );
    let base = subbase_closure(&subbase).map_family(|f| f.renamed("limit-subbase"));
    let f = fam.clone();
    // Every x past the last stabilization shows the limit profile, so the
    // profiles of x up to there are all the profiles there are.
    let discrete = DiscreteWitness::new(move |n| {
        let top = (0..n).map(|k| f.stabilization(k)).max().unwrap_or(0);
        let profiles: BTreeSet<Vec<u8>> = (0..=top.max(n)).map(|x| (0..n).map(|k| f.f(k, x)).collect()).collect();
        Idx::set(profiles.iter().map(|p| string_index(p)))
    });
    LimitSubbaseSpace { subbase, base, discrete }
}

/// The intersection of `B_s` over all strings of length `n`, on points `<= bound`.
pub fn all_strings_intersection(sub: &Family, n: usize, bound: u64) -> Vec<u64> {
    let strings: Vec<Idx> = (0..1u64 << n).map(|v| string_index(&(0..n).map(|k| (v >> k & 1) as u8).collect::<Vec<_>>())).collect();
    (0..=bound).filter(|&x| strings.iter().all(|s| sub.contains(x, s))).collect()
}

/// `lim_x f_n(x) = d` iff some `s` in `A` has `n < |s|` and `s_n = d`; `None` when nothing in `A` is long enough.
pub fn limit_readoff(a: &EnumSet<Idx>, n: u64, stages: u64) -> Vec<Option<u8>> {
    let strings: Vec<Vec<u8>> = a.stage_of(stages).iter().filter_map(index_string).collect();
    (0..=n).map(|k| strings.iter().find(|s| (k as usize) < s.len()).map(|s| s[k as usize])).collect()
}

/// All prefixes of the limit of length `<= min(n + 1, 64)`.
pub fn limit_prefixes(fam: &LimitFamily, n: u64) -> EnumSet<Idx> {
    let bits: Vec<u8> = (0..=n.min(63)).map(|k| fam.limit(k)).collect();
    EnumSet::constant((0..=bits.len()).map(|l| string_index(&bits[..l])).collect())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("{0} is in the tree but its parent is not")]
    NotPrefixClosed(String),
    #[error("the tree is empty")]
    Empty,
    #[error("bad node {0}")]
    BadNode(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    /// Node codes, sorted.
    pub nodes: Vec<u64>,
}

impl Tree {
    pub fn parse(nodes: &[&str]) -> Result<Tree, TreeError> {
        let codes: Result<BTreeSet<u64>, TreeError> =
            nodes.iter().map(|s| bits::parse(s).ok_or_else(|| TreeError::BadNode(s.to_string()))).collect();
        Tree::new(codes?.into_iter().collect())
    }

    pub fn new(mut nodes: Vec<u64>) -> Result<Tree, TreeError> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let set: BTreeSet<u64> = nodes.iter().copied().collect();
        for &t in &nodes {
            if t != 0 && !set.contains(&parent(t)) {
                return Err(TreeError::NotPrefixClosed(bits::show(t)));
            }
        }
        Ok(Tree { nodes })
    }

    pub fn contains(&self, t: u64) -> bool {
        self.nodes.binary_search(&t).is_ok()
    }

    pub fn leaves(&self) -> Vec<u64> {
        self.nodes.iter().copied().filter(|&t| !self.contains(2 * t + 1) && !self.contains(2 * t + 2)).collect()
    }

    /// `{(x|i)^(1 - x(i)) : i < |x|}` within the tree.
    pub fn escape_set(&self, x: u64) -> Vec<u64> {
        let s = bits::decode(x);
        (0..s.len())
            .map(|i| {
                let mut t = s[..i].to_vec();
                t.push(1 - s[i]);
                bits::encode(&t)
            })
            .filter(|&t| self.contains(t))
            .collect()
    }
}

fn parent(t: u64) -> u64 {
    (t - 1) / 2
}

pub fn builtin_tree(name: &str) -> Option<Tree> {
    let nodes: &[&str] = match name {
        "root" => &["e"],
        "cherry" => &["e", "0", "1"],
        "deep" => &["e", "0", "1", "10", "11", "110", "111"],
        "comb" => &["e", "0", "1", "00", "01", "010", "011", "0110", "0111"],
        _ => return None,
    };
    Tree::parse(nodes).ok()
}

pub const TREE_NAMES: [&str; 3] = ["cherry", "deep", "comb"];

pub struct DeadendSpace {
    pub tree: Tree,
    pub subbase: Family,
    pub base: SpaceBase,
    pub discrete: DiscreteWitness,
    /// Exact relations on the subbase and on its closure.
    pub sub_cover: CoverRelation,
    pub cover: CoverRelation,
}

/// Points are the dead ends of `T` (by code); `B_t = {x : t is not a prefix of x}`.
pub fn deadend_tree_space(t: &Tree) -> DeadendSpace {
    let leaves = Arc::new(t.leaves());
    let nodes = Arc::new(t.nodes.clone());
    let top = *leaves.last().expect("a finite tree has a dead end");
    let (l1, l2, n1, n2) = (leaves.clone(), leaves.clone(), nodes.clone(), nodes.clone());
    let tree = t.clone();
    let subbase = Family::new(
        "deadend",
        move |x| l1.binary_search(&x).is_ok(),
        move |k| l2.binary_search(&k).is_ok().then_some(k),
        move |i| matches!(i, Idx::N(c) if n1.binary_search(c).is_ok()),
        move |k| Idx::N(n2[(k % n2.len() as u64) as usize]),
        move |x, i| match i {
            Idx::N(c) => !bits::is_prefix(*c, x),
            _ => false,
        },
    )
    .with_search_bound(t.nodes.len() as u64 - 1)
    .with_finite_at(top);
    let base = subbase_closure(&subbase).map_family(|f| f.renamed("deadend"));
    let discrete = DiscreteWitness::new(move |x| Idx::set(tree.escape_set(x).into_iter().map(Idx::N)));
    let sub_cover = bruteforce_relation(&subbase, top);
    let cover = bruteforce_relation(&base, top);
    DeadendSpace { tree: t.clone(), subbase, base, discrete, sub_cover, cover }
}

/// `s_n` picks the escape set of the `n`-th dead end, cyclically.
pub fn covering_sequence(t: &Tree) -> impl Fn(usize) -> FinSet<Idx> {
    let (leaves, tree) = (t.leaves(), t.clone());
    move |n| tree.escape_set(leaves[n % leaves.len()]).into_iter().map(Idx::N).collect()
}

/// The escape set of the first dead end at every position.
pub fn constant_sequence(t: &Tree) -> impl Fn(usize) -> FinSet<Idx> {
    let s: FinSet<Idx> = t.escape_set(t.leaves()[0]).into_iter().map(Idx::N).collect();
    move |_| s.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{alexander_wkl_subcover, AlexanderOutcome};
    use crate::separation::validate_discrete_witness;
    use crate::spaces::validate_base;

    #[test]
    fn limit_space_examples() {
        let fam = fixture_x_limit();
        let sp = limit_subbase_space(&fam);
        assert_eq!(sp.subbase.basic_set(&string_index(&[]), 50), vec![0]);
        for n in 0..8 {
            assert_eq!(all_strings_intersection(&sp.subbase, n, 64), vec![n as u64]);
        }
        assert!(validate_discrete_witness(&sp.base, &sp.discrete, 64).is_valid());
        let read = limit_readoff(&limit_prefixes(&fam, 64), 64, 0);
        assert!((0..=63).all(|k| read[k as usize] == Some(fam.limit(k))));
        assert_eq!(read[64], None);
        assert!(fam.stabilization_failures(64, 256).is_empty());
    }

    #[test]
    fn deadend_examples() {
        let root = deadend_tree_space(&builtin_tree("root").unwrap());
        assert_eq!(root.subbase.points(10), vec![0]);
        assert!(root.subbase.basic_set(&Idx::N(0), 10).is_empty());
        assert!(root.cover.decide(&FinSet::singleton(Idx::set(vec![]))).covers());
        let ch = deadend_tree_space(&builtin_tree("cherry").unwrap());
        assert_eq!(ch.subbase.basic_set(&Idx::N(1), 10), vec![2]);
        assert_eq!(ch.subbase.basic_set(&Idx::N(2), 10), vec![1]);
        let fam: FinSet<Idx> = vec![Idx::N(1), Idx::N(2)].into_iter().collect();
        assert!(ch.sub_cover.decide(&fam).covers());
        assert!(Tree::parse(&["e", "01"]).is_err());
        for name in TREE_NAMES {
            let sp = deadend_tree_space(&builtin_tree(name).unwrap());
            assert!(validate_discrete_witness(&sp.base, &sp.discrete, 64).is_valid());
            assert!(validate_base(&sp.base, 64, 63).is_valid());
        }
    }

    #[test]
    fn alexander_on_trees() {
        for name in TREE_NAMES {
            let t = builtin_tree(name).unwrap();
            let sp = deadend_tree_space(&t);
            match alexander_wkl_subcover(&sp.sub_cover, &covering_sequence(&t), 64, 64).unwrap() {
                AlexanderOutcome::Certificate { certificate, height } => {
                    assert!(certificate.verified && height > 0);
                }
                other => panic!("{other:?}"),
            }
            let got = alexander_wkl_subcover(&sp.sub_cover, &constant_sequence(&t), 64, 64).unwrap();
            assert!(matches!(got, AlexanderOutcome::InfiniteBranch { .. }));
        }
    }
}
