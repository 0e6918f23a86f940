//! Limit families, a finite-extension generic, and the Tychonoff failure spaces built from it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::foundations::{bits, pair, tuple_decode, unpair, EnumSet, FinSet};
use crate::separation::DiscreteWitness;
use crate::spaces::{subbase_closure, Family, Idx, SpaceBase};

type BitFn = Arc<dyn Fn(u64, u64) -> u8 + Send + Sync>;
type ArgFn = Arc<dyn Fn(u64) -> u64 + Send + Sync>;

/// Which argument of `f(n, x)` the limit is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitVar {
    /// `lim_n f_n(x)`, a function of `x`.
    N,
    /// `lim_x f_n(x)`, a function of `n`.
    X,
}

/// `f_n(x)` with the limit value and stabilization point of each argument.
#[derive(Clone)]
pub struct LimitFamily {
    pub name: String,
    pub var: LimitVar,
    f: BitFn,
    /// From this value of the limiting variable on, `f` equals the limit.
    stab: ArgFn,
    limit: Arc<dyn Fn(u64) -> u8 + Send + Sync>,
}

impl fmt::Debug for LimitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LimitFamily({}, {:?})", self.name, self.var)
    }
}

impl LimitFamily {
    pub fn new(
        name: impl Into<String>,
        var: LimitVar,
        f: impl Fn(u64, u64) -> u8 + Send + Sync + 'static,
        limit: impl Fn(u64) -> u8 + Send + Sync + 'static,
        stab: impl Fn(u64) -> u64 + Send + Sync + 'static,
    ) -> Self {
        LimitFamily { name: name.into(), var, f: Arc::new(f), stab: Arc::new(stab), limit: Arc::new(limit) }
    }

    pub fn f(&self, n: u64, x: u64) -> u8 {
        (self.f)(n, x)
    }

    pub fn limit(&self, arg: u64) -> u8 {
        (self.limit)(arg)
    }

    pub fn stabilization(&self, arg: u64) -> u64 {
        (self.stab)(arg)
    }

    fn at(&self, arg: u64, t: u64) -> u8 {
        match self.var {
            LimitVar::N => self.f(t, arg),
            LimitVar::X => self.f(arg, t),
        }
    }

    /// Arguments `<= n` whose values disagree with the limit somewhere in
    /// `stabilization..=bound`, or that have not stabilized by `bound`.
    pub fn stabilization_failures(&self, n: u64, bound: u64) -> Vec<u64> {
        (0..=n)
            .filter(|&a| {
                let s = self.stabilization(a);
                s > bound || (s..=bound).any(|t| self.at(a, t) != self.limit(a))
            })
            .collect()
    }
}

/// Bits past the constructed prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Zero,
    /// Parity of the number of ones in `x`.
    ThueMorse,
}

impl Tail {
    pub fn bit(&self, x: u64) -> u8 {
        match self {
            Tail::Zero => 0,
            Tail::ThueMorse => (x.count_ones() % 2) as u8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    /// The prefix, a member of `D_k`, is an initial segment of the limit.
    Met { prefix: String },
    /// No member of `D_k` extends this prefix of the limit.
    Avoided { prefix: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: u64,
    pub prefix: String,
    pub verdicts: Vec<Verdict>,
}

/// The finite-extension construction recorded stage by stage.
#[derive(Clone, Debug)]
pub struct Generic {
    pub stages: u64,
    pub tail: Tail,
    /// Prefix code built at each stage `0..=stages`.
    pub sigma: Vec<u64>,
    /// Verdicts at the final stage, in list order.
    pub verdicts: Vec<Verdict>,
    /// Stages at which the prefix or a verdict changed.
    pub trace: Vec<TraceEntry>,
}

fn extend(d: &[EnumSet<u64>], n: u64) -> (u64, Vec<Verdict>) {
    let mut sigma = 0u64;
    let mut verdicts = Vec::with_capacity(d.len());
    for dk in d {
        // Codes order strings by length, then lexicographically.
        match dk.stage_of(n).iter().copied().find(|&t| bits::is_prefix(sigma, t)) {
            Some(t) => {
                sigma = t;
                verdicts.push(Verdict::Met { prefix: bits::show(t) });
            }
            None => verdicts.push(Verdict::Avoided { prefix: bits::show(sigma) }),
        }
    }
    (sigma, verdicts)
}

/// At stage `n`, start from the empty string and for each `D_k` in order take
/// the least extension enumerated by stage `n`, if any. `f_n` is that prefix
/// followed by the tail, and is frozen from `stages` on.
pub fn kleene_post_generic(d: &[EnumSet<u64>], stages: u64, tail: Tail) -> Generic {
    let mut sigma = Vec::with_capacity(stages as usize + 1);
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut verdicts = Vec::new();
    for n in 0..=stages {
        let (s, v) = extend(d, n);
        if trace.last().is_none_or(|t| t.prefix != bits::show(s) || t.verdicts != v) {
            trace.push(TraceEntry { stage: n, prefix: bits::show(s), verdicts: v.clone() });
        }
        sigma.push(s);
        verdicts = v;
    }
    Generic { stages, tail, sigma, verdicts, trace }
}

impl Generic {
    pub fn f(&self, n: u64, x: u64) -> u8 {
        let s = bits::decode(self.sigma[n.min(self.stages) as usize]);
        s.get(x as usize).copied().unwrap_or_else(|| self.tail.bit(x))
    }

    pub fn limit(&self, x: u64) -> u8 {
        self.f(self.stages, x)
    }

    pub fn final_prefix(&self) -> Vec<u8> {
        bits::decode(self.sigma[self.stages as usize])
    }

    /// Least `n0` with `f_n(x)` equal to the limit for all `n0 <= n <= stages`.
    pub fn stabilization(&self, x: u64) -> u64 {
        let l = self.limit(x);
        let mut n0 = self.stages;
        while n0 > 0 && self.f(n0 - 1, x) == l {
            n0 -= 1;
        }
        n0
    }

    pub fn family(&self) -> LimitFamily {
        let (a, b, c) = (Arc::new(self.clone()), Arc::new(self.clone()), Arc::new(self.clone()));
        LimitFamily::new("generic", LimitVar::N, move |n, x| a.f(n, x), move |x| b.limit(x), move |x| c.stabilization(x))
    }

    /// Each verdict checked against `d` at the final stage: a met prefix is in
    /// `D_k` and begins the limit; an avoided prefix begins the limit and has
    /// no extension in `D_k`. Returns the failing positions.
    pub fn verdict_failures(&self, d: &[EnumSet<u64>]) -> Vec<usize> {
        let fin = bits::encode(&self.final_prefix());
        let last = self.stages;
        (0..d.len())
            .filter(|&k| {
                let set = d[k].stage_of(last);
                match &self.verdicts[k] {
                    Verdict::Met { prefix } => {
                        let p = bits::parse(prefix).unwrap_or(u64::MAX);
                        !(set.contains(&p) && bits::is_prefix(p, fin))
                    }
                    Verdict::Avoided { prefix } => {
                        let p = bits::parse(prefix).unwrap_or(u64::MAX);
                        !bits::is_prefix(p, fin) || set.iter().any(|&t| bits::is_prefix(p, t))
                    }
                }
            })
            .collect()
    }
}

/// Strings named by a predicate on the bit vector, with code `<= 4n + 3` at stage `n`
/// and nothing before `from`.
pub fn string_set(name: &str, from: u64, pred: impl Fn(&[u8]) -> bool + Send + Sync + 'static) -> EnumSet<u64> {
    EnumSet::new(name.to_string(), move |n| {
        if n < from {
            return FinSet::empty();
        }
        (0..=4 * n + 3).filter(|&c| pred(&bits::decode(c))).collect()
    })
}

/// Eight string sets, dense and not.
pub fn fixture_string_sets() -> Vec<EnumSet<u64>> {
    vec![
        string_set("has-one", 0, |s| s.contains(&1)),
        string_set("starts-1", 0, |s| s.first() == Some(&1)),
        string_set("three-ones", 0, |s| s.iter().filter(|&&b| b == 1).count() >= 3),
        string_set("long-ends-0", 0, |s| s.len() >= 5 && s.last() == Some(&0)),
        string_set("starts-00", 0, |s| s.starts_with(&[0, 0])),
        string_set("bit3", 0, |s| s.get(3) == Some(&1)),
        string_set("late-0110", 40, |s| s == [0, 1, 1, 0]),
        string_set("has-11-late", 90, |s| s.windows(2).any(|w| w == [1, 1])),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TychonoffVariant {
    Basic,
    Discrete,
}

pub struct TychonoffSpaces {
    pub variant: TychonoffVariant,
    pub subbases: [Family; 2],
    pub spaces: [SpaceBase; 2],
    /// For the discrete variant.
    pub discrete: Option<[DiscreteWitness; 2]>,
}

/// Slot `<a,b>` holds `<a+b, b>`, so `x >= y`.
pub fn tychonoff_index(x: u64, y: u64) -> Idx {
    Idx::nats(&[x, y])
}

/// Slot `<a,<b,c>>` holds `<a+b+c, b+c, c>`, so `w >= x >= y`.
pub fn tychonoff_discrete_index(w: u64, x: u64, y: u64) -> Idx {
    Idx::nats(&[w, x, y])
}

fn basic_parts(i: &Idx) -> Option<(u64, u64)> {
    match i.nat_tuple()?.as_slice() {
        [x, y] if x >= y => Some((*x, *y)),
        _ => None,
    }
}

fn discrete_parts(i: &Idx) -> Option<(u64, u64, u64)> {
    match i.nat_tuple()?.as_slice() {
        [w, x, y] if w >= x && x >= y => Some((*w, *x, *y)),
        _ => None,
    }
}

/// `B^i_<x,y> = {n : n = y or f_n(x) = i}`; the discrete variant uses
/// `C^i_<w,x,y> = {n : n = y or (n >= w and f_n(x) = i)}`.
pub fn tychonoff_spaces(fam: &LimitFamily, variant: TychonoffVariant) -> TychonoffSpaces {
    let make = |i: u8| -> Family {
        let f = fam.clone();
        match variant {
            TychonoffVariant::Basic => Family::new(
                format!("tychonoff:basic,{i}"),
                |_| true,
                Some,
                |j| basic_parts(j).is_some(),
                |k| {
                    let (a, b) = unpair(k);
                    tychonoff_index(a + b, b)
                },
                move |n, j| basic_parts(j).is_some_and(|(x, y)| n == y || f.f(n, x) == i),
            ),
            TychonoffVariant::Discrete => Family::new(
                format!("tychonoff:discrete,{i}"),
                |_| true,
                Some,
                |j| discrete_parts(j).is_some(),
                |k| {
                    let t = tuple_decode(k, 3);
                    tychonoff_discrete_index(t[0] + t[1] + t[2], t[1] + t[2], t[2])
                },
                move |n, j| discrete_parts(j).is_some_and(|(w, x, y)| n == y || (n >= w && f.f(n, x) == i)),
            ),
        }
    };
    let subbases = [make(0), make(1)];
    let spaces = [0, 1].map(|i| {
        let name = subbases[i].name.clone();
        subbase_closure(&subbases[i]).map_family(|f| f.renamed(name))
    });
    let discrete = (variant == TychonoffVariant::Discrete).then(|| {
        [0u8, 1u8].map(|i| {
            let f = fam.clone();
            DiscreteWitness::new(move |y| {
                let x = (y..).find(|&x| f.limit(x) == 1 - i).expect("limit takes both values");
                let w = x.max(f.stabilization(x));
                Idx::set(vec![tychonoff_discrete_index(w, x, y)])
            })
        })
    });
    TychonoffSpaces { variant, subbases, spaces, discrete }
}

/// Finite (with a bound) or cofinite, from the limit of `f_n(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitSetKind {
    FiniteBelow { bound: u64 },
    CofiniteFrom { from: u64 },
}

/// `B^i_<x,y>` is finite when `lim f_n(x) = 1 - i`, cofinite otherwise.
pub fn classify_tychonoff(fam: &LimitFamily, i: u8, x: u64, y: u64) -> LimitSetKind {
    let s = fam.stabilization(x);
    if fam.limit(x) == i {
        LimitSetKind::CofiniteFrom { from: s }
    } else {
        LimitSetKind::FiniteBelow { bound: s.max(y + 1) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum NoncoverWitness {
    /// `<z,z>` lies in no rectangle `B^0_<x,y0> x B^1_<x,y1>`; `point` is its code.
    Uncovered {
        z: u64,
        point: u64,
    },
    UnknownAtBound {
        x: u64,
    },
}

/// Splits `a` by the limit of `f_n(x)` and steps past every finite side.
pub fn tychonoff_noncover_witness(fam: &LimitFamily, a: &[(u64, u64, u64)], stages: u64) -> NoncoverWitness {
    let mut z = 0u64;
    for &(x, y0, y1) in a {
        let s = fam.stabilization(x);
        if s > stages {
            return NoncoverWitness::UnknownAtBound { x };
        }
        // The finite side is B^0 when the limit is 1, B^1 when it is 0.
        let y = if fam.limit(x) == 1 { y0 } else { y1 };
        z = z.max(y + 1).max(s);
    }
    NoncoverWitness::Uncovered { z, point: pair(z, z) }
}

/// Brute-force check that `<z,z>` misses every rectangle of `a`.
pub fn noncover_verified(fam: &LimitFamily, a: &[(u64, u64, u64)], z: u64) -> bool {
    let inb = |i: u8, x: u64, y: u64| z == y || fam.f(z, x) == i;
    a.iter().all(|&(x, y0, y1)| !(inb(0, x, y0) && inb(1, x, y1)))
}

/// The rectangle `B^0_<x,y0> x B^1_<x,y1>` as a product index of the closures.
pub fn tychonoff_rectangle(x: u64, y0: u64, y1: u64) -> Idx {
    Idx::pair(Idx::set(vec![tychonoff_index(x, y0)]), Idx::set(vec![tychonoff_index(x, y1)]))
}

pub fn rectangle_parts(r: &Idx) -> Option<(u64, u64, u64)> {
    let [s0, s1] = r.as_tup()? else { return None };
    let (a, b) = (s0.as_set()?, s1.as_set()?);
    match (a, b) {
        ([i], [j]) => {
            let ((x0, y0), (x1, y1)) = (basic_parts(i)?, basic_parts(j)?);
            (x0 == x1).then_some((x0, y0, y1))
        }
        _ => None,
    }
}

/// Triples `<x,y0,y1>` with `x >= max(y0,y1)` and code `<x,<y0,y1>>` at most `n`.
pub fn canonical_cover(n: u64) -> Vec<(u64, u64, u64)> {
    (0..=n)
        .filter_map(|c| {
            let (x, w) = unpair(c);
            let (y0, y1) = unpair(w);
            (x >= y0 && x >= y1).then_some((x, y0, y1))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum KeyOutcome {
    /// `lim f_n(x) = i` on `b`, and `b` meets every tested `s_m`.
    Found {
        b: FinSet<u64>,
        ell: u64,
    },
    /// `s_m` lies inside `{x : lim f_n(x) = 1 - i}`.
    Opposite {
        m: u64,
    },
    UnknownAtBound,
}

/// Least `ell <= ell_bound` such that `b = {x < ell : lim f_n(x) = i}` meets
/// every `s_m`, `m <= m_bound`.
pub fn tychonoff_key_extraction(fam: &LimitFamily, i: u8, s: &dyn Fn(u64) -> FinSet<u64>, m_bound: u64, ell_bound: u64) -> KeyOutcome {
    if let Some(m) = (0..=m_bound).find(|&m| s(m).iter().all(|&x| fam.limit(x) != i)) {
        return KeyOutcome::Opposite { m };
    }
    let need: Vec<u64> = (0..=m_bound).map(|m| s(m).iter().copied().filter(|&x| fam.limit(x) == i).min().expect("checked above")).collect();
    let ell = need.iter().max().map_or(0, |&v| v + 1);
    if ell > ell_bound {
        return KeyOutcome::UnknownAtBound;
    }
    KeyOutcome::Found { b: (0..ell).filter(|&x| fam.limit(x) == i).collect(), ell }
}

pub fn key_verified(fam: &LimitFamily, i: u8, s: &dyn Fn(u64) -> FinSet<u64>, b: &FinSet<u64>, m_bound: u64) -> bool {
    b.iter().all(|&x| fam.limit(x) == i) && (0..=m_bound).all(|m| s(m).iter().any(|x| b.contains(x)))
}

/// The generic used by the Tychonoff fixtures.
pub fn fixture_generic(stages: u64) -> Generic {
    kleene_post_generic(&fixture_string_sets(), stages, Tail::ThueMorse)
}
