//! A compact space whose cover relation encodes a universal statement.

use std::fmt;
use std::sync::Arc;

use crate::covers::{bruteforce_relation, CoverRelation};
use crate::foundations::{PredClass, StagePredicate};
use crate::spaces::{subbase_closure, Family, Idx, SpaceBase};

/// A decidable binary predicate `phi0(i, x)`.
#[derive(Clone)]
pub struct Phi0 {
    pub name: String,
    phi: Arc<dyn Fn(u64, u64) -> bool + Send + Sync>,
}

impl fmt::Debug for Phi0 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi0({})", self.name)
    }
}

impl Phi0 {
    pub fn new(name: impl Into<String>, phi: impl Fn(u64, u64) -> bool + Send + Sync + 'static) -> Self {
        Phi0 { name: name.into(), phi: Arc::new(phi) }
    }

    pub fn eval(&self, i: u64, x: u64) -> bool {
        (self.phi)(i, x)
    }

    /// `phi0(i, x)` for every `x <= s`.
    pub fn holds_upto(&self, i: u64, s: u64) -> bool {
        (0..=s).all(|x| self.eval(i, x))
    }

    pub fn always() -> Self {
        Phi0::new("true", |_, _| true)
    }

    pub fn off_diagonal() -> Self {
        Phi0::new("neq", |i, x| x != i)
    }

    /// Fails once, at `x = 2^i`, for `i < 64`.
    pub fn sparse() -> Self {
        Phi0::new("sparse", |i, x| i >= 64 || x != 1u64 << i)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "true" => Some(Phi0::always()),
            "neq" => Some(Phi0::off_diagonal()),
            "sparse" => Some(Phi0::sparse()),
            _ => None,
        }
    }
}

pub const PHI0_NAMES: [&str; 3] = ["true", "neq", "sparse"];

/// `B_i = {x : phi0(i,x) or some y < x has not phi0(i,y)}`.
pub fn pi01_subbase(phi: &Phi0) -> Family {
    let p = phi.clone();
    Family::new(
        format!("pi01:{}", phi.name),
        |_| true,
        Some,
        |i| matches!(i, Idx::N(_)),
        Idx::N,
        move |x, i| match i {
            Idx::N(i) => p.eval(*i, x) || (0..x).any(|y| !p.eval(*i, y)),
            _ => false,
        },
    )
}

pub struct Pi01Space {
    pub subbase: Family,
    pub base: SpaceBase,
    /// Brute force at the given scale; the exact relation would decide `forall x phi0`.
    pub cover: CoverRelation,
}

pub fn pi01_compact_space(phi: &Phi0, n: u64) -> Pi01Space {
    let subbase = pi01_subbase(phi);
    let base = subbase_closure(&subbase).map_family(|f| f.renamed(format!("pi01:{}", phi.name)));
    let cover = bruteforce_relation(&base, n);
    Pi01Space { subbase, base, cover }
}

/// Slot `k` of the closure enumeration holds `{i : bit i of k}`; the selector
/// holds at stage `s` when each such `i` has `phi0(i, x)` for all `x <= s`.
pub fn full_set_selector(phi: &Phi0) -> StagePredicate {
    let p = phi.clone();
    StagePredicate::new(PredClass::Limit, move |args, s| {
        let k = args.first().copied().unwrap_or(0);
        (0..64).filter(|b| k >> b & 1 == 1).all(|i| p.holds_upto(i, s))
    })
}

/// Every basic set of these spaces is cofinite: past the first failure of
/// `phi0(i, -)` all points are in `B_i`.
pub fn pi01_cofinite(_: &Idx) -> bool {
    true
}

/// `B_i` misses some point `<= n` exactly when `phi0(i, -)` fails `<= n`.
pub fn full_iff_universal(phi: &Phi0, i: u64, n: u64) -> bool {
    let fam = pi01_subbase(phi);
    let full = (0..=n).all(|x| fam.contains(x, &Idx::N(i)));
    full == phi.holds_upto(i, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{cofinite_point_subcover, CofiniteOutcome};

    #[test]
    fn examples() {
        let t = pi01_subbase(&Phi0::always());
        assert!((0..20).all(|i| t.basic_set(&Idx::N(i), 40).len() == 41));
        let d = pi01_subbase(&Phi0::off_diagonal());
        for i in 0..20 {
            let expect: Vec<u64> = (0..=40).filter(|&x| x != i).collect();
            assert_eq!(d.basic_set(&Idx::N(i), 40), expect);
        }
        for p in PHI0_NAMES.iter().map(|n| Phi0::builtin(n).unwrap()) {
            assert!((0..16).all(|i| full_iff_universal(&p, i, 64)));
        }
    }

    #[test]
    fn cofinite_subcover_runs() {
        let p = Phi0::off_diagonal();
        let s = pi01_compact_space(&p, 64);
        let sel = full_set_selector(&p);
        let oracle: &dyn Fn(&Idx) -> bool = &pi01_cofinite;
        match cofinite_point_subcover(&s.base, &sel, 70, Some(oracle), 64, 256, 63) {
            CofiniteOutcome::Found { certificate, .. } => assert!(certificate.verified),
            other => panic!("{other:?}"),
        }
    }
}
