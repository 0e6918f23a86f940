//! Orders pulled back along an injection, and the range enumeration their gaps compute.

use std::sync::Arc;

use super::hypersimple::Injection;
use crate::orders::LinearOrder;

/// `x < y` iff `f(x) < f(y)`. With `with_top`, the domain shifts up by one
/// and `0` becomes a greatest element.
pub fn injection_ordered_space(f: &Injection, with_top: bool) -> LinearOrder {
    let (f1, f2) = (f.clone(), f.clone());
    let name = if with_top { format!("inj-top({})", f.name) } else { format!("inj({})", f.name) };
    let l = if with_top {
        LinearOrder::new(name, |_| true, move |x, y| (y == 0 && x != 0) || (x != 0 && y != 0 && f1.apply(x - 1) < f1.apply(y - 1)))
    } else {
        LinearOrder::new(name, |_| true, move |x, y| f1.apply(x) < f1.apply(y))
    };
    match f2.range_oracle.clone() {
        Some(range) => {
            let f = f2.clone();
            let adjacent = move |a: u64, b: u64| a < b && !(a + 1..b).any(|v| range(v));
            if with_top {
                // The range is unbounded, so nothing sits directly below the top.
                l.with_gaps(move |x, y| x != 0 && y != 0 && adjacent(f.apply(x - 1), f.apply(y - 1)))
            } else {
                l.with_gaps(move |x, y| adjacent(f.apply(x), f.apply(y)))
            }
        }
        None => l,
    }
}

/// Least range value, found through the range oracle, and its preimage `<= search`.
fn least_element(f: &Injection, search: u64) -> Option<u64> {
    let v0 = match &f.range_oracle {
        Some(r) => (0..=search).find(|&v| r(v))?,
        None => (0..=search).map(|x| f.apply(x)).min()?,
    };
    (0..=search).find(|&x| f.apply(x) == v0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeEnumeration {
    /// `f(x_0), f(x_1), ...` along the successor chain.
    pub values: Vec<u64>,
    pub increasing: bool,
    /// The values are exactly the first range elements, per the range oracle.
    pub matches_range: Option<bool>,
}

/// From the least element, step to the `y <= search` with `gap(x_n, y)`,
/// up to `count` values.
pub fn successor_from_gaps(f: &Injection, gap: &dyn Fn(u64, u64) -> bool, count: usize, search: u64) -> RangeEnumeration {
    let mut values = Vec::new();
    let mut cur = least_element(f, search);
    while let Some(x) = cur {
        values.push(f.apply(x));
        if values.len() >= count {
            break;
        }
        cur = (0..=search).find(|&y| y != x && gap(x, y));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let matches_range = f.range_oracle.as_ref().map(|r| {
        let top = values.last().copied().unwrap_or(0);
        let expect: Vec<u64> = (0..=top).filter(|&v| r(v)).collect();
        !values.is_empty() && expect == values
    });
    RangeEnumeration { values, increasing, matches_range }
}

/// Gaps `x < y` among points `<= n`, as a test function.
pub fn scale_gaps(l: &LinearOrder, n: u64) -> impl Fn(u64, u64) -> bool {
    let set: std::collections::HashSet<(u64, u64)> = crate::orders::gap_set(l, n).into_iter().collect();
    let set = Arc::new(set);
    move |x, y| set.contains(&(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::{gaps_from_hausdorff, hausdorff_from_gaps, validate_order};

    #[test]
    fn order_examples() {
        let id = injection_ordered_space(&Injection::identity(), false);
        assert!(id.lt(3, 4) && !id.lt(4, 3));
        let p = Injection::from_prefix(vec![3, 0, 5, 1]);
        let l = injection_ordered_space(&p, false);
        let mut v = vec![0, 1, 2, 3];
        v.sort_by(|&a, &b| l.cmp(a, b));
        assert_eq!(v, vec![1, 3, 0, 2]);
        let t = injection_ordered_space(&p, true);
        let mut v = vec![0, 1, 2, 3, 4];
        v.sort_by(|&a, &b| t.cmp(a, b));
        assert_eq!(v, vec![2, 4, 1, 3, 0]);
        assert!(validate_order(&t, 24).is_empty());
    }

    #[test]
    fn range_enumeration() {
        let id = Injection::identity();
        let l = injection_ordered_space(&id, false);
        let e = successor_from_gaps(&id, l.gap_oracle.as_deref().unwrap(), 10, 64);
        assert_eq!(e.values, (0..10).collect::<Vec<_>>());
        let p = Injection::from_prefix(vec![3, 0, 5, 1]);
        let l = injection_ordered_space(&p, false);
        let e = successor_from_gaps(&p, l.gap_oracle.as_deref().unwrap(), 4, 64);
        assert_eq!(e.values, vec![0, 1, 3, 5]);
        let f = Injection::fixture();
        let l = injection_ordered_space(&f, false);
        let e = successor_from_gaps(&f, &scale_gaps(&l, 64), 30, 64);
        assert!(e.increasing && e.matches_range == Some(true), "{e:?}");
        let g = l.gap_oracle.clone().unwrap();
        let h = hausdorff_from_gaps(&l, move |x, y| g(x, y), 64);
        let back = gaps_from_hausdorff(&l, &h);
        let e2 = successor_from_gaps(&f, &back, 30, 64);
        assert_eq!(e.values, e2.values);
    }
}
