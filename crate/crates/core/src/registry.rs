//! Named spaces: `name:param` specs, products `A * B` and subspaces `A | pred`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::covers::{bruteforce_relation, product_cover_relation, CoverRelation};
use crate::orders::{
    builtin_order, hausdorff_from_gaps, interval_cover_relation, ordered_cover_relation, ordered_space, ray_family, LinearOrder, OrderSpec,
};
use crate::pathologies::generic::{fixture_generic, tychonoff_spaces, TychonoffVariant};
use crate::pathologies::hypersimple::{fixture_deficiency, hypersimple_space, Injection};
use crate::pathologies::injection_orders::injection_ordered_space;
use crate::pathologies::pi01::{pi01_compact_space, Phi0};
use crate::pathologies::subbase::{builtin_tree, deadend_tree_space, fixture_x_limit, limit_subbase_space};
use crate::separation::{DiscreteWitness, HausdorffWitness};
use crate::spaces::{discrete, product, subspace, Family, Idx, SpaceBase};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown space {0}")]
    Unknown(String),
    #[error("malformed spec {0}")]
    Malformed(String),
}

#[derive(Clone)]
pub struct SpaceEntry {
    pub spec: String,
    pub kind: &'static str,
    pub base: SpaceBase,
    /// The family the base closes, when it is given by a subbase.
    pub subbase: Option<Family>,
    pub discrete: Option<DiscreteWitness>,
    pub hausdorff: Option<HausdorffWitness>,
    /// An exact relation for the base itself.
    pub base_relation: Option<CoverRelation>,
    pub subbase_relation: Option<CoverRelation>,
    /// Every relation the entry carries, each with the family it decides.
    pub relations: Vec<(Family, CoverRelation)>,
    pub order: Option<LinearOrder>,
    /// Point bound used when validating at default scale.
    pub points: u64,
}

impl std::fmt::Debug for SpaceEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpaceEntry({})", self.spec)
    }
}

impl SpaceEntry {
    fn new(spec: &str, kind: &'static str, base: SpaceBase, points: u64) -> Self {
        SpaceEntry {
            spec: spec.to_string(),
            kind,
            base,
            subbase: None,
            discrete: None,
            hausdorff: None,
            base_relation: None,
            subbase_relation: None,
            relations: Vec::new(),
            order: None,
            points,
        }
    }

    fn with_discrete(mut self, d: DiscreteWitness) -> Self {
        self.hausdorff = Some(HausdorffWitness::from_discrete(&d));
        self.discrete = Some(d);
        self
    }

    fn with_base_relation(mut self, c: CoverRelation) -> Self {
        self.relations.push((self.base.family.clone(), c.clone()));
        self.base_relation = Some(c);
        self
    }

    /// The subbase if there is one, otherwise the base.
    pub fn generating_family(&self) -> &Family {
        self.subbase.as_ref().unwrap_or(&self.base.family)
    }

    pub fn exact_relations(&self) -> Vec<&(Family, CoverRelation)> {
        self.relations.iter().filter(|(_, c)| c.is_exact()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ListingItem {
    pub name: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub const BUILTINS: &[ListingItem] = &[
    ListingItem { name: "discrete", params: "n", description: "n isolated points" },
    ListingItem {
        name: "ordered",
        params: "chainN | nat | nat+nat* | dyadic | inj | inj-top | custom",
        description: "interval topology of a linear order",
    },
    ListingItem { name: "hypersimple", params: "default", description: "discrete space from the deficiency set of the fixture injection" },
    ListingItem { name: "pi01", params: "true | neq | sparse", description: "cofinite subbase from a decidable predicate" },
    ListingItem { name: "tychonoff", params: "basic|discrete,0|1", description: "factor spaces from the Kleene-Post generic" },
    ListingItem { name: "deadend", params: "root | cherry | deep | comb", description: "dead ends of a finite binary tree" },
    ListingItem { name: "limit-subbase", params: "default", description: "subbase from a family with limits in x" },
    ListingItem { name: "A * B", params: "two specs", description: "product" },
    ListingItem { name: "A | pred", params: "even | odd | nonzero | lt:K | ge:K", description: "subspace" },
];

/// Specs covered by the base-axiom suite, not counting products and subspaces.
pub fn suite_specs() -> Vec<String> {
    let mut v = vec!["discrete:10".to_string()];
    v.extend(["chain6", "nat", "nat+nat*", "dyadic", "inj"].iter().map(|o| format!("ordered:{o}")));
    v.push("hypersimple:default".into());
    v.extend(["true", "neq", "sparse"].iter().map(|p| format!("pi01:{p}")));
    v.extend(["basic,0", "basic,1", "discrete,0", "discrete,1"].iter().map(|p| format!("tychonoff:{p}")));
    v.extend(["cherry", "deep", "comb"].iter().map(|t| format!("deadend:{t}")));
    v.push("limit-subbase:default".into());
    v
}

pub fn suite_subspaces() -> Vec<String> {
    vec![
        "discrete:10 | even".into(),
        "ordered:nat | ge:3".into(),
        "hypersimple:default | odd".into(),
        "deadend:deep | nonzero".into(),
        "ordered:dyadic | lt:40".into(),
    ]
}

/// Resolves specs against the builtins and any loaded orders.
#[derive(Clone, Default)]
pub struct Registry {
    pub custom_orders: BTreeMap<String, LinearOrder>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn load_orders(&mut self, json: &str) -> Result<Vec<String>, RegistryError> {
        let specs: Vec<OrderSpec> = match serde_json::from_str::<Vec<OrderSpec>>(json) {
            Ok(v) => v,
            Err(_) => vec![serde_json::from_str(json).map_err(|e| RegistryError::Malformed(e.to_string()))?],
        };
        let mut names = Vec::new();
        for s in specs {
            let l = s.build().map_err(|e| RegistryError::Malformed(e.to_string()))?;
            names.push(l.name.clone());
            self.custom_orders.insert(l.name.clone(), l);
        }
        Ok(names)
    }

    pub fn listing(&self) -> Vec<ListingItem> {
        let mut v = BUILTINS.to_vec();
        for name in self.custom_orders.keys() {
            v.push(ListingItem { name: "ordered", params: leak(name.clone()), description: "custom order" });
        }
        v
    }

    pub fn order(&self, name: &str) -> Option<LinearOrder> {
        if let Some(l) = self.custom_orders.get(name) {
            return Some(l.clone());
        }
        match name {
            "inj" => Some(injection_ordered_space(&Injection::fixture(), false)),
            "inj-top" => Some(injection_ordered_space(&Injection::fixture(), true)),
            _ => builtin_order(name),
        }
    }

    /// `n` is the point bound for relations that brute-force at scale.
    pub fn resolve(&self, spec: &str, n: u64) -> Result<SpaceEntry, RegistryError> {
        let spec = spec.trim();
        if let Some((a, b)) = spec.split_once(" * ") {
            return Ok(product_entry(&self.resolve(a, n)?, &self.resolve(b, n)?, spec));
        }
        if let Some((a, p)) = spec.rsplit_once('|') {
            return subspace_entry(&self.resolve(a, n)?, p.trim(), spec);
        }
        let (name, param) = spec.split_once(':').unwrap_or((spec, "default"));
        let unknown = || RegistryError::Unknown(spec.to_string());
        let entry = match name {
            "discrete" => {
                let k: u64 = param.parse().map_err(|_| RegistryError::Malformed(spec.into()))?;
                let b = discrete(k);
                let c = bruteforce_relation(&b, k);
                SpaceEntry::new(spec, "discrete", b, k).with_discrete(DiscreteWitness::new(Idx::N)).with_base_relation(c)
            }
            "ordered" => {
                let l = self.order(param).ok_or_else(unknown)?;
                self.ordered_entry(spec, l)
            }
            "hypersimple" if param == "default" => {
                let h = hypersimple_space(&fixture_deficiency(), n);
                let mut e = SpaceEntry::new(spec, "hypersimple", h.base, 64).with_discrete(h.discrete).with_base_relation(h.cover);
                e.relations.push((h.subbase.clone(), h.sub_cover.clone()));
                e.subbase_relation = Some(h.sub_cover);
                e.subbase = Some(h.subbase);
                e
            }
            "pi01" => {
                let p = Phi0::builtin(param).ok_or_else(unknown)?;
                let s = pi01_compact_space(&p, n);
                let mut e = SpaceEntry::new(spec, "pi01", s.base.clone(), 64);
                e.relations.push((s.base.family.clone(), s.cover));
                e.subbase = Some(s.subbase);
                e
            }
            "tychonoff" => {
                let (v, i) = param.split_once(',').ok_or_else(|| RegistryError::Malformed(spec.into()))?;
                let variant = match v {
                    "basic" => TychonoffVariant::Basic,
                    "discrete" => TychonoffVariant::Discrete,
                    _ => return Err(unknown()),
                };
                let i: usize = i.parse().ok().filter(|&i| i < 2).ok_or_else(unknown)?;
                let t = tychonoff_spaces(&fixture_generic(256).family(), variant);
                let mut e = SpaceEntry::new(spec, "tychonoff", t.spaces[i].clone(), 64);
                if let Some(d) = &t.discrete {
                    e = e.with_discrete(d[i].clone());
                }
                e.subbase = Some(t.subbases[i].clone());
                e
            }
            "deadend" => {
                let t = builtin_tree(param).ok_or_else(unknown)?;
                let d = deadend_tree_space(&t);
                let mut e = SpaceEntry::new(spec, "deadend", d.base, 64).with_discrete(d.discrete).with_base_relation(d.cover);
                e.relations.push((d.subbase.clone(), d.sub_cover.clone()));
                e.subbase_relation = Some(d.sub_cover);
                e.subbase = Some(d.subbase);
                e
            }
            "limit-subbase" if param == "default" => {
                let s = limit_subbase_space(&fixture_x_limit());
                let mut e = SpaceEntry::new(spec, "limit-subbase", s.base, 64).with_discrete(s.discrete);
                e.subbase = Some(s.subbase);
                e
            }
            _ => return Err(unknown()),
        };
        Ok(entry)
    }

    fn ordered_entry(&self, spec: &str, l: LinearOrder) -> SpaceEntry {
        let b = ordered_space(&l);
        let mut e = SpaceEntry::new(spec, "ordered", b, 64).with_base_relation(interval_cover_relation(&l));
        e.relations.push((ray_family(&l), ordered_cover_relation(&l)));
        e.subbase = None;
        let scale = if l.finite_at.is_some() { 64 } else { 1 << 12 };
        let lg = l.clone();
        e.hausdorff = Some(hausdorff_from_gaps(&l, move |x, y| lg.is_gap(x, y, scale), scale));
        e.order = Some(l);
        e
    }
}

/// Reads the JSON form of a spec: a string, `{"name", "params"}`,
/// `{"product": [a, b]}` or `{"subspace": a, "pred": p}`.
pub fn spec_from_json(v: &serde_json::Value) -> Result<String, RegistryError> {
    use serde_json::Value;
    let bad = || RegistryError::Malformed(v.to_string());
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Object(m) => {
            if let Some(Value::Array(ab)) = m.get("product") {
                let [a, b] = ab.as_slice() else { return Err(bad()) };
                return Ok(format!("{} * {}", spec_from_json(a)?, spec_from_json(b)?));
            }
            if let (Some(a), Some(Value::String(p))) = (m.get("subspace"), m.get("pred")) {
                return Ok(format!("{} | {p}", spec_from_json(a)?));
            }
            let name = m.get("name").and_then(Value::as_str).ok_or_else(bad)?;
            let params: Vec<String> = match m.get("params") {
                None => vec![],
                Some(Value::Array(ps)) => ps
                    .iter()
                    .map(|p| match p {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(bad()),
                    })
                    .collect::<Result<_, _>>()?,
                Some(_) => return Err(bad()),
            };
            Ok(if params.is_empty() { name.to_string() } else { format!("{name}:{}", params.join(",")) })
        }
        _ => Err(bad()),
    }
}

fn leak(s: String) -> &'static str {
    Box::leak(s.into_boxed_str())
}

/// First index among the first `sb + 1` slots containing `x`.
fn any_neighbourhood(f: &Family, x: u64) -> Option<Idx> {
    f.indices(f.search_bound).into_iter().find(|i| f.contains(x, i))
}

fn product_entry(a: &SpaceEntry, b: &SpaceEntry, spec: &str) -> SpaceEntry {
    let base = product(&a.base, &b.base);
    let mut e = SpaceEntry::new(spec, "product", base, 32);
    if let (Some(d1), Some(d2)) = (&a.discrete, &b.discrete) {
        let (d1, d2) = (d1.d.clone(), d2.d.clone());
        e = e.with_discrete(DiscreteWitness::new(move |z| {
            let (x, y) = crate::foundations::unpair(z);
            Idx::pair(d1(x), d2(y))
        }));
    } else if let (Some(h1), Some(h2)) = (&a.hausdorff, &b.hausdorff) {
        let (h1, h2, f1, f2) = (h1.clone(), h2.clone(), a.base.family.clone(), b.base.family.clone());
        let side = move |k: usize, z0: u64, z1: u64| -> Idx {
            let ((x0, y0), (x1, y1)) = (crate::foundations::unpair(z0), crate::foundations::unpair(z1));
            let pick = |h: &HausdorffWitness, p: u64, q: u64| if k == 0 { h.h0(p, q) } else { h.h1(p, q) };
            let (me_x, me_y) = if k == 0 { (x0, y0) } else { (x1, y1) };
            if x0 != x1 {
                let j = any_neighbourhood(&f2, me_y).unwrap_or(Idx::N(0));
                Idx::pair(pick(&h1, x0, x1), j)
            } else {
                let i = any_neighbourhood(&f1, me_x).unwrap_or(Idx::N(0));
                Idx::pair(i, pick(&h2, y0, y1))
            }
        };
        let s2 = side.clone();
        e.hausdorff = Some(HausdorffWitness::new(move |z0, z1| side(0, z0, z1), move |z0, z1| s2(1, z0, z1)));
    }
    if let (Some(c1), Some(c2)) = (&a.base_relation, &b.base_relation) {
        if let Ok(c) = product_cover_relation(c1, c2) {
            e = e.with_base_relation(c);
        }
    }
    e
}

fn subspace_entry(a: &SpaceEntry, pred: &str, spec: &str) -> Result<SpaceEntry, RegistryError> {
    let bad = || RegistryError::Malformed(spec.to_string());
    let p: Box<dyn Fn(u64) -> bool + Send + Sync> = match pred.split_once(':') {
        None if pred == "even" => Box::new(|x| x % 2 == 0),
        None if pred == "odd" => Box::new(|x| x % 2 == 1),
        None if pred == "nonzero" => Box::new(|x| x != 0),
        Some(("lt", k)) => {
            let k: u64 = k.parse().map_err(|_| bad())?;
            Box::new(move |x| x < k)
        }
        Some(("ge", k)) => {
            let k: u64 = k.parse().map_err(|_| bad())?;
            Box::new(move |x| x >= k)
        }
        _ => return Err(bad()),
    };
    let base = subspace(&a.base, p, pred);
    let mut e = SpaceEntry::new(spec, "subspace", base, a.points);
    e.discrete = a.discrete.clone();
    e.hausdorff = a.hausdorff.clone();
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::{validate_discrete_witness, validate_hausdorff_witness};

    #[test]
    fn resolves_suite() {
        let r = Registry::new();
        for s in suite_specs().iter().chain(suite_subspaces().iter()) {
            let e = r.resolve(s, 64).unwrap();
            if let Some(d) = &e.discrete {
                assert!(validate_discrete_witness(&e.base, d, 32).is_valid(), "{s}");
            }
            if let Some(h) = &e.hausdorff {
                assert!(validate_hausdorff_witness(&e.base, h, 24).is_valid(), "{s}");
            }
        }
        assert!(r.resolve("nosuch:1", 64).is_err());
        let p = r.resolve("ordered:chain6 * ordered:nat", 64).unwrap();
        assert!(validate_hausdorff_witness(&p.base, p.hausdorff.as_ref().unwrap(), 12).is_valid());
    }

    #[test]
    fn custom_orders() {
        let mut r = Registry::new();
        let names = r.load_orders(r#"{"name": "zig", "ranks": [2, 0, 1]}"#).unwrap();
        assert_eq!(names, vec!["zig".to_string()]);
        assert!(r.listing().iter().any(|l| l.params == "zig"));
        assert!(r.resolve("ordered:zig", 64).is_ok());
    }

    #[test]
    fn json_specs() {
        let v: serde_json::Value = serde_json::from_str(
            r#"{"product": [{"name": "tychonoff", "params": ["basic", 0]}, {"subspace": "discrete:4", "pred": "odd"}]}"#,
        )
        .unwrap();
        assert_eq!(spec_from_json(&v).unwrap(), "tychonoff:basic,0 * discrete:4 | odd");
    }
}
