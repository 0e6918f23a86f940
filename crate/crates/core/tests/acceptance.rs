//! Acceptance suite: one PASS/FAIL line per criterion, each timed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use efftop::cli::{cover_agreement, sampled_identity};
use efftop::covers::{alexander_wkl_subcover, cover_check_bruteforce, loeb_product_subcover, AlexanderOutcome, LoebMode, LoebOutcome};
use efftop::foundations::{EnumSet, FinSet};
use efftop::orders::{ordered_cover_relation, ray_family, LinearOrder};
use efftop::pathologies::blocks::{block_machine_run, replay, BlockConfig};
use efftop::pathologies::generic::{
    canonical_cover, fixture_generic, fixture_string_sets, key_verified, kleene_post_generic, noncover_verified, tychonoff_key_extraction,
    tychonoff_noncover_witness, tychonoff_rectangle, KeyOutcome, NoncoverWitness, Tail, Verdict,
};
use efftop::pathologies::hypersimple::{
    classification_holds, fixture_deficiency, hypersimple_b_extraction, hypersimple_space, verify_b, verify_disjoint_family, BExtraction,
};
use efftop::pathologies::subbase::{builtin_tree, constant_sequence, covering_sequence, deadend_tree_space, TREE_NAMES};
use efftop::registry::{suite_specs, suite_subspaces, Registry, SpaceEntry};
use efftop::separation::{
    diagonal_code_from_hausdorff, hausdorff_from_diagonal_code, normal_separation, regular_separation, validate_discrete_witness,
    validate_hausdorff_witness, NormalMode,
};
use efftop::spaces::{product, validate_base, Idx};
use itertools::Itertools;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const N: u64 = 64;
const S: u64 = 256;
const LIMIT: Duration = Duration::from_secs(60);

fn entries(specs: &[String]) -> Vec<SpaceEntry> {
    let reg = Registry::new();
    specs.iter().map(|s| reg.resolve(s, N).unwrap_or_else(|e| panic!("{s}: {e}"))).collect()
}

fn products() -> Vec<String> {
    let base = suite_specs();
    base.iter().combinations_with_replacement(2).map(|p| format!("{} * {}", p[0], p[1])).collect()
}

fn c1() -> String {
    let mut specs = suite_specs();
    specs.extend(products());
    specs.extend(suite_subspaces());
    let mut checked = 0u64;
    for e in entries(&specs) {
        let n = N.min(e.points);
        let r = validate_base(&e.base, n, e.base.search_bound);
        assert!(r.is_valid(), "{}: {:?}", e.spec, &r.violations[..r.violations.len().min(3)]);
        checked += r.instances_checked;
    }
    format!("{} spaces, {checked} instances, no violations", specs.len())
}

fn c2() -> String {
    let mut specs = suite_specs();
    let compact: Vec<String> = entries(&specs).into_iter().filter(|e| e.base_relation.is_some()).map(|e| e.spec).collect();
    specs.extend(compact.iter().combinations(2).map(|p| format!("{} * {}", p[0], p[1])));
    let (mut relations, mut checked) = (0, 0);
    for e in entries(&specs) {
        for (fam, c) in e.relations.iter().filter(|(_, c)| c.is_exact()) {
            let a = cover_agreement(fam, c, N.min(e.points), 16, 3);
            assert!(a.disagreements.is_empty() && a.unknown == 0, "{} / {}: {:?}", e.spec, c.name, a.disagreements.first());
            relations += 1;
            checked += a.checked;
        }
    }
    format!("{relations} exact relations, {checked} families, zero disagreements")
}

fn c3() -> String {
    let mut specs = suite_specs();
    specs.extend(suite_subspaces());
    let mut sampled = 0;
    for (k, e) in entries(&specs).iter().enumerate() {
        let (count, bad) = sampled_identity(e.generating_family(), N.min(e.points), 200, k as u64);
        assert!(bad.is_empty(), "{}: {:?}", e.spec, bad[0]);
        sampled += count;
    }
    format!("{sampled} sampled families over {} spaces", specs.len())
}

fn c4() -> String {
    let (mut orders, mut families) = (0u64, 0u64);
    for n in 1..=6u64 {
        for perm in (0..n).permutations(n as usize) {
            let l = LinearOrder::from_ranks(format!("perm{perm:?}"), perm);
            let rays = ray_family(&l);
            let c = ordered_cover_relation(&l);
            let idx: Vec<Idx> = (0..n).flat_map(|x| [0, 1].map(|s| efftop::orders::ray(x, s))).collect();
            for k in 0..=3 {
                for t in idx.iter().cloned().combinations(k) {
                    let t: FinSet<Idx> = t.into_iter().collect();
                    let bf = cover_check_bruteforce(&rays, &t, n - 1).covers();
                    assert_eq!(c.decide(&t).covers(), bf, "{} {t:?}", l.name);
                    families += 1;
                }
            }
            orders += 1;
        }
    }
    format!("{orders} orders, {families} ray families, zero failures")
}

fn c5() -> String {
    let a = fixture_deficiency();
    let hs = hypersimple_space(&a, N);
    assert!(validate_discrete_witness(&hs.base, &hs.discrete, N).is_valid(), "discrete witness");
    let idx = hs.base.indices(hs.base.search_bound);
    for i in &idx {
        assert!(classification_holds(&hs.base, &a, i, N), "classification of {i:?}");
    }
    let mut agreed = 0;
    for (fam, c) in [(&hs.subbase, &hs.sub_cover), (&hs.base.family, &hs.cover)] {
        let r = cover_agreement(fam, c, N, 16, 3);
        assert!(r.disagreements.is_empty(), "{}: {:?}", c.name, r.disagreements.first());
        agreed += r.checked;
    }
    let mut rng = StdRng::seed_from_u64(5);
    let (mut found, mut families, mut rejected) = (0, 0, 0);
    while found + families < 50 {
        let (step, width, off) = (rng.random_range(2..6u64), rng.random_range(1..4u64), rng.random_range(0..8u64));
        let s = move |m: u64| -> FinSet<u64> { (0..width).map(|k| off + step * m + k).collect() };
        // Only sequences with every s_n leaving A are inputs.
        if !(0..=16).all(|m| s(m).iter().any(|&x| !a.contains(x))) {
            rejected += 1;
            continue;
        }
        match hypersimple_b_extraction(&a, &s, 16, 64) {
            BExtraction::Found { b, .. } => {
                assert!(verify_b(&a, &s, &b, 16), "b {b:?}");
                found += 1;
            }
            BExtraction::DisjointFamily { d } => {
                assert!(verify_disjoint_family(&a, &d));
                families += 1;
            }
            BExtraction::UnknownAtBound => panic!("unknown for step {step} width {width} offset {off}"),
        }
    }
    format!("witness ok, {} basic sets classified, {agreed} families agree, b found {found}/50, disjoint families {families}/50, {rejected} draws outside the precondition", idx.len())
}

fn c6() -> String {
    let reg = Registry::new();
    let left = ["discrete:10", "ordered:chain6", "deadend:cherry", "deadend:deep", "hypersimple:default"];
    let right = ["deadend:cherry", "deadend:comb", "discrete:4", "ordered:chain6"];
    let (mut certs, mut other) = (0, 0);
    let n = 32;
    for (l, r) in left.iter().cartesian_product(right.iter()) {
        let (el, er) = (reg.resolve(l, N).unwrap(), reg.resolve(r, N).unwrap());
        let prod = product(&el.base, &er.base);
        // Rectangles from the product enumeration, skipping the first few large ones.
        let rects: FinSet<Idx> = prod.indices(prod.search_bound).into_iter().skip(3).collect();
        let code = EnumSet::constant(rects);
        match loeb_product_subcover(&el.base, &er.base, er.base_relation.as_ref().unwrap(), &code, n, S, LoebMode::Effective) {
            LoebOutcome::Certificate { certificate, .. } => {
                assert!(certificate.verified && cover_check_bruteforce(&prod, &certificate.indices, n).covers(), "{l} * {r}");
                certs += 1;
            }
            _ => other += 1,
        }
    }
    let fam = fixture_generic(S).family();
    let canon = canonical_cover(N);
    let mut witnesses = 0;
    for k in 1..=4 {
        for a in canon.iter().copied().combinations(k) {
            match tychonoff_noncover_witness(&fam, &a, S) {
                NoncoverWitness::Uncovered { z, .. } => assert!(noncover_verified(&fam, &a, z), "{a:?}"),
                w => panic!("{a:?}: {w:?}"),
            }
            witnesses += 1;
        }
    }
    // The whole canonical cover, through the product extractor at scale.
    let t0 = reg.resolve("tychonoff:basic,0", N).unwrap();
    let t1 = reg.resolve("tychonoff:basic,1", N).unwrap();
    let rects = EnumSet::constant(canon.iter().map(|&(x, y0, y1)| tychonoff_rectangle(x, y0, y1)).collect());
    let bf = efftop::covers::bruteforce_relation(&t1.base, n);
    let at_scale = loeb_product_subcover(&t0.base, &t1.base, &bf, &rects, n, S, LoebMode::Effective);
    let refuted = match tychonoff_noncover_witness(&fam, &canon, S) {
        NoncoverWitness::Uncovered { z, .. } => noncover_verified(&fam, &canon, z),
        _ => false,
    };
    assert!(refuted, "canonical cover not refuted");
    let scale = match at_scale {
        LoebOutcome::Certificate { .. } => "grid certificate refuted",
        LoebOutcome::FailurePoint { .. } => "failure point",
        LoebOutcome::UnknownAtBound => "unknown",
    };
    format!("{certs} verified certificates, {other} bounded failures over 20 products; {witnesses} tychonoff subfamilies uncovered, 0 certificates; full cover: {scale}")
}

fn c7() -> String {
    let cfg: BlockConfig = serde_json::from_str(include_str!("data/blocks_three.json")).unwrap();
    let run = block_machine_run(&cfg).unwrap();
    assert!(run.violations.is_empty(), "{:?}", &run.violations[..run.violations.len().min(3)]);
    let shifts = run.shift_counts();
    assert!(shifts.values().all(|&k| k <= 1), "{shifts:?}");
    assert!(run.neighbor_instability().is_empty(), "{:?}", run.neighbor_instability());
    assert!(replay(&run.jsonl()).unwrap(), "replay differs");
    let w = run.completeness_witnesses(N);
    assert!(!w.is_empty() && w.iter().all(|r| r.checked), "{w:?}");
    format!("{} stages, {} shifts, {} completeness witnesses", cfg.stages, shifts.values().sum::<usize>(), w.len())
}

fn c8() -> String {
    let d = fixture_string_sets();
    let mut met = 0;
    for tail in [Tail::Zero, Tail::ThueMorse] {
        let g = kleene_post_generic(&d, S, tail);
        assert_eq!(g.verdicts.len(), d.len());
        assert!(g.verdict_failures(&d).is_empty(), "{:?}", g.verdict_failures(&d));
        met = g.verdicts.iter().filter(|v| matches!(v, Verdict::Met { .. })).count();
    }
    let g = fixture_generic(S);
    let fam = g.family();
    let start = g.final_prefix().len() as u64;
    let mut keys = 0;
    for i in [0u8, 1] {
        for width in [3u64, 5, 8] {
            let s = move |m: u64| -> FinSet<u64> { (start + width * m..start + width * m + width).collect() };
            match tychonoff_key_extraction(&fam, i, &s, 32, 4096) {
                KeyOutcome::Found { b, .. } => assert!(key_verified(&fam, i, &s, &b, 32), "i={i} width {width}"),
                other => panic!("i={i} width {width}: {other:?}"),
            }
            keys += 1;
        }
    }
    format!("{} requirements resolved ({met} met), {keys} key extractions verified", d.len())
}

fn c9() -> String {
    let reg = Registry::new();
    let spaces = [
        "discrete:10",
        "ordered:chain6",
        "ordered:nat",
        "ordered:nat+nat*",
        "ordered:dyadic",
        "ordered:inj",
        "hypersimple:default",
        "deadend:comb",
        "tychonoff:discrete,0",
        "limit-subbase:default",
    ];
    let n = 32;
    let mut fixtures = 0;
    for spec in spaces {
        let e = reg.resolve(spec, N).unwrap();
        let h = e.hausdorff.clone().unwrap();
        let pts = e.base.points(n);
        let (a, b, c, d) = (pts[0], pts[1], pts[pts.len() / 2], pts[pts.len() - 1]);
        let x0 = move |x: u64| x == a || x == c;
        let r = regular_separation(&e.base, &h, &x0, d, n).unwrap_or_else(|err| panic!("{spec}: {err:?}"));
        assert!(r.report.verified_disjoint && r.report.verified_covering);
        let x1 = move |x: u64| x == b || x == d;
        let s = normal_separation(&e.base, &h, &x0, &x1, None, NormalMode::SigmaTwo, n).unwrap_or_else(|err| panic!("{spec}: {err:?}"));
        assert!(s.report.verified_disjoint && s.report.verified_covering);
        fixtures += 2;
    }
    let mut specs = suite_specs();
    specs.extend(suite_subspaces());
    specs.extend(["discrete:10 * ordered:chain6", "ordered:nat * deadend:cherry"].map(String::from));
    let mut trips = 0;
    let m = 16;
    for e in entries(&specs).into_iter().filter(|e| e.hausdorff.is_some()) {
        let h = e.hausdorff.as_ref().unwrap();
        let code = diagonal_code_from_hausdorff(&e.base, h);
        let back = hausdorff_from_diagonal_code(&e.base, &code, m, m).unwrap_or_else(|err| panic!("{}: {err:?}", e.spec));
        assert!(validate_hausdorff_witness(&e.base, &back, m).is_valid(), "{}", e.spec);
        trips += 1;
    }
    format!("{fixtures} separations verified, {trips} diagonal round trips")
}

fn c10() -> String {
    let mut out = Vec::new();
    for name in TREE_NAMES {
        let t = builtin_tree(name).unwrap();
        let sp = deadend_tree_space(&t);
        match alexander_wkl_subcover(&sp.sub_cover, &covering_sequence(&t), 64, N).unwrap() {
            AlexanderOutcome::Certificate { certificate, height } => {
                assert!(certificate.verified, "{name}");
                out.push(format!("{name} height {height}"));
            }
            other => panic!("{name}: {other:?}"),
        }
        match alexander_wkl_subcover(&sp.sub_cover, &constant_sequence(&t), 64, N).unwrap() {
            AlexanderOutcome::InfiniteBranch { prefix } => assert_eq!(prefix.len(), 64, "{name}"),
            other => panic!("{name}: {other:?}"),
        }
    }
    format!("{}; constant sequences reach depth 64", out.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> String); 10] = [
        ("base axioms", c1),
        ("cover-oracle agreement", c2),
        ("closure identity", c3),
        ("ordered spaces on <= 6 points", c4),
        ("hypersimple space", c5),
        ("product extraction", c6),
        ("block machine", c7),
        ("finite-extension generic", c8),
        ("separation", c9),
        ("alexander search", c10),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let label = format!("{} {name}", k + 1);
        if filter.as_ref().is_some_and(|p| !label.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f));
        let dt = t.elapsed();
        match res {
            Ok(detail) if dt <= LIMIT => println!("criterion {label}: PASS ({:.1}s) {detail}", dt.as_secs_f64()),
            Ok(detail) => {
                failed += 1;
                println!("criterion {label}: FAIL ({:.1}s, over the 60s budget) {detail}", dt.as_secs_f64());
            }
            Err(e) => {
                failed += 1;
                let msg =
                    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
                println!("criterion {label}: FAIL ({:.1}s) {msg}", dt.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
