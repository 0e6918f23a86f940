//! The command line, run as a process.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn efftop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efftop")).args(args).env_remove("EFFTOP_DEFAULTS").output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = efftop(&all);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), v)
}

/// Validates against the shipped schema with Python's `jsonschema`, which the
/// test environment provides.
fn assert_schema_valid(reports: &[Value]) {
    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reports.json");
    std::fs::write(&path, serde_json::to_string(reports).unwrap()).unwrap();
    let script = "import json, sys, jsonschema\n\
                  s = json.load(open(sys.argv[1]))\n\
                  v = jsonschema.Draft202012Validator(s)\n\
                  for r in json.load(open(sys.argv[2])): v.validate(r)\n";
    let out = Command::new("python3")
        .args(["-c", script, schema.to_str().unwrap(), path.to_str().unwrap()])
        .output()
        .expect("python3 with jsonschema is available");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn list_and_custom_orders() {
    let (code, v) = json(&["list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = v["spaces"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"hypersimple") && names.contains(&"deadend"));
    assert!(!v["spaces"].as_array().unwrap().iter().any(|s| s["description"] == "custom order"));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("orders.json");
    std::fs::write(&file, r#"[{"name": "zigzag", "ranks": [3, 0, 2, 1]}]"#).unwrap();
    let (code, v) = json(&["list", "--orders", file.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(v["spaces"].as_array().unwrap().iter().any(|s| s["params"] == "zigzag"));
    let (code, _) = json(&["check", "ordered:zigzag", "--orders", file.to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn check_examples() {
    let (code, v) = json(&["check", "discrete:10"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"].as_array().unwrap().len(), 4);
    let (code, _) = json(&["check", "hypersimple:default", "--checks", "discrete,cover-agreement"]);
    assert_eq!(code, 0);
    let witness = data("broken_witness.json");
    let (code, v) = json(&["check", "discrete:10", "--checks", "discrete", "--discrete-witness", witness.to_str().unwrap()]);
    assert_eq!(code, 1);
    let violations = v["results"][0]["report"]["violations"].as_array().unwrap();
    assert_eq!(violations[0]["kind"], "not-singleton");
    assert_eq!(violations[0]["x"], 0);
}

#[test]
fn usage_errors() {
    for args in
        [&["check", "nosuch:3"][..], &["check", "discrete:x"], &["check", "discrete:4 | prime"], &["check", "discrete:4", "--points", "0"]]
    {
        let out = efftop(args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = efftop(&["subcover", "deadend:cherry", "--method", "loeb"]);
    assert_eq!(out.status.code(), Some(3));
    let out = efftop(&["subcover", "deadend:cherry * pi01:neq", "--method", "loeb"]);
    assert_eq!(out.status.code(), Some(3), "right factor without a cover relation");
}

#[test]
fn defaults_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("defaults.json");
    std::fs::write(&file, r#"{"points": 12}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_efftop"))
        .args(["check", "ordered:nat", "--checks", "base", "--json"])
        .env("EFFTOP_DEFAULTS", &file)
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bounds"]["points"], 12);
    let out = Command::new(env!("CARGO_BIN_EXE_efftop"))
        .args(["check", "ordered:nat", "--checks", "base", "--json", "--points", "20"])
        .env("EFFTOP_DEFAULTS", &file)
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bounds"]["points"], 20);
}

#[test]
fn subcover_examples() {
    let (code, v) = json(&["subcover", "discrete:1"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["certificate"]["indices"].as_array().unwrap().len(), 1);

    let (code, v) = json(&["subcover", "deadend:cherry * deadend:deep", "--method", "loeb"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["certificate"]["verified"], true);

    let (code, v) = json(&["subcover", "tychonoff:basic,0 * tychonoff:basic,1", "--method", "loeb", "--cover", "canonical"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["result"], "BOUNDED-FAILURE");
    assert_eq!(v["result"]["noncover"]["result"], "UNCOVERED");
    let z = v["result"]["noncover"]["z"].as_u64().unwrap();
    assert_eq!(v["result"]["noncover"]["point"].as_u64().unwrap(), efftop::foundations::pair(z, z));
    assert_eq!(v["result"]["noncover_verified"], true);

    let (code, v) = json(&["subcover", "deadend:deep", "--method", "alexander", "--cover", "covering"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["height"], 4);
    let (code, v) = json(&["subcover", "deadend:deep", "--method", "alexander", "--cover", "constant"]);
    assert_eq!(code, 2);
    assert_eq!(v["result"]["result"], "INFINITE-BRANCH");

    let (code, _) = json(&["subcover", "pi01:sparse", "--method", "cofinite"]);
    assert_eq!(code, 0);
    let (code, v) = json(&["subcover", "ordered:nat", "--method", "cofinite"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["result"], "NOT-COFINITE");
}

#[test]
fn golden_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let rects = format!("@{}", data("cherry_deep_rects.json").display());
    let run = efftop(&["subcover", "deadend:cherry * deadend:deep", "--method", "loeb", "--cover", &rects, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    let got: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let want: Value = serde_json::from_str(&std::fs::read_to_string(data("golden_loeb_cherry_deep.json")).unwrap()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn blocks_examples() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.jsonl");
    let (code, v) = json(&["blocks", "none", "--stages", "3", "--log", log.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&log).unwrap();
    let events: Vec<Value> = text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!events.is_empty() && events.iter().all(|e| e["event"] == "pad"));
    assert_eq!(v["events"].as_u64().unwrap() as usize, events.len());

    let log = dir.path().join("one.jsonl");
    let (code, _) = json(&["blocks", data("blocks_one.json").to_str().unwrap(), "--log", log.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&log).unwrap();
    let shifted = text.lines().filter(|l| l.contains(r#""status":"SHIFTED""#)).count();
    let shifts = text.lines().filter(|l| l.contains(r#""event":"shift""#)).count();
    assert_eq!((shifted, shifts), (1, 1));

    let (code, v) = json(&["blocks", "--replay", log.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["identical"], true);
    std::fs::write(&log, text.replacen(r#""x":0"#, r#""x":7"#, 1)).unwrap();
    let (code, _) = json(&["blocks", "--replay", log.to_str().unwrap()]);
    assert_eq!(code, 1);

    let out = efftop(&["blocks", r#"{"stages": 5, "w": [[[9, 3]]]}"#]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("b.jsonl");
    let runs: Vec<Vec<&str>> = vec![
        vec!["list"],
        vec!["check", "discrete:10"],
        vec!["check", "ordered:dyadic | lt:40", "--checks", "base,hausdorff,identity"],
        vec!["check", "pi01:neq"],
        vec!["subcover", "discrete:1"],
        vec!["subcover", "deadend:cherry * deadend:deep", "--method", "loeb"],
        vec!["subcover", "tychonoff:basic,0 * tychonoff:basic,1", "--method", "loeb", "--cover", "canonical"],
        vec!["subcover", "deadend:comb", "--method", "alexander", "--cover", "covering"],
        vec!["subcover", "deadend:comb", "--method", "alexander", "--cover", "constant"],
        vec!["subcover", "pi01:neq", "--method", "cofinite"],
        vec!["subcover", "ordered:nat", "--method", "cofinite"],
        vec!["blocks", "none", "--stages", "4", "--log", log.to_str().unwrap()],
        vec!["blocks", "--replay", log.to_str().unwrap()],
    ];
    let reports: Vec<Value> = runs.iter().map(|a| json(a).1).collect();
    for r in &reports {
        assert!(r["exit"].is_u64(), "{r}");
    }
    assert_schema_valid(&reports);
}

#[test]
fn json_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("space.json");
    std::fs::write(&file, r#"{"product": [{"name": "deadend", "params": ["cherry"]}, {"subspace": "discrete:6", "pred": "even"}]}"#)
        .unwrap();
    let spec = format!("@{}", file.display());
    let (code, v) = json(&["check", &spec, "--checks", "base"]);
    assert_eq!(code, 0);
    assert_eq!(v["space"], "deadend:cherry * discrete:6 | even");
}
