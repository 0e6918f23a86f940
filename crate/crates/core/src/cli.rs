//! The `efftop` command line: list, check, subcover and blocks.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::covers::{
    alexander_wkl_subcover, bruteforce_relation, closure_identity_sides, cofinite_point_subcover, cover_check_bruteforce, greedy_subcover,
    loeb_product_subcover, minimal_subcover, Bounds, CofiniteOutcome, CoverAnswer, CoverRelation, LoebMode, LoebOutcome,
    SubcoverCertificate,
};
use crate::foundations::{EnumSet, FinSet, PredClass, StagePredicate};
use crate::pathologies::blocks::{block_machine_run, replay, BlockConfig};
use crate::pathologies::generic::{
    canonical_cover, fixture_generic, noncover_verified, rectangle_parts, tychonoff_noncover_witness, tychonoff_rectangle, NoncoverWitness,
};
use crate::pathologies::pi01::{full_set_selector, pi01_cofinite, Phi0};
use crate::pathologies::subbase::{builtin_tree, constant_sequence, covering_sequence};
use crate::registry::{spec_from_json, Registry, RegistryError, SpaceEntry};
use crate::separation::{validate_discrete_witness, validate_hausdorff_witness, DiscreteWitness};
use crate::spaces::{validate_base, Family, Idx};

/// Stable process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Ok = 0,
    Violation = 1,
    Unknown = 2,
    Usage = 3,
}

impl Exit {
    fn label(self) -> &'static str {
        match self {
            Exit::Ok => "ok",
            Exit::Violation => "violation",
            Exit::Unknown => "unknown-at-bound",
            Exit::Usage => "usage-error",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub points: u64,
    pub stages: u64,
    pub search_bound: u64,
    pub window: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { points: 64, stages: 256, search_bound: 32, window: 32, seed: 0, output: None }
    }
}

/// Contents of the file named by `EFFTOP_DEFAULTS`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    points: Option<u64>,
    stages: Option<u64>,
    search_bound: Option<u64>,
    window: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Parser)]
#[command(name = "efftop", version, about = "Countable spaces given by enumerable bases")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Point bound N.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    points: Option<u64>,
    /// Stage bound S.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    stages: Option<u64>,
    /// Index bound for cover searches and base checks.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    search_bound: Option<u64>,
    /// Hit count standing in for "infinitely often" in accumulation searches.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    window: Option<u64>,
    /// Seed for sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the JSON report (or certificate) here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with custom linear orders.
    #[arg(long, global = true)]
    orders: Option<PathBuf>,
    /// JSON file of default bounds.
    #[arg(long, global = true, env = "EFFTOP_DEFAULTS", hide_env_values = true)]
    defaults: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the registered spaces.
    List,
    /// Validate a space at bounds.
    Check {
        /// Space spec, or `@file.json`.
        space: String,
        #[arg(long, value_delimiter = ',', default_value = "base,discrete,hausdorff,cover-agreement")]
        checks: Vec<CheckKind>,
        /// Replace the discrete witness by a table `[[x, index], ...]`.
        #[arg(long)]
        discrete_witness: Option<PathBuf>,
    },
    /// Extract a finite subcover.
    Subcover {
        space: String,
        /// `all`, `canonical`, `covering`, `constant`, inline JSON or `@file.json`.
        #[arg(long, default_value = "all")]
        cover: String,
        #[arg(long, value_enum, default_value_t = Method::Search)]
        method: Method,
        /// Point whose neighbourhoods the cofinite method starts from.
        #[arg(long, default_value_t = 0)]
        x0: u64,
    },
    /// Run the block machine, or replay a log.
    Blocks {
        /// Requirement file (`{"stages", "w"}`), inline JSON, or `none`.
        w: Option<String>,
        /// Write the JSONL event log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Re-execute a log and compare bytes.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum)]
pub enum CheckKind {
    Base,
    Discrete,
    Hausdorff,
    CoverAgreement,
    /// Sampled check of the closure identity on the subbase.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Search,
    Loeb,
    Alexander,
    Cofinite,
}

/// What a run produced: the exit code and the text for stdout.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage as i32 } else { 0 };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    match execute(cli) {
        Ok(o) => o,
        Err(e) => Outcome { code: Exit::Usage as i32, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let file: DefaultsFile = match &g.defaults {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        None => DefaultsFile::default(),
    };
    let d = RunConfig::default();
    let cfg = RunConfig {
        points: g.points.or(file.points).unwrap_or(d.points),
        stages: g.stages.or(file.stages).unwrap_or(d.stages),
        search_bound: g.search_bound.or(file.search_bound).unwrap_or(d.search_bound),
        window: g.window.or(file.window).unwrap_or(d.window),
        seed: g.seed.or(file.seed).unwrap_or(d.seed),
        output: g.out.clone(),
    };
    if [cfg.points, cfg.stages, cfg.search_bound, cfg.window].contains(&0) {
        return Err(CliError::Usage("bounds must be at least 1".into()));
    }
    Ok(cfg)
}

/// A spec argument, reading `@file.json` through the JSON form.
fn spec_arg(s: &str) -> Result<String, CliError> {
    match s.strip_prefix('@') {
        Some(path) => {
            let v: Value = serde_json::from_str(&read(Path::new(path))?).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            Ok(spec_from_json(&v)?)
        }
        None => Ok(s.to_string()),
    }
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let cfg = config(&cli.global)?;
    let mut reg = Registry::new();
    if let Some(p) = &cli.global.orders {
        reg.load_orders(&read(p)?)?;
    }
    let (report, exit, text) = match cli.command {
        Command::List => cmd_list(&reg),
        Command::Check { space, checks, discrete_witness } => {
            let table = match discrete_witness {
                Some(p) => Some(read(&p)?),
                None => None,
            };
            cmd_check(&reg, &spec_arg(&space)?, &checks, table.as_deref(), &cfg)?
        }
        Command::Subcover { space, cover, method, x0 } => cmd_subcover(&reg, &spec_arg(&space)?, &cover, method, x0, &cfg)?,
        Command::Blocks { w, log, replay } => cmd_blocks(w.as_deref(), cli.global.stages, log.as_deref(), replay.as_deref())?,
    };
    let json_text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    if let Some(p) = &cfg.output {
        write(p, &json_text)?;
    }
    let stdout = if cli.global.json { json_text } else { text };
    Ok(Outcome { code: exit as i32, stdout, stderr: String::new() })
}

type CmdResult = (Value, Exit, String);

pub fn cmd_list(reg: &Registry) -> CmdResult {
    let items = reg.listing();
    let mut text = String::new();
    for it in &items {
        let _ = writeln!(text, "{:<14} {:<48} {}", it.name, it.params, it.description);
    }
    (json!({"command": "list", "exit": 0, "spaces": items}), Exit::Ok, text)
}

fn status_of(valid: bool, unknown: bool) -> Exit {
    if !valid {
        Exit::Violation
    } else if unknown {
        Exit::Unknown
    } else {
        Exit::Ok
    }
}

/// Reads a witness table `[[x, index], ...]`; points missing from it get the empty index.
fn witness_table(text: &str) -> Result<DiscreteWitness, CliError> {
    let rows: Vec<(u64, Idx)> = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("witness table: {e}")))?;
    let map: std::collections::BTreeMap<u64, Idx> = rows.into_iter().collect();
    Ok(DiscreteWitness::new(move |x| map.get(&x).cloned().unwrap_or_else(|| Idx::set(vec![]))))
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Agreement {
    pub relation: String,
    pub family: String,
    pub exact: bool,
    pub checked: u64,
    pub unknown: u64,
    pub disagreements: Vec<Value>,
}

/// Compares `c` with brute force on every family of at most `size` indices
/// from slots `<= max_slot`. When `c` names an uncovered point past `n`,
/// brute force runs out to that point.
pub fn cover_agreement(fam: &Family, c: &CoverRelation, n: u64, max_slot: u64, size: usize) -> Agreement {
    let idx = fam.indices(max_slot);
    let mut a = Agreement { relation: c.name.clone(), family: fam.name.clone(), exact: c.is_exact(), ..Default::default() };
    for k in 0..=size {
        for combo in idx.iter().cloned().combinations(k) {
            let t: FinSet<Idx> = combo.into_iter().collect();
            a.checked += 1;
            let got = c.decide(&t);
            let scale = match &got {
                CoverAnswer::NotCovers { witness: Some(x) } => n.max(*x),
                _ => n,
            };
            let bf = cover_check_bruteforce(fam, &t, scale).covers();
            let disagree = match (&got, c.is_exact()) {
                (CoverAnswer::UnknownAtBound, _) => {
                    a.unknown += 1;
                    false
                }
                (_, true) => got.covers() != bf,
                (_, false) => got.covers() && !bf || got.refuted() && bf,
            };
            if disagree && a.disagreements.len() < 64 {
                a.disagreements.push(json!({"indices": t, "relation": got, "bruteforce": bf}));
            }
        }
    }
    a
}

/// Samples `count` families of intersections and compares both sides of the closure identity.
pub fn sampled_identity(sub: &Family, n: u64, count: usize, seed: u64) -> (u64, Vec<Value>) {
    let idx = sub.indices(sub.search_bound.min(24));
    let mut rng = StdRng::seed_from_u64(seed);
    let mut bad = Vec::new();
    if idx.is_empty() {
        return (0, bad);
    }
    for _ in 0..count {
        let fam: Vec<Vec<Idx>> = (0..rng.random_range(1..=3))
            .map(|_| (0..rng.random_range(1..=3)).map(|_| idx[rng.random_range(0..idx.len())].clone()).collect())
            .collect();
        let (lhs, rhs) = closure_identity_sides(sub, &fam, n);
        if lhs != rhs && bad.len() < 16 {
            bad.push(json!({"family": fam, "union_of_intersections": lhs, "intersection_of_unions": rhs}));
        }
    }
    (count as u64, bad)
}

pub fn cmd_check(reg: &Registry, spec: &str, checks: &[CheckKind], table: Option<&str>, cfg: &RunConfig) -> Result<CmdResult, CliError> {
    let e = reg.resolve(spec, cfg.points)?;
    let n = cfg.points.min(e.points.max(1));
    let discrete = match table {
        Some(t) => Some(witness_table(t)?),
        None => e.discrete.clone(),
    };
    let mut results = Vec::new();
    let mut exit = Exit::Ok;
    let mut text = format!("{spec} (points <= {n})\n");
    for &check in checks.iter().unique() {
        let (name, status, body): (&str, Option<Exit>, Value) = match check {
            CheckKind::Base => {
                let r = validate_base(&e.base, n, cfg.search_bound);
                ("base", Some(status_of(r.is_valid(), false)), json!(r))
            }
            CheckKind::Discrete => match &discrete {
                Some(d) => {
                    let r = validate_discrete_witness(&e.base, d, n);
                    ("discrete", Some(status_of(r.is_valid(), false)), json!(r))
                }
                None => ("discrete", None, Value::Null),
            },
            CheckKind::Hausdorff => match &e.hausdorff {
                Some(h) => {
                    let r = validate_hausdorff_witness(&e.base, h, n);
                    ("hausdorff", Some(status_of(r.is_valid(), false)), json!(r))
                }
                None => ("hausdorff", None, Value::Null),
            },
            CheckKind::CoverAgreement => {
                if e.relations.is_empty() {
                    ("cover-agreement", None, Value::Null)
                } else {
                    let rs: Vec<Agreement> = e.relations.iter().map(|(f, c)| cover_agreement(f, c, n, 16, 3)).collect();
                    let valid = rs.iter().all(|a| a.disagreements.is_empty());
                    let unknown = rs.iter().any(|a| a.unknown > 0);
                    ("cover-agreement", Some(status_of(valid, unknown)), json!(rs))
                }
            }
            CheckKind::Identity => {
                let sub = e.generating_family();
                let (checked, bad) = sampled_identity(sub, n, 200, cfg.seed);
                (
                    "identity",
                    Some(status_of(bad.is_empty(), false)),
                    json!({"family": sub.name, "sampled": checked, "seed": cfg.seed, "failures": bad}),
                )
            }
        };
        let label = status.map_or("not-applicable", Exit::label);
        let _ = writeln!(text, "  {name:<16} {label}");
        if let Some(s) = status {
            if s != Exit::Ok {
                let _ = writeln!(text, "    {}", serde_json::to_string(&body).unwrap_or_default());
            }
            exit = exit.max(s);
        }
        results.push(json!({"check": name, "status": label, "report": body}));
    }
    let report = json!({
        "command": "check",
        "exit": exit as i32,
        "space": spec,
        "kind": e.kind,
        "bounds": bounds(cfg, n),
        "results": results,
    });
    Ok((report, exit, text))
}

fn bounds(cfg: &RunConfig, n: u64) -> Bounds {
    Bounds { points: n, stages: cfg.stages, search_bound: cfg.search_bound }
}

fn parse_index_list(s: &str) -> Result<Vec<Idx>, CliError> {
    let text = match s.strip_prefix('@') {
        Some(p) => read(Path::new(p))?,
        None => s.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("cover: {e}")))
}

fn tree_param(e: &SpaceEntry) -> Option<crate::pathologies::subbase::Tree> {
    let (name, param) = e.spec.split_once(':')?;
    (name.trim() == "deadend").then(|| builtin_tree(param.trim())).flatten()
}

fn certificate_text(c: &SubcoverCertificate) -> String {
    format!(
        "certificate of size {} (verified: {})\n  {}\n",
        c.indices.len(),
        c.verified,
        serde_json::to_string(&c.indices).unwrap_or_default()
    )
}

pub fn cmd_subcover(reg: &Registry, spec: &str, cover: &str, method: Method, x0: u64, cfg: &RunConfig) -> Result<CmdResult, CliError> {
    let e = reg.resolve(spec, cfg.points)?;
    let n = cfg.points.min(e.points.max(1));
    let base = &e.base;
    let header = |m: &str| json!({"command": "subcover", "space": spec, "method": m, "bounds": bounds(cfg, n)});
    let finish = |mut r: Value, exit: Exit, text: String| {
        r["exit"] = json!(exit as i32);
        (r, exit, text)
    };
    match method {
        Method::Search => {
            let idx = match cover {
                "all" => base.indices(cfg.search_bound),
                other => parse_index_list(other)?,
            };
            let pts = base.points(n);
            let masks: Vec<_> = idx.iter().map(|i| base.mask(i, &pts)).collect();
            let mut target = fixedbitset::FixedBitSet::with_capacity(pts.len());
            target.insert_range(..);
            let pick = minimal_subcover(&masks, &target, 4).or_else(|| greedy_subcover(&masks, &target));
            let mut r = header("search");
            match pick {
                Some(ks) => {
                    let indices: FinSet<Idx> = ks.iter().map(|&k| idx[k].clone()).collect();
                    let verified = cover_check_bruteforce(base, &indices, n).covers();
                    let c = SubcoverCertificate { indices, bounds: bounds(cfg, n), verified };
                    let text = certificate_text(&c);
                    r["result"] = json!({"result": "CERTIFICATE", "certificate": c});
                    Ok(finish(r, if verified { Exit::Ok } else { Exit::Violation }, text))
                }
                None => {
                    let all: FinSet<Idx> = idx.iter().cloned().collect();
                    let ans = cover_check_bruteforce(base, &all, n);
                    r["result"] = json!({"result": "NOT-A-COVER", "answer": ans});
                    Ok(finish(r, Exit::Violation, format!("the family does not cover points <= {n}: {ans:?}\n")))
                }
            }
        }
        Method::Loeb => subcover_loeb(reg, spec, cover, cfg).map(|(r, x, t)| {
            let mut full = header("loeb");
            full["result"] = r;
            finish(full, x, t)
        }),
        Method::Alexander => {
            let c = e
                .subbase_relation
                .clone()
                .filter(CoverRelation::is_exact)
                .ok_or_else(|| CliError::Usage(format!("{spec} has no exact subbase relation")))?;
            let seq: Box<dyn Fn(usize) -> FinSet<Idx>> = match (cover, tree_param(&e)) {
                ("covering", Some(t)) => Box::new(covering_sequence(&t)),
                ("constant", Some(t)) => Box::new(constant_sequence(&t)),
                ("covering" | "constant", None) => return Err(CliError::Usage(format!("{cover} sequences need a deadend space"))),
                (other, _) => {
                    let text = match other.strip_prefix('@') {
                        Some(p) => read(Path::new(p))?,
                        None => other.to_string(),
                    };
                    let rows: Vec<Vec<Idx>> = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("cover: {e}")))?;
                    if rows.is_empty() {
                        return Err(CliError::Usage("empty sequence".into()));
                    }
                    Box::new(move |k| rows[k % rows.len()].iter().cloned().collect())
                }
            };
            let depth = cfg.points as usize;
            let out = alexander_wkl_subcover(&c, &seq, depth, n).map_err(|e| CliError::Usage(e.to_string()))?;
            let (exit, text) = match &out {
                crate::covers::AlexanderOutcome::Certificate { certificate, height } => (
                    if certificate.verified { Exit::Ok } else { Exit::Violation },
                    format!("tree height {height}\n{}", certificate_text(certificate)),
                ),
                crate::covers::AlexanderOutcome::InfiniteBranch { prefix } => {
                    (Exit::Unknown, format!("INFINITE-BRANCH at depth {depth}, prefix of length {}\n", prefix.len()))
                }
            };
            let mut r = header("alexander");
            r["result"] = json!(out);
            Ok(finish(r, exit, text))
        }
        Method::Cofinite => {
            let pi = match e.spec.split_once(':') {
                Some(("pi01", p)) => Phi0::builtin(p.trim()),
                _ => None,
            };
            let (selector, oracle): (StagePredicate, Option<&dyn Fn(&Idx) -> bool>) = match &pi {
                Some(p) => (full_set_selector(p), Some(&pi01_cofinite)),
                None => (StagePredicate::new(PredClass::Limit, |_, _| true), None),
            };
            let out = cofinite_point_subcover(&base.family, &selector, x0, oracle, n, cfg.stages, cfg.search_bound);
            let (exit, text) = match &out {
                CofiniteOutcome::Found { certificate, .. } => {
                    (if certificate.verified { Exit::Ok } else { Exit::Violation }, certificate_text(certificate))
                }
                CofiniteOutcome::NotCofinite { index, hole } => {
                    (Exit::Violation, format!("neighbourhood {index:?} of {x0} misses {hole}\n"))
                }
                CofiniteOutcome::UnknownAtBound { uncovered } => (Exit::Unknown, format!("no selected set covers {uncovered} at bound\n")),
            };
            let mut r = header("cofinite");
            r["result"] = json!(out);
            Ok(finish(r, exit, text))
        }
    }
}

/// Loeb extraction on `A * B`. When both factors are Tychonoff spaces the
/// right factor has no cover relation; the run uses brute force at scale and
/// then looks for a diagonal point the cover misses.
fn subcover_loeb(reg: &Registry, spec: &str, cover: &str, cfg: &RunConfig) -> Result<CmdResult, CliError> {
    let (a, b) = spec.split_once(" * ").ok_or_else(|| CliError::Usage("loeb needs a product `A * B`".into()))?;
    let (ea, eb) = (reg.resolve(a, cfg.points)?, reg.resolve(b, cfg.points)?);
    let n = cfg.points.min(32);
    let tychonoff = ea.kind == "tychonoff" && eb.kind == "tychonoff";
    let c2 = match (&eb.base_relation, tychonoff) {
        (Some(c), _) => c.clone(),
        (None, true) => bruteforce_relation(&eb.base, n),
        (None, false) => return Err(CliError::Usage(format!("loeb needs a cover relation for {}", eb.spec))),
    };
    let rects: Vec<Idx> = match cover {
        "all" => crate::spaces::product(&ea.base, &eb.base).indices(cfg.search_bound),
        "canonical" => canonical_cover(cfg.points).into_iter().map(|(x, y0, y1)| tychonoff_rectangle(x, y0, y1)).collect(),
        other => parse_index_list(other)?,
    };
    let code = EnumSet::constant(rects.iter().cloned().collect());
    let out = loeb_product_subcover(&ea.base, &eb.base, &c2, &code, n, cfg.stages, LoebMode::Effective);
    if !tychonoff {
        let (exit, text) = match &out {
            LoebOutcome::Certificate { certificate, .. } => {
                (if certificate.verified { Exit::Ok } else { Exit::Violation }, certificate_text(certificate))
            }
            LoebOutcome::FailurePoint { x, .. } => {
                (Exit::Violation, format!("no finite part of the cover over {x} covers the right factor\n"))
            }
            LoebOutcome::UnknownAtBound => (Exit::Unknown, "unknown at bound\n".to_string()),
        };
        return Ok((json!(out), exit, text));
    }
    let triples: Vec<(u64, u64, u64)> = rects.iter().filter_map(rectangle_parts).collect();
    let fam = fixture_generic(cfg.stages).family();
    let w = tychonoff_noncover_witness(&fam, &triples, cfg.stages);
    let verified = match &w {
        NoncoverWitness::Uncovered { z, .. } => noncover_verified(&fam, &triples, *z),
        NoncoverWitness::UnknownAtBound { .. } => false,
    };
    let exit = if verified { Exit::Violation } else { Exit::Unknown };
    let text = format!(
        "bounded failure: the scale-{n} run gave {}; noncover witness {} (verified: {verified})\n",
        match &out {
            LoebOutcome::Certificate { .. } => "a certificate valid only on the grid",
            LoebOutcome::FailurePoint { .. } => "a failure point",
            LoebOutcome::UnknownAtBound => "no answer",
        },
        serde_json::to_string(&w).unwrap_or_default()
    );
    Ok((json!({"result": "BOUNDED-FAILURE", "at_scale": out, "noncover": w, "noncover_verified": verified}), exit, text))
}

pub fn cmd_blocks(w: Option<&str>, stages: Option<u64>, log: Option<&Path>, replay_path: Option<&Path>) -> Result<CmdResult, CliError> {
    if let Some(p) = replay_path {
        let text = read(p)?;
        let same = replay(&text).map_err(|e| CliError::Usage(e.to_string()))?;
        let exit = if same { Exit::Ok } else { Exit::Violation };
        let report = json!({"command": "blocks", "exit": exit as i32, "replay": p.display().to_string(), "identical": same});
        return Ok((report, exit, format!("replay {}: {}\n", p.display(), if same { "identical" } else { "DIFFERS" })));
    }
    let w = w.ok_or_else(|| CliError::Usage("blocks needs a requirement spec or --replay".into()))?;
    let mut cfg: BlockConfig = if w == "none" {
        BlockConfig::new(stages.unwrap_or(3), vec![])
    } else {
        let text = if w.trim_start().starts_with(['{', '[']) { w.to_string() } else { read(Path::new(w))? };
        if text.trim_start().starts_with('[') {
            let sets: Vec<Vec<(u64, u64)>> = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("w: {e}")))?;
            BlockConfig::new(stages.unwrap_or(256), sets)
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("w: {e}")))?
        }
    };
    if let Some(s) = stages {
        cfg.stages = s;
    }
    let run = block_machine_run(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let jsonl = run.jsonl();
    if let Some(p) = log {
        write(p, &jsonl)?;
    }
    let same = replay(&jsonl).map_err(|e| CliError::Usage(e.to_string()))?;
    let shifts = run.shift_counts();
    let reqs: Vec<Value> =
        run.state.requirements.iter().map(|r| json!({"req": [r.0, r.1], "status": run.state.status[r], "shifts": shifts[r]})).collect();
    let count = run.state.point_count();
    let order = if count == 0 { vec![] } else { run.state.order_snapshot().sorted(count - 1) };
    let exit = if run.violations.is_empty() && same && shifts.values().all(|&k| k <= 1) { Exit::Ok } else { Exit::Violation };
    let mut text = format!("{} stages, {} points, {} events\n", cfg.stages, count, run.state.log.len());
    for r in &reqs {
        let _ = writeln!(text, "  W{} < W{}: {} ({} shifts)", r["req"][0], r["req"][1], r["status"].as_str().unwrap_or(""), r["shifts"]);
    }
    let _ = writeln!(text, "  invariant violations: {}, replay identical: {same}", run.violations.len());
    let report = json!({
        "command": "blocks",
        "exit": exit as i32,
        "config": cfg,
        "events": run.state.log.len(),
        "log": log.map(|p| p.display().to_string()),
        "requirements": reqs,
        "order": order,
        "violations": run.violations.iter().map(|(s, v)| json!({"stage": s, "violation": v})).collect::<Vec<_>>(),
        "identical": same,
    });
    Ok((report, exit, text))
}

/// A requirement list: `count` random sets over small stages, for sampling.
pub fn random_requirements(seed: u64, count: usize, stages: u64) -> BlockConfig {
    let mut rng = StdRng::seed_from_u64(seed);
    let w = (0..count)
        .map(|_| {
            (0..rng.random_range(1..=2))
                .map(|_| {
                    let s = rng.random_range(1..stages);
                    (rng.random_range(0..s), s)
                })
                .collect()
        })
        .collect();
    BlockConfig::new(stages, w)
}
