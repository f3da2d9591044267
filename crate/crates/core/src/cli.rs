//! Configuration, orchestration and file I/O: the `simulate`, `analyze` and
//! `verify` workflows behind the `fpp-lab` binary.
//!
//! Exit codes: 0 success, 1 invariant/acceptance failure, 2 config error,
//! 3 I/O error.

use crate::analysis::{
    self, BootstrapConfig, EventBReport, PairedDispersion, ScalingFit, SummaryStats,
};
use crate::experiments::{
    self, ExperimentConfig, ExperimentKind, GraphFamily, SweepResult, TrialRecord,
};
use crate::geodesic::{self, SearchOptions};
use crate::topology::{Topology, TreeWord, Vertex};
use crate::weights::{WeightOracle, WeightSpec};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Fallback master seed when neither flag nor config provides one.
pub const SEED_ENV_VAR: &str = "FPP_LAB_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "fpp-lab",
    about = "First passage percolation laboratory on tree x Z products"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo sweep and write a JSON-lines dataset plus manifest.
    Simulate(SimulateArgs),
    /// Summarize datasets into a JSON report and a CSV of dispersion curves.
    Analyze(AnalyzeArgs),
    /// Run the built-in invariant suites and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config file; every field can be overridden by a flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment kind: zline | coupled_pair | pruned_b | treeline.
    #[arg(long)]
    pub kind: Option<String>,
    /// Graph family: full | dary.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub d: Option<u8>,
    /// Weight spec, e.g. "shifted_exp(c=0.5,rate=1.0)".
    #[arg(long)]
    pub weights: Option<String>,
    /// Comma-separated n schedule, e.g. 8,16,32.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed excision depth, overriding alpha.
    #[arg(long)]
    pub k: Option<u32>,
    /// Settled-vertex budget per search.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Worker pool width (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON-lines dataset paths.
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    /// Weight spec for analytic bounds; defaults to the dataset manifest's.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "summary.csv")]
    pub csv: PathBuf,
    #[arg(long)]
    pub bootstrap_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Scope: unit | oracle | coupling.
    pub scope: String,
    /// Random instances for the oracle scope.
    #[arg(long, default_value_t = 200)]
    pub instances: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Z distance for the coupling scope.
    #[arg(long, default_value_t = 16)]
    pub n: u64,
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Failure(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Failure(_) => EXIT_FAILURE,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Written atomically next to each dataset; echoes the full config so the
/// run can be reproduced bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    /// Unix seconds; the only non-reproducible field.
    pub timestamp: u64,
    pub config: ExperimentConfig,
    pub dataset: String,
    pub records: usize,
    pub failures: usize,
}

/// TOML shape of the config file; all fields optional, flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    kind: Option<String>,
    family: Option<String>,
    d: Option<u8>,
    weights: Option<String>,
    n_schedule: Option<Vec<u64>>,
    replicas: Option<usize>,
    seed: Option<u64>,
    alpha: Option<f64>,
    k: Option<u32>,
    budget: Option<usize>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "zline" | "z_line" => Ok(ExperimentKind::ZLine),
        "coupled_pair" | "coupledpair" => Ok(ExperimentKind::CoupledPair),
        "pruned_b" | "prunedb" | "pruned" => Ok(ExperimentKind::PrunedB),
        "treeline" | "tree_line" => Ok(ExperimentKind::TreeLine),
        other => Err(CliError::Config(format!("unknown experiment kind {other:?}"))),
    }
}

fn parse_family(s: &str) -> Result<GraphFamily, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "full" => Ok(GraphFamily::Full),
        "dary" | "d_ary" | "d-ary" => Ok(GraphFamily::DAry),
        other => Err(CliError::Config(format!("unknown graph family {other:?}"))),
    }
}

fn parse_weights(s: &str) -> Result<WeightSpec<f64>, CliError> {
    s.parse().map_err(|e| CliError::Config(format!("{e}")))
}

/// Merges config file, flags and the seed env var into a validated config.
pub fn resolve_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let file: ConfigFile = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let mut cfg = ExperimentConfig::default();
    if let Some(kind) = args.kind.as_deref().or(file.kind.as_deref()) {
        cfg.kind = parse_kind(kind)?;
    }
    if let Some(family) = args.family.as_deref().or(file.family.as_deref()) {
        cfg.graph_family = parse_family(family)?;
    }
    if let Some(d) = args.d.or(file.d) {
        cfg.d = d;
    }
    if let Some(w) = args.weights.as_deref().or(file.weights.as_deref()) {
        cfg.weights = parse_weights(w)?;
    }
    if let Some(n) = args.n.clone().or(file.n_schedule) {
        cfg.n_schedule = n;
    }
    if let Some(m) = args.replicas.or(file.replicas) {
        cfg.replicas = m;
    }
    let env_seed = std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|s| s.parse::<u64>().ok());
    if let Some(seed) = args.seed.or(file.seed).or(env_seed) {
        cfg.master_seed = seed;
    }
    if let Some(alpha) = args.alpha.or(file.alpha) {
        cfg.alpha = alpha;
    }
    if let Some(k) = args.k.or(file.k) {
        cfg.k_override = Some(k);
    }
    if let Some(b) = args.budget.or(file.budget) {
        cfg.budget = b;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn install_pool(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

pub fn records_to_jsonl(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Runs the sweep and writes `<kind>_<d>_<slug>_<seed>.jsonl` plus its
/// manifest into the output directory. Returns the dataset path and the
/// sweep outcome.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<(PathBuf, SweepResult), CliError> {
    let cfg = resolve_config(args)?;
    install_pool(args.jobs)?;
    let sweep = experiments::run_sweep(&cfg).map_err(|e| CliError::Config(e.to_string()))?;

    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let stem = cfg.dataset_stem();
    let dataset_path = args.out_dir.join(format!("{stem}.jsonl"));
    write_atomic(&dataset_path, records_to_jsonl(&sweep.records).as_bytes())?;

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: cfg,
        dataset: dataset_path.display().to_string(),
        records: sweep.records.len(),
        failures: sweep.failures.len(),
    };
    let manifest_path = args.out_dir.join(format!("{stem}.manifest.json"));
    let mut manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_json.push('\n');
    write_atomic(&manifest_path, manifest_json.as_bytes())?;

    for f in &sweep.failures {
        eprintln!(
            "trial failure: n = {}, trial {}: {}",
            f.n, f.trial_index, f.error
        );
    }
    Ok((dataset_path, sweep))
}

/// Parsed dataset with per-line schema errors reported, not fatal.
pub fn read_dataset(path: &Path) -> Result<(Vec<TrialRecord>, Vec<String>), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    let mut schema_errors = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(line) {
            Ok(rec) => records.push(rec),
            Err(e) => schema_errors.push(format!(
                "{}:{}: {e}",
                path.display(),
                lineno + 1
            )),
        }
    }
    Ok((records, schema_errors))
}

/// Per-kind section of the analysis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: ExperimentKind,
    pub per_n: Vec<SummaryStats<f64>>,
    /// mad-vs-n fit, when enough n groups exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_fit: Option<ScalingFit<f64>>,
    /// mean |gamma|-vs-n fit (geodesic edge count growth).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_count_fit: Option<ScalingFit<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub paired: Vec<PairedDispersion<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub event_b: Vec<EventBReport<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sections: Vec<KindReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub schema_errors: Vec<String>,
}

fn group_by_kind_and_n(records: &[TrialRecord]) -> BTreeMap<ExperimentKind, BTreeMap<u64, Vec<&TrialRecord>>> {
    let mut groups: BTreeMap<ExperimentKind, BTreeMap<u64, Vec<&TrialRecord>>> = BTreeMap::new();
    for rec in records {
        groups
            .entry(rec.kind)
            .or_default()
            .entry(rec.n)
            .or_default()
            .push(rec);
    }
    groups
}

impl ExperimentKind {
    fn sort_tag(self) -> u8 {
        match self {
            ExperimentKind::ZLine => 0,
            ExperimentKind::CoupledPair => 1,
            ExperimentKind::PrunedB => 2,
            ExperimentKind::TreeLine => 3,
        }
    }
}

impl Ord for ExperimentKind {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_tag().cmp(&other.sort_tag())
    }
}

impl PartialOrd for ExperimentKind {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Builds the full report from in-memory records. `weights` feeds the
/// analytic `8 E[X]` bound for coupled-pair sections.
pub fn build_report(
    records: &[TrialRecord],
    weights: Option<&WeightSpec<f64>>,
    bootstrap: &BootstrapConfig,
    schema_errors: Vec<String>,
) -> Result<AnalysisReport, CliError> {
    let mut sections = Vec::new();
    for (kind, by_n) in group_by_kind_and_n(records) {
        let mut per_n = Vec::new();
        let mut paired = Vec::new();
        let mut event_b = Vec::new();
        let mut mad_points = Vec::new();
        let mut gamma_points = Vec::new();
        for (&n, recs) in &by_n {
            let dists: Vec<f64> = recs.iter().filter_map(|r| r.dist).collect();
            if dists.len() >= 2 {
                let stats = analysis::summarize(n, &dists, bootstrap)
                    .map_err(|e| CliError::Failure(e.to_string()))?;
                mad_points.push((n, stats.mad));
                per_n.push(stats);
            }
            let gammas: Vec<f64> = recs.iter().map(|r| r.edge_count as f64).collect();
            if !gammas.is_empty() {
                gamma_points.push((n, analysis::mean(&gammas)));
            }
            if kind == ExperimentKind::CoupledPair {
                let pairs: Vec<(f64, f64)> = recs
                    .iter()
                    .filter_map(|r| Some((r.dist_sub1?, r.dist_sub2?)))
                    .collect();
                if pairs.len() >= 2 {
                    if let Some(spec) = weights {
                        let bound = 8.0
                            * spec
                                .analytic_mean()
                                .map_err(|e| CliError::Config(e.to_string()))?;
                        paired.push(
                            analysis::paired_dispersion(n, &pairs, bound, bootstrap)
                                .map_err(|e| CliError::Failure(e.to_string()))?,
                        );
                    }
                }
            }
            if kind == ExperimentKind::PrunedB {
                // one report per (n, k) group
                let mut by_k: BTreeMap<u32, Vec<(bool, u64)>> = BTreeMap::new();
                let mut d_of_group = 3u8;
                for r in recs {
                    if let (Some(b), Some(k)) = (r.event_b, r.k) {
                        by_k.entry(k).or_default().push((b, r.tree_projection));
                        d_of_group = r.d;
                    }
                }
                for (k, flags) in by_k {
                    if flags.len() >= 2 {
                        event_b.push(
                            analysis::event_b_report(n, k, d_of_group, &flags, bootstrap)
                                .map_err(|e| CliError::Failure(e.to_string()))?,
                        );
                    }
                }
            }
        }
        let dispersion_fit = if mad_points.len() >= 4 {
            analysis::fit_scaling(&mad_points).ok()
        } else {
            None
        };
        let edge_count_fit = if gamma_points.len() >= 4 {
            analysis::fit_scaling(&gamma_points).ok()
        } else {
            None
        };
        sections.push(KindReport {
            kind,
            per_n,
            dispersion_fit,
            edge_count_fit,
            paired,
            event_b,
        });
    }
    Ok(AnalysisReport {
        sections,
        schema_errors,
    })
}

pub fn summary_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("kind,n,count,mean,mad,ci_lo,ci_hi\n");
    for section in &report.sections {
        for s in &section.per_n {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                section.kind, s.n, s.count, s.mean, s.mad, s.mad_ci.0, s.mad_ci.1
            );
        }
    }
    out
}

fn manifest_weights(dataset: &Path) -> Option<WeightSpec<f64>> {
    // spec slugs contain dots, so swap the suffix textually
    let s = dataset.display().to_string();
    let stem = s.strip_suffix(".jsonl").unwrap_or(&s);
    let manifest_path = format!("{stem}.manifest.json");
    let text = fs::read_to_string(manifest_path).ok()?;
    let manifest: RunManifest = serde_json::from_str(&text).ok()?;
    Some(manifest.config.weights)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalysisReport, CliError> {
    let mut records = Vec::new();
    let mut schema_errors = Vec::new();
    let mut weights = match &args.weights {
        Some(w) => Some(parse_weights(w)?),
        None => None,
    };
    for path in &args.datasets {
        let (mut recs, mut errs) = read_dataset(path)?;
        records.append(&mut recs);
        schema_errors.append(&mut errs);
        if weights.is_none() {
            weights = manifest_weights(path);
        }
    }
    for err in &schema_errors {
        eprintln!("schema error: {err}");
    }
    let bootstrap = BootstrapConfig {
        seed: args.bootstrap_seed.unwrap_or(BootstrapConfig::default().seed),
        ..Default::default()
    };
    let report = build_report(&records, weights.as_ref(), &bootstrap, schema_errors)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_atomic(&args.out, json.as_bytes())?;
    write_atomic(&args.csv, summary_csv(&report).as_bytes())?;
    Ok(report)
}

/// One row of the verify table.
#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub check: String,
    pub passed: usize,
    pub total: usize,
}

impl VerifyRow {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

fn print_rows(rows: &[VerifyRow]) {
    for row in rows {
        println!(
            "{:<44} {:>6}/{:<6} {}",
            row.check,
            row.passed,
            row.total,
            if row.ok() { "PASS" } else { "FAIL" }
        );
    }
}

/// Degree-law, codec and adjacency-symmetry spot checks over a
/// deterministic sample of vertices.
pub fn verify_unit(seed: u64) -> Vec<VerifyRow> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut degree_ok = 0;
    let mut symmetry_ok = 0;
    let mut codec_ok = 0;
    let total = 300;
    let topos = [
        Topology::full(3),
        Topology::dary(3),
        Topology::pruned(3, TreeWord::from_letters(&[0, 0])),
        Topology::restricted(3, TreeWord::from_letters(&[1])),
    ];
    for i in 0..total {
        let topo = &topos[i % topos.len()];
        let v = random_vertex(&mut rng, topo, 8, 8);
        let ns = topo.neighbors(&v).expect("sampled in-topology vertex");
        let expected = match topo {
            Topology::Full { d } => Some(*d as usize + 2),
            Topology::DAry { d } => Some(if v.word.is_root() {
                *d as usize + 1
            } else {
                *d as usize + 2
            }),
            _ => None,
        };
        if expected.map_or(true, |e| ns.len() == e) {
            degree_ok += 1;
        }
        if ns.iter().all(|(u, _)| {
            topo.neighbors(u)
                .map(|back| back.iter().any(|(w, _)| w == &v))
                .unwrap_or(false)
        }) {
            symmetry_ok += 1;
        }
        if v.to_string().parse::<Vertex>().as_ref() == Ok(&v) {
            codec_ok += 1;
        }
    }
    vec![
        VerifyRow {
            check: "degree law".into(),
            passed: degree_ok,
            total,
        },
        VerifyRow {
            check: "adjacency symmetry".into(),
            passed: symmetry_ok,
            total,
        },
        VerifyRow {
            check: "vertex codec round-trip".into(),
            passed: codec_ok,
            total,
        },
    ]
}

/// Uniform-ish random in-topology vertex for spot checks.
fn random_vertex(
    rng: &mut crate::rng::SplitMix64,
    topo: &Topology,
    max_depth: usize,
    max_z: i64,
) -> Vertex {
    let d = topo.d();
    loop {
        let depth = rng.next_index(max_depth + 1);
        let mut letters = Vec::with_capacity(depth);
        for i in 0..depth {
            let cap = if i == 0 { d } else { d - 1 };
            letters.push(rng.next_index(cap as usize) as u8);
        }
        let z = rng.next_index((2 * max_z + 1) as usize) as i64 - max_z;
        let v = Vertex::new(TreeWord::from_letters(&letters), z);
        if topo.contains(&v) {
            return v;
        }
    }
}

/// Lazy engine vs materialized brute force on random small instances.
pub fn verify_oracle(instances: u64, seed: u64) -> Vec<VerifyRow> {
    use rayon::prelude::*;
    let spec: WeightSpec<f64> = WeightSpec::Uniform { lo: 0.5, hi: 1.5 };
    let topo = Topology::full(3);
    let matches = (0..instances)
        .into_par_iter()
        .filter(|&i| {
            let trial_seed = crate::rng::absorb(seed, &[0x6f7261636c65, i]);
            let oracle = WeightOracle::new(trial_seed, spec).unwrap();
            let n = 1 + (trial_seed % 4) as i64;
            let exact = geodesic::shortest_path(
                &topo,
                &oracle,
                &Vertex::root(0),
                &Vertex::root(n),
                &SearchOptions::default(),
            )
            .unwrap();
            let brute =
                geodesic::oracle_distance(&topo, &oracle, &Vertex::root(0), &Vertex::root(n))
                    .unwrap();
            (exact.distance - brute).abs() < 1e-12
        })
        .count();
    vec![VerifyRow {
        check: "lazy engine = brute-force oracle".into(),
        passed: matches,
        total: instances as usize,
    }]
}

/// Per-sample coupling inequalities over fresh trials.
pub fn verify_coupling(n: u64, replicas: usize, seed: u64) -> Vec<VerifyRow> {
    use rayon::prelude::*;
    let dh_cfg = ExperimentConfig {
        kind: ExperimentKind::CoupledPair,
        graph_family: GraphFamily::DAry,
        n_schedule: vec![n.max(1)],
        replicas: replicas.max(2),
        master_seed: seed,
        ..Default::default()
    };
    let dh_ok = (0..replicas as u64)
        .into_par_iter()
        .filter(|&i| experiments::run_coupled_pair_trial(&dh_cfg, n, i).is_ok())
        .count();
    let pruned_cfg = ExperimentConfig {
        kind: ExperimentKind::PrunedB,
        graph_family: GraphFamily::Full,
        n_schedule: vec![n.max(1)],
        replicas: replicas.max(2),
        master_seed: seed,
        k_override: Some(2),
        ..Default::default()
    };
    let pruned_ok = (0..replicas as u64)
        .into_par_iter()
        .filter(|&i| experiments::run_pruned_trial(&pruned_cfg, n, i).is_ok())
        .count();
    vec![
        VerifyRow {
            check: "Dekking-Host per-sample inequality".into(),
            passed: dh_ok,
            total: replicas,
        },
        VerifyRow {
            check: "pruned coupling D <= D', D = D' off B".into(),
            passed: pruned_ok,
            total: replicas,
        },
    ]
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Vec<VerifyRow>, CliError> {
    install_pool(args.jobs)?;
    let seed = args.seed.unwrap_or(1);
    let rows = match args.scope.to_ascii_lowercase().as_str() {
        "unit" => verify_unit(seed),
        "oracle" => verify_oracle(args.instances, seed),
        "coupling" => verify_coupling(args.n, args.replicas, seed),
        other => return Err(CliError::Config(format!("unknown verify scope {other:?}"))),
    };
    print_rows(&rows);
    if rows.iter().all(VerifyRow::ok) {
        Ok(rows)
    } else {
        Err(CliError::Failure(format!(
            "{} of {} checks failed",
            rows.iter().filter(|r| !r.ok()).count(),
            rows.len()
        )))
    }
}

/// Top-level dispatch used by `main`; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome: Result<(), CliError> = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args).map(|(path, sweep)| {
            println!(
                "wrote {} ({} records, {} failures)",
                path.display(),
                sweep.records.len(),
                sweep.failures.len()
            );
            if !sweep.failures.is_empty() {
                std::process::exit(EXIT_FAILURE);
            }
        }),
        Command::Analyze(args) => cmd_analyze(args).map(|report| {
            println!(
                "wrote {} and {} ({} sections)",
                args.out.display(),
                args.csv.display(),
                report.sections.len()
            );
        }),
        Command::Verify(args) => cmd_verify(args).map(|_| ()),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
