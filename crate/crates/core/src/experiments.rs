//! Monte Carlo drivers realizing the coupling constructions: Z-line
//! distances, the Dekking-Host coupled pair on disjoint subtrees, the pruned
//! graph with the event-B audit, and the tree-direction exploratory run.
//!
//! Every trial draws its own seed as a hash of `(master_seed, kind, n,
//! trial_index)`, so datasets are reproducible and independent of execution
//! order. Within a trial all searches share one oracle: the same edge key
//! gives the same weight in the full graph and in every restriction, which
//! is exactly the common-random-number coupling the inequalities need.

use crate::geodesic::{self, GeodesicError, SearchOptions, DEFAULT_BUDGET};
use crate::topology::{canonical_edge_key, Topology, TreeWord, Vertex};
use crate::weights::{WeightOracle, WeightSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;
use thiserror::Error;

/// Absolute slack for the per-sample coupling inequalities; they hold
/// exactly modulo floating-point accumulation.
pub const COUPLING_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("coupling violation: {0}")]
    CouplingViolation(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ZLine,
    CoupledPair,
    PrunedB,
    TreeLine,
}

impl ExperimentKind {
    fn seed_tag(self) -> u64 {
        match self {
            ExperimentKind::ZLine => 1,
            ExperimentKind::CoupledPair => 2,
            ExperimentKind::PrunedB => 3,
            ExperimentKind::TreeLine => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ZLine => "zline",
            ExperimentKind::CoupledPair => "coupled_pair",
            ExperimentKind::PrunedB => "pruned_b",
            ExperimentKind::TreeLine => "treeline",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    Full,
    DAry,
}

/// One sweep's worth of knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: u8,
    pub graph_family: GraphFamily,
    pub weights: WeightSpec<f64>,
    pub n_schedule: Vec<u64>,
    /// Replicas per n.
    pub replicas: usize,
    pub master_seed: u64,
    /// Sets `k = ceil(alpha * log_{d-1} n)` for pruned trials.
    pub alpha: f64,
    pub k_override: Option<u32>,
    pub budget: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::ZLine,
            d: 3,
            graph_family: GraphFamily::Full,
            weights: WeightSpec::ShiftedExponential {
                floor: 0.5,
                rate: 1.0,
            },
            n_schedule: vec![8, 16, 32, 64, 128, 256, 512],
            replicas: 400,
            master_seed: 1,
            alpha: 1.0,
            k_override: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.d < 3 {
            return bad(format!("d must be >= 3, got {}", self.d));
        }
        if self.d > 36 {
            return bad(format!("d must be <= 36 (vertex codec limit), got {}", self.d));
        }
        self.weights
            .validate()
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        self.weights
            .analytic_mean()
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        if self.replicas < 2 {
            return bad(format!("replicas must be >= 2, got {}", self.replicas));
        }
        if self.n_schedule.is_empty() || self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_schedule must be nonempty and strictly increasing".into());
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if self.budget == 0 {
            return bad("budget must be positive".into());
        }
        Ok(())
    }

    pub fn family_topology(&self) -> Topology {
        match self.graph_family {
            GraphFamily::Full => Topology::full(self.d),
            GraphFamily::DAry => Topology::dary(self.d),
        }
    }

    /// Excision depth `k = ceil(alpha * log_{d-1} n)`, clamped to >= 1.
    pub fn k_for(&self, n: u64) -> u32 {
        if let Some(k) = self.k_override {
            return k.max(1);
        }
        let log = (n as f64).ln() / ((self.d - 1) as f64).ln();
        (self.alpha * log).ceil().max(1.0) as u32
    }

    pub fn trial_seed(&self, n: u64, trial_index: u64) -> u64 {
        crate::rng::absorb(
            self.master_seed,
            &[self.kind.seed_tag(), n, trial_index],
        )
    }

    fn oracle_for(&self, seed: u64) -> WeightOracle<f64> {
        WeightOracle::new(seed, self.weights).expect("config was validated")
    }

    /// Dataset file stem `<kind>_<d>_<spec-slug>_<seed>`.
    pub fn dataset_stem(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.kind,
            self.d,
            self.weights.slug(),
            self.master_seed
        )
    }
}

/// One Monte Carlo observation. Only fields relevant to the record's kind
/// are populated. `runtime_ms` is measured, not derived from the seed, so
/// it is kept out of serialized datasets to preserve byte-reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub kind: ExperimentKind,
    pub d: u8,
    pub n: u64,
    pub trial_index: u64,
    pub seed_used: u64,
    /// D(n) on the family graph (or the tree-direction distance for
    /// `treeline`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<f64>,
    /// D1, D2 on the two disjoint subtree restrictions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_sub1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_sub2: Option<f64>,
    /// D' on the pruned graph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_pruned: Option<f64>,
    /// X_{e_{1,0}}, X_{e_{1,n}}, X_{e_{2,0}}, X_{e_{2,n}}.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connector_weights: Option<[f64; 4]>,
    /// `|gamma|` of the primary geodesic.
    pub edge_count: u64,
    /// `|V_gamma|` of the primary geodesic.
    pub tree_projection: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_b: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Settled vertices summed over the trial's searches.
    pub explored: u64,
    #[serde(skip, default)]
    pub runtime_ms: u64,
}

impl TrialRecord {
    fn new(cfg: &ExperimentConfig, n: u64, trial_index: u64, seed: u64) -> Self {
        TrialRecord {
            kind: cfg.kind,
            d: cfg.d,
            n,
            trial_index,
            seed_used: seed,
            dist: None,
            dist_sub1: None,
            dist_sub2: None,
            dist_pruned: None,
            connector_weights: None,
            edge_count: 0,
            tree_projection: 0,
            event_b: None,
            k: None,
            explored: 0,
            runtime_ms: 0,
        }
    }
}

fn opts(cfg: &ExperimentConfig) -> SearchOptions {
    SearchOptions {
        budget: Some(cfg.budget),
        watch_words: Vec::new(),
    }
}

/// `D(n) = d_X((rho,0), (rho,n))` on the family graph.
pub fn run_zline_trial(
    cfg: &ExperimentConfig,
    n: u64,
    trial_index: u64,
) -> Result<TrialRecord, ExperimentError> {
    let started = Instant::now();
    let seed = cfg.trial_seed(n, trial_index);
    let oracle = cfg.oracle_for(seed);
    let topo = cfg.family_topology();
    let r = geodesic::shortest_path(
        &topo,
        &oracle,
        &Vertex::root(0),
        &Vertex::root(n as i64),
        &opts(cfg),
    )?;
    let mut rec = TrialRecord::new(cfg, n, trial_index, seed);
    rec.dist = Some(r.distance);
    rec.edge_count = r.stats.edge_count as u64;
    rec.tree_projection = r.stats.tree_projection_size as u64;
    rec.explored = r.explored as u64;
    rec.runtime_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

/// The Dekking-Host coupled pair: D on the family graph, D1 and D2 on the
/// two disjoint subtree restrictions rooted at the first two children of
/// the root, all under one oracle, plus the four connector edge weights.
/// Asserts `D <= min(D1, D2) + sum of connectors` per sample.
pub fn run_coupled_pair_trial(
    cfg: &ExperimentConfig,
    n: u64,
    trial_index: u64,
) -> Result<TrialRecord, ExperimentError> {
    let started = Instant::now();
    let seed = cfg.trial_seed(n, trial_index);
    let oracle = cfg.oracle_for(seed);
    let topo = cfg.family_topology();
    let zn = n as i64;

    let d_full = geodesic::shortest_path(
        &topo,
        &oracle,
        &Vertex::root(0),
        &Vertex::root(zn),
        &opts(cfg),
    )?;

    let mut subs = [0.0f64; 2];
    let mut connectors = [0.0f64; 4];
    for (i, sub) in subs.iter_mut().enumerate() {
        let child = TreeWord::from_letters(&[i as u8]);
        let restricted = Topology::restricted(cfg.d, child.clone());
        let s = Vertex::new(child.clone(), 0);
        let t = Vertex::new(child.clone(), zn);
        *sub = geodesic::shortest_path(&restricted, &oracle, &s, &t, &opts(cfg))?.distance;
        for (j, z) in [0i64, zn].into_iter().enumerate() {
            let key = canonical_edge_key(&Vertex::root(z), &Vertex::new(child.clone(), z))
                .expect("root and child are adjacent");
            connectors[2 * i + j] = oracle.weight(&key);
        }
    }

    let bound = subs[0].min(subs[1]) + connectors.iter().sum::<f64>();
    if d_full.distance > bound + COUPLING_TOL {
        return Err(ExperimentError::CouplingViolation(format!(
            "D = {} exceeds min(D1,D2) + connectors = {} at n = {n}, seed {seed}",
            d_full.distance, bound
        )));
    }

    let mut rec = TrialRecord::new(cfg, n, trial_index, seed);
    rec.dist = Some(d_full.distance);
    rec.dist_sub1 = Some(subs[0]);
    rec.dist_sub2 = Some(subs[1]);
    rec.connector_weights = Some(connectors);
    rec.edge_count = d_full.stats.edge_count as u64;
    rec.tree_projection = d_full.stats.tree_projection_size as u64;
    rec.explored = d_full.explored as u64;
    rec.runtime_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

/// D on the full graph and D' on the graph with the depth-k subtree below
/// `v0 = 0^k` excised, under one oracle. Event B is audited from the actual
/// D-geodesic; the trial asserts `D <= D'` and `D = D'` off B.
pub fn run_pruned_trial(
    cfg: &ExperimentConfig,
    n: u64,
    trial_index: u64,
) -> Result<TrialRecord, ExperimentError> {
    let started = Instant::now();
    let seed = cfg.trial_seed(n, trial_index);
    let oracle = cfg.oracle_for(seed);
    let k = cfg.k_for(n);
    let v0 = TreeWord::zeros(k as usize);
    let zn = n as i64;

    let full = Topology::full(cfg.d);
    let watch = SearchOptions {
        budget: Some(cfg.budget),
        watch_words: vec![v0.clone()],
    };
    let d_full = geodesic::shortest_path(&full, &oracle, &Vertex::root(0), &Vertex::root(zn), &watch)?;
    let event_b = *d_full
        .stats
        .visits_word
        .get(&v0)
        .expect("watched word is reported");

    let pruned = Topology::pruned(cfg.d, v0);
    let d_pruned = geodesic::shortest_path(
        &pruned,
        &oracle,
        &Vertex::root(0),
        &Vertex::root(zn),
        &opts(cfg),
    )?;

    if d_full.distance > d_pruned.distance + COUPLING_TOL {
        return Err(ExperimentError::CouplingViolation(format!(
            "D = {} exceeds D' = {} at n = {n}, k = {k}, seed {seed}",
            d_full.distance, d_pruned.distance
        )));
    }
    if !event_b && (d_full.distance - d_pruned.distance).abs() > COUPLING_TOL {
        return Err(ExperimentError::CouplingViolation(format!(
            "off event B but D = {} != D' = {} at n = {n}, k = {k}, seed {seed}",
            d_full.distance, d_pruned.distance
        )));
    }

    let mut rec = TrialRecord::new(cfg, n, trial_index, seed);
    rec.dist = Some(d_full.distance);
    rec.dist_pruned = Some(d_pruned.distance);
    rec.edge_count = d_full.stats.edge_count as u64;
    rec.tree_projection = d_full.stats.tree_projection_size as u64;
    rec.event_b = Some(event_b);
    rec.k = Some(k);
    rec.explored = (d_full.explored + d_pruned.explored) as u64;
    rec.runtime_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

/// Tree-direction distance `d_X((rho,0), (v_n,0))` with `v_n = 0^n`.
pub fn run_treeline_trial(
    cfg: &ExperimentConfig,
    n: u64,
    trial_index: u64,
) -> Result<TrialRecord, ExperimentError> {
    let started = Instant::now();
    let seed = cfg.trial_seed(n, trial_index);
    let oracle = cfg.oracle_for(seed);
    let topo = Topology::full(cfg.d);
    let target = Vertex::new(TreeWord::zeros(n as usize), 0);
    let r = geodesic::shortest_path(&topo, &oracle, &Vertex::root(0), &target, &opts(cfg))?;
    let mut rec = TrialRecord::new(cfg, n, trial_index, seed);
    rec.dist = Some(r.distance);
    rec.edge_count = r.stats.edge_count as u64;
    rec.tree_projection = r.stats.tree_projection_size as u64;
    rec.explored = r.explored as u64;
    rec.runtime_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

pub fn run_trial(
    cfg: &ExperimentConfig,
    n: u64,
    trial_index: u64,
) -> Result<TrialRecord, ExperimentError> {
    match cfg.kind {
        ExperimentKind::ZLine => run_zline_trial(cfg, n, trial_index),
        ExperimentKind::CoupledPair => run_coupled_pair_trial(cfg, n, trial_index),
        ExperimentKind::PrunedB => run_pruned_trial(cfg, n, trial_index),
        ExperimentKind::TreeLine => run_treeline_trial(cfg, n, trial_index),
    }
}

/// A failed trial within an otherwise completed sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub n: u64,
    pub trial_index: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

/// Runs the full `n_schedule x replicas` grid. Trials are embarrassingly
/// parallel; records come back sorted by `(n, trial_index)` so the dataset
/// content is independent of scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let grid: Vec<(u64, u64)> = cfg
        .n_schedule
        .iter()
        .flat_map(|&n| (0..cfg.replicas as u64).map(move |i| (n, i)))
        .collect();
    let outcomes: Vec<(u64, u64, Result<TrialRecord, ExperimentError>)> = grid
        .into_par_iter()
        .map(|(n, i)| (n, i, run_trial(cfg, n, i)))
        .collect();

    let mut result = SweepResult::default();
    for (n, i, outcome) in outcomes {
        match outcome {
            Ok(rec) => result.records.push(rec),
            Err(e) => result.failures.push(TrialFailure {
                n,
                trial_index: i,
                error: e.to_string(),
            }),
        }
    }
    result.records.sort_by_key(|r| (r.n, r.trial_index));
    result.failures.sort_by_key(|f| (f.n, f.trial_index));
    Ok(result)
}
