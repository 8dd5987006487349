//! Seeded experiment harness: storage capacity, noise robustness, and the
//! KLR γ and λ sweeps.
//!
//! Every (rule, sweep value) pair is a *cell*; every cell runs `trials`
//! independent pattern sets whose seeds come from [`seed_schedule`]. Jobs
//! are distributed over rayon workers and aggregated in a fixed order, so
//! results do not depend on the worker count.

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::patterns::{corrupt, generate_patterns, is_success, rng_from_seed, PatternSet};
use crate::recall::{run_recall, Network, RecallConfig};
use crate::trainers::{train_hebbian, train_klr, train_llr, Rule, TrainConfig};

/// Storage loads used by the capacity experiment unless overridden.
pub const DEFAULT_BETAS: [f64; 13] = [
    0.02, 0.06, 0.10, 0.14, 0.20, 0.30, 0.50, 0.70, 0.85, 0.95, 1.10, 1.30, 1.50,
];
pub const DEFAULT_M0S: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const DEFAULT_SCALED_GAMMAS: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const DEFAULT_LAMBDAS: [f64; 5] = [0.0, 0.001, 0.01, 0.05, 0.1];

pub const DEFAULT_TRIALS: usize = 10;
/// Cap on stored patterns probed per trial.
pub const DEFAULT_MAX_PROBES: usize = 200;
pub const NOISE_LOAD: f64 = 0.2;
pub const SWEEP_LOAD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Capacity,
    Noise,
    GammaSweep,
    LambdaSweep,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Noise => "noise",
            ExperimentKind::GammaSweep => "gamma",
            ExperimentKind::LambdaSweep => "lambda",
        }
    }

    /// Name of the swept quantity as written to the CSV.
    pub fn sweep_param(&self) -> &'static str {
        match self {
            ExperimentKind::Capacity => "beta",
            ExperimentKind::Noise => "m0",
            ExperimentKind::GammaSweep => "gamma_n",
            ExperimentKind::LambdaSweep => "lambda",
        }
    }

    pub fn default_values(&self) -> Vec<f64> {
        match self {
            ExperimentKind::Capacity => DEFAULT_BETAS.to_vec(),
            ExperimentKind::Noise => DEFAULT_M0S.to_vec(),
            ExperimentKind::GammaSweep => DEFAULT_SCALED_GAMMAS.to_vec(),
            ExperimentKind::LambdaSweep => DEFAULT_LAMBDAS.to_vec(),
        }
    }

    pub fn default_rules(&self) -> Vec<Rule> {
        match self {
            ExperimentKind::Capacity | ExperimentKind::Noise => Rule::ALL.to_vec(),
            ExperimentKind::GammaSweep | ExperimentKind::LambdaSweep => vec![Rule::Klr],
        }
    }

    pub fn default_load(&self) -> f64 {
        match self {
            ExperimentKind::Noise => NOISE_LOAD,
            _ => SWEEP_LOAD,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "capacity" => Ok(ExperimentKind::Capacity),
            "noise" => Ok(ExperimentKind::Noise),
            "gamma" | "gamma_sweep" => Ok(ExperimentKind::GammaSweep),
            "lambda" | "lambda_sweep" => Ok(ExperimentKind::LambdaSweep),
            other => Err(Error::domain(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: usize,
    pub rules: Vec<Rule>,
    /// β, m(0), γN or λ depending on `kind`; strictly increasing.
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub train_config: TrainConfig,
    /// `None` means `γ = 1/N`. Ignored by the γ sweep.
    pub kernel_params: Option<KernelParams>,
    pub recall_config: RecallConfig,
    /// Fixed load `P/N` for every kind except capacity.
    pub load: f64,
    pub max_probes: usize,
}

impl ExperimentSpec {
    /// Spec with all defaults filled for `kind` at network size `n`.
    pub fn new(kind: ExperimentKind, n: usize) -> Self {
        ExperimentSpec {
            kind,
            n,
            rules: kind.default_rules(),
            sweep_values: kind.default_values(),
            trials: DEFAULT_TRIALS,
            base_seed: 0,
            train_config: TrainConfig::default(),
            kernel_params: None,
            recall_config: RecallConfig::default(),
            load: kind.default_load(),
            max_probes: DEFAULT_MAX_PROBES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("network size must be >= 1"));
        }
        if self.rules.is_empty() {
            return Err(Error::domain("at least one rule is required"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be >= 1"));
        }
        if self.max_probes == 0 {
            return Err(Error::domain("max probes must be >= 1"));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::domain("sweep values must be non-empty"));
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sweep values must be finite"));
        }
        if self.sweep_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("sweep values must be strictly increasing"));
        }
        if matches!(self.kind, ExperimentKind::GammaSweep | ExperimentKind::LambdaSweep)
            && self.rules != [Rule::Klr]
        {
            return Err(Error::domain(format!(
                "the {} sweep applies to klr only",
                self.kind
            )));
        }
        self.train_config.validate()?;
        if self.recall_config.steps == 0 {
            return Err(Error::domain("recall steps must be >= 1"));
        }
        match self.kind {
            ExperimentKind::Capacity => {}
            ExperimentKind::Noise => {
                if self.sweep_values.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                    return Err(Error::domain("initial overlaps must lie in [-1, 1]"));
                }
            }
            ExperimentKind::GammaSweep => {
                if self.sweep_values.iter().any(|&v| v <= 0.0) {
                    return Err(Error::domain("scaled gamma values must be positive"));
                }
            }
            ExperimentKind::LambdaSweep => {
                if self.sweep_values.iter().any(|&v| v < 0.0) {
                    return Err(Error::domain("lambda values must be >= 0"));
                }
            }
        }
        for &v in &self.sweep_values {
            self.patterns_per_trial(v)?;
        }
        Ok(())
    }

    /// Number of stored patterns P for a cell with sweep value `value`.
    pub fn patterns_per_trial(&self, value: f64) -> Result<usize> {
        let load = match self.kind {
            ExperimentKind::Capacity => value,
            _ => self.load,
        };
        let p = (load * self.n as f64).round();
        if p >= 1.0 {
            Ok(p as usize)
        } else {
            Err(Error::domain(format!(
                "load {load} gives fewer than one pattern at N={}",
                self.n
            )))
        }
    }

    fn kernel_for(&self, value: f64) -> Result<KernelParams> {
        match self.kind {
            ExperimentKind::GammaSweep => KernelParams::scaled(value, self.n),
            _ => Ok(self
                .kernel_params
                .unwrap_or_else(|| KernelParams::for_network(self.n))),
        }
    }

    fn train_config_for(&self, value: f64) -> TrainConfig {
        match self.kind {
            ExperimentKind::LambdaSweep => TrainConfig {
                lambda: value,
                ..self.train_config
            },
            _ => self.train_config,
        }
    }

    /// Cell index of `(rule, value index)`; independent of which other
    /// rules are requested.
    fn cell_index(rule: Rule, value_idx: usize) -> u64 {
        let ordinal = Rule::ALL.iter().position(|&r| r == rule).unwrap_or(0) as u64;
        value_idx as u64 * Rule::ALL.len() as u64 + ordinal
    }
}

/// One aggregated (rule, sweep value) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub rule: Rule,
    pub sweep_value: f64,
    /// Recall attempts aggregated into this row.
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_final_overlap: f64,
    /// Population standard deviation.
    pub std_final_overlap: f64,
}

impl ResultRow {
    fn from_overlaps(rule: Rule, sweep_value: f64, overlaps: &[f64]) -> Self {
        let count = overlaps.len();
        let successes = overlaps.iter().filter(|&&m| is_success(m)).count();
        let mean = overlaps.iter().sum::<f64>() / count as f64;
        let var = overlaps.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / count as f64;
        ResultRow {
            rule,
            sweep_value,
            trials: count,
            successes,
            success_rate: successes as f64 / count as f64,
            mean_final_overlap: mean,
            std_final_overlap: var.sqrt(),
        }
    }
}

/// Seeds used by one cell, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSeeds {
    pub rule: Rule,
    pub sweep_value: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
    pub seeds: Vec<CellSeeds>,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
}

impl ExperimentResult {
    pub fn row(&self, rule: Rule, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.rule == rule && r.sweep_value == sweep_value)
    }

    pub fn rows_for(&self, rule: Rule) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.rule == rule)
    }
}

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finaliser; a bijection on u64.
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed for `(base_seed, trial, cell)`.
///
/// For a fixed base seed the map is injective over `trial, cell < 2³²`:
/// the pair is packed into one word and passed through two bijections.
pub fn seed_schedule(base_seed: u64, trial: u64, cell: u64) -> u64 {
    let packed = (trial << 32) | (cell & 0xffff_ffff);
    mix64(base_seed ^ mix64(packed))
}

fn sub_seed(trial_seed: u64, stream: u64) -> u64 {
    mix64(trial_seed ^ mix64(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn train_network(
    rule: Rule,
    set: &PatternSet,
    kernel: KernelParams,
    config: &TrainConfig,
) -> Result<Network> {
    Ok(match rule {
        Rule::Hebbian => Network::Weights(train_hebbian(set)),
        Rule::Llr => Network::Weights(train_llr(set, config)?),
        Rule::Klr => Network::kernel(train_klr(set, kernel, config)?, set.clone())?,
    })
}

struct Job {
    cell: usize,
    cell_trial: usize,
    rule: Rule,
    value: f64,
    seed: u64,
}

/// Final overlaps of every recall attempted in one trial.
fn run_trial(spec: &ExperimentSpec, job: &Job) -> Result<Vec<f64>> {
    let p = spec.patterns_per_trial(job.value)?;
    let set = generate_patterns(spec.n, p, job.seed)?;
    let kernel = spec.kernel_for(job.value)?;
    let config = spec.train_config_for(job.value);
    let net = train_network(job.rule, &set, kernel, &config)?;

    match spec.kind {
        ExperimentKind::Noise => {
            // Trial t probes stored pattern t mod P.
            let target = &set.patterns()[job.cell_trial % p];
            let start = corrupt(target, job.value, sub_seed(job.seed, 2))?;
            let rec = run_recall(&net, &start, target, &spec.recall_config)?;
            Ok(vec![rec.final_overlap()])
        }
        _ => {
            let probes: Vec<usize> = if p <= spec.max_probes {
                (0..p).collect()
            } else {
                let mut rng = rng_from_seed(sub_seed(job.seed, 1));
                let mut picked = index::sample(&mut rng, p, spec.max_probes).into_vec();
                picked.sort_unstable();
                picked
            };
            probes
                .into_iter()
                .map(|mu| {
                    let xi = &set.patterns()[mu];
                    run_recall(&net, xi, xi, &spec.recall_config).map(|r| r.final_overlap())
                })
                .collect()
        }
    }
}

/// Runs any experiment kind on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &rule in &spec.rules {
        for (vi, &value) in spec.sweep_values.iter().enumerate() {
            let cell_id = ExperimentSpec::cell_index(rule, vi);
            let seeds: Vec<u64> = (0..spec.trials as u64)
                .map(|t| seed_schedule(spec.base_seed, t, cell_id))
                .collect();
            cells.push(CellSeeds {
                rule,
                sweep_value: value,
                seeds,
            });
        }
    }

    let jobs: Vec<Job> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell, cs)| {
            cs.seeds.iter().enumerate().map(move |(trial, &seed)| Job {
                cell,
                cell_trial: trial,
                rule: cs.rule,
                value: cs.sweep_value,
                seed,
            })
        })
        .collect();

    let outcomes: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|job| {
            run_trial(spec, job).map_err(|e| Error::Cell {
                rule: job.rule.to_string(),
                value: job.value,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); cells.len()];
    for (job, out) in jobs.iter().zip(outcomes) {
        per_cell[job.cell].extend(out);
    }
    let mut rows: Vec<ResultRow> = cells
        .iter()
        .zip(&per_cell)
        .map(|(cs, overlaps)| ResultRow::from_overlaps(cs.rule, cs.sweep_value, overlaps))
        .collect();
    rows.sort_by(|a, b| {
        a.rule
            .cmp(&b.rule)
            .then(a.sweep_value.total_cmp(&b.sweep_value))
    });
    cells.sort_by(|a, b| {
        a.rule
            .cmp(&b.rule)
            .then(a.sweep_value.total_cmp(&b.sweep_value))
    });

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows,
        seeds: cells,
        timestamp,
    })
}

/// Runs on a dedicated pool of `workers` threads (`0` = rayon default).
pub fn run_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "expected a {kind} spec, got {}",
            spec.kind
        )))
    }
}

/// Recall from every stored pattern as a function of load `β = P/N`.
pub fn run_capacity(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Capacity)?;
    run_experiment(spec)
}

/// Final overlap as a function of the initial overlap at fixed load.
pub fn run_noise(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Noise)?;
    run_experiment(spec)
}

/// KLR success rate as a function of `γN` at fixed load.
pub fn run_gamma_sweep(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::GammaSweep)?;
    run_experiment(spec)
}

/// KLR success rate as a function of λ at fixed load.
pub fn run_lambda_sweep(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::LambdaSweep)?;
    run_experiment(spec)
}
