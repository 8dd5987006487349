//! `hopkernel` command line: `gen`, `train`, `recall`, `experiment`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::experiments::{run_with_workers, ExperimentKind, ExperimentSpec};
use crate::io;
use crate::kernel::KernelParams;
use crate::patterns::{corrupt, generate_patterns, is_success, overlap};
use crate::recall::{run_recall, Network, RecallConfig};
use crate::trainers::{train_hebbian, train_klr, train_llr, Rule, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

/// Network size used by `experiment --full`.
pub const FULL_SCALE_N: usize = 500;
/// Network size used by `experiment` when `--n` is not given.
pub const DESK_SCALE_N: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "hopkernel", version, about = "Hopfield associative memory with Hebbian, LLR and KLR learning")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate random bipolar patterns.
    Gen {
        #[arg(long, value_parser = positive_usize)]
        n: usize,
        #[arg(long, value_parser = positive_usize)]
        p: usize,
        #[arg(long, env = "HOPKERNEL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a pattern file.
    Train {
        #[arg(long)]
        patterns: PathBuf,
        #[arg(long, value_enum)]
        rule: RuleArg,
        /// RBF width; defaults to 1/N.
        #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recall one stored pattern, optionally from a corrupted start.
    Recall {
        #[arg(long)]
        model: PathBuf,
        /// Pattern file holding the targets; kernel models carry their own.
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        pattern_index: usize,
        /// Initial overlap with the target.
        #[arg(long, default_value_t = 1.0, value_parser = overlap_value, allow_negative_numbers = true)]
        m0: f64,
        #[arg(long, env = "HOPKERNEL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25, value_parser = positive_usize)]
        steps: usize,
        /// Write the overlap trajectory as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run one of the four experiments and write plot-ready CSV.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Hebbian,
    Llr,
    Klr,
}

impl From<RuleArg> for Rule {
    fn from(r: RuleArg) -> Rule {
        match r {
            RuleArg::Hebbian => Rule::Hebbian,
            RuleArg::Llr => Rule::Llr,
            RuleArg::Klr => Rule::Klr,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Capacity,
    Noise,
    Gamma,
    Lambda,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Capacity => ExperimentKind::Capacity,
            KindArg::Noise => ExperimentKind::Noise,
            KindArg::Gamma => ExperimentKind::GammaSweep,
            KindArg::Lambda => ExperimentKind::LambdaSweep,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.01, value_parser = nonneg_f64, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64, allow_negative_numbers = true)]
    eta: f64,
    #[arg(long, default_value_t = 200, value_parser = positive_usize)]
    iters: usize,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            eta: self.eta,
            iterations: self.iters,
        }
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: KindArg,
    #[arg(long, value_parser = positive_usize, conflicts_with = "full")]
    n: Option<usize>,
    /// Full-scale run at N=500.
    #[arg(long)]
    full: bool,
    #[arg(long, value_delimiter = ',', value_enum)]
    rules: Option<Vec<RuleArg>>,
    /// Sweep grid (β, m0, γN or λ), comma separated, strictly increasing.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    #[arg(long, default_value_t = crate::experiments::DEFAULT_TRIALS, value_parser = positive_usize)]
    trials: usize,
    #[arg(long, env = "HOPKERNEL_SEED", default_value_t = 0)]
    seed: u64,
    /// Fixed load P/N for the noise, gamma and lambda experiments.
    #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, default_value_t = 25, value_parser = positive_usize)]
    steps: usize,
    #[arg(long, default_value_t = crate::experiments::DEFAULT_MAX_PROBES, value_parser = positive_usize)]
    max_probes: usize,
    /// Cap on worker threads (default: all cores).
    #[arg(long, value_parser = positive_usize)]
    workers: Option<usize>,
    /// Results CSV; a `<out>.meta` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("expected an integer >= 1, got '{s}'")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn nonneg_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a number >= 0, got '{s}'")),
    }
}

fn overlap_value(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (-1.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [-1, 1], got '{s}'")),
    }
}

/// Validated command.
#[derive(Debug, Clone, PartialEq)]
pub enum CliConfig {
    Gen {
        n: usize,
        p: usize,
        seed: u64,
        out: PathBuf,
    },
    Train {
        patterns: PathBuf,
        rule: Rule,
        gamma: Option<f64>,
        config: TrainConfig,
        out: PathBuf,
    },
    Recall {
        model: PathBuf,
        patterns: Option<PathBuf>,
        pattern_index: usize,
        m0: f64,
        seed: u64,
        recall: RecallConfig,
        trajectory: Option<PathBuf>,
    },
    Experiment {
        spec: ExperimentSpec,
        workers: Option<usize>,
        out: Option<PathBuf>,
    },
}

/// Usage error carrying clap's rendered message (which names the flag).
#[derive(Debug)]
pub struct UsageError {
    pub message: String,
    /// `--help` / `--version` requests also surface here, with exit code 0.
    pub exit_code: i32,
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        exit_code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
    })?;
    let usage = |message: String| UsageError {
        message,
        exit_code: EXIT_USAGE,
    };
    Ok(match cli.command {
        Cmd::Gen { n, p, seed, out } => CliConfig::Gen { n, p, seed, out },
        Cmd::Train {
            patterns,
            rule,
            gamma,
            train,
            out,
        } => CliConfig::Train {
            patterns,
            rule: rule.into(),
            gamma,
            config: train.config(),
            out,
        },
        Cmd::Recall {
            model,
            patterns,
            pattern_index,
            m0,
            seed,
            steps,
            trajectory,
        } => CliConfig::Recall {
            model,
            patterns,
            pattern_index,
            m0,
            seed,
            recall: RecallConfig {
                steps,
                threshold: None,
            },
            trajectory,
        },
        Cmd::Experiment(args) => {
            let kind: ExperimentKind = args.kind.into();
            let n = if args.full {
                FULL_SCALE_N
            } else {
                args.n.unwrap_or(DESK_SCALE_N)
            };
            let mut spec = ExperimentSpec::new(kind, n);
            if let Some(rules) = args.rules {
                spec.rules = rules.into_iter().map(Rule::from).collect();
                spec.rules.sort();
                spec.rules.dedup();
            }
            if let Some(values) = args.values {
                spec.sweep_values = values;
            }
            spec.trials = args.trials;
            spec.base_seed = args.seed;
            if let Some(beta) = args.beta {
                spec.load = beta;
            }
            if let Some(g) = args.gamma {
                spec.kernel_params = Some(KernelParams::new(g).map_err(|e| usage(format!("--gamma: {e}")))?);
            }
            spec.train_config = args.train.config();
            spec.recall_config = RecallConfig {
                steps: args.steps,
                threshold: None,
            };
            spec.max_probes = args.max_probes;
            spec.validate()
                .map_err(|e| usage(format!("invalid experiment: {e}")))?;
            CliConfig::Experiment {
                spec,
                workers: args.workers,
                out: args.out,
            }
        }
    })
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        e if e.is_divergence() => EXIT_DIVERGENCE,
        Error::Domain(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Runs a validated command, printing summaries to stdout and errors to
/// stderr. Returns the process exit status.
pub fn execute(config: &CliConfig) -> i32 {
    match run(config) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(config: &CliConfig) -> crate::Result<()> {
    match config {
        CliConfig::Gen { n, p, seed, out } => {
            let set = generate_patterns(*n, *p, *seed)?;
            io::save_patterns(out, &set)?;
            println!("gen N={n} P={p} seed={seed} -> {}", out.display());
        }
        CliConfig::Train {
            patterns,
            rule,
            gamma,
            config,
            out,
        } => {
            let set = io::load_patterns(patterns)?;
            let net = match rule {
                Rule::Hebbian => Network::Weights(train_hebbian(&set)),
                Rule::Llr => Network::Weights(train_llr(&set, config)?),
                Rule::Klr => {
                    let kernel = match gamma {
                        Some(g) => KernelParams::new(*g)?,
                        None => KernelParams::for_network(set.dim()),
                    };
                    Network::kernel(train_klr(&set, kernel, config)?, set.clone())?
                }
            };
            io::save_network(out, &net)?;
            println!(
                "train rule={rule} N={} P={} -> {}",
                set.dim(),
                set.len(),
                out.display()
            );
        }
        CliConfig::Recall {
            model,
            patterns,
            pattern_index,
            m0,
            seed,
            recall,
            trajectory,
        } => {
            let net = io::load_network(model)?;
            let targets = match (patterns, &net) {
                (Some(path), _) => io::load_patterns(path)?,
                (None, Network::Kernel { stored, .. }) => stored.clone(),
                (None, Network::Weights(_)) => {
                    return Err(Error::domain(
                        "weight models need --patterns to supply the recall target",
                    ))
                }
            };
            let target = targets.get(*pattern_index).ok_or_else(|| {
                Error::domain(format!(
                    "--pattern-index {pattern_index} out of range (P={})",
                    targets.len()
                ))
            })?;
            let start = corrupt(target, *m0, *seed)?;
            let achieved = overlap(&start, target)?;
            let rec = run_recall(&net, &start, target, recall)?;
            if let Some(path) = trajectory {
                io::save_trajectory(path, &rec)?;
            }
            let converged = rec
                .converged_at
                .map(|t| t.to_string())
                .unwrap_or_else(|| "none".into());
            println!(
                "recall rule={} pattern={pattern_index} m0_requested={m0} m0_achieved={achieved} m(T)={} converged_at={converged} success={}",
                net.rule(),
                rec.final_overlap(),
                is_success(rec.final_overlap())
            );
        }
        CliConfig::Experiment { spec, workers, out } => {
            let result = run_with_workers(spec, workers.unwrap_or(0))?;
            let param = spec.kind.sweep_param();
            for row in &result.rows {
                println!(
                    "{} rule={} {param}={} trials={} success_rate={} mean_m(T)={} std_m(T)={}",
                    spec.kind,
                    row.rule,
                    row.sweep_value,
                    row.trials,
                    io::fmt_stat(row.success_rate),
                    io::fmt_stat(row.mean_final_overlap),
                    io::fmt_stat(row.std_final_overlap)
                );
            }
            match out {
                Some(path) => io::save_results(path, &result)?,
                None => print!("{}", io::results_to_csv(&result)?),
            }
        }
    }
    Ok(())
}
