//! Argument parsing, config-file merging and dispatch.
//!
//! A config file is a flat TOML table whose keys are long flag names, e.g.
//! `window = 120` or `tau-cv = true`. Its entries are spliced in right after
//! the subcommand, so flags given on the command line take precedence.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use tfavar::error::Error;
use tfavar::factors::BaiNgCriterion;
use tfavar::pipeline::{FactorMode, FitOptions, LambdaMode, TauMode};
use tfavar::trunc::DEFAULT_GRID_SIZE;
use tfavar::varlasso::{LassoOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub enum Failure {
    Usage(clap::Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "argument" => 2,
        "io" => 3,
        "input" => 4,
        "data" => 5,
        "numerical" => 6,
        _ => 1,
    }
}

#[derive(Debug, Parser)]
#[command(name = "tfavar", version, about = "Tail-robust factor-adjusted VAR estimation and forecasting")]
struct Cli {
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Flat TOML file of flag defaults for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate panels from a DGP specification.
    Simulate(SimulateArgs),
    /// Fit the model to a panel.
    Estimate(EstimateArgs),
    /// Rolling-window forecasts.
    Forecast(ForecastArgs),
    /// Relative mean errors or fluctuation tests on error files.
    Evaluate(EvaluateArgs),
    /// Cross-validation scores over the truncation grid.
    CvTau(CvTauArgs),
    /// Paired truncated/untruncated simulation study for one design.
    Experiment(ExperimentArgs),
    /// Simulate critical values of the fluctuation test.
    CriticalValues(CriticalValuesArgs),
}

const SUBCOMMANDS: [&str; 7] = [
    "simulate",
    "estimate",
    "forecast",
    "evaluate",
    "cv-tau",
    "experiment",
    "critical-values",
];

/// Model knobs shared by the fitting subcommands.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    /// Number of factors, or `auto` for Bai–Ng selection.
    #[arg(long, visible_alias = "factors")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,

    /// Largest factor number considered by `--r auto`.
    #[arg(long, default_value_t = 8)]
    pub r_max: usize,

    /// Criterion for `--r auto`: icp1, icp2 or icp3.
    #[arg(long, default_value = "icp2")]
    pub criterion: String,

    /// VAR order.
    #[arg(long, visible_alias = "order", default_value_t = 1)]
    pub d: usize,

    /// Fixed truncation level on the standardised scale (`inf` disables).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,

    /// Select τ by cross validation (the default when `--tau` is absent).
    #[arg(long)]
    pub tau_cv: bool,

    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub tau_grid_size: usize,

    /// Largest lag in the τ cross-validation score (defaults to `--d`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_lags: Option<usize>,

    /// Fixed Lasso penalty.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,

    /// Select λ by blocked cross validation (the default when `--lambda` is absent).
    #[arg(long)]
    pub lambda_cv: bool,

    #[arg(long, default_value_t = 50)]
    pub n_lambda: usize,

    #[arg(long, default_value_t = 5)]
    pub folds: usize,

    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

impl ModelArgs {
    pub fn fit_options(&self, default_r: usize) -> Result<FitOptions, Error> {
        let factors = match self.r.as_deref() {
            None => FactorMode::Fixed(default_r),
            Some("auto") => FactorMode::Auto {
                r_max: self.r_max,
                criterion: self.criterion.parse::<BaiNgCriterion>()?,
            },
            Some(s) => FactorMode::Fixed(
                s.parse()
                    .map_err(|_| Error::InvalidArgument(format!("--r expects a count or `auto`, got {s:?}")))?,
            ),
        };
        let tau = match self.tau {
            Some(t) => TauMode::Fixed(t),
            None => TauMode::Cv {
                grid_size: self.tau_grid_size,
                lags: self.cv_lags,
            },
        };
        let lambda = match self.lambda {
            Some(l) => LambdaMode::Fixed(l),
            None => LambdaMode::Cv {
                n_lambda: self.n_lambda,
                n_folds: self.folds,
            },
        };
        let opts = FitOptions {
            factors,
            d: self.d,
            tau,
            lambda,
            lasso: LassoOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                ..Default::default()
            },
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    /// DGP specification (TOML).
    #[arg(long)]
    pub dgp: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Master seed; replication seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct EstimateArgs {
    /// Panel CSV (rows are time points).
    #[arg(long)]
    pub input: PathBuf,
    /// The input has no header row.
    #[arg(long)]
    pub no_header: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct ForecastArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub no_header: bool,
    /// Rolling window length T.
    #[arg(long, default_value_t = 120)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    /// Also run the untruncated forecasts.
    #[arg(long)]
    pub baseline: bool,
    /// Re-select r in every window rather than fixing it from the first.
    #[arg(long)]
    pub reselect_r: bool,
    /// Choose τ once on the first window and reuse it at every origin.
    #[arg(long)]
    pub fixed_tau: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    /// `rme` or `fluctuation`.
    #[arg(long, default_value = "rme")]
    pub metric: String,
    /// Errors of the truncated method (or first forecaster).
    #[arg(long)]
    pub a: PathBuf,
    /// Errors of the baseline (or second forecaster).
    #[arg(long)]
    pub b: PathBuf,
    /// Norm column to use for `rme`, e.g. `max` or `l2_col_max`.
    #[arg(long, default_value = "max")]
    pub norm: String,
    /// Row label for the printed table line.
    #[arg(long, default_value = "")]
    pub label: String,
    /// Window fraction of the fluctuation test.
    #[arg(long, default_value_t = 0.3)]
    pub mu: f64,
    /// Write SVG plots of the fluctuation paths.
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct CvTauArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub no_header: bool,
    /// Largest lag in the score.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub dgp: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated norms for the errors of `𝔸̂`.
    #[arg(long, default_value = "max,l2_col_max,max_row_l2")]
    pub norms: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true)]
pub struct CriticalValuesArgs {
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 20100)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Finds `--config` in the raw arguments and splices its entries in after
/// the subcommand name.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>, Error> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: PathBuf::from(&path),
        source,
    })?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {path}: {e}")))?;
    let mut injected = Vec::new();
    for (key, value) in table {
        let flag = format!("--{key}");
        match value {
            toml::Value::Boolean(true) => injected.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => injected.extend([flag, s]),
            toml::Value::Integer(i) => injected.extend([flag, i.to_string()]),
            toml::Value::Float(f) => injected.extend([flag, format!("{f:?}")]),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "config key {key:?} must be a scalar, got {other}"
                )))
            }
        }
    }
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

pub fn run(argv: Vec<String>) -> Result<(), Failure> {
    let argv = merge_config(argv)?;
    let cli = Cli::try_parse_from(&argv).map_err(Failure::Usage)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let ctx = output::Context {
        argv,
        threads: rayon::current_num_threads(),
    };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Estimate(a) => commands::estimate(&ctx, &a),
        Command::Forecast(a) => commands::forecast(&ctx, &a),
        Command::Evaluate(a) => commands::evaluate(&ctx, &a),
        Command::CvTau(a) => commands::cv_tau(&ctx, &a),
        Command::Experiment(a) => commands::experiment(&ctx, &a),
        Command::CriticalValues(a) => commands::critical_values(&ctx, &a),
    }
    .map_err(Failure::Run)
}
