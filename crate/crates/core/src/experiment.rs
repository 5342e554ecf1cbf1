//! Paired simulation experiments: each replication simulates a panel and
//! fits it twice, once with the cross-validated truncation level and once
//! without truncation, recording the estimation error of `𝔸̂` in several
//! norms.

use crate::error::Result;
use crate::evaluate::{matrix_error, rme_report, MatrixNorm, RmeReport};
use crate::pipeline::{fit, FactorMode, FitOptions, LambdaMode, TauMode};
use crate::simulate::{derive_seed, simulate_panel, DgpSpec};
use crate::trunc::DEFAULT_GRID_SIZE;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dgp: DgpSpec,
    pub reps: usize,
    pub master_seed: u64,
    /// Options of the truncated arm; the plain arm differs only in τ = ∞.
    pub fit: FitOptions,
    pub norms: Vec<MatrixNorm>,
}

impl ExperimentConfig {
    /// Known r (from the design), d = 1, τ and λ by cross validation.
    pub fn standard(dgp: DgpSpec, reps: usize, master_seed: u64) -> Self {
        let fit = FitOptions {
            factors: FactorMode::Fixed(dgp.n_factors()),
            d: 1,
            tau: TauMode::Cv {
                grid_size: DEFAULT_GRID_SIZE,
                lags: None,
            },
            lambda: LambdaMode::Cv {
                n_lambda: 50,
                n_folds: 5,
            },
            ..Default::default()
        };
        Self {
            dgp,
            reps,
            master_seed,
            fit,
            norms: vec![MatrixNorm::MaxElementwise, MatrixNorm::L2ColMax, MatrixNorm::MaxRowL2],
        }
    }

    pub fn plain_fit(&self) -> FitOptions {
        FitOptions {
            tau: TauMode::Fixed(f64::INFINITY),
            ..self.fit
        }
    }

    pub fn replication_seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    pub tau: f64,
    /// Errors of the truncated arm, one per configured norm.
    pub trunc: Vec<f64>,
    /// Errors of the untruncated arm.
    pub plain: Vec<f64>,
}

/// Runs replication `index`.
pub fn run_replication(cfg: &ExperimentConfig, index: usize) -> Result<ReplicationRecord> {
    let seed = cfg.replication_seed(index);
    let sim = simulate_panel(&cfg.dgp.with_seed(seed))?;
    let truth = sim.a.view();
    let t = fit(&sim.x, &cfg.fit)?;
    let p = fit(&sim.x, &cfg.plain_fit())?;
    let errs = |coef| -> Result<Vec<f64>> { cfg.norms.iter().map(|&n| matrix_error(coef, truth, n)).collect() };
    Ok(ReplicationRecord {
        index,
        seed,
        tau: t.tau(),
        trunc: errs(t.var.coef())?,
        plain: errs(p.var.coef())?,
    })
}

/// RME per configured norm over the given records.
pub fn summarise(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> Result<Vec<(MatrixNorm, RmeReport)>> {
    cfg.norms
        .iter()
        .enumerate()
        .map(|(k, &norm)| {
            let a: Vec<f64> = records.iter().map(|r| r.trunc[k]).collect();
            let b: Vec<f64> = records.iter().map(|r| r.plain[k]).collect();
            Ok((norm, rme_report(&a, &b)?))
        })
        .collect()
}
