//! The two-stage estimator: scales, truncation level, truncation, factor
//! fit, Gram system on the idiosyncratic residual, Lasso.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result, Stage};
use crate::factors::{fit_factors, select_r, BaiNgCriterion, FactorFit, FactorNumberReport};
use crate::moments::{build_gram_values, GramSystem};
use crate::panel::{mad_scales, PanelSeries};
use crate::trunc::{build_tau_grid, cv_tau, truncate, TauCvReport, TruncationRule, DEFAULT_GRID_SIZE};
use crate::varlasso::{cv_lambda_with, fit_var_with, LambdaCvReport, LassoOptions, VarFit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauMode {
    /// A fixed level on the standardised scale; `f64::INFINITY` disables
    /// truncation.
    Fixed(f64),
    /// Grid search; `lags` defaults to the VAR order.
    Cv { grid_size: usize, lags: Option<usize> },
}

impl Default for TauMode {
    fn default() -> Self {
        TauMode::Cv {
            grid_size: DEFAULT_GRID_SIZE,
            lags: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorMode {
    /// Known number of factors; 0 skips the factor stage.
    Fixed(usize),
    Auto { r_max: usize, criterion: BaiNgCriterion },
}

impl Default for FactorMode {
    fn default() -> Self {
        FactorMode::Fixed(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Fixed(f64),
    Cv { n_lambda: usize, n_folds: usize },
}

impl Default for LambdaMode {
    fn default() -> Self {
        LambdaMode::Cv {
            n_lambda: 50,
            n_folds: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub factors: FactorMode,
    /// VAR order, at least 1.
    pub d: usize,
    pub tau: TauMode,
    pub lambda: LambdaMode,
    pub lasso: LassoOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            factors: FactorMode::default(),
            d: 1,
            tau: TauMode::default(),
            lambda: LambdaMode::default(),
            lasso: LassoOptions::default(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument("VAR order d must be at least 1".into()));
        }
        match self.tau {
            TauMode::Fixed(t) if t.is_nan() || t <= 0.0 => {
                return Err(Error::InvalidArgument(format!("tau must be positive, got {t}")))
            }
            TauMode::Cv { grid_size, .. } if grid_size < 2 => {
                return Err(Error::InvalidArgument("tau grid needs at least 2 points".into()))
            }
            _ => {}
        }
        match self.lambda {
            LambdaMode::Fixed(l) if !(l >= 0.0 && l.is_finite()) => {
                return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {l}")))
            }
            LambdaMode::Cv { n_lambda, n_folds } if n_lambda == 0 || n_folds < 2 => {
                return Err(Error::InvalidArgument(
                    "lambda CV needs n_lambda ≥ 1 and at least 2 folds".into(),
                ))
            }
            _ => {}
        }
        if let FactorMode::Auto { r_max, .. } = self.factors {
            if r_max == 0 {
                return Err(Error::InvalidArgument("r_max must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// Every intermediate of one fit.
#[derive(Debug, Clone)]
pub struct FavarFit {
    pub options: FitOptions,
    pub rule: TruncationRule,
    pub tau_cv: Option<TauCvReport>,
    pub factor_report: Option<FactorNumberReport>,
    /// `X(τ)`.
    pub truncated: PanelSeries,
    /// `None` when `r = 0`.
    pub factors: Option<FactorFit>,
    /// `ξ̂`; equals `X(τ)` when there are no factors.
    pub idio: Array2<f64>,
    pub gram: GramSystem,
    pub lambda_cv: Option<LambdaCvReport>,
    pub var: VarFit,
}

impl FavarFit {
    pub fn r(&self) -> usize {
        self.factors.as_ref().map_or(0, FactorFit::r)
    }

    pub fn tau(&self) -> f64 {
        self.rule.tau()
    }

    /// Common component `χ̂` (zero without factors).
    pub fn common(&self) -> Array2<f64> {
        match &self.factors {
            Some(f) => f.common().to_owned(),
            None => Array2::zeros(self.idio.dim()),
        }
    }

    /// `h`-step forecast from the last observation of the fitted sample.
    pub fn forecast(&self, h: usize) -> Result<crate::forecast::PointForecast> {
        crate::forecast::forecast_from_fit(self, h)
    }
}

/// Chooses the truncation rule for `x` under `mode`.
pub fn choose_rule(x: &PanelSeries, mode: TauMode, d: usize) -> Result<(TruncationRule, Option<TauCvReport>)> {
    match mode {
        TauMode::Fixed(t) if t.is_infinite() => Ok((TruncationRule::none(x.p()), None)),
        TauMode::Fixed(t) => {
            let scales = mad_scales(x).map_err(|e| e.at_stage(Stage::Scales))?;
            Ok((TruncationRule::new(t, scales)?, None))
        }
        TauMode::Cv { grid_size, lags } => {
            let scales = mad_scales(x).map_err(|e| e.at_stage(Stage::Scales))?;
            let report = build_tau_grid(x, &scales, grid_size)
                .and_then(|grid| cv_tau(x, &scales, lags.unwrap_or(d), &grid))
                .map_err(|e| e.at_stage(Stage::TauCv))?;
            let rule = TruncationRule::new(report.chosen_tau(), scales)?;
            Ok((rule, Some(report)))
        }
    }
}

pub fn fit(x: &PanelSeries, opts: &FitOptions) -> Result<FavarFit> {
    opts.validate()?;
    let (rule, tau_cv) = choose_rule(x, opts.tau, opts.d)?;
    let truncated = truncate(x, &rule).map_err(|e| e.at_stage(Stage::Truncate))?;

    let (r, factor_report) = match opts.factors {
        FactorMode::Fixed(r) => (r, None),
        FactorMode::Auto { r_max, criterion } => {
            let report = select_r(&truncated, r_max).map_err(|e| e.at_stage(Stage::Factors))?;
            (report.chosen_by(criterion), Some(report))
        }
    };
    let factors = if r == 0 {
        None
    } else {
        Some(fit_factors(&truncated, r).map_err(|e| e.at_stage(Stage::Factors))?)
    };
    let idio = match &factors {
        Some(f) => f.idio().to_owned(),
        None => truncated.values().to_owned(),
    };

    let gram = build_gram_values(idio.view(), opts.d).map_err(|e| e.at_stage(Stage::Gram))?;
    let (lambda, lambda_cv) = match opts.lambda {
        LambdaMode::Fixed(l) => (l, None),
        LambdaMode::Cv { n_lambda, n_folds } => {
            let report = cv_lambda_with(idio.view(), opts.d, n_lambda, n_folds, &opts.lasso)
                .map_err(|e| e.at_stage(Stage::LambdaCv))?;
            (report.chosen_lambda(), Some(report))
        }
    };
    let var = fit_var_with(&gram, lambda, &opts.lasso, None).map_err(|e| e.at_stage(Stage::Lasso))?;
    Ok(FavarFit {
        options: *opts,
        rule,
        tau_cv,
        factor_report,
        truncated,
        factors,
        idio,
        gram,
        lambda_cv,
        var,
    })
}

/// Per-row count of nonzeros of the fitted `𝔸̂`, and the total.
pub fn sparsity_summary(coef: ArrayView2<f64>) -> (Array1<usize>, usize) {
    let per_row = Array1::from_iter(coef.rows().into_iter().map(|r| r.iter().filter(|v| **v != 0.0).count()));
    let total = per_row.sum();
    (per_row, total)
}
