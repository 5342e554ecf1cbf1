//! Row-wise ℓ1-penalised VAR estimation in Gram form, and λ cross-validation.
//!
//! Row `j` of `𝔸̂ = [Â₁ … Â_d]` solves
//!
//! ```text
//! β̂ⱼ = argmin βᵀΓ̂β − 2βᵀγ̂ⱼ + λ|β|₁
//! ```
//!
//! by cyclic coordinate descent. The gradient of the smooth part is
//! `2(Γ̂β − γ̂ⱼ)`, so the soft-threshold level is `λ/2`, not `λ`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{gram_from_design, max_abs, stacked_design, GramSystem};
use crate::panel::PanelSeries;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Ratio between the smallest and largest λ of the CV grid.
pub const LAMBDA_MIN_RATIO: f64 = 1e-3;

/// Order in which coordinates are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Convergence threshold on the largest coordinate change per sweep.
    pub tol: f64,
    /// Maximum number of full sweeps.
    pub max_iter: usize,
    pub order: SweepOrder,
    /// Keep the objective value after every sweep.
    pub record_objective: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            order: SweepOrder::Forward,
            record_objective: false,
        }
    }
}

impl LassoOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowSolution {
    pub beta: Array1<f64>,
    pub iterations: usize,
    /// Largest KKT violation at the returned point.
    pub kkt_gap: f64,
    /// Objective after each sweep, if requested.
    pub objective_path: Vec<f64>,
}

/// `βᵀΓβ − 2βᵀγ + λ|β|₁`.
pub fn objective(gram: ArrayView2<f64>, cross: ArrayView1<f64>, lambda: f64, beta: ArrayView1<f64>) -> f64 {
    let gb = gram.dot(&beta);
    beta.dot(&gb) - 2.0 * beta.dot(&cross) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest violation of the subgradient optimality conditions.
pub fn kkt_gap(gram: ArrayView2<f64>, cross: ArrayView1<f64>, lambda: f64, beta: ArrayView1<f64>) -> f64 {
    let grad = (gram.dot(&beta) - cross) * 2.0;
    kkt_from_grad(grad.view(), beta, lambda)
}

fn kkt_from_grad(grad: ArrayView1<f64>, beta: ArrayView1<f64>, lambda: f64) -> f64 {
    grad.iter()
        .zip(beta.iter())
        .map(|(&g, &b)| {
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g + lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Solves the `j`-th row problem from a cold start.
pub fn lasso_row(g: &GramSystem, j: usize, lambda: f64, opts: &LassoOptions) -> Result<RowSolution> {
    if j >= g.dim() {
        return Err(Error::InvalidArgument(format!("row {j} outside 0..{}", g.dim())));
    }
    lasso_row_from(g.gram(), g.cross().column(j), lambda, opts, None)
}

/// Coordinate descent on one row problem, optionally warm-started.
pub fn lasso_row_from(
    gram: ArrayView2<f64>,
    cross: ArrayView1<f64>,
    lambda: f64,
    opts: &LassoOptions,
    warm: Option<ArrayView1<f64>>,
) -> Result<RowSolution> {
    opts.validate()?;
    let k = cross.len();
    if gram.dim() != (k, k) {
        return Err(Error::dims(format!("{k}x{k} Gram"), format!("{:?}", gram.dim())));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    for c in 0..k {
        if gram[[c, c]] <= 0.0 && cross[c] != 0.0 {
            return Err(Error::ZeroDiagonal { coordinate: c });
        }
    }

    let mut beta = match warm {
        Some(w) if w.len() == k => w.to_owned(),
        Some(w) => return Err(Error::dims(k, w.len())),
        None => Array1::zeros(k),
    };
    for c in 0..k {
        if gram[[c, c]] <= 0.0 {
            beta[c] = 0.0;
        }
    }
    // Γβ, updated incrementally after every coordinate move.
    let mut gb = gram.dot(&beta);
    let half = 0.5 * lambda;
    let order: Vec<usize> = match opts.order {
        SweepOrder::Forward => (0..k).collect(),
        SweepOrder::Backward => (0..k).rev().collect(),
    };
    let mut path = Vec::new();
    let objective_of = |beta: &Array1<f64>, gb: &Array1<f64>| {
        beta.dot(gb) - 2.0 * beta.dot(&cross) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };

    for sweep in 1..=opts.max_iter {
        let mut max_change = 0.0_f64;
        for &c in &order {
            let diag = gram[[c, c]];
            if diag <= 0.0 {
                continue;
            }
            let old = beta[c];
            let partial = cross[c] - (gb[c] - diag * old);
            let new = soft_threshold(partial, half) / diag;
            let delta = new - old;
            if delta != 0.0 {
                beta[c] = new;
                gb.scaled_add(delta, &gram.column(c));
                max_change = max_change.max(delta.abs());
            }
        }
        if opts.record_objective {
            path.push(objective_of(&beta, &gb));
        }
        if max_change <= opts.tol {
            // Refresh to shed accumulated rounding before certifying.
            gb = gram.dot(&beta);
            let grad = (&gb - &cross) * 2.0;
            let gap = kkt_from_grad(grad.view(), beta.view(), lambda);
            if gap <= 10.0 * opts.tol {
                return Ok(RowSolution {
                    beta,
                    iterations: sweep,
                    kkt_gap: gap,
                    objective_path: path,
                });
            }
        }
    }
    let gap = kkt_from_grad(((gram.dot(&beta) - cross) * 2.0).view(), beta.view(), lambda);
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        kkt_gap: gap,
        last_iterate: beta.to_vec(),
    })
}

/// Estimated transition matrices `𝔸̂ = [Â₁ … Â_d]` (p × pd).
#[derive(Debug, Clone, PartialEq)]
pub struct VarFit {
    coef: Array2<f64>,
    lambda: f64,
    d: usize,
    iterations: Vec<usize>,
    kkt_gaps: Vec<f64>,
}

impl VarFit {
    /// Wraps a given coefficient matrix, e.g. a known truth.
    pub fn from_coef(coef: Array2<f64>, d: usize, lambda: f64) -> Result<Self> {
        let p = coef.nrows();
        if d == 0 || coef.ncols() != p * d {
            return Err(Error::dims(format!("{p}x{}", p * d), format!("{:?}", coef.dim())));
        }
        Ok(Self {
            coef,
            lambda,
            d,
            iterations: vec![0; p],
            kkt_gaps: vec![0.0; p],
        })
    }

    pub fn coef(&self) -> ArrayView2<'_, f64> {
        self.coef.view()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.coef.nrows()
    }

    /// Lag-`l` block `Â_l` for `l` in `1..=d`.
    pub fn block(&self, l: usize) -> ArrayView2<'_, f64> {
        assert!(l >= 1 && l <= self.d, "lag {l} outside 1..={}", self.d);
        let p = self.dim();
        self.coef.slice(s![.., (l - 1) * p..l * p])
    }

    pub fn blocks(&self) -> Vec<ArrayView2<'_, f64>> {
        (1..=self.d).map(|l| self.block(l)).collect()
    }

    /// Column indices of the nonzero entries in row `j`.
    pub fn active_set(&self, j: usize) -> Vec<usize> {
        self.coef
            .row(j)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.coef.iter().filter(|v| **v != 0.0).count()
    }

    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    pub fn kkt_gaps(&self) -> &[f64] {
        &self.kkt_gaps
    }

    /// `Σ_l Â_l x_{t-l}` where `lags[l-1]` holds `x_{t-l}`.
    pub fn predict(&self, lags: &[ArrayView1<f64>]) -> Result<Array1<f64>> {
        if lags.len() != self.d {
            return Err(Error::dims(format!("{} lags", self.d), lags.len()));
        }
        let p = self.dim();
        let mut out = Array1::zeros(p);
        for (l, x) in lags.iter().enumerate() {
            if x.len() != p {
                return Err(Error::dims(p, x.len()));
            }
            out += &self.block(l + 1).dot(x);
        }
        Ok(out)
    }
}

pub fn fit_var(g: &GramSystem, lambda: f64) -> Result<VarFit> {
    fit_var_with(g, lambda, &LassoOptions::default(), None)
}

/// Fits every row in parallel; `warm` optionally supplies a p × pd start.
pub fn fit_var_with(
    g: &GramSystem,
    lambda: f64,
    opts: &LassoOptions,
    warm: Option<ArrayView2<f64>>,
) -> Result<VarFit> {
    let (p, d) = (g.dim(), g.order());
    if let Some(w) = warm {
        if w.dim() != (p, p * d) {
            return Err(Error::dims(format!("{p}x{}", p * d), format!("{:?}", w.dim())));
        }
    }
    let gram = g.gram();
    let cross = g.cross();
    let rows: Vec<RowSolution> = (0..p)
        .into_par_iter()
        .map(|j| {
            match lasso_row_from(gram, cross.column(j), lambda, opts, warm.map(|w| w.index_axis_move(Axis(0), j))) {
                // A singular Gram matrix (e.g. ξ̂ after removing factors) can leave
                // the iterate drifting along its null space after the optimality
                // conditions already hold; such iterates are accepted.
                Err(Error::NotConverged {
                    iterations,
                    kkt_gap,
                    last_iterate,
                }) if kkt_gap <= 10.0 * opts.tol => Ok(RowSolution {
                    beta: Array1::from(last_iterate),
                    iterations,
                    kkt_gap,
                    objective_path: Vec::new(),
                }),
                other => other.map_err(|e| Error::Row {
                    row: j,
                    source: Box::new(e),
                }),
            }
        })
        .collect::<Result<_>>()?;
    let mut coef = Array2::zeros((p, p * d));
    let mut iterations = Vec::with_capacity(p);
    let mut kkt_gaps = Vec::with_capacity(p);
    for (j, sol) in rows.into_iter().enumerate() {
        coef.row_mut(j).assign(&sol.beta);
        iterations.push(sol.iterations);
        kkt_gaps.push(sol.kkt_gap);
    }
    Ok(VarFit {
        coef,
        lambda,
        d,
        iterations,
        kkt_gaps,
    })
}

/// Smallest λ giving `𝔸̂ = 𝐎`.
pub fn lambda_max(g: &GramSystem) -> f64 {
    2.0 * max_abs(g.cross())
}

/// `n` log-spaced values from `hi` down to `hi · LAMBDA_MIN_RATIO`.
pub fn lambda_grid(hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("lambda grid needs at least one point".into()));
    }
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("largest lambda must be positive, got {hi}")));
    }
    if n == 1 {
        return Ok(vec![hi]);
    }
    let (a, b) = (hi.ln(), (hi * LAMBDA_MIN_RATIO).ln());
    let step = (b - a) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| (a + step * k as f64).exp()).collect();
    grid[0] = hi;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCvReport {
    /// Strictly decreasing.
    pub grid: Vec<f64>,
    /// `fold_scores[f][k]`: validation MSE of fold `f` at `grid[k]`.
    pub fold_scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
    pub chosen: usize,
}

impl LambdaCvReport {
    pub fn chosen_lambda(&self) -> f64 {
        self.grid[self.chosen]
    }
}

/// Contiguous half-open ranges splitting `0..rows` into `k` blocks.
fn fold_ranges(rows: usize, k: usize) -> Vec<(usize, usize)> {
    (0..k).map(|f| (f * rows / k, (f + 1) * rows / k)).collect()
}

fn select_rows(a: ArrayView2<f64>, lo: usize, hi: usize) -> Array2<f64> {
    let keep: Vec<usize> = (0..a.nrows()).filter(|&t| t < lo || t >= hi).collect();
    a.select(Axis(0), &keep)
}

/// Blocked time-series CV over the regression rows of the stacked VAR
/// design, scoring one-step prediction MSE on each held-out block.
pub fn cv_lambda(xi_hat: &PanelSeries, d: usize, n_lambda: usize, n_folds: usize) -> Result<LambdaCvReport> {
    cv_lambda_with(xi_hat.values(), d, n_lambda, n_folds, &LassoOptions::default())
}

pub(crate) fn cv_lambda_with(
    values: ArrayView2<f64>,
    d: usize,
    n_lambda: usize,
    n_folds: usize,
    opts: &LassoOptions,
) -> Result<LambdaCvReport> {
    if d == 0 {
        return Err(Error::InvalidArgument("VAR order d must be at least 1".into()));
    }
    if n_folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {n_folds}")));
    }
    let n = values.nrows();
    let rows = n.saturating_sub(d);
    if rows < 2 * n_folds {
        return Err(Error::InsufficientData {
            what: "lambda cross-validation rows (n − d ≥ 2·folds)",
            needed: 2 * n_folds + d,
            available: n,
        });
    }
    let (design, response) = stacked_design(values, d);
    let folds = fold_ranges(rows, n_folds);

    let full = gram_from_design(design.view(), response.view(), d)?;
    let mut systems = Vec::with_capacity(n_folds);
    for &(lo, hi) in &folds {
        let train_x = select_rows(design.view(), lo, hi);
        let train_y = select_rows(response.view(), lo, hi);
        systems.push(gram_from_design(train_x.view(), train_y.view(), d)?);
    }
    // Largest over the full data and every training fold, so the head of
    // the grid is the zero fit everywhere.
    let hi = systems.iter().map(lambda_max).fold(lambda_max(&full), f64::max);
    if hi == 0.0 {
        // All-zero data: every λ gives the zero fit.
        let grid = lambda_grid(1.0, n_lambda)?;
        return Ok(LambdaCvReport {
            fold_scores: vec![vec![0.0; grid.len()]; n_folds],
            mean_scores: vec![0.0; grid.len()],
            grid,
            chosen: 0,
        });
    }
    let grid = lambda_grid(hi, n_lambda)?;

    let fold_scores: Vec<Vec<f64>> = folds
        .par_iter()
        .zip(systems.par_iter())
        .map(|(&(lo, hi_row), sys)| -> Result<Vec<f64>> {
            let vx = design.slice(s![lo..hi_row, ..]);
            let vy = response.slice(s![lo..hi_row, ..]);
            let mut warm: Option<Array2<f64>> = None;
            let mut scores = Vec::with_capacity(grid.len());
            for &lambda in &grid {
                let fit = fit_var_with(sys, lambda, opts, warm.as_ref().map(|w| w.view()))?;
                let resid = &vy - &vx.dot(&fit.coef.t());
                scores.push(resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64);
                warm = Some(fit.coef);
            }
            Ok(scores)
        })
        .collect::<Result<_>>()?;

    let mean_scores: Vec<f64> = (0..grid.len())
        .map(|k| fold_scores.iter().map(|f| f[k]).sum::<f64>() / n_folds as f64)
        .collect();
    // Strict comparison keeps the earliest, i.e. largest, λ on ties.
    let mut chosen = 0;
    for (k, &v) in mean_scores.iter().enumerate() {
        if v < mean_scores[chosen] {
            chosen = k;
        }
    }
    Ok(LambdaCvReport {
        grid,
        fold_scores,
        mean_scores,
        chosen,
    })
}
