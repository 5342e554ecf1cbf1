//! Rolling-window `h`-step forecasts.
//!
//! The common component is forecast by its best linear predictor given the
//! current truncated observation,
//!
//! ```text
//! χ̂_{t+h} = Γ̂_χ(h) Ê M̂⁻¹ Êᵀ X_t(τ),   Γ̂_χ(h) = T⁻¹ Σ_u χ̂_u χ̂_{u-h}ᵀ,
//! ```
//!
//! and the idiosyncratic component by iterating the fitted VAR on ξ̂.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result, Stage};
use crate::factors::FactorFit;
use crate::pipeline::{fit, FactorMode, FavarFit, FitOptions, TauMode};
use crate::panel::PanelSeries;
use crate::varlasso::VarFit;

#[derive(Debug, Clone, PartialEq)]
pub struct PointForecast {
    pub common: Array1<f64>,
    pub idio: Array1<f64>,
    /// `common + idio`.
    pub combined: Array1<f64>,
}

/// Best linear predictor of `χ_{t+h}` from a window factor fit and the
/// truncated observation `x_t` at the origin.
pub fn forecast_common(fit: &FactorFit, x_t: ArrayView1<f64>, h: usize) -> Result<Array1<f64>> {
    let e = fit.eigvecs();
    let mu = fit.eigvals();
    let chi = fit.common();
    let (t_len, p) = chi.dim();
    let r = fit.r();
    if x_t.len() != p {
        return Err(Error::dims(p, x_t.len()));
    }
    if t_len < h + r + 1 {
        return Err(Error::InsufficientData {
            what: "forecast window (T ≥ h + r + 1)",
            needed: h + r + 1,
            available: t_len,
        });
    }
    if let Some(bad) = mu.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::Singular(format!("factor eigenvalue {bad:e}")));
    }
    // w = Ê M̂⁻¹ Êᵀ x_t
    let z = e.t().dot(&x_t) / &mu;
    let w = e.dot(&z);
    // Γ̂_χ(h) w = T⁻¹ Σ_{u=h}^{T-1} χ̂_u (χ̂_{u-h} · w)
    let lagged = chi.slice(s![..t_len - h, ..]);
    let lead = chi.slice(s![h.., ..]);
    let weights = lagged.dot(&w);
    Ok(lead.t().dot(&weights) / t_len as f64)
}

/// Iterated VAR forecast. `recent` holds ξ̂ up to the origin in time order,
/// its last row being ξ̂_t; at least `d` rows are needed.
pub fn forecast_idio(var: &VarFit, recent: ArrayView2<f64>, h: usize) -> Result<Array1<f64>> {
    let (d, p) = (var.order(), var.dim());
    if recent.ncols() != p {
        return Err(Error::dims(p, recent.ncols()));
    }
    if recent.nrows() < d {
        return Err(Error::InsufficientData {
            what: "idiosyncratic lags at the origin",
            needed: d,
            available: recent.nrows(),
        });
    }
    // path[k] = ξ̂ at time t - d + 1 + k; forecasts are appended.
    let mut path: Vec<Array1<f64>> = recent
        .slice(s![recent.nrows() - d.., ..])
        .rows()
        .into_iter()
        .map(|r| r.to_owned())
        .collect();
    if h == 0 {
        return Ok(path[d - 1].clone());
    }
    for _ in 0..h {
        let len = path.len();
        let lags: Vec<ArrayView1<f64>> = (1..=d).map(|l| path[len - l].view()).collect();
        let next = var.predict(&lags)?;
        path.push(next);
    }
    Ok(path.pop().expect("h ≥ 1"))
}

/// `h`-step forecast from the last row of a fitted sample.
pub fn forecast_from_fit(fit: &FavarFit, h: usize) -> Result<PointForecast> {
    let n = fit.truncated.n();
    let x_t = fit.truncated.row(n - 1);
    let common = match &fit.factors {
        Some(f) => forecast_common(f, x_t, h)?,
        None => Array1::zeros(x_t.len()),
    };
    let idio = forecast_idio(&fit.var, fit.idio.view(), h)?;
    let combined = &common + &idio;
    Ok(PointForecast { common, idio, combined })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingOptions {
    /// Window length T.
    pub window: usize,
    pub horizon: usize,
    pub fit: FitOptions,
    /// Re-select r in every window instead of fixing it from the first.
    pub reselect_r: bool,
}

impl RollingOptions {
    /// The same run without truncation.
    pub fn baseline(&self) -> Self {
        Self {
            fit: FitOptions {
                tau: TauMode::Fixed(f64::INFINITY),
                ..self.fit
            },
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginFailure {
    pub origin: usize,
    pub message: String,
}

/// Forecasts over all surviving origins. Row `k` of each matrix belongs to
/// `origins[k]`, the 0-based index of the last row inside the window; the
/// target is row `origins[k] + horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub window: usize,
    pub horizon: usize,
    pub order: usize,
    /// Factor number used in every window; `None` when re-selected per window.
    pub r: Option<usize>,
    pub origins: Vec<usize>,
    pub combined: Array2<f64>,
    pub common: Array2<f64>,
    pub idio: Array2<f64>,
    pub realised: Array2<f64>,
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub failures: Vec<OriginFailure>,
}

impl ForecastRun {
    /// Absolute forecast errors `|X̂_{t+h} − X_{t+h}|`.
    pub fn abs_errors(&self) -> Array2<f64> {
        (&self.combined - &self.realised).mapv(f64::abs)
    }
}

struct OriginResult {
    point: PointForecast,
    tau: f64,
    lambda: f64,
}

fn run_origin(x: &PanelSeries, origin: usize, window: usize, h: usize, opts: &FitOptions) -> Result<OriginResult> {
    let w = x.slice_rows(origin + 1 - window, origin + 1)?;
    let f = fit(&w, opts)?;
    let point = forecast_from_fit(&f, h).map_err(|e| e.at_stage(Stage::Forecast))?;
    Ok(OriginResult {
        point,
        tau: f.tau(),
        lambda: f.var.lambda(),
    })
}

pub fn rolling_forecast(x: &PanelSeries, opts: &RollingOptions) -> Result<ForecastRun> {
    let (n, p) = (x.n(), x.p());
    let (window, h) = (opts.window, opts.horizon);
    if h == 0 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    if window < 2 {
        return Err(Error::InvalidArgument("window must hold at least 2 rows".into()));
    }
    if n < window + h {
        return Err(Error::InsufficientData {
            what: "rows for rolling forecast (n ≥ T + h)",
            needed: window + h,
            available: n,
        });
    }
    opts.fit.validate()?;
    let first = window - 1;
    let last = n - 1 - h;

    let mut fit_opts = opts.fit;
    if let (FactorMode::Auto { .. }, false) = (opts.fit.factors, opts.reselect_r) {
        let r = fit(&x.slice_rows(0, window)?, &opts.fit)?.r();
        fit_opts.factors = FactorMode::Fixed(r);
    }
    let r = match fit_opts.factors {
        FactorMode::Fixed(r) => Some(r),
        FactorMode::Auto { .. } => None,
    };

    let results: Vec<(usize, Result<OriginResult>)> = (first..=last)
        .into_par_iter()
        .map(|t| (t, run_origin(x, t, window, h, &fit_opts)))
        .collect();

    let mut origins = Vec::new();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (t, res) in results {
        match res {
            Ok(o) => {
                origins.push(t);
                rows.push(o);
            }
            Err(e) => failures.push(OriginFailure {
                origin: t,
                message: e.to_string(),
            }),
        }
    }
    let k = origins.len();
    let mut combined = Array2::zeros((k, p));
    let mut common = Array2::zeros((k, p));
    let mut idio = Array2::zeros((k, p));
    let mut realised = Array2::zeros((k, p));
    for (i, (t, o)) in origins.iter().zip(&rows).enumerate() {
        combined.row_mut(i).assign(&o.point.combined);
        common.row_mut(i).assign(&o.point.common);
        idio.row_mut(i).assign(&o.point.idio);
        realised.row_mut(i).assign(&x.row(t + h));
    }
    Ok(ForecastRun {
        window,
        horizon: h,
        order: fit_opts.d,
        r,
        origins,
        combined,
        common,
        idio,
        realised,
        taus: rows.iter().map(|o| o.tau).collect(),
        lambdas: rows.iter().map(|o| o.lambda).collect(),
        failures,
    })
}

/// Absolute errors of two runs restricted to their common origins.
pub fn aligned_errors(a: &ForecastRun, b: &ForecastRun) -> (Vec<usize>, Array2<f64>, Array2<f64>) {
    let ea = a.abs_errors();
    let eb = b.abs_errors();
    let mut keep_a = Vec::new();
    let mut keep_b = Vec::new();
    let mut origins = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.origins.len() && j < b.origins.len() {
        match a.origins[i].cmp(&b.origins[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                origins.push(a.origins[i]);
                keep_a.push(i);
                keep_b.push(j);
                i += 1;
                j += 1;
            }
        }
    }
    (
        origins,
        ea.select(ndarray::Axis(0), &keep_a),
        eb.select(ndarray::Axis(0), &keep_b),
    )
}
