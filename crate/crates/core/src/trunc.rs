//! Element-wise truncation and cross-validated selection of the level τ.
//!
//! The level τ lives on the standardised scale; variable `i` is clipped at
//! `τᵢ = σ̂ᵢ · τ` on the raw scale.

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{lagged_moment, max_norm_diff};
use crate::panel::{median, PanelSeries, ScaleVector};

/// Default number of grid points.
pub const DEFAULT_GRID_SIZE: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRule {
    tau: f64,
    scales: ScaleVector,
}

impl TruncationRule {
    /// `tau` may be `f64::INFINITY` for no truncation.
    pub fn new(tau: f64, scales: ScaleVector) -> Result<Self> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(Error::InvalidArgument(format!("truncation level must be positive, got {tau}")));
        }
        Ok(Self { tau, scales })
    }

    /// The identity rule (τ = ∞) with unit scales.
    pub fn none(p: usize) -> Self {
        Self {
            tau: f64::INFINITY,
            scales: ScaleVector::unit(p),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn scales(&self) -> &ScaleVector {
        &self.scales
    }

    pub fn is_identity(&self) -> bool {
        self.tau.is_infinite()
    }

    /// Per-variable thresholds τᵢ = σ̂ᵢ τ on the raw scale.
    pub fn thresholds(&self) -> Vec<f64> {
        self.scales.as_slice().iter().map(|s| s * self.tau).collect()
    }

    /// Truncates a single observation vector in place.
    pub fn apply_row(&self, row: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        for (v, s) in row.iter_mut().zip(self.scales.as_slice()) {
            *v = clip(*v, *s, self.tau);
        }
    }
}

#[inline]
fn clip(x: f64, sigma: f64, tau: f64) -> f64 {
    // Compared on the standardised scale so that τ = max |x/σ| clips nothing.
    if (x / sigma).abs() > tau {
        x.signum() * sigma * tau
    } else {
        x
    }
}

pub(crate) fn truncate_values(values: ArrayView2<f64>, scales: &[f64], tau: f64) -> Array2<f64> {
    let mut out = values.to_owned();
    if tau.is_infinite() {
        return out;
    }
    for (mut col, &sigma) in out.columns_mut().into_iter().zip(scales) {
        col.mapv_inplace(|v| clip(v, sigma, tau));
    }
    out
}

/// `X_it(τ) = sign(X_it) · min(τᵢ, |X_it|)`.
pub fn truncate(x: &PanelSeries, rule: &TruncationRule) -> Result<PanelSeries> {
    if rule.scales.len() != x.p() {
        return Err(Error::dims(format!("{} scales", x.p()), rule.scales.len()));
    }
    x.with_values(truncate_values(x.values(), rule.scales.as_slice(), rule.tau))
}

/// Equi-spaced candidate levels τ₁ < … < τ_J.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    values: Vec<f64>,
}

impl TauGrid {
    pub fn from_endpoints(lo: f64, hi: f64, j: usize) -> Result<Self> {
        if j < 2 {
            return Err(Error::InvalidArgument(format!("grid size must be at least 2, got {j}")));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::DegenerateGrid { value: hi });
        }
        let step = (hi - lo) / (j - 1) as f64;
        let mut values: Vec<f64> = (0..j).map(|k| lo + step * k as f64).collect();
        values[j - 1] = hi;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Grid from the pooled median to the pooled maximum of `|X_it / σ̂ᵢ|`.
pub fn build_tau_grid(x: &PanelSeries, s: &ScaleVector, j: usize) -> Result<TauGrid> {
    if s.len() != x.p() {
        return Err(Error::dims(format!("{} scales", x.p()), s.len()));
    }
    let mut pooled: Vec<f64> = Vec::with_capacity(x.n() * x.p());
    for (col, sigma) in x.values().columns().into_iter().zip(s.as_slice()) {
        pooled.extend(col.iter().map(|v| (v / sigma).abs()));
    }
    let hi = pooled.iter().copied().fold(0.0, f64::max);
    let lo = median(&mut pooled);
    if hi <= lo {
        return Err(Error::DegenerateGrid { value: lo });
    }
    TauGrid::from_endpoints(lo, hi, j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauCvReport {
    pub grid: TauGrid,
    pub scores: Vec<f64>,
    pub chosen: usize,
}

impl TauCvReport {
    pub fn chosen_tau(&self) -> f64 {
        self.grid.values[self.chosen]
    }
}

/// Two-fold CV score for each grid point: for the halves 𝓘₁, 𝓘₂,
///
/// `CV(τ) = max_{0≤h≤d} |Γ̂₁(τ,h) − Γ̂₂(∞,h)|_∞ + |Γ̂₂(τ,h) − Γ̂₁(∞,h)|_∞`.
///
/// Ties go to the largest τ.
pub fn cv_tau(x: &PanelSeries, s: &ScaleVector, d: usize, grid: &TauGrid) -> Result<TauCvReport> {
    let n = x.n();
    if s.len() != x.p() {
        return Err(Error::dims(format!("{} scales", x.p()), s.len()));
    }
    if n < 2 * (d + 1) {
        return Err(Error::InsufficientData {
            what: "tau cross-validation folds (n ≥ 2(d+1))",
            needed: 2 * (d + 1),
            available: n,
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty tau grid".into()));
    }
    let half = n / 2;
    let values = x.values();
    let fold1 = values.slice(s![..half, ..]);
    let fold2 = values.slice(s![half.., ..]);
    let raw1: Vec<Array2<f64>> = (0..=d).map(|h| lagged_moment(fold1, h)).collect();
    let raw2: Vec<Array2<f64>> = (0..=d).map(|h| lagged_moment(fold2, h)).collect();
    let sigma = s.as_slice();

    let scores: Vec<f64> = grid
        .values()
        .par_iter()
        .map(|&tau| {
            let t1 = truncate_values(fold1, sigma, tau);
            let t2 = truncate_values(fold2, sigma, tau);
            (0..=d)
                .map(|h| {
                    let a = lagged_moment(t1.view(), h);
                    let b = lagged_moment(t2.view(), h);
                    max_norm_diff(a.view(), raw2[h].view()).unwrap()
                        + max_norm_diff(b.view(), raw1[h].view()).unwrap()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let mut chosen = 0;
    for (k, &v) in scores.iter().enumerate() {
        if v <= scores[chosen] {
            chosen = k;
        }
    }
    Ok(TauCvReport {
        grid: grid.clone(),
        scores,
        chosen,
    })
}
