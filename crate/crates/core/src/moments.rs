//! Lagged second moments and the stacked Gram system of the VAR Lasso.
//!
//! Nothing here is mean-centred: the model is zero-mean, so all estimators
//! are raw second moments. The standalone lagged moment divides by `n - h`,
//! the Gram system by `N = n - d`.

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::panel::PanelSeries;

/// Sample lagged second-moment matrix `Γ̂(h) = (n-h)⁻¹ Σ_{t>h} X_t X_{t-h}ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedMoment {
    pub lag: usize,
    pub matrix: Array2<f64>,
    pub divisor: usize,
}

pub fn autocov(x: &PanelSeries, h: usize) -> Result<LaggedMoment> {
    let n = x.n();
    if h >= n {
        return Err(Error::InsufficientData {
            what: "autocovariance lag",
            needed: h + 1,
            available: n,
        });
    }
    Ok(LaggedMoment {
        lag: h,
        matrix: lagged_moment(x.values(), h),
        divisor: n - h,
    })
}

/// `(n-h)⁻¹ Σ_{t=h}^{n-1} x_t x_{t-h}ᵀ` on raw rows. Caller guarantees `h < n`.
pub(crate) fn lagged_moment(values: ArrayView2<f64>, h: usize) -> Array2<f64> {
    let n = values.nrows();
    let lead = values.slice(s![h.., ..]);
    let lagged = values.slice(s![..n - h, ..]);
    let mut m = lead.t().dot(&lagged);
    m /= (n - h) as f64;
    if h == 0 {
        symmetrise(&mut m);
    }
    m
}

fn symmetrise(m: &mut Array2<f64>) {
    let k = m.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// The moment matrices `Γ̂ = 𝒳ᵀ𝒳/N` (pd × pd) and `γ̂ = 𝒳ᵀ𝒴/N` (pd × p)
/// feeding the row-wise Lasso.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSystem {
    gram: Array2<f64>,
    cross: Array2<f64>,
    n_eff: usize,
    d: usize,
    p: usize,
}

impl GramSystem {
    /// Builds a system from given moment matrices, e.g. from a training
    /// subset of regression rows.
    pub fn from_parts(gram: Array2<f64>, cross: Array2<f64>, n_eff: usize, d: usize) -> Result<Self> {
        let p = cross.ncols();
        if d == 0 || p == 0 {
            return Err(Error::InvalidArgument("Gram system needs d ≥ 1 and p ≥ 1".into()));
        }
        if gram.dim() != (p * d, p * d) || cross.nrows() != p * d {
            return Err(Error::dims(
                format!("Gram {0}x{0} and cross {0}x{1}", p * d, p),
                format!("Gram {:?} and cross {:?}", gram.dim(), cross.dim()),
            ));
        }
        Ok(Self {
            gram,
            cross,
            n_eff,
            d,
            p,
        })
    }

    /// `Γ̂(τ)`, the pd × pd Gram matrix.
    pub fn gram(&self) -> ArrayView2<'_, f64> {
        self.gram.view()
    }

    /// `γ̂(τ)`, the pd × p cross-moment matrix.
    pub fn cross(&self) -> ArrayView2<'_, f64> {
        self.cross.view()
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.p
    }
}

/// Lagged design `𝒳` (N × pd) and response `𝒴` (N × p). Row `k` of the
/// output corresponds to time `t = d + k` (0-based) and holds
/// `[x_{t-1}ᵀ, …, x_{t-d}ᵀ]`.
pub fn stacked_design(values: ArrayView2<f64>, d: usize) -> (Array2<f64>, Array2<f64>) {
    let (n, p) = values.dim();
    let rows = n - d;
    let mut design = Array2::zeros((rows, p * d));
    for lag in 1..=d {
        design
            .slice_mut(s![.., (lag - 1) * p..lag * p])
            .assign(&values.slice(s![d - lag..n - lag, ..]));
    }
    let response = values.slice(s![d.., ..]).to_owned();
    (design, response)
}

pub fn build_gram(xi_hat: &PanelSeries, d: usize) -> Result<GramSystem> {
    build_gram_values(xi_hat.values(), d)
}

pub(crate) fn build_gram_values(values: ArrayView2<f64>, d: usize) -> Result<GramSystem> {
    let n = values.nrows();
    if d == 0 {
        return Err(Error::InvalidArgument("VAR order d must be at least 1".into()));
    }
    if n < d + 2 {
        return Err(Error::InsufficientData {
            what: "Gram system rows (n ≥ d + 2)",
            needed: d + 2,
            available: n,
        });
    }
    let (design, response) = stacked_design(values, d);
    gram_from_design(design.view(), response.view(), d)
}

/// `Γ̂ = 𝒳ᵀ𝒳/N`, `γ̂ = 𝒳ᵀ𝒴/N` for arbitrary stacked rows.
pub fn gram_from_design(design: ArrayView2<f64>, response: ArrayView2<f64>, d: usize) -> Result<GramSystem> {
    let rows = design.nrows();
    if rows == 0 || response.nrows() != rows {
        return Err(Error::dims(format!("{rows} response rows"), response.nrows()));
    }
    let scale = 1.0 / rows as f64;
    let mut gram = design.t().dot(&design);
    gram *= scale;
    symmetrise(&mut gram);
    let mut cross = design.t().dot(&response);
    cross *= scale;
    GramSystem::from_parts(gram, cross, rows, d)
}

/// Largest entrywise absolute difference `|A − B|_∞`.
pub fn max_norm_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::dims(format!("{:?}", a.dim()), format!("{:?}", b.dim())));
    }
    Ok(a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

pub(crate) fn max_abs(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Mean of squared entries.
pub(crate) fn mean_square(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64
}
