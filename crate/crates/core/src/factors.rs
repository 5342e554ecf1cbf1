//! Principal component factor estimation and Bai–Ng factor-number selection.
//!
//! With `Γ̂ = n⁻¹ Σ X_t X_tᵀ` (truncated data, no centring) and its leading
//! `r` eigenpairs `(M̂, Ê)`:
//!
//! ```text
//! Λ̂ = Ê M̂^{1/2},   F̂_t = M̂^{-1/2} Êᵀ X_t,   χ̂_t = Ê Êᵀ X_t,   ξ̂_t = X_t − χ̂_t
//! ```

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::moments::{lagged_moment, mean_square};
use crate::panel::PanelSeries;

/// Eigenvalue floor below which the `r`-th component is treated as absent.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorFit {
    eigvals: Array1<f64>,
    eigvecs: Array2<f64>,
    loadings: Array2<f64>,
    factors: Array2<f64>,
    common: Array2<f64>,
    idio: Array2<f64>,
}

impl FactorFit {
    pub fn r(&self) -> usize {
        self.eigvals.len()
    }

    /// Leading eigenvalues (diagonal of M̂), descending.
    pub fn eigvals(&self) -> ArrayView1<'_, f64> {
        self.eigvals.view()
    }

    /// p × r orthonormal eigenvectors Ê.
    pub fn eigvecs(&self) -> ArrayView2<'_, f64> {
        self.eigvecs.view()
    }

    /// p × r loadings Λ̂.
    pub fn loadings(&self) -> ArrayView2<'_, f64> {
        self.loadings.view()
    }

    /// n × r factor paths F̂ (row t is F̂_tᵀ).
    pub fn factors(&self) -> ArrayView2<'_, f64> {
        self.factors.view()
    }

    /// n × p common component χ̂.
    pub fn common(&self) -> ArrayView2<'_, f64> {
        self.common.view()
    }

    /// n × p idiosyncratic component ξ̂.
    pub fn idio(&self) -> ArrayView2<'_, f64> {
        self.idio.view()
    }
}

pub fn fit_factors(x_trunc: &PanelSeries, r: usize) -> Result<FactorFit> {
    let (n, p) = (x_trunc.n(), x_trunc.p());
    if r == 0 || r > n.min(p) {
        return Err(Error::InvalidArgument(format!(
            "factor number must lie in 1..={}, got {r}",
            n.min(p)
        )));
    }
    let x = x_trunc.values();
    let second = lagged_moment(x, 0);
    let (vals, vecs) = sym_eigen_desc(second.view());
    let floor = RANK_TOL * vals[0].max(1.0);
    if !(vals[r - 1] > floor) {
        return Err(Error::RankDeficient {
            index: r,
            value: vals[r - 1],
        });
    }
    let eigvals = vals.slice(s![..r]).to_owned();
    let eigvecs = vecs.slice(s![.., ..r]).to_owned();

    let scores = x.dot(&eigvecs); // n × r, row t = Êᵀ X_t
    let common = scores.dot(&eigvecs.t());
    let idio = &x - &common;

    let mut loadings = eigvecs.clone();
    let mut factors = scores;
    for (j, &mu) in eigvals.iter().enumerate() {
        let root = mu.sqrt();
        loadings.column_mut(j).mapv_inplace(|v| v * root);
        factors.column_mut(j).mapv_inplace(|v| v / root);
    }
    Ok(FactorFit {
        eigvals,
        eigvecs,
        loadings,
        factors,
        common,
        idio,
    })
}

/// Splits a new observation into `ÊÊᵀx` and the remainder.
pub fn project_common(fit: &FactorFit, x_new: ArrayView1<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
    if x_new.len() != fit.eigvecs.nrows() {
        return Err(Error::dims(fit.eigvecs.nrows(), x_new.len()));
    }
    let common = fit.eigvecs.dot(&fit.eigvecs.t().dot(&x_new));
    let idio = &x_new - &common;
    Ok((common, idio))
}

/// The three penalties of Bai and Ng (2002) for `k = 1` factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaiNgCriterion {
    Icp1,
    Icp2,
    Icp3,
}

impl BaiNgCriterion {
    pub const ALL: [BaiNgCriterion; 3] = [Self::Icp1, Self::Icp2, Self::Icp3];

    pub fn penalty(self, n: usize, p: usize) -> f64 {
        let (nf, pf) = (n as f64, p as f64);
        let m = nf.min(pf);
        match self {
            Self::Icp1 => (nf + pf) / (nf * pf) * (nf * pf / (nf + pf)).ln(),
            Self::Icp2 => (nf + pf) / (nf * pf) * m.ln(),
            Self::Icp3 => m.ln() / m,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Icp1 => 0,
            Self::Icp2 => 1,
            Self::Icp3 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Icp1 => "ICp1",
            Self::Icp2 => "ICp2",
            Self::Icp3 => "ICp3",
        }
    }
}

impl std::str::FromStr for BaiNgCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "icp1" | "1" => Ok(Self::Icp1),
            "icp2" | "2" => Ok(Self::Icp2),
            "icp3" | "3" => Ok(Self::Icp3),
            _ => Err(Error::InvalidArgument(format!("unknown Bai–Ng criterion {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorNumberReport {
    pub r_max: usize,
    /// `V(k)` for `k = 0..=r_max`.
    pub residual_variance: Vec<f64>,
    /// `log V(k) + k·g(n,p)` per criterion, indexed like [`BaiNgCriterion::ALL`].
    pub criteria: [Vec<f64>; 3],
    pub chosen: [usize; 3],
}

impl FactorNumberReport {
    pub fn chosen_by(&self, c: BaiNgCriterion) -> usize {
        self.chosen[c.index()]
    }
}

/// Minimises the three criteria over `k = 0..=r_max`, with `V(0)` the mean
/// square of the data.
pub fn select_r(x_trunc: &PanelSeries, r_max: usize) -> Result<FactorNumberReport> {
    let (n, p) = (x_trunc.n(), x_trunc.p());
    if r_max == 0 || 2 * r_max > n.min(p) {
        return Err(Error::InvalidArgument(format!(
            "r_max must lie in 1..={}, got {r_max}",
            n.min(p) / 2
        )));
    }
    let x = x_trunc.values();
    let (_, vecs) = sym_eigen_desc(lagged_moment(x, 0).view());
    let mut v = Vec::with_capacity(r_max + 1);
    v.push(mean_square(x));
    for k in 1..=r_max {
        let e = vecs.slice(s![.., ..k]);
        let resid = &x - &x.dot(&e).dot(&e.t());
        v.push(mean_square(resid.view()));
    }
    let mut criteria: [Vec<f64>; 3] = Default::default();
    let mut chosen = [0usize; 3];
    for c in BaiNgCriterion::ALL {
        let g = c.penalty(n, p);
        let ic: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(k, vk)| vk.max(f64::MIN_POSITIVE).ln() + k as f64 * g)
            .collect();
        let mut best = 0;
        for (k, val) in ic.iter().enumerate() {
            if *val < ic[best] {
                best = k;
            }
        }
        chosen[c.index()] = best;
        criteria[c.index()] = ic;
    }
    Ok(FactorNumberReport {
        r_max,
        residual_variance: v,
        criteria,
        chosen,
    })
}
