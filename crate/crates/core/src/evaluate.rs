//! Estimation error norms, relative mean errors and the fluctuation test
//! for comparing two forecast-error paths.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::panel::median;
use crate::simulate::derive_seed;

/// Matrix norms applied to estimation errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixNorm {
    /// Largest row Euclidean norm.
    MaxRowL2,
    /// Largest absolute entry.
    MaxElementwise,
    Frobenius,
    /// Largest column Euclidean norm.
    L2ColMax,
}

impl MatrixNorm {
    pub const ALL: [MatrixNorm; 4] = [
        MatrixNorm::MaxRowL2,
        MatrixNorm::MaxElementwise,
        MatrixNorm::Frobenius,
        MatrixNorm::L2ColMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixNorm::MaxRowL2 => "max_row_l2",
            MatrixNorm::MaxElementwise => "max",
            MatrixNorm::Frobenius => "frobenius",
            MatrixNorm::L2ColMax => "l2_col_max",
        }
    }

    pub fn apply(self, a: ArrayView2<f64>) -> f64 {
        match self {
            MatrixNorm::MaxRowL2 => a
                .rows()
                .into_iter()
                .map(|r| r.dot(&r).sqrt())
                .fold(0.0, f64::max),
            MatrixNorm::MaxElementwise => a.iter().map(|v| v.abs()).fold(0.0, f64::max),
            MatrixNorm::Frobenius => a.iter().map(|v| v * v).sum::<f64>().sqrt(),
            MatrixNorm::L2ColMax => a
                .columns()
                .into_iter()
                .map(|c| c.dot(&c).sqrt())
                .fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for MatrixNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max_row_l2" | "row" => Ok(MatrixNorm::MaxRowL2),
            "max" | "max_elementwise" | "elementwise" => Ok(MatrixNorm::MaxElementwise),
            "frobenius" | "fro" => Ok(MatrixNorm::Frobenius),
            "l2_col_max" | "l2inf" | "col" => Ok(MatrixNorm::L2ColMax),
            other => Err(Error::InvalidArgument(format!("unknown matrix norm {other:?}"))),
        }
    }
}

/// `|A_hat − A|` in the given norm.
pub fn matrix_error(a_hat: ArrayView2<f64>, a: ArrayView2<f64>, norm: MatrixNorm) -> Result<f64> {
    if a_hat.dim() != a.dim() {
        return Err(Error::dims(format!("{:?}", a.dim()), format!("{:?}", a_hat.dim())));
    }
    Ok(norm.apply((&a_hat - &a).view()))
}

/// `max_i |β̂_i − β_i|₂` over the rows of `𝔸̂ − 𝔸`.
pub fn max_row_l2(a_hat: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<f64> {
    matrix_error(a_hat, a, MatrixNorm::MaxRowL2)
}

/// Ratio of sums `Σ errs_trunc / Σ errs_plain`.
pub fn rme(errs_trunc: &[f64], errs_plain: &[f64]) -> Result<f64> {
    Ok(rme_report(errs_trunc, errs_plain)?.ratio)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmeReport {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub count: usize,
}

pub fn rme_report(errs_trunc: &[f64], errs_plain: &[f64]) -> Result<RmeReport> {
    if errs_trunc.len() != errs_plain.len() {
        return Err(Error::dims(errs_plain.len(), errs_trunc.len()));
    }
    let numerator: f64 = errs_trunc.iter().sum();
    let denominator: f64 = errs_plain.iter().sum();
    if !(denominator > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(RmeReport {
        numerator,
        denominator,
        ratio: numerator / denominator,
        count: errs_trunc.len(),
    })
}

/// Per-replication errors under one norm with summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub norm: MatrixNorm,
    pub errors: Vec<f64>,
    pub mean: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
}

/// Linear-interpolation quantile of sorted data (type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl MetricReport {
    pub fn new(norm: MatrixNorm, errors: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidArgument(format!("error values must be finite and non-negative, got {bad}")));
        }
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        Ok(Self {
            norm,
            mean,
            q10: quantile_sorted(&sorted, 0.1),
            median: median(&mut sorted.clone()),
            q90: quantile_sorted(&sorted, 0.9),
            errors,
        })
    }
}

/// Population autocovariance `Γ(h) = A^h Γ(0)` of a stable VAR(1) with
/// innovation covariance `sigma`, where `Γ(0) = A Γ(0) Aᵀ + Σ`.
pub fn var1_autocov(a: ArrayView2<f64>, sigma: ArrayView2<f64>, h: usize) -> Result<Array2<f64>> {
    let p = a.nrows();
    if a.dim() != (p, p) || sigma.dim() != (p, p) {
        return Err(Error::dims(format!("{p}x{p}"), format!("{:?} and {:?}", a.dim(), sigma.dim())));
    }
    // Doubling: Γ ← Γ + Aₖ Γ Aₖᵀ, Aₖ ← Aₖ², converging quadratically.
    let mut gamma = sigma.to_owned();
    let mut ak = a.to_owned();
    for _ in 0..64 {
        let step = ak.dot(&gamma).dot(&ak.t());
        gamma += &step;
        ak = ak.dot(&ak);
        if ak.iter().all(|v| v.abs() < 1e-300) || step.iter().all(|v| v.abs() <= 1e-17 * gamma[[0, 0]].abs()) {
            break;
        }
    }
    let mut out = gamma;
    for _ in 0..h {
        out = a.dot(&out);
    }
    Ok(out)
}

/// Default significance level of the fluctuation test.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Shipped two-sided critical values of `sup_t |B(t+μ) − B(t)| / √μ`.
const CRITICAL_VALUES_CSV: &str = include_str!("../data/fluctuation_critical_values.csv");

/// Critical values of the fluctuation statistic on a grid of μ.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueTable {
    pub mus: Vec<f64>,
    pub alphas: Vec<f64>,
    /// `values[i][k]` is the `1 − alphas[k]` quantile at `mus[i]`.
    pub values: Vec<Vec<f64>>,
}

impl CriticalValueTable {
    /// The table compiled into the library.
    pub fn shipped() -> &'static CriticalValueTable {
        static TABLE: std::sync::OnceLock<CriticalValueTable> = std::sync::OnceLock::new();
        TABLE.get_or_init(|| CriticalValueTable::from_csv(CRITICAL_VALUES_CSV).expect("shipped table parses"))
    }

    /// Header `mu,<alpha>,<alpha>...`, one row per μ in increasing order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
        let alphas = headers
            .iter()
            .skip(1)
            .map(|h| h.parse::<f64>().map_err(|_| Error::Csv(format!("bad alpha header {h:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut mus = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let nums = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Csv(format!("bad number {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != alphas.len() + 1 {
                return Err(Error::Csv("critical value row has wrong width".into()));
            }
            mus.push(nums[0]);
            values.push(nums[1..].to_vec());
        }
        if mus.is_empty() || mus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Csv("critical value table needs increasing mu rows".into()));
        }
        Ok(Self { mus, alphas, values })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu");
        for a in &self.alphas {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for (mu, row) in self.mus.iter().zip(&self.values) {
            out.push_str(&format!("{mu}"));
            for v in row {
                out.push_str(&format!(",{v:.4}"));
            }
            out.push('\n');
        }
        out
    }

    /// Linear interpolation in μ for one of the tabulated levels.
    pub fn lookup(&self, mu: f64, alpha: f64) -> Result<f64> {
        let k = self
            .alphas
            .iter()
            .position(|a| (a - alpha).abs() < 1e-12)
            .ok_or_else(|| Error::InvalidArgument(format!("no critical values tabulated for alpha = {alpha}")))?;
        let (lo, hi) = (self.mus[0], *self.mus.last().unwrap());
        if !(mu >= lo && mu <= hi) {
            return Err(Error::InvalidArgument(format!("mu = {mu} outside tabulated range [{lo}, {hi}]")));
        }
        let i = self.mus.partition_point(|m| *m < mu);
        if self.mus[i] == mu || i == 0 {
            return Ok(self.values[i][k]);
        }
        let (m0, m1) = (self.mus[i - 1], self.mus[i]);
        let w = (mu - m0) / (m1 - m0);
        Ok(self.values[i - 1][k] * (1.0 - w) + self.values[i][k] * w)
    }
}

/// Two-sided critical value for window fraction `mu` from the shipped table.
pub fn critical_value(mu: f64, alpha: f64) -> Result<f64> {
    CriticalValueTable::shipped().lookup(mu, alpha)
}

/// Monte Carlo quantiles of `sup_{0≤t≤1−μ} |B(t+μ) − B(t)| / √μ` using
/// `steps` Gaussian increments per path. Path `i` draws from its own seed
/// derived from `(seed, i)`, so the result does not depend on threading.
pub fn simulate_critical_values(
    mus: &[f64],
    alphas: &[f64],
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<CriticalValueTable> {
    if paths < 10 || steps < 10 {
        return Err(Error::InvalidArgument("need at least 10 paths and 10 steps".into()));
    }
    if mus.iter().any(|m| !(*m > 0.0 && *m < 1.0)) || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::InvalidArgument("mu and alpha must lie in (0, 1)".into()));
    }
    let windows: Vec<usize> = mus
        .iter()
        .map(|m| ((m * steps as f64).round() as usize).clamp(1, steps))
        .collect();
    let dt = 1.0 / steps as f64;
    let sups: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, i as u64));
            let mut w = Vec::with_capacity(steps + 1);
            w.push(0.0);
            let mut acc = 0.0;
            for _ in 0..steps {
                acc += rng.sample::<f64, _>(StandardNormal) * dt.sqrt();
                w.push(acc);
            }
            windows
                .iter()
                .zip(mus)
                .map(|(&m, &mu)| {
                    let sup = (0..=steps - m).map(|k| (w[k + m] - w[k]).abs()).fold(0.0, f64::max);
                    sup / mu.sqrt()
                })
                .collect()
        })
        .collect();
    let values = (0..mus.len())
        .map(|j| {
            let mut col: Vec<f64> = sups.iter().map(|s| s[j]).collect();
            col.sort_by(f64::total_cmp);
            alphas.iter().map(|a| quantile_sorted(&col, 1.0 - a)).collect()
        })
        .collect();
    Ok(CriticalValueTable {
        mus: mus.to_vec(),
        alphas: alphas.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationResult {
    pub mu: f64,
    /// Window length `m = ⌊μL⌋`.
    pub window: usize,
    /// Statistic for each complete window; entry `j` covers `j..j+m`.
    pub path: Vec<f64>,
    pub critical_value: f64,
    pub reject: Vec<bool>,
    /// HAC long-run standard deviation of the loss differential.
    pub sigma: f64,
}

impl FluctuationResult {
    /// True if any window rejects equal predictive accuracy.
    pub fn any_reject(&self) -> bool {
        self.reject.iter().any(|&r| r)
    }
}

/// Bartlett-kernel long-run variance of the demeaned series with bandwidth
/// `⌊L^{1/3}⌋`.
pub fn bartlett_lrv(x: &[f64]) -> f64 {
    let l = x.len();
    let mean = x.iter().sum::<f64>() / l as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let bw = (l as f64).cbrt().floor() as usize;
    let acov = |j: usize| dev[j..].iter().zip(&dev[..l - j]).map(|(a, b)| a * b).sum::<f64>() / l as f64;
    let mut s = acov(0);
    for j in 1..=bw.min(l - 1) {
        s += 2.0 * (1.0 - j as f64 / (bw + 1) as f64) * acov(j);
    }
    s
}

/// Rolling test of equal expected loss between two forecast-error series
/// at the shipped 5% critical value.
pub fn fluctuation_test(fe_a: &[f64], fe_b: &[f64], mu: f64) -> Result<FluctuationResult> {
    fluctuation_test_at(fe_a, fe_b, mu, critical_value(mu, DEFAULT_ALPHA)?)
}

/// As [`fluctuation_test`] with an explicit critical value.
pub fn fluctuation_test_at(fe_a: &[f64], fe_b: &[f64], mu: f64, crit: f64) -> Result<FluctuationResult> {
    if fe_a.len() != fe_b.len() {
        return Err(Error::dims(fe_a.len(), fe_b.len()));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidArgument(format!("mu must lie in (0, 1), got {mu}")));
    }
    let l = fe_a.len();
    let needed = (2.0 / mu).ceil() as usize;
    let m = (mu * l as f64).floor() as usize;
    if l < needed || m < 2 {
        return Err(Error::InsufficientData {
            what: "loss differentials (L ≥ ⌈2/μ⌉)",
            needed: needed.max(l + 1),
            available: l,
        });
    }
    let diff: Vec<f64> = fe_a.iter().zip(fe_b).map(|(a, b)| a - b).collect();
    let windows = l - m + 1;
    if diff.iter().all(|&d| d == 0.0) {
        return Ok(FluctuationResult {
            mu,
            window: m,
            path: vec![0.0; windows],
            critical_value: crit,
            reject: vec![false; windows],
            sigma: 0.0,
        });
    }
    let lrv = bartlett_lrv(&diff);
    if !(lrv > 0.0) {
        return Err(Error::NonPositiveVariance(lrv));
    }
    let sigma = lrv.sqrt();
    let scale = 1.0 / (sigma * (m as f64).sqrt());
    // Direct sums per window; a running sum would drift over long paths.
    let path: Vec<f64> = (0..windows)
        .map(|j| diff[j..j + m].iter().sum::<f64>() * scale)
        .collect();
    let reject = path.iter().map(|s| s.abs() > crit).collect();
    Ok(FluctuationResult {
        mu,
        window: m,
        path,
        critical_value: crit,
        reject,
        sigma,
    })
}
