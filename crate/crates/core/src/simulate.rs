//! Seeded data generating processes for the simulation study: VAR
//! coefficient designs, innovation laws, factor blocks and noise covariances.
//!
//! Every generator draws from ChaCha20 keyed by a `u64` seed. Independent
//! pieces of one replication (coefficients, innovations, factors) use
//! separate ChaCha stream ids of the same key, so adding draws to one piece
//! never shifts another.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, spectral_radius, sym_sqrt};
use crate::panel::PanelSeries;

/// Identifier of the pseudo-random generator, recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha20 (rand_chacha 0.9, seed_from_u64, stream per component)";

pub const DEFAULT_BURN_IN: usize = 500;
/// Spectral radii at or above `1 - STABILITY_MARGIN` are rejected.
pub const STABILITY_MARGIN: f64 = 1e-9;

const STREAM_COEF: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_FACTORS: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seed for replication `index` under `master` (SplitMix64 finaliser).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarDesign {
    /// Tridiagonal: 0.5 on the diagonal, ±0.4 off it.
    Banded,
    /// Directed random graph with link probability 1/p, spectrally normalised.
    ErdosRenyi,
    /// `A = 0`.
    None,
}

/// Zero-mean, unit-variance innovation law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    Gaussian,
    StudentT { nu: f64 },
    Lognormal,
}

impl Innovation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Innovation::StudentT { nu } if !(nu > 2.0 && nu.is_finite()) => Err(Error::InvalidArgument(format!(
                "student-t degrees of freedom must exceed 2, got {nu}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Innovation::Gaussian => f.write_str("gaussian"),
            Innovation::StudentT { nu } => write!(f, "t{nu}"),
            Innovation::Lognormal => f.write_str("lognormal"),
        }
    }
}

impl FromStr for Innovation {
    type Err = Error;

    /// Accepts `gaussian`/`normal`, `lognormal`, and `t<nu>` such as `t2.1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let law = match s.as_str() {
            "gaussian" | "normal" => Innovation::Gaussian,
            "lognormal" => Innovation::Lognormal,
            _ => {
                let nu = s
                    .strip_prefix("student_t")
                    .or_else(|| s.strip_prefix('t'))
                    .map(|r| r.trim_start_matches([':', '_', '(']).trim_end_matches(')'))
                    .and_then(|r| r.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown innovation law {s:?}")))?;
                Innovation::StudentT { nu }
            }
        };
        law.validate()?;
        Ok(law)
    }
}

impl Serialize for Innovation {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Innovation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorDesign {
    /// `r` factors following a VAR(1) with loadings drawn iid N(0,1).
    Var1,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCov {
    Identity,
    /// `Σ_ij = 0.9^|i-j|`.
    PowerDecay,
}

fn default_r() -> usize {
    3
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Full description of one simulated design; also the TOML schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub n: usize,
    pub p: usize,
    pub var_design: VarDesign,
    pub innovation: Innovation,
    pub factors: FactorDesign,
    #[serde(default = "default_r")]
    pub r: usize,
    pub sigma_eps: NoiseCov,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 2 {
            return Err(Error::InvalidArgument(format!(
                "simulation needs n ≥ 2 and p ≥ 2, got n={} p={}",
                self.n, self.p
            )));
        }
        if self.burn_in < 100 {
            return Err(Error::InvalidArgument(format!("burn_in must be at least 100, got {}", self.burn_in)));
        }
        if self.factors == FactorDesign::Var1 && self.r == 0 {
            return Err(Error::InvalidArgument("factor design var1 needs r ≥ 1".into()));
        }
        self.innovation.validate()
    }

    /// Number of factors actually generated.
    pub fn n_factors(&self) -> usize {
        match self.factors {
            FactorDesign::Var1 => self.r,
            FactorDesign::None => 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("dgp spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialises")
    }
}

/// A panel together with the quantities that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    pub x: PanelSeries,
    /// True VAR(1) transition matrix of the idiosyncratic part.
    pub a: Array2<f64>,
    /// p × r loadings (zero columns when there are no factors).
    pub loadings: Array2<f64>,
    /// n × r factor paths.
    pub factors: Array2<f64>,
    /// r × r factor transition matrix.
    pub factor_transition: Array2<f64>,
    pub chi: Array2<f64>,
    pub xi: Array2<f64>,
    /// Correlated innovations `Σ^{1/2} ε_t` driving `xi`, aligned with its rows.
    pub eps: Array2<f64>,
}

/// Transition matrix for the given design.
pub fn make_a(design: VarDesign, p: usize, seed: u64) -> Result<Array2<f64>> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("VAR design needs p ≥ 2, got {p}")));
    }
    let mut a = Array2::zeros((p, p));
    match design {
        VarDesign::None => {}
        VarDesign::Banded => {
            for i in 0..p {
                a[[i, i]] = 0.5;
                if i + 1 < p {
                    // sign(i − j) with j = i + 1 above the diagonal, j = i − 1 below.
                    a[[i, i + 1]] = -0.4;
                    a[[i + 1, i]] = 0.4;
                }
            }
        }
        VarDesign::ErdosRenyi => {
            let mut rng = stream(seed, STREAM_COEF);
            let prob = 1.0 / p as f64;
            for i in 0..p {
                for j in 0..p {
                    if i != j && rng.random::<f64>() < prob {
                        a[[i, j]] = 0.275;
                    }
                }
            }
            let norm = spectral_norm(a.view());
            if norm > 0.0 {
                a /= norm;
            }
        }
    }
    Ok(a)
}

/// Errors unless the spectral radius is below one.
pub fn check_stable(a: &Array2<f64>) -> Result<f64> {
    let rho = spectral_radius(a.view());
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::Unstable { spectral_radius: rho });
    }
    Ok(rho)
}

fn fill_innovations<R: Rng>(law: Innovation, n: usize, p: usize, rng: &mut R) -> Result<Array2<f64>> {
    law.validate()?;
    let out = match law {
        Innovation::Gaussian => Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(StandardNormal)),
        Innovation::StudentT { nu } => {
            let dist = StudentT::new(nu).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let scale = (nu / (nu - 2.0)).sqrt();
            Array2::from_shape_simple_fn((n, p), || dist.sample(rng) / scale)
        }
        Innovation::Lognormal => {
            let dist = LogNormal::new(0.0, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let e = std::f64::consts::E;
            let (mean, sd) = (e.sqrt(), (e * e - e).sqrt());
            Array2::from_shape_simple_fn((n, p), || (dist.sample(rng) - mean) / sd)
        }
    };
    Ok(out)
}

/// `n × p` iid draws from the law, standardised to mean 0 and variance 1.
pub fn draw_innovations(law: Innovation, n: usize, p: usize, seed: u64) -> Result<Array2<f64>> {
    fill_innovations(law, n, p, &mut stream(seed, STREAM_NOISE))
}

/// Loadings, factor paths and factor transition of the VAR(1) factor design.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorBlock {
    pub loadings: Array2<f64>,
    pub factors: Array2<f64>,
    pub transition: Array2<f64>,
}

/// Runs `f_t = D f_{t-1} + u_t` from zero over all rows of `u` and returns
/// the rows after the first `burn_in`.
pub fn factor_path(transition: &Array2<f64>, u: &Array2<f64>, burn_in: usize) -> Array2<f64> {
    var1_path(transition, u).slice(s![burn_in.., ..]).to_owned()
}

fn var1_path(a: &Array2<f64>, innov: &Array2<f64>) -> Array2<f64> {
    let (len, k) = innov.dim();
    let mut out = Array2::zeros((len, k));
    let mut prev = Array1::zeros(k);
    for t in 0..len {
        let next = a.dot(&prev) + innov.row(t);
        out.row_mut(t).assign(&next);
        prev = next;
    }
    out
}

pub fn make_factor_block(
    n: usize,
    p: usize,
    r: usize,
    law: Innovation,
    burn_in: usize,
    seed: u64,
) -> Result<FactorBlock> {
    if r == 0 {
        return Err(Error::InvalidArgument("factor block needs r ≥ 1".into()));
    }
    let mut rng = stream(seed, STREAM_FACTORS);
    let loadings = Array2::from_shape_simple_fn((p, r), || rng.sample::<f64, _>(StandardNormal));
    let mut d0 = Array2::zeros((r, r));
    for i in 0..r {
        for j in 0..r {
            d0[[i, j]] = if i == j {
                rng.random_range(0.5..0.8)
            } else {
                rng.random_range(0.0..0.3)
            };
        }
    }
    let transition = d0.mapv(|v| 0.7 * v) / spectral_radius(d0.view());
    let u = fill_innovations(law, burn_in + n, r, &mut rng)?;
    let factors = factor_path(&transition, &u, burn_in);
    Ok(FactorBlock {
        loadings,
        factors,
        transition,
    })
}

fn power_decay(p: usize, base: f64) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| base.powi((i as i32 - j as i32).abs()))
}

fn column_variance(col: ndarray::ArrayView1<f64>) -> f64 {
    let m = col.mean().unwrap_or(0.0);
    col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64
}

/// Simulates `X_t = χ_t + ξ_t` with `ξ_t = A ξ_{t-1} + Σ^{1/2} ε_t`.
pub fn simulate_panel(spec: &DgpSpec) -> Result<SimulatedPanel> {
    spec.validate()?;
    let (n, p, burn) = (spec.n, spec.p, spec.burn_in);
    let a = make_a(spec.var_design, p, spec.seed)?;
    check_stable(&a)?;

    let mut eps = draw_innovations(spec.innovation, burn + n, p, spec.seed)?;
    if spec.sigma_eps == NoiseCov::PowerDecay {
        let root = sym_sqrt(power_decay(p, 0.9).view());
        // Rows are ε_tᵀ; the root is symmetric.
        eps = eps.dot(&root);
    }
    let xi = var1_path(&a, &eps).slice(s![burn.., ..]).to_owned();
    let eps = eps.slice(s![burn.., ..]).to_owned();

    let (loadings, factors, transition, chi) = match spec.factors {
        FactorDesign::None => (
            Array2::zeros((p, 0)),
            Array2::zeros((n, 0)),
            Array2::zeros((0, 0)),
            Array2::zeros((n, p)),
        ),
        FactorDesign::Var1 => {
            let block = make_factor_block(n, p, spec.r, spec.innovation, burn, spec.seed)?;
            let mut chi = block.factors.dot(&block.loadings.t());
            for (mut c, x) in chi.columns_mut().into_iter().zip(xi.columns()) {
                let vc = column_variance(c.view());
                if vc > 0.0 {
                    let k = (column_variance(x) / vc).sqrt();
                    c.mapv_inplace(|v| v * k);
                }
            }
            (block.loadings, block.factors, block.transition, chi)
        }
    };
    let x = PanelSeries::from_values(&chi + &xi)?;
    Ok(SimulatedPanel {
        x,
        a,
        loadings,
        factors,
        factor_transition: transition,
        chi,
        xi,
        eps,
    })
}
