//! Tail-robust estimation and forecasting for factor-adjusted vector
//! autoregressive (FAVAR) models.
//!
//! The estimator runs in two stages. Observations are first truncated
//! element-wise at a level chosen by cross validation, a principal component
//! factor model is fitted to the truncated panel, and the estimated common
//! component is removed. The remaining idiosyncratic series is then modelled
//! as a sparse VAR(d), estimated row by row with an ℓ1 penalty in Gram form.
//!
//! Module map:
//!
//! * [`panel`]: panel data, CSV I/O and MAD scales.
//! * [`trunc`]: element-wise truncation and cross-validated choice of τ.
//! * [`moments`]: lagged second moments and the stacked Gram system.
//! * [`factors`]: PCA factor fit and Bai–Ng factor-number selection.
//! * [`varlasso`]: coordinate-descent Lasso and λ cross validation.
//! * [`pipeline`]: the end-to-end estimator.
//! * [`simulate`]: seeded data generating processes.
//! * [`forecast`]: rolling-window forecasting.
//! * [`evaluate`]: error metrics, relative mean errors, fluctuation test.
//! * [`experiment`]: paired truncated/untruncated simulation replications.

pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod factors;
pub mod forecast;
pub mod linalg;
pub mod moments;
pub mod panel;
pub mod pipeline;
pub mod simulate;
pub mod trunc;
pub mod varlasso;

pub use error::{Error, Result};
pub use panel::{PanelSeries, ScaleVector};
pub use pipeline::{FavarFit, FitOptions};
