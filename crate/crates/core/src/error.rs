use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Named stages of the two-stage estimator, used to tag wrapped errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Scales,
    TauCv,
    Truncate,
    Factors,
    Gram,
    LambdaCv,
    Lasso,
    Forecast,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Scales => "scales",
            Stage::TauCv => "tau-cv",
            Stage::Truncate => "truncate",
            Stage::Factors => "factors",
            Stage::Gram => "gram",
            Stage::LambdaCv => "lambda-cv",
            Stage::Lasso => "lasso",
            Stage::Forecast => "forecast",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("empty input: no data rows")]
    EmptyInput,

    #[error("cannot parse value {value:?} at row {row}, column {column}")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite value {value:?} at row {row}, column {column}")]
    NonFinite {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("median absolute deviation is zero in column {column:?}")]
    ZeroScale { column: String },

    #[error("degenerate truncation grid: median and maximum standardised magnitude coincide ({value})")]
    DegenerateGrid { value: f64 },

    #[error("insufficient data for {what}: need {needed}, have {available}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("rank deficient second moment: eigenvalue {index} is {value:e}")]
    RankDeficient { index: usize, value: f64 },

    #[error("zero Gram diagonal at coordinate {coordinate} with nonzero cross moment")]
    ZeroDiagonal { coordinate: usize },

    #[error("lasso did not converge in {iterations} sweeps (KKT gap {kkt_gap:e})")]
    NotConverged {
        iterations: usize,
        kkt_gap: f64,
        last_iterate: Vec<f64>,
    },

    #[error("unstable VAR design: spectral radius {spectral_radius}")]
    Unstable { spectral_radius: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("zero denominator in relative mean error")]
    ZeroDenominator,

    #[error("long-run variance estimate is not positive ({0:e})")]
    NonPositiveVariance(f64),

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn dims(expected: impl fmt::Display, found: impl fmt::Display) -> Error {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Short machine-readable category, used by the CLI and the C API.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_)
            | Error::EmptyInput
            | Error::Parse { .. }
            | Error::NonFinite { .. }
            | Error::Ragged { .. } => "input",
            Error::DimensionMismatch { .. } | Error::InvalidArgument(_) => "argument",
            Error::ZeroScale { .. }
            | Error::DegenerateGrid { .. }
            | Error::InsufficientData { .. } => "data",
            Error::RankDeficient { .. }
            | Error::ZeroDiagonal { .. }
            | Error::NotConverged { .. }
            | Error::Unstable { .. }
            | Error::Singular(_)
            | Error::ZeroDenominator
            | Error::NonPositiveVariance(_) => "numerical",
            Error::Row { source, .. } | Error::Stage { source, .. } => source.category(),
        }
    }

    /// Innermost stage tag, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            Error::Row { source, .. } => source.stage(),
            _ => None,
        }
    }
}
