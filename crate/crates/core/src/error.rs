use std::path::PathBuf;

use thiserror::Error;

use crate::data::HouseholdKind;
use crate::solver::ConeProjection;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("total expenditure p·x = {0} is not positive")]
    ZeroExpenditure(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("technology scale {value} at good {index} is not positive")]
    NonPositiveScale { index: usize, value: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("price file has no prices for period {0}")]
    MissingPeriodPrice(i64),

    #[error("negative expenditure for household {household} in period {period}")]
    NegativeExpenditure { household: String, period: i64 },

    #[error("{what}: {requested} exceeds the size cap {cap}")]
    SizeLimit {
        what: &'static str,
        requested: u128,
        cap: u64,
    },

    #[error("cone cache checksum mismatch")]
    ChecksumMismatch,

    #[error("cone cache version mismatch: {0}")]
    VersionMismatch(String),

    #[error("solver did not converge after {} sweeps (KKT residual {:.3e})", .0.iterations, .0.kkt_residual)]
    NotConverged(Box<ConeProjection>),

    #[error("no {0:?} households available")]
    EmptyPool(HouseholdKind),

    #[error("household {0} has no income")]
    MissingIncome(String),

    #[error("configuration set {0} is empty")]
    EmptyThetaSet(&'static str),

    #[error("found only {found} of {wanted} mutually similar configurations")]
    NoSimilarPairFound { found: usize, wanted: usize },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 data, 4 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::SizeLimit { .. } => 2,
            Error::NotConverged(_) => 4,
            _ => 3,
        }
    }
}
