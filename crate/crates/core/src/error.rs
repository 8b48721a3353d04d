//! Error types shared by every estimator and the Monte Carlo harness.

use thiserror::Error;

/// Which side of the treatment boundary an operation was concerned with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Treated,
    Control,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Treated => write!(f, "treated"),
            Side::Control => write!(f, "control"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no usable {0} observations")]
    EmptySide(Side),

    #[error("singular weighted design: need two support points with distinct scores")]
    SingularDesign,

    #[error("argument outside the supported domain: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("not a treatment boundary point: {0}")]
    Boundary(String),

    #[error("prediction failed: {0}")]
    Prediction(String),

    #[error("boundary geometry: {0}")]
    Geometry(String),

    #[error("method not applicable: {0}")]
    Method(String),

    #[error("Monte Carlo harness: {0}")]
    Harness(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-parseable code, used as the `error[CODE]:` prefix on
    /// CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "E_DIMENSION",
            Error::Config(_) => "E_CONFIG",
            Error::EmptySide(_) => "E_EMPTY_SIDE",
            Error::SingularDesign => "E_SINGULAR_DESIGN",
            Error::Domain(_) => "E_DOMAIN",
            Error::Numerical(_) => "E_NUMERICAL",
            Error::Boundary(_) => "E_BOUNDARY",
            Error::Prediction(_) => "E_PREDICTION",
            Error::Geometry(_) => "E_GEOMETRY",
            Error::Method(_) => "E_METHOD",
            Error::Harness(_) => "E_HARNESS",
            Error::Io(_) => "E_IO",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
