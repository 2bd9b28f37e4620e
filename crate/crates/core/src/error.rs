use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigenvalue iteration did not converge for index {index}")]
    EigenNoConvergence { index: usize },

    #[error("numerical failure in {context}: {reason}")]
    Numerical {
        context: &'static str,
        reason: String,
    },

    #[error(
        "sensing constraint infeasible for outdoor user {user}: best achievable {achievable:.4e}, required {required:.4e}"
    )]
    SensingInfeasible {
        user: usize,
        achievable: f64,
        required: f64,
    },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that signal an unreachable sensing requirement.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::SensingInfeasible { .. })
    }
}
