use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The truncated Fock basis drops more probability mass than allowed.
    #[error("truncation tail mass {tail:.3e} exceeds threshold {threshold:.1e}; try dim >= {suggested_dim}")]
    Truncation {
        tail: f64,
        threshold: f64,
        suggested_dim: usize,
    },

    #[error("{what} = {value} is out of range ({allowed})")]
    Range {
        what: &'static str,
        value: String,
        allowed: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two states or operators live on incompatible mode spaces.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("state needs {required} amplitudes, budget is {budget}; use sequential mode instead")]
    DimensionBudget { required: u128, budget: usize },

    /// The requested measurement outcome has (numerically) zero probability.
    #[error("impossible outcome: probability {probability:.3e}")]
    ImpossibleOutcome { probability: f64 },

    #[error("power-law fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl ToString, allowed: impl ToString) -> Self {
        Error::Range {
            what,
            value: value.to_string(),
            allowed: allowed.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
