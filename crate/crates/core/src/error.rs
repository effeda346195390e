use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while loading, analyzing or designing a network.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    /// A document or argument violates a model invariant. `field` names the
    /// offending entry, e.g. `edges[2].length` or `nodes[id=5]`.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("not a connected Laplacian spectrum: smallest eigenvalue {smallest:e} is not zero")]
    NotLaplacian { smallest: f64 },

    #[error("eigenvalue routes disagree at index {index}: symmetric route {symmetric:e}, general route {general:e}")]
    RouteDisagreement {
        index: usize,
        symmetric: f64,
        general: f64,
    },

    #[error("spectrum is not real: eigenvalue {re:e}{im:+e}i")]
    ComplexSpectrum { re: f64, im: f64 },

    #[error("{algorithm} did not converge after {iterations} iterations")]
    NoConvergence {
        algorithm: &'static str,
        iterations: usize,
    },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("assumption violated: L^-1 R has eigenvalue {re:e}{im:+e}i (all eigenvalues must be real and positive)")]
    Assumption1 { re: f64, im: f64 },

    #[error("unreachable target: {0}")]
    UnreachableTarget(String),

    #[error("infeasible allocation bounds: lower bounds sum to {lower_sum:e} > budget {budget:e}")]
    InfeasibleBounds { lower_sum: f64, budget: f64 },
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input (files, flags, preconditions) as
    /// opposed to numerical failures inside a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Parse(_)
                | Error::Validation { .. }
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::UnreachableTarget(_)
                | Error::InfeasibleBounds { .. }
        )
    }
}
