use thiserror::Error;

/// Errors raised by the approximation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no admissible star for node {node}: best |det V| = {best_det:.3e} below threshold {threshold:.3e}")]
    StarNotFound {
        node: usize,
        best_det: f64,
        threshold: f64,
    },

    #[error("local system ill-conditioned (estimated condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("refinement region contains no admissible coarse index")]
    EmptyOmega,

    #[error("node {0} is not assigned to any grid point")]
    UncoveredNode(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StarNotFound { .. }
                | Error::IllConditioned { .. }
                | Error::QuadratureFailure(_)
                | Error::EmptyOmega
                | Error::UncoveredNode(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
