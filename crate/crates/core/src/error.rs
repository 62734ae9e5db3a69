use num_complex::Complex64;
use thiserror::Error;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observation {row} is the zero vector")]
    DegenerateObservation { row: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported order {order} (supported range {min}..={max})")]
    UnsupportedOrder { order: usize, min: usize, max: usize },

    #[error("division by a series with constant term {0:e}")]
    SingularSeries(f64),

    #[error("Stieltjes solver failed at z = {z}: last residual {residual:e}")]
    SolverFailure { z: Complex64, residual: f64 },

    #[error("support resolution failed: {0}")]
    SupportResolution(String),

    #[error("invalid moment sequence: {0}")]
    InvalidMomentSequence(String),

    #[error("infeasible spectral distribution: {0}")]
    InfeasiblePsd(String),

    #[error("degenerate spectral distribution: {0}")]
    DegeneratePsd(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("moments are required through order {needed}, only {got} supplied")]
    Arity { needed: usize, got: usize },

    #[error("null variance {0:e} is degenerate")]
    DegenerateNull(f64),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Walks through stage annotations to the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures that stem from the data contradicting the
    /// hypothesised spectral order rather than from bad input.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidMomentSequence(_) | Error::InfeasiblePsd(_) | Error::DegeneratePsd(_)
        )
    }

    /// True for input or usage problems (as opposed to numerical failures).
    pub fn is_usage(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidDimension(_)
                | Error::InvalidParameter(_)
                | Error::UnknownName { .. }
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Arity { .. }
                | Error::UnsupportedOrder { .. }
                | Error::Contract(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
