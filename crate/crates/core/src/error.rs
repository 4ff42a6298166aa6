//! Error type shared across the crate.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Polynomial degree outside the supported range (must be >= 1).
    InvalidDegree { degree: usize },
    /// Interpolation nodes coincide or are out of order.
    DegenerateNodes { detail: String },
    /// Vector/matrix size disagreement.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// Point fails its manifold membership predicate (e.g. quaternion norm).
    Membership { norm: f64 },
    /// Tangent vector outside the chart's injectivity radius.
    InjectivityRadius { magnitude: f64, limit: f64 },
    /// Parameter outside its documented range.
    InvalidParameter { name: &'static str, value: f64 },
    /// Chart or problem assembly failed; `phase` names the offending phase
    /// when one exists.
    Construction {
        phase: Option<usize>,
        reason: String,
    },
    /// Evaluation outside a function's domain (query time, sqrt argument, ...).
    Domain { reason: String },
    /// A user callback produced a non-finite value at a solver iterate.
    PoisonedEvaluation { outer_iter: usize, detail: String },
    /// Benchmark name not present in the registry.
    UnknownProblem { name: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDegree { degree } => {
                write!(f, "invalid polynomial degree {degree} (must be >= 1)")
            }
            Error::DegenerateNodes { detail } => write!(f, "degenerate nodes: {detail}"),
            Error::DimensionMismatch {
                context,
                expected,
                got,
            } => write!(f, "dimension mismatch in {context}: expected {expected}, got {got}"),
            Error::Membership { norm } => {
                write!(f, "point violates manifold membership (norm {norm})")
            }
            Error::InjectivityRadius { magnitude, limit } => write!(
                f,
                "tangent magnitude {magnitude} exceeds injectivity radius {limit}"
            ),
            Error::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} outside valid range")
            }
            Error::Construction { phase, reason } => match phase {
                Some(p) => write!(f, "construction failed at phase {p}: {reason}"),
                None => write!(f, "construction failed: {reason}"),
            },
            Error::Domain { reason } => write!(f, "domain error: {reason}"),
            Error::PoisonedEvaluation { outer_iter, detail } => write!(
                f,
                "non-finite evaluation at outer iteration {outer_iter}: {detail}"
            ),
            Error::UnknownProblem { name } => write!(f, "unknown problem '{name}'"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
