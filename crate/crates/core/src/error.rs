use thiserror::Error;

/// Errors shared by all modules of the toolkit.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Metric matrix failed validation (asymmetry, triangle violation, ...).
    #[error("invalid metric space: {0}")]
    InvalidSpace(String),

    /// Measure weights inconsistent with the space or the declared total.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Plan entries inconsistent (duplicates, bad indices, marginals off).
    #[error("invalid transport plan: {0}")]
    InvalidPlan(String),

    /// Cost function failed validation (decreasing, negative, bad knots).
    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    /// Source and target measures have different total mass.
    #[error("unbalanced problem: source total {0} != target total {1}")]
    Unbalanced(f64, f64),

    /// A precondition of an operation does not hold for the given input.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Exact oracle invoked beyond the instance size it supports.
    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    /// An internal invariant was violated; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    /// Malformed input file or JSON document.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
