use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (e.g. negative `s`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A ratio or integrand evaluated to a non-finite number.
    #[error("non-finite evaluation at x={x:?}, s={s}: {what}")]
    Evaluation { x: [f64; 2], s: f64, what: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Function/field does not belong to the mesh it is used with.
    #[error("structural mismatch: {0}")]
    Structure(String),

    /// A user supplied callback failed its construction-time checks.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("mesh parse error on line {line}: {message}")]
    MeshParse { line: usize, message: String },

    /// The fibering map of a direction does not have exactly one root on
    /// the requested branch.
    #[error("projection onto the {branch} branch failed at lambda={lambda}: {count} roots found")]
    Projection {
        branch: String,
        lambda: f64,
        count: usize,
    },

    /// The problem data violate the structural hypotheses.
    #[error("hypotheses not satisfied: {0}")]
    Hypothesis(String),

    #[error("minimization stagnated after {iterations} iterations (residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
