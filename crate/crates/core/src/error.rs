use thiserror::Error;

pub type Result<T, E = AdError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("non-finite value {value} supplied as {what}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("domain violation in `{op}` at argument {arg}")]
    Domain { op: &'static str, arg: f64 },

    #[error("division by zero")]
    DivisionByZero,

    #[error("operands recorded on different tapes")]
    TapeMismatch,

    #[error("`{op}` takes {expected} argument(s), got {found}")]
    Arity {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("segmented program has no stages")]
    EmptyProgram,

    #[error("invalid checkpoint plan: {0}")]
    InvalidPlan(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian (pivot {pivot:e} in column {column})")]
    SingularJacobian { column: usize, pivot: f64 },

    #[error("problem provides no analytic jacobian with respect to the states")]
    MissingJacobian,

    #[error("matrix exponential requires a real, nonzero discriminant root (delta^2 = {0})")]
    Discriminant(f64),
}
