use thiserror::Error;

/// Errors raised across the propulsion model, optimizer, dynamics and harness.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// The actuation matrix is rank deficient (condition number above threshold).
    #[error("singular design: actuation matrix condition number {condition:.3e}")]
    SingularDesign { condition: f64 },

    #[error("direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("matrix is not skew-symmetric (asymmetry {asymmetry:.3e})")]
    NotSkew { asymmetry: f64 },

    /// tr(R_d^T R) is too close to -1 for the attitude error to be defined.
    #[error("attitude error undefined: tr(Rd^T R) = {trace}")]
    AttitudeSingularity { trace: f64 },

    #[error("local solver did not converge within {evaluations} evaluations")]
    NoConvergence { evaluations: usize },

    #[error("all {starts} multistart runs failed")]
    AllStartsFailed { starts: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("log is empty")]
    EmptyLog,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
