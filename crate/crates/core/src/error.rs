use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {context} (state {state:?})")]
    NonFinite { context: String, state: Vec<f64> },
    #[error("singular mass matrix: {0}")]
    Singularity(String),
    #[error("not an equilibrium: ‖Γ(x̄, ū)‖∞ = {residual:e}")]
    EquilibriumViolation { residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
