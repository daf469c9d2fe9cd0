//! Kernel-based predictive control allocation (KPCA).

mod controller;
mod problem;
mod solver;

pub use controller::{KpcaController, KpcaOutput};
pub use problem::{
    cost_gradient_check, transcribe, DecisionVector, EqualityKind, KernelMode, KpcaConfig,
    NlpProblem, STATE_PENALTY,
};
pub use solver::{
    objective_gradient, push_interior, solve, Nlp, NlpSolution, SolveStatus, SolverOptions,
    BOUNDARY_FRACTION, MU_FACTOR,
};
