//! Fitting problems for transformation pairs (F, F0).

mod least_squares;
mod omega;
mod operator_difference;
pub mod qp;

pub use least_squares::{
    default_fixed, learning_objective, least_squares_loss, solve_filter_learning, solve_least_squares,
    solve_least_squares_with_layout, FitResult, FixedCoeff, SolverInfo,
};
pub use omega::{build_omega, build_omega_with, magnitude_order, OmegaPair, OmegaSet};
pub use operator_difference::{
    lower_bound, operator_difference, solve_operator_difference, solve_operator_difference_with_layout,
    SubgradientOptions,
};
