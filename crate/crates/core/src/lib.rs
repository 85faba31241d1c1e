//! Penalized quadratic regression with all pairwise interactions.
//!
//! The model is `y_i = x_i' B x_i + e_i` with a symmetric `p x p` matrix `B`
//! over an intercept-augmented design. Two solver families are provided:
//!
//! * [`ridge`]: the ridge problem in closed form through an `n x n` system,
//!   never forming the `n x p^2` interaction design, plus naive, Woodbury and
//!   SVD references on the explicit vectorized problem.
//! * [`admm`]: consensus ADMM for the squared loss plus any combination of
//!   `l1`, nuclear, and row/column group penalties ([`penalty`]), each block
//!   solved by a closed-form proximal map ([`prox`]).
//!
//! [`path`] runs warm-started regularization paths and scores supports;
//! [`simulate`] generates the AR(1) toy models used for benchmarking.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below cover the common double-precision case.

pub mod admm;
pub mod error;
pub mod model;
pub mod path;
pub mod penalty;
pub mod prox;
pub mod ridge;
pub mod scalar;
pub mod simulate;

pub use admm::{admm_iterate, admm_solve, compute_residuals, AdmmConfig, AdmmSolution, AdmmSolver, AdmmState};
pub use error::{Error, Result};
pub use model::{compute_precomputation, fitted_values, objective, squared_loss, standardize_columns, CoefMatrix, Dataset, Precomputation};
pub use path::{csi, make_grid, solve_path, support, GridPoint, GridSpec, PathOptions, PathPoint, PathResult};
pub use penalty::{
    eval_penalty, lambda_max, lambda_max_for, null_gradient, prox_penalty_term, MaskPolicy, PenaltyFamily,
    PenaltyKind, PenaltySpec, PenaltyTerm, Preset,
};
pub use prox::ProxScale;
pub use ridge::{prox_quadratic_loss, ridge_reference, ridge_structured, LossProx, MemoryGuard, RidgeVariant};
pub use scalar::Real;
pub use simulate::{gen_design, gen_response, simulate, truth_matrix, Model, SimSpec};

pub use nalgebra::{DMatrix, DVector};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type CoefMatrix64 = CoefMatrix<f64>;
pub type CoefMatrix32 = CoefMatrix<f32>;
pub type Precomputation64 = Precomputation<f64>;
pub type PenaltySpec64 = PenaltySpec<f64>;
pub type AdmmConfig64 = AdmmConfig<f64>;
pub type AdmmSolution64 = AdmmSolution<f64>;
pub type PathResult64 = PathResult<f64>;
