//! Matrix-free solvers for generalized lasso problems.
//!
//! The crate centers on the composite objective
//!
//! ```text
//!     min_x  1/2 ||A x - b||^2 + mu ||D x||_1
//! ```
//!
//! where `A` is a measurement operator (identity, blur, tomographic
//! projection, an arbitrary dense matrix) and `D` is a regularization
//! operator (identity for plain lasso, finite differences for total
//! variation, a Laplacian for smoothness). Both are used only through
//! forward and adjoint applications, so nothing ever assembles a matrix.
//!
//! What lives where:
//!
//! * [`linops`]: the [`LinearOperator`](linops::LinearOperator) trait, the
//!   operator families above, stacking and application counting.
//! * [`solver`]: a variable-projected augmented Lagrangian solver, an ADMM
//!   reference solver with LSQR inner solves, and the shared shrinkage and
//!   objective machinery.
//! * [`regselect`]: automatic choice of the regularization parameter by
//!   bisection on a chi-square style residual statistic, plus a classic
//!   discrepancy-principle variant.
//! * [`problems`]: reproducible test problems (denoising, deblurring,
//!   tomography) with seeded noise, quality metrics and image export.

pub mod linops;
pub mod problems;
pub mod regselect;
pub mod solver;

mod vecmath;

#[cfg(test)]
mod test_oracles;

pub use linops::{LinearOperator, MatvecCounter, StackedOperator};
pub use problems::{Family, ProblemInstance, Regularizer};
pub use regselect::{BisectionOutcome, Chi2Config};
pub use solver::{admm_solve, vpal_solve, SolveResult, SolverOptions};
