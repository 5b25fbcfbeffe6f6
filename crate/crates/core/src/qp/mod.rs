//! Dense strictly convex quadratic programming.
//!
//! Problems have the form
//!
//! ```text
//! minimize   ½ xᵀQx − qᵀx
//! subject to Gx ≤ g,  Dx = d
//! ```
//!
//! with `Q` symmetric positive definite.

mod eigen;
mod problem;
mod solver;

pub use eigen::{max_eigenvalue, min_eigenvalue};
pub use problem::QpProblem;
pub use solver::{solve_qp, QpOptions, QpResiduals, QpSolution, QpStatus};
