//! Second-order moments and the convex moment-matching estimator.

mod bound;
mod daniel;
mod matching;
mod matrix;

pub use bound::{polytope_from_lower_bound, PolytopeBound};
pub use daniel::daniel_bound;
pub use matching::{
    assemble_qp, recover_p, recover_pi, solve_moment_matching, vec_to_matrix, MomentMatchSolution,
};
pub use matrix::{analytic_moments, empirical_moments, MomentKind, MomentMatrix, MomentOrder};
