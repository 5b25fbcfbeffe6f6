//! Estimation of the transition matrix of a finite hidden Markov model whose
//! observation matrix is known.
//!
//! The main estimator runs in two passes over the data:
//!
//! 1. a method-of-moments estimate, obtained by matching the empirical
//!    distribution of consecutive observation pairs through a strictly convex
//!    quadratic program over `A = diag(π∞) P`;
//! 2. a single Newton-Raphson step on the exact log-likelihood, with gradient
//!    and Hessian computed by forward sensitivity recursions.
//!
//! A Baum-Welch baseline with the sensor held fixed, a seeded simulation
//! harness and a benchmark runner are included.
//!
//! Conventions used throughout the crate:
//! - labels are 0-based in memory and 1-based in every file format;
//! - `vec(A)` stacks columns (nalgebra's native storage order);
//! - every stochastic routine receives an explicit seed or generator.

// Index loops mirror the recursions; `!(x > 0.0)` deliberately also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod estimators;
pub mod hmm;
pub mod likelihood;
pub mod moments;
pub mod qp;
pub mod rng;

pub use error::{Error, Result};

pub use estimators::{EstimationReport, Estimator, EstimatorRegistry, Method};
pub use hmm::{HmmModel, ObservationSequence};
pub use moments::{MomentMatrix, PolytopeBound};

/// Tolerance used when checking row sums of stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;
