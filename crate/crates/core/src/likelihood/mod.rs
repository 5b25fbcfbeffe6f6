//! Exact log-likelihood of an observation sequence with a known sensor and
//! its first and second derivatives with respect to the free entries of `P`.

mod derivatives;
mod fd;
mod forward;
mod theta;

pub use derivatives::{fisher_estimate, gradient_hessian, is_negative_definite, is_positive_definite};
pub use fd::{central_gradient, central_hessian, fd_gradient, fd_hessian};
pub use forward::{log_likelihood, log_likelihood_p};
pub(crate) use forward::DenseModel;
pub use theta::{p_from_theta, theta_from_p, ThetaVector};

use nalgebra::{DMatrix, DVector};

use crate::hmm::ObservationSequence;
use crate::Result;

/// Log-likelihood with gradient and Hessian at one parameter value.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluation {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    /// Symmetric by construction (only the upper triangle is propagated).
    pub hessian: DMatrix<f64>,
    /// Per-step normalizers `cₖ`; `loglik = Σ log cₖ`.
    pub scaling: Vec<f64>,
}

/// Anything that can produce value, gradient and Hessian at `θ`.
///
/// The Newton step is written against this trait so that exactly quadratic
/// objectives can stand in for the likelihood in tests.
pub trait SecondOrderObjective {
    fn evaluate(&self, theta: &ThetaVector) -> Result<LikelihoodEvaluation>;
    /// Number of transitions `N`, used to scale curvature.
    fn num_pairs(&self) -> usize;
}

/// The HMM log-likelihood `l_N(θ)` for fixed `B`, `π₀` and data.
pub struct HmmLikelihood<'a> {
    pub b: &'a DMatrix<f64>,
    pub pi0: &'a DVector<f64>,
    pub obs: &'a ObservationSequence,
}

impl SecondOrderObjective for HmmLikelihood<'_> {
    fn evaluate(&self, theta: &ThetaVector) -> Result<LikelihoodEvaluation> {
        gradient_hessian(theta, self.b, self.pi0, self.obs)
    }

    fn num_pairs(&self) -> usize {
        self.obs.num_pairs()
    }
}
