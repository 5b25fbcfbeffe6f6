use nalgebra::{DMatrix, DVector};

use super::{p_from_theta, ThetaVector};
use crate::hmm::ObservationSequence;
use crate::{Error, Result};

/// Flat copies of the model used by the inner recursions.
pub(crate) struct DenseModel {
    pub x: usize,
    /// `P[i, j]` at `i·X + j`.
    pub p: Vec<f64>,
    /// `B[i, y]` at `y·X + i`, so the emission column of `y` is contiguous.
    pub bcols: Vec<f64>,
    pub pi0: Vec<f64>,
}

impl DenseModel {
    pub fn new(p: &DMatrix<f64>, b: &DMatrix<f64>, pi0: &DVector<f64>) -> Result<Self> {
        let x = p.nrows();
        if p.ncols() != x || b.nrows() != x || pi0.len() != x {
            return Err(Error::Dimension(format!(
                "P {}x{}, B {}x{}, pi0 {}",
                p.nrows(),
                p.ncols(),
                b.nrows(),
                b.ncols(),
                pi0.len()
            )));
        }
        Ok(Self {
            x,
            p: p.transpose().as_slice().to_vec(),
            bcols: b.as_slice().to_vec(),
            pi0: pi0.as_slice().to_vec(),
        })
    }

    #[inline]
    pub fn emission(&self, y: usize) -> &[f64] {
        &self.bcols[y * self.x..(y + 1) * self.x]
    }
}

fn check_labels(b: &DMatrix<f64>, obs: &ObservationSequence) -> Result<()> {
    if obs.num_outputs() != b.ncols() {
        return Err(Error::Dimension(format!(
            "observations use {} symbols, B has {} columns",
            obs.num_outputs(),
            b.ncols()
        )));
    }
    if obs.is_empty() {
        return Err(Error::InvalidArgument("empty observation sequence".into()));
    }
    Ok(())
}

/// Scaled forward pass returning `Σₖ log cₖ`.
pub(crate) fn forward_loglik(model: &DenseModel, labels: &[usize]) -> Result<f64> {
    let x = model.x;
    let mut alpha = vec![0.0; x];
    let mut next = vec![0.0; x];
    let mut loglik = 0.0;
    for (k, &y) in labels.iter().enumerate() {
        let b = model.emission(y);
        if k == 0 {
            for i in 0..x {
                next[i] = model.pi0[i] * b[i];
            }
        } else {
            next.fill(0.0);
            for i in 0..x {
                let ai = alpha[i];
                let row = &model.p[i * x..(i + 1) * x];
                for j in 0..x {
                    next[j] += ai * row[j];
                }
            }
            for j in 0..x {
                next[j] *= b[j];
            }
        }
        let c: f64 = next.iter().sum();
        if !(c > 0.0) {
            return Err(Error::ImpossibleObservation(k));
        }
        loglik += c.ln();
        for j in 0..x {
            alpha[j] = next[j] / c;
        }
    }
    Ok(loglik)
}

/// `l_N` for an explicit transition matrix (one data pass).
pub fn log_likelihood_p(
    p: &DMatrix<f64>,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    obs: &ObservationSequence,
) -> Result<f64> {
    check_labels(b, obs)?;
    let model = DenseModel::new(p, b, pi0)?;
    forward_loglik(&model, obs.pass())
}

/// `l_N(θ) = log Pr(y₀, …, y_N | x₀ ~ π₀; θ)` via the normalized forward
/// recursion `αₖ₊₁ = (Pᵀαₖ) ∘ B[:, yₖ₊₁]`.
pub fn log_likelihood(
    theta: &ThetaVector,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    obs: &ObservationSequence,
) -> Result<f64> {
    log_likelihood_p(&p_from_theta(theta)?, b, pi0, obs)
}
