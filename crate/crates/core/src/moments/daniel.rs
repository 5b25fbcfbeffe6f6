use nalgebra::{DMatrix, DVector};

use crate::qp::min_eigenvalue;
use crate::{Error, Result};

/// Perturbation bound on the QP minimizer when the linear term moves from
/// `q_true` to `q_hat`:
///
/// `‖x* − x̂*‖₂ ≤ δ / (λ_min(Q) − δ) · (1 + ‖x*‖₂)`, `δ = ‖q_true − q_hat‖₂`.
pub fn daniel_bound(
    q_mat: &DMatrix<f64>,
    q_true: &DVector<f64>,
    q_hat: &DVector<f64>,
    x_true: &DVector<f64>,
) -> Result<f64> {
    if q_true.len() != q_hat.len() || q_mat.nrows() != q_true.len() {
        return Err(Error::Dimension("daniel_bound arguments".into()));
    }
    let lambda = min_eigenvalue(q_mat);
    let delta = (q_true - q_hat).norm();
    if lambda <= delta {
        return Err(Error::PerturbationTooLarge { delta, lambda });
    }
    Ok(delta / (lambda - delta) * (1.0 + x_true.norm()))
}
