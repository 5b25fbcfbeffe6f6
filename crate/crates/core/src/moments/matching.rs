use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use super::{MomentMatrix, PolytopeBound};
use crate::hmm::model::has_full_row_rank;
use crate::qp::{solve_qp, QpOptions, QpProblem, QpResiduals, QpStatus};
use crate::{Error, Result};

/// Moment-matching estimate of `A = diag(π∞) P` and the recovered `(π∞, P)`.
#[derive(Debug, Clone)]
pub struct MomentMatchSolution {
    pub a: DMatrix<f64>,
    pub pi_hat: DVector<f64>,
    pub p_hat: DMatrix<f64>,
    /// `‖M̂ − BᵀÂB‖²_F`
    pub mismatch: f64,
    pub qp_objective: f64,
    pub qp_residuals: QpResiduals,
    pub qp_iterations: usize,
    /// Largest row-sum correction applied to `P̂` after recovery.
    pub renormalization: f64,
}

/// Inverse of `vec`: column-major reshape of a length-`X²` vector.
pub fn vec_to_matrix(x: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, x.as_slice())
}

/// Standard-form QP over `x = vec(A)`:
///
/// - objective `½xᵀQx − q̂ᵀx` with `Q = 2(B⊗B)(B⊗B)ᵀ`, `q̂ = 2(B⊗B)vec(M̂)`;
/// - equalities `𝟙ᵀx = 1` and rows `0..X−1` of `(A − Aᵀ)𝟙 = 0` (the last
///   row is implied by the others);
/// - inequalities `−x ≤ 0` followed by `−A𝟙 ≤ −ℓ`.
pub fn assemble_qp(mhat: &MomentMatrix, b: &DMatrix<f64>, bound: &PolytopeBound) -> Result<QpProblem> {
    let x = b.nrows();
    let y = b.ncols();
    if mhat.num_outputs() != y {
        return Err(Error::Dimension(format!(
            "moments are {0}x{0}, B has {y} columns",
            mhat.num_outputs()
        )));
    }
    if bound.len() != x {
        return Err(Error::Dimension(format!("bound has length {}, expected {x}", bound.len())));
    }
    if !has_full_row_rank(b) {
        return Err(Error::NotStrictlyConvex);
    }
    let n = x * x;
    let kron = b.kronecker(b);
    let gram = &kron * kron.transpose() * 2.0;
    let q_mat = (&gram + gram.transpose()) * 0.5;
    let m_vec = DVector::from_column_slice(mhat.matrix().as_slice());
    let q_vec = &kron * m_vec * 2.0;

    let mut d_mat = DMatrix::zeros(x, n);
    let mut d_vec = DVector::zeros(x);
    d_mat.row_mut(0).fill(1.0);
    d_vec[0] = 1.0;
    for i in 0..x - 1 {
        for j in 0..x {
            // A[i, j] sits at j·X + i, A[j, i] at i·X + j.
            d_mat[(i + 1, j * x + i)] += 1.0;
            d_mat[(i + 1, i * x + j)] -= 1.0;
        }
    }

    let mut g_mat = DMatrix::zeros(n + x, n);
    let mut g_vec = DVector::zeros(n + x);
    for k in 0..n {
        g_mat[(k, k)] = -1.0;
    }
    for i in 0..x {
        for j in 0..x {
            g_mat[(n + i, j * x + i)] = -1.0;
        }
        g_vec[n + i] = -bound.lower()[i];
    }
    QpProblem::new(q_mat, q_vec, g_mat, g_vec, d_mat, d_vec)
}

/// `π = A𝟙`.
pub fn recover_pi(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    let pi = DVector::from_fn(a.nrows(), |i, _| a.row(i).sum());
    if let Some(i) = pi.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateMass(i));
    }
    Ok(pi)
}

/// `P = diag(A𝟙)⁻¹ A`.
pub fn recover_p(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let pi = recover_pi(a)?;
    let mut p = a.clone();
    for (i, mut row) in p.row_iter_mut().enumerate() {
        row /= pi[i];
    }
    Ok(p)
}

/// Solves the moment-matching QP and maps `Â` back to `(π̂∞, P̂)`.
pub fn solve_moment_matching(
    mhat: &MomentMatrix,
    b: &DMatrix<f64>,
    bound: &PolytopeBound,
    opts: &QpOptions,
) -> Result<MomentMatchSolution> {
    let problem = assemble_qp(mhat, b, bound)?;
    let sol = solve_qp(&problem, opts)?;
    if sol.status != QpStatus::Optimal {
        return Err(Error::Qp {
            status: sol.status,
            residual: sol.residuals.max().max(sol.infeasibility),
        });
    }
    let x = b.nrows();
    // Nonnegativity holds to within the solver tolerance.
    let a = vec_to_matrix(&sol.x, x).map(|v| v.max(0.0));
    let pi_hat = recover_pi(&a)?;
    let mut p_hat = recover_p(&a)?;
    let mut renormalization = 0.0f64;
    for mut row in p_hat.row_iter_mut() {
        let s = row.sum();
        renormalization = renormalization.max((s - 1.0).abs());
        row /= s;
    }
    if renormalization > 1e-6 {
        warn!("moment matching: row renormalization of {renormalization:.3e}");
    }
    let fit = b.transpose() * &a * b;
    let mismatch = (mhat.matrix() - fit).norm_squared();
    debug!(
        "moment matching: {} iterations, kkt residual {:.2e}, mismatch {:.3e}",
        sol.iterations,
        sol.residuals.max(),
        mismatch
    );
    Ok(MomentMatchSolution {
        a,
        pi_hat,
        p_hat,
        mismatch,
        qp_objective: sol.objective,
        qp_residuals: sol.residuals,
        qp_iterations: sol.iterations,
        renormalization,
    })
}
