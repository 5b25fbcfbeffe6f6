use log::{debug, info};
use nalgebra::{DMatrix, DVector};

use crate::likelihood::{is_negative_definite, theta_from_p, LikelihoodEvaluation, SecondOrderObjective, ThetaVector};
use crate::qp::{max_eigenvalue, solve_qp, QpOptions, QpProblem, QpStatus};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Base points closer than this to the boundary are pulled inward.
    pub projection_eps: f64,
    /// First nonzero regularization tried; later ones double it.
    pub rho_start: f64,
    /// Required margin `λ_max(H − ρI) ≤ −margin`.
    pub definiteness_margin: f64,
    pub max_doublings: usize,
    pub qp: QpOptions,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            projection_eps: 1e-8,
            rho_start: 1e-8,
            definiteness_margin: 1e-10,
            max_doublings: 400,
            qp: QpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonDiagnostics {
    /// Point at which derivatives were taken (after any inward projection).
    pub base: ThetaVector,
    pub projected: bool,
    /// Value, score and Hessian at `base`.
    pub evaluation: LikelihoodEvaluation,
    pub hessian_max_eigenvalue: f64,
    pub hessian_negative_definite: bool,
    /// `ρ` in `H − ρI`; zero when `H` was already negative definite.
    pub regularization: f64,
    pub non_nd_hessian: bool,
    pub step: DVector<f64>,
    /// Indices of constraints active at the step (off-diagonals first, then diagonals).
    pub active_constraints: Vec<usize>,
    pub qp_iterations: usize,
}

/// Pulls `θ` off the boundary by mixing each row of `P` with `ε`:
/// `P ← (P + ε) / (1 + Xε)`. Returns the input unchanged when it is already
/// at least `ε` from the boundary.
pub fn project_inward(theta: &ThetaVector, eps: f64) -> Result<(ThetaVector, bool)> {
    if theta.boundary_distance() >= eps {
        return Ok((theta.clone(), false));
    }
    let p = reconstruct_clipped(theta);
    let x = p.nrows() as f64;
    let p = p.map(|v| (v + eps) / (1.0 + x * eps));
    Ok((theta_from_p(&p)?, true))
}

/// `P(θ)` with negative entries set to zero and rows renormalized.
pub(crate) fn reconstruct_clipped(theta: &ThetaVector) -> DMatrix<f64> {
    let x = theta.num_states();
    let diag = theta.diagonal();
    let mut p = DMatrix::from_fn(x, x, |i, j| {
        if i == j {
            diag[i]
        } else {
            theta.values()[ThetaVector::index(x, i, j)]
        }
        .max(0.0)
    });
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    p
}

fn regularization(lmax: f64, opts: &NewtonOptions) -> Result<f64> {
    if lmax <= -opts.definiteness_margin {
        return Ok(0.0);
    }
    let mut rho = opts.rho_start;
    for _ in 0..opts.max_doublings {
        if lmax - rho <= -opts.definiteness_margin {
            return Ok(rho);
        }
        rho *= 2.0;
    }
    Err(Error::Singular(format!("no regularization restores definiteness (lambda_max {lmax:e})")))
}

/// One Newton step on `objective` from `theta_init`, solved as a strictly
/// convex QP in the increment so that the new point stays feasible:
///
/// minimize `½Δᵀ(−H_ρ/N)Δ − (∇/N)ᵀΔ` subject to `θ + Δ ≥ 0` and the implied
/// diagonal of every row staying nonnegative.
///
/// Without active constraints this is the plain step `Δ = −H_ρ⁻¹∇`.
pub fn newton_step<O: SecondOrderObjective + ?Sized>(
    theta_init: &ThetaVector,
    objective: &O,
    opts: &NewtonOptions,
) -> Result<(ThetaVector, NewtonDiagnostics)> {
    let (base, projected) = project_inward(theta_init, opts.projection_eps)?;
    if projected {
        info!(
            "newton: base point {:.2e} from the boundary, projected inward by {:.0e}",
            theta_init.boundary_distance(),
            opts.projection_eps
        );
    }
    let evaluation = objective.evaluate(&base)?;
    let d = base.len();
    let x = base.num_states();
    if d == 0 {
        let diagnostics = NewtonDiagnostics {
            base: base.clone(),
            projected,
            evaluation,
            hessian_max_eigenvalue: f64::NEG_INFINITY,
            hessian_negative_definite: true,
            regularization: 0.0,
            non_nd_hessian: false,
            step: DVector::zeros(0),
            active_constraints: Vec::new(),
            qp_iterations: 0,
        };
        return Ok((base, diagnostics));
    }

    let h = &evaluation.hessian;
    let lmax = max_eigenvalue(h);
    let rho = regularization(lmax, opts)?;
    if rho > 0.0 {
        info!("newton: Hessian not negative definite (lambda_max {lmax:.3e}), regularized with rho {rho:.3e}");
    }
    let n = objective.num_pairs().max(1) as f64;
    let h_reg = h - DMatrix::identity(d, d) * rho;
    let q_mat = (&h_reg + h_reg.transpose()) * (-0.5 / n);
    let q_vec = &evaluation.gradient / n;

    let diag = base.diagonal();
    let mut g_mat = DMatrix::zeros(d + x, d);
    let mut g_vec = DVector::zeros(d + x);
    for a in 0..d {
        g_mat[(a, a)] = -1.0;
        g_vec[a] = base.values()[a];
        let (row, _) = ThetaVector::entry(x, a);
        g_mat[(d + row, a)] = 1.0;
    }
    for i in 0..x {
        g_vec[d + i] = diag[i];
    }
    let problem = QpProblem::new(q_mat, q_vec, g_mat, g_vec, DMatrix::zeros(0, d), DVector::zeros(0))?;
    // A KKT dump request refers to the moment-matching problem.
    let qp_opts = QpOptions { kkt_dump: None, ..opts.qp.clone() };
    let sol = solve_qp(&problem, &qp_opts)?;
    if sol.status != QpStatus::Optimal {
        return Err(Error::Qp {
            status: sol.status,
            residual: sol.residuals.max().max(sol.infeasibility),
        });
    }
    let raw: Vec<f64> = base.values().iter().zip(sol.x.iter()).map(|(t, s)| t + s).collect();
    let stepped = base.with_values(raw)?;
    // Active constraints can leave entries at -1e-12 or so.
    let theta_new = if stepped.boundary_distance() < 0.0 {
        theta_from_p(&reconstruct_clipped(&stepped))?
    } else {
        stepped
    };
    debug!(
        "newton: rho {rho:.2e}, |step| {:.3e}, {} active constraints",
        sol.x.norm(),
        sol.active.len()
    );
    let diagnostics = NewtonDiagnostics {
        base,
        projected,
        hessian_negative_definite: is_negative_definite(h),
        evaluation,
        hessian_max_eigenvalue: lmax,
        regularization: rho,
        non_nd_hessian: rho > 0.0,
        step: sol.x,
        active_constraints: sol.active,
        qp_iterations: sol.iterations,
    };
    Ok((theta_new, diagnostics))
}
