use std::time::Instant;

use nalgebra::DMatrix;

use super::{EstimationReport, Method, PhaseTiming};
use crate::hmm::ObservationSequence;
use crate::likelihood::theta_from_p;
use crate::moments::{empirical_moments, solve_moment_matching, MomentMatrix, PolytopeBound};
use crate::qp::QpOptions;
use crate::Result;

/// Moment-matching estimate from an already computed moment matrix.
pub fn estimate_mm_from_moments(
    mhat: &MomentMatrix,
    b: &DMatrix<f64>,
    bound: &PolytopeBound,
    opts: &QpOptions,
) -> Result<EstimationReport> {
    let sol = solve_moment_matching(mhat, b, bound, opts)?;
    Ok(EstimationReport {
        method: Method::Mm,
        theta_hat: theta_from_p(&sol.p_hat)?,
        p_hat: sol.p_hat,
        pi_hat: Some(sol.pi_hat),
        loglik: None,
        gradient_norm: None,
        hessian_negative_definite: None,
        non_nd_hessian: false,
        fisher: None,
        regularization: 0.0,
        iterations: None,
        loglik_trace: Vec::new(),
        timings: Vec::new(),
        passes: 0,
        qp_residual: Some(sol.qp_residuals.max()),
    })
}

/// Moment-matching estimate in one pass over the data. `π₀` is not needed:
/// the pair moments are matched against their stationary values.
pub fn estimate_mm(
    obs: &ObservationSequence,
    b: &DMatrix<f64>,
    bound: &PolytopeBound,
    opts: &QpOptions,
) -> Result<EstimationReport> {
    let start = Instant::now();
    let before = obs.passes();
    let mhat = empirical_moments(obs)?;
    let mut report = estimate_mm_from_moments(&mhat, b, bound, opts)?;
    report.passes = obs.passes() - before;
    report.timings.push(PhaseTiming {
        phase: "mm",
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(report)
}
