use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::mm::estimate_mm_from_moments;
use super::{newton_step, EstimationReport, Method, NewtonOptions, PhaseTiming};
use crate::hmm::ObservationSequence;
use crate::likelihood::{fisher_estimate, p_from_theta, HmmLikelihood, SecondOrderObjective};
use crate::moments::{empirical_moments, MomentMatrix, PolytopeBound};
use crate::Result;

/// Two-step estimate from given moments and an arbitrary second-order
/// objective. Used directly by [`estimate_two_step`] and by tests that
/// substitute exact moments or synthetic objectives.
pub fn two_step_with<O: SecondOrderObjective + ?Sized>(
    mhat: &MomentMatrix,
    b: &DMatrix<f64>,
    bound: &PolytopeBound,
    objective: &O,
    opts: &NewtonOptions,
) -> Result<EstimationReport> {
    let start = Instant::now();
    let mm = estimate_mm_from_moments(mhat, b, bound, &opts.qp)?;
    let mm_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let (theta, diag) = newton_step(&mm.theta_hat, objective, opts)?;
    let p_hat = p_from_theta(&theta)?;
    let fisher = fisher_estimate(&diag.evaluation, objective.num_pairs());
    let newton_seconds = start.elapsed().as_secs_f64();

    Ok(EstimationReport {
        method: Method::TwoStep,
        p_hat,
        pi_hat: None,
        theta_hat: theta,
        loglik: Some(diag.evaluation.loglik),
        gradient_norm: Some(diag.evaluation.gradient.norm()),
        hessian_negative_definite: Some(diag.hessian_negative_definite),
        non_nd_hessian: diag.non_nd_hessian,
        fisher: Some(fisher),
        regularization: diag.regularization,
        iterations: Some(1),
        loglik_trace: vec![diag.evaluation.loglik],
        timings: vec![
            PhaseTiming { phase: "mm", seconds: mm_seconds },
            PhaseTiming { phase: "newton", seconds: newton_seconds },
        ],
        passes: 0,
        qp_residual: mm.qp_residual,
    })
}

/// Moment matching followed by one constrained Newton step on the exact
/// log-likelihood: two passes over the data in total.
pub fn estimate_two_step(
    obs: &ObservationSequence,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    bound: &PolytopeBound,
    opts: &NewtonOptions,
) -> Result<EstimationReport> {
    let before = obs.passes();
    let start = Instant::now();
    let mhat = empirical_moments(obs)?;
    let moment_seconds = start.elapsed().as_secs_f64();
    let objective = HmmLikelihood { b, pi0, obs };
    let mut report = two_step_with(&mhat, b, bound, &objective, opts)?;
    report.timings[0].seconds += moment_seconds;
    report.passes = obs.passes() - before;
    Ok(report)
}
