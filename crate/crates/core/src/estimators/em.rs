use std::time::Instant;

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{EstimationReport, Method, PhaseTiming};
use crate::hmm::ObservationSequence;
use crate::likelihood::{theta_from_p, DenseModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop once the log-likelihood improves by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 500 }
    }
}

/// Transition matrix with rows drawn uniformly from the open simplex.
pub fn random_transition<R: Rng + ?Sized>(x: usize, rng: &mut R) -> DMatrix<f64> {
    let mut p = DMatrix::from_fn(x, x, |_, _| {
        let e: f64 = Exp1.sample(rng);
        e.max(f64::MIN_POSITIVE)
    });
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    p
}

/// Scratch buffers reused across iterations.
struct Workspace {
    alpha: Vec<f64>,
    scale: Vec<f64>,
    beta: Vec<f64>,
    beta_next: Vec<f64>,
    weighted: Vec<f64>,
    counts: Vec<f64>,
}

/// One E-step: scaled forward-backward accumulating expected transition
/// counts into `ws.counts` (row-major). Returns the log-likelihood.
fn expectation(model: &DenseModel, labels: &[usize], ws: &mut Workspace) -> Result<f64> {
    let x = model.x;
    let len = labels.len();
    let mut loglik = 0.0;
    for (k, &y) in labels.iter().enumerate() {
        let b = model.emission(y);
        let (prev, cur) = ws.alpha.split_at_mut(k * x);
        let cur = &mut cur[..x];
        if k == 0 {
            for i in 0..x {
                cur[i] = model.pi0[i] * b[i];
            }
        } else {
            let prev = &prev[(k - 1) * x..];
            cur.fill(0.0);
            for i in 0..x {
                let ai = prev[i];
                let row = &model.p[i * x..(i + 1) * x];
                for j in 0..x {
                    cur[j] += ai * row[j];
                }
            }
            for j in 0..x {
                cur[j] *= b[j];
            }
        }
        let c: f64 = cur.iter().sum();
        if !(c > 0.0) {
            return Err(Error::ImpossibleObservation(k));
        }
        ws.scale[k] = c;
        loglik += c.ln();
        for v in cur.iter_mut() {
            *v /= c;
        }
    }

    ws.counts.fill(0.0);
    ws.beta_next.fill(1.0);
    for k in (0..len - 1).rev() {
        let b = model.emission(labels[k + 1]);
        let inv = 1.0 / ws.scale[k + 1];
        for j in 0..x {
            ws.weighted[j] = b[j] * ws.beta_next[j] * inv;
        }
        let alpha = &ws.alpha[k * x..(k + 1) * x];
        for i in 0..x {
            let row = &model.p[i * x..(i + 1) * x];
            let counts = &mut ws.counts[i * x..(i + 1) * x];
            let mut acc = 0.0;
            for j in 0..x {
                let t = row[j] * ws.weighted[j];
                counts[j] += alpha[i] * t;
                acc += t;
            }
            ws.beta[i] = acc;
        }
        std::mem::swap(&mut ws.beta, &mut ws.beta_next);
    }
    Ok(loglik)
}

/// Baum-Welch for `P` with `B` and `π₀` held fixed. Each E-step is one pass
/// over the data; the run stops when the log-likelihood improves by less
/// than `opts.tol` or after `opts.max_iter` M-steps.
pub fn estimate_em(
    obs: &ObservationSequence,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    p_init: &DMatrix<f64>,
    opts: &EmOptions,
) -> Result<EstimationReport> {
    let start = Instant::now();
    obs.require_pairs()?;
    if obs.num_outputs() != b.ncols() {
        return Err(Error::Dimension(format!(
            "observations use {} symbols, B has {} columns",
            obs.num_outputs(),
            b.ncols()
        )));
    }
    let x = b.nrows();
    let mut model = DenseModel::new(p_init, b, pi0)?;
    let len = obs.len();
    let mut ws = Workspace {
        alpha: vec![0.0; len * x],
        scale: vec![0.0; len],
        beta: vec![0.0; x],
        beta_next: vec![0.0; x],
        weighted: vec![0.0; x],
        counts: vec![0.0; x * x],
    };
    let before = obs.passes();
    let mut trace: Vec<f64> = Vec::new();
    for iter in 0..=opts.max_iter {
        let loglik = expectation(&model, obs.pass(), &mut ws)?;
        let improvement = trace.last().map(|prev| loglik - prev);
        trace.push(loglik);
        if improvement.is_some_and(|d| d < opts.tol) || iter == opts.max_iter {
            break;
        }
        for i in 0..x {
            let row = &ws.counts[i * x..(i + 1) * x];
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return Err(Error::StateStarved(i));
            }
            for j in 0..x {
                model.p[i * x + j] = row[j] / total;
            }
        }
    }
    let iterations = trace.len() - 1;
    debug!("em: {iterations} iterations, loglik {:.6}", trace[iterations]);
    let p_hat = DMatrix::from_row_slice(x, x, &model.p);
    Ok(EstimationReport {
        method: Method::Em,
        theta_hat: theta_from_p(&p_hat)?,
        p_hat,
        pi_hat: None,
        loglik: trace.last().copied(),
        gradient_norm: None,
        hessian_negative_definite: None,
        non_nd_hessian: false,
        fisher: None,
        regularization: 0.0,
        iterations: Some(iterations),
        loglik_trace: trace,
        timings: vec![PhaseTiming { phase: "em", seconds: start.elapsed().as_secs_f64() }],
        passes: obs.passes() - before,
        qp_residual: None,
    })
}
