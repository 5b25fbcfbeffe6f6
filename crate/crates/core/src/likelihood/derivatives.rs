use nalgebra::{DMatrix, DVector};

use super::forward::DenseModel;
use super::{p_from_theta, LikelihoodEvaluation, ThetaVector};
use crate::hmm::ObservationSequence;
use crate::{Error, Result};

/// Forward sensitivity recursion carrying the normalized filter together
/// with its first and second derivatives. With `full` every ordered pair is
/// propagated (used to check symmetry); otherwise only `a ≤ b`.
///
/// Derivative buffers are state-major (`da[i·d + a]`, `dda[i·np + t]`) with
/// pairs grouped by their first index, so every inner loop runs over a
/// contiguous range of parameters or pairs.
pub(crate) fn sensitivity_recursion(
    theta: &ThetaVector,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    labels: &[usize],
    full: bool,
) -> Result<LikelihoodEvaluation> {
    let p = p_from_theta(theta)?;
    let model = DenseModel::new(&p, b, pi0)?;
    let x = model.x;
    let d = theta.len();
    let entries: Vec<(usize, usize)> = (0..d).map(|a| ThetaVector::entry(x, a)).collect();
    // Pairs (a, b) for b in b_start(a)..d are stored at offset[a] + (b - b_start(a)).
    let b_start = |a: usize| if full { 0 } else { a };
    let mut offset = Vec::with_capacity(d + 1);
    let mut np = 0;
    for a in 0..d {
        offset.push(np);
        np += d - b_start(a);
    }
    offset.push(np);

    let mut a_vec = vec![0.0; x];
    let mut u = vec![0.0; x];
    let mut da = vec![0.0; x * d];
    let mut du = vec![0.0; x * d];
    let mut dda = vec![0.0; x * np];
    let mut ddu = vec![0.0; x * np];
    let mut dc = vec![0.0; d];
    let mut ddc = vec![0.0; np];

    let mut loglik = 0.0;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; np];
    let mut scaling = Vec::with_capacity(labels.len());

    for (k, &y) in labels.iter().enumerate() {
        let bk = model.emission(y);
        if k == 0 {
            for i in 0..x {
                u[i] = model.pi0[i] * bk[i];
            }
            du.fill(0.0);
            ddu.fill(0.0);
        } else {
            // Transport by Pᵀ.
            u.fill(0.0);
            du.fill(0.0);
            ddu.fill(0.0);
            for i in 0..x {
                let row = &model.p[i * x..(i + 1) * x];
                let ai = a_vec[i];
                let dai = &da[i * d..(i + 1) * d];
                let ddai = &dda[i * np..(i + 1) * np];
                for j in 0..x {
                    let pij = row[j];
                    u[j] += pij * ai;
                    for (o, v) in du[j * d..(j + 1) * d].iter_mut().zip(dai) {
                        *o += pij * v;
                    }
                    for (o, v) in ddu[j * np..(j + 1) * np].iter_mut().zip(ddai) {
                        *o += pij * v;
                    }
                }
            }
            // Sources from ∂P/∂θₐ = e_r (e_c − e_r)ᵀ.
            for (s, &(r, c)) in entries.iter().enumerate() {
                let w = a_vec[r];
                du[c * d + s] += w;
                du[r * d + s] -= w;
            }
            for (sa, &(ra, ca)) in entries.iter().enumerate() {
                for sb in b_start(sa)..d {
                    let t = offset[sa] + sb - b_start(sa);
                    let (rb, cb) = entries[sb];
                    let wa = da[ra * d + sb];
                    let wb = da[rb * d + sa];
                    ddu[ca * np + t] += wa;
                    ddu[ra * np + t] -= wa;
                    ddu[cb * np + t] += wb;
                    ddu[rb * np + t] -= wb;
                }
            }
            for j in 0..x {
                let bj = bk[j];
                u[j] *= bj;
                du[j * d..(j + 1) * d].iter_mut().for_each(|v| *v *= bj);
                ddu[j * np..(j + 1) * np].iter_mut().for_each(|v| *v *= bj);
            }
        }

        let c: f64 = u.iter().sum();
        if !(c > 0.0) {
            return Err(Error::ImpossibleObservation(k));
        }
        scaling.push(c);
        loglik += c.ln();
        dc.fill(0.0);
        ddc.fill(0.0);
        for j in 0..x {
            for (o, v) in dc.iter_mut().zip(&du[j * d..(j + 1) * d]) {
                *o += v;
            }
            for (o, v) in ddc.iter_mut().zip(&ddu[j * np..(j + 1) * np]) {
                *o += v;
            }
        }
        let inv = 1.0 / c;
        let inv2 = inv * inv;
        for (g, v) in grad.iter_mut().zip(&dc) {
            *g += v * inv;
        }
        for sa in 0..d {
            let bs = b_start(sa);
            let w = dc[sa] * inv2;
            let range = offset[sa]..offset[sa + 1];
            for ((h, dd), db) in hess[range.clone()].iter_mut().zip(&ddc[range]).zip(&dc[bs..]) {
                *h += dd * inv - w * db;
            }
        }

        // Renormalize: a = u/c, a' = (u' − a c')/c, a'' = (u'' − a'_a c'_b − a'_b c'_a − a c'')/c.
        for i in 0..x {
            let ai = u[i] * inv;
            a_vec[i] = ai;
            let dai = &mut da[i * d..(i + 1) * d];
            for ((o, v), g) in dai.iter_mut().zip(&du[i * d..(i + 1) * d]).zip(&dc) {
                *o = (v - ai * g) * inv;
            }
            let dai = &da[i * d..(i + 1) * d];
            for sa in 0..d {
                let bs = b_start(sa);
                let range = offset[sa]..offset[sa + 1];
                let da_a = dai[sa];
                let dc_a = dc[sa];
                let out = &mut dda[i * np + range.start..i * np + range.end];
                let src = &ddu[i * np + range.start..i * np + range.end];
                for ((((o, v), dd), dab), dcb) in out
                    .iter_mut()
                    .zip(src)
                    .zip(&ddc[range.clone()])
                    .zip(&dai[bs..])
                    .zip(&dc[bs..])
                {
                    *o = (v - da_a * dcb - dab * dc_a - ai * dd) * inv;
                }
            }
        }
    }

    let mut hessian = DMatrix::zeros(d, d);
    for sa in 0..d {
        for sb in b_start(sa)..d {
            let v = hess[offset[sa] + sb - b_start(sa)];
            hessian[(sa, sb)] = v;
            if !full {
                hessian[(sb, sa)] = v;
            }
        }
    }
    Ok(LikelihoodEvaluation {
        loglik,
        gradient: DVector::from_vec(grad),
        hessian,
        scaling,
    })
}

/// Exact `l_N`, `∇θ l_N` and `∇²θ l_N` in a single pass over the data.
pub fn gradient_hessian(
    theta: &ThetaVector,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    obs: &ObservationSequence,
) -> Result<LikelihoodEvaluation> {
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
    sensitivity_recursion(theta, b, pi0, obs.pass(), false)
}

/// Observed information `Î_F = −H / N`.
pub fn fisher_estimate(eval: &LikelihoodEvaluation, n: usize) -> DMatrix<f64> {
    let h = &eval.hessian;
    let scale = -1.0 / n.max(1) as f64;
    (h + h.transpose()) * (0.5 * scale)
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && m.iter().all(|v| v.is_finite()) && m.clone().cholesky().is_some()
}

pub fn is_negative_definite(m: &DMatrix<f64>) -> bool {
    is_positive_definite(&(-m))
}
