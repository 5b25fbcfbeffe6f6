use nalgebra::{DMatrix, DVector};

use super::{gradient_hessian, log_likelihood, ThetaVector};
use crate::hmm::ObservationSequence;
use crate::{Error, Result};

/// Central-difference gradient of an arbitrary scalar function.
pub fn central_gradient<F>(f: F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference Hessian from function values (four-point stencil,
/// step `h` along each axis).
pub fn central_hessian<F>(f: F, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let d = x.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut probe = x.clone();
    let eval = |probe: &mut DVector<f64>, i: usize, si: f64, j: usize, sj: f64| -> Result<f64> {
        probe[i] += si * h;
        probe[j] += sj * h;
        let v = f(probe);
        probe[i] = x[i];
        probe[j] = x[j];
        v
    };
    for i in 0..d {
        for j in i..d {
            let pp = eval(&mut probe, i, 1.0, j, 1.0)?;
            let pm = eval(&mut probe, i, 1.0, j, -1.0)?;
            let mp = eval(&mut probe, i, -1.0, j, 1.0)?;
            let mm = eval(&mut probe, i, -1.0, j, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

fn check_step(theta: &ThetaVector, h: f64) -> Result<()> {
    let dist = theta.boundary_distance();
    if !(h > 0.0) || h >= dist / 10.0 {
        return Err(Error::BoundaryTooClose { h, dist });
    }
    Ok(())
}

fn guarded_objective<'a>(
    theta: &'a ThetaVector,
    b: &'a DMatrix<f64>,
    pi0: &'a DVector<f64>,
    obs: &'a ObservationSequence,
    h: f64,
) -> Result<impl Fn(&DVector<f64>) -> Result<f64> + 'a> {
    check_step(theta, h)?;
    Ok(move |v: &DVector<f64>| {
        let t = theta.with_values(v.as_slice().to_vec())?;
        log_likelihood(&t, b, pi0, obs)
    })
}

/// Central-difference gradient of `l_N`; requires `h < dist(θ, ∂)/10`.
pub fn fd_gradient(
    theta: &ThetaVector,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    obs: &ObservationSequence,
    h: f64,
) -> Result<DVector<f64>> {
    let f = guarded_objective(theta, b, pi0, obs, h)?;
    central_gradient(f, &DVector::from_column_slice(theta.values()), h)
}

/// Hessian of `l_N` by central differences of the exact score (step `h`),
/// symmetrized; requires `h < dist(θ, ∂)/10`.
pub fn fd_hessian(
    theta: &ThetaVector,
    b: &DMatrix<f64>,
    pi0: &DVector<f64>,
    obs: &ObservationSequence,
    h: f64,
) -> Result<DMatrix<f64>> {
    check_step(theta, h)?;
    let d = theta.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut probe = theta.values().to_vec();
    for j in 0..d {
        let base = probe[j];
        probe[j] = base + h;
        let up = gradient_hessian(&theta.with_values(probe.clone())?, b, pi0, obs)?.gradient;
        probe[j] = base - h;
        let down = gradient_hessian(&theta.with_values(probe.clone())?, b, pi0, obs)?.gradient;
        probe[j] = base;
        hess.set_column(j, &((up - down) / (2.0 * h)));
    }
    Ok((&hess + hess.transpose()) * 0.5)
}
