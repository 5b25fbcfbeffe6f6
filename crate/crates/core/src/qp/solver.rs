//! Dual active-set solver (Goldfarb–Idnani).
//!
//! The iteration starts at the unconstrained minimizer `Q⁻¹q`, adds the
//! equality constraints, then repeatedly adds the most violated inequality,
//! dropping active inequalities whose multipliers would turn negative. The
//! objective is non-decreasing along the way and no feasible starting point
//! is needed. Each step solves the equality-constrained KKT system of the
//! current working set directly; the final working set is re-solved once to
//! polish `x` and the multipliers.
//!
//! Ties are broken by the lowest constraint index.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::QpProblem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    /// Terminated but a KKT residual exceeds the tolerance.
    Inaccurate,
}

#[derive(Debug, Clone)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Write the final working-set KKT system `[K | rhs]` here as CSV.
    pub kkt_dump: Option<PathBuf>,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            kkt_dump: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QpResiduals {
    /// `‖Qx − q + Gᵀμ + Dᵀν‖∞`
    pub stationarity: f64,
    /// `max(max(Gx − g)₊, ‖Dx − d‖∞)`
    pub primal: f64,
    /// `max |μᵢ (Gx − g)ᵢ|`, plus any negative part of `μ`.
    pub complementarity: f64,
}

impl QpResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers `μ ≥ 0` of `Gx ≤ g`.
    pub ineq_duals: DVector<f64>,
    /// Multipliers `ν` of `Dx = d`.
    pub eq_duals: DVector<f64>,
    pub residuals: QpResiduals,
    pub iterations: usize,
    pub status: QpStatus,
    /// Indices of inequalities in the final working set.
    pub active: Vec<usize>,
    /// Objective after every primal step.
    pub objective_trace: Vec<f64>,
    /// Violation of the constraint that could not be added (infeasible only).
    pub infeasibility: f64,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

struct Workspace<'a> {
    problem: &'a QpProblem,
    chol: Cholesky<f64, Dyn>,
    /// Constraint normals as columns: equalities first, then `−Gᵢ`.
    normals: DMatrix<f64>,
    rhs: DVector<f64>,
    n_eq: usize,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a QpProblem) -> Result<Self> {
        let chol = Cholesky::new(problem.q_mat.clone())
            .ok_or_else(|| Error::InvalidArgument("Q is not positive definite".into()))?;
        let n = problem.dim();
        let n_eq = problem.d_mat.nrows();
        let n_in = problem.g_mat.nrows();
        let mut normals = DMatrix::zeros(n, n_eq + n_in);
        let mut rhs = DVector::zeros(n_eq + n_in);
        for i in 0..n_eq {
            normals.column_mut(i).copy_from(&problem.d_mat.row(i).transpose());
            rhs[i] = problem.d_vec[i];
        }
        for j in 0..n_in {
            normals.column_mut(n_eq + j).copy_from(&(-problem.g_mat.row(j).transpose()));
            rhs[n_eq + j] = -problem.g_vec[j];
        }
        Ok(Self {
            problem,
            chol,
            normals,
            rhs,
            n_eq,
        })
    }

    fn slack(&self, c: usize, x: &DVector<f64>) -> f64 {
        self.normals.column(c).dot(x) - self.rhs[c]
    }

    fn kkt_matrix(&self, active: &[usize]) -> DMatrix<f64> {
        let n = self.problem.dim();
        let m = active.len();
        let mut k = DMatrix::zeros(n + m, n + m);
        k.view_mut((0, 0), (n, n)).copy_from(&self.problem.q_mat);
        for (idx, &c) in active.iter().enumerate() {
            let col = self.normals.column(c);
            k.view_mut((0, n + idx), (n, 1)).copy_from(&col);
            k.view_mut((n + idx, 0), (1, n)).copy_from(&col.transpose());
        }
        k
    }

    /// Primal direction `z` and multiplier change `r` for adding constraint
    /// `p`: `Qz + N r = n_p`, `Nᵀz = 0`.
    fn direction(&self, active: &[usize], p: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.problem.dim();
        let np = self.normals.column(p).into_owned();
        if active.is_empty() {
            return Ok((self.chol.solve(&np), DVector::zeros(0)));
        }
        let mut rhs = DVector::zeros(n + active.len());
        rhs.rows_mut(0, n).copy_from(&np);
        let sol = self
            .kkt_matrix(active)
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("working-set KKT system".into()))?;
        Ok((sol.rows(0, n).into_owned(), sol.rows(n, active.len()).into_owned()))
    }

    /// Threshold on `zᵀn_p` below which `n_p` is treated as linearly
    /// dependent on the working set.
    fn dependence_eps(&self, p: usize) -> f64 {
        let np = self.normals.column(p).into_owned();
        1e-10 * np.dot(&self.chol.solve(&np))
    }

    /// Re-solves the KKT system of the final working set exactly.
    fn polish(&self, active: &[usize]) -> Option<(DVector<f64>, Vec<f64>)> {
        let n = self.problem.dim();
        let mut rhs = DVector::zeros(n + active.len());
        rhs.rows_mut(0, n).copy_from(&self.problem.q_vec);
        for (idx, &c) in active.iter().enumerate() {
            rhs[n + idx] = self.rhs[c];
        }
        let sol = self.kkt_matrix(active).lu().solve(&rhs)?;
        let x = sol.rows(0, n).into_owned();
        let u = (0..active.len()).map(|i| -sol[n + i]).collect();
        Some((x, u))
    }

    fn dump_kkt(&self, active: &[usize], path: &PathBuf) -> Result<()> {
        let n = self.problem.dim();
        let k = self.kkt_matrix(active);
        let mut rhs = DVector::zeros(n + active.len());
        rhs.rows_mut(0, n).copy_from(&self.problem.q_vec);
        for (idx, &c) in active.iter().enumerate() {
            rhs[n + idx] = self.rhs[c];
        }
        let mut out = BufWriter::new(File::create(path)?);
        for i in 0..k.nrows() {
            let row: Vec<String> = k.row(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{},{:e}", row.join(","), rhs[i])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn residuals(problem: &QpProblem, x: &DVector<f64>, mu: &DVector<f64>, nu: &DVector<f64>) -> QpResiduals {
    let grad = &problem.q_mat * x - &problem.q_vec
        + problem.g_mat.transpose() * mu
        + problem.d_mat.transpose() * nu;
    let ineq = &problem.g_mat * x - &problem.g_vec;
    let eq = &problem.d_mat * x - &problem.d_vec;
    let primal = ineq.iter().fold(0.0f64, |acc, v| acc.max(*v)).max(eq.amax());
    let complementarity = ineq
        .iter()
        .zip(mu.iter())
        .fold(0.0f64, |acc, (s, m)| acc.max((m * s).abs()).max(-m));
    QpResiduals {
        stationarity: if grad.is_empty() { 0.0 } else { grad.amax() },
        primal,
        complementarity,
    }
}

/// Solves a strictly convex QP. Infeasibility and iteration exhaustion are
/// reported through [`QpSolution::status`]; `Err` is reserved for malformed
/// input (e.g. `Q` not positive definite).
pub fn solve_qp(problem: &QpProblem, opts: &QpOptions) -> Result<QpSolution> {
    let ws = Workspace::new(problem)?;
    let n_eq = ws.n_eq;
    let n_cons = ws.normals.ncols();
    let feas_tol = opts.tol * 1e-2;

    let mut x = ws.chol.solve(&problem.q_vec);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut trace = vec![problem.objective(&x)];
    let mut status = QpStatus::Optimal;
    let mut infeasibility = 0.0;
    let mut iterations = 0;

    for e in 0..n_eq {
        let (z, r) = ws.direction(&active, e)?;
        let s = ws.slack(e, &x);
        let ztn = z.dot(&ws.normals.column(e));
        if ztn <= ws.dependence_eps(e) {
            if s.abs() <= feas_tol {
                continue;
            }
            status = QpStatus::Infeasible;
            infeasibility = s.abs();
            break;
        }
        let t = -s / ztn;
        x.axpy(t, &z, 1.0);
        for (ui, ri) in u.iter_mut().zip(r.iter()) {
            *ui -= t * ri;
        }
        active.push(e);
        u.push(t);
        trace.push(problem.objective(&x));
    }

    'outer: while status == QpStatus::Optimal {
        // Most violated inactive inequality; ties go to the lowest index.
        let mut candidate: Option<(usize, f64)> = None;
        for c in n_eq..n_cons {
            if active.contains(&c) {
                continue;
            }
            let s = ws.slack(c, &x);
            if s < -feas_tol && candidate.is_none_or(|(_, best)| s < best) {
                candidate = Some((c, s));
            }
        }
        let Some((p, _)) = candidate else { break };

        let mut u_p = 0.0;
        loop {
            iterations += 1;
            if iterations > opts.max_iter {
                status = QpStatus::MaxIter;
                break 'outer;
            }
            let (z, r) = ws.direction(&active, p)?;

            // Dual step length: first active inequality whose multiplier hits zero.
            let mut t1 = f64::INFINITY;
            let mut drop: Option<usize> = None;
            for (idx, &c) in active.iter().enumerate() {
                if c < n_eq || r[idx] <= 1e-13 {
                    continue;
                }
                let ratio = u[idx].max(0.0) / r[idx];
                if ratio < t1 || (ratio == t1 && drop.is_some_and(|d| c < active[d])) {
                    t1 = ratio;
                    drop = Some(idx);
                }
            }
            // Primal step length: make constraint p active.
            let ztn = z.dot(&ws.normals.column(p));
            let s_p = ws.slack(p, &x);
            let t2 = if ztn > ws.dependence_eps(p) {
                -s_p / ztn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t.is_infinite() {
                status = QpStatus::Infeasible;
                infeasibility = -s_p;
                break 'outer;
            }

            for (ui, ri) in u.iter_mut().zip(r.iter()) {
                *ui -= t * ri;
            }
            u_p += t;
            if t2.is_finite() {
                x.axpy(t, &z, 1.0);
                trace.push(problem.objective(&x));
            }
            if t2 <= t1 {
                active.push(p);
                u.push(u_p);
                break;
            }
            let k = drop.expect("finite dual step has a blocking constraint");
            active.remove(k);
            u.remove(k);
        }
    }

    if status == QpStatus::Optimal {
        if let Some((xp, up)) = ws.polish(&active) {
            let duals_ok = active
                .iter()
                .zip(up.iter())
                .all(|(&c, &m)| c < n_eq || m >= -opts.tol);
            let primal_ok = (n_eq..n_cons).all(|c| ws.slack(c, &xp) >= -feas_tol);
            if duals_ok && primal_ok {
                x = xp;
                u = up;
            }
        }
    }
    if let Some(path) = &opts.kkt_dump {
        ws.dump_kkt(&active, path)?;
    }

    let mut mu = DVector::zeros(problem.g_mat.nrows());
    let mut nu = DVector::zeros(n_eq);
    for (&c, &m) in active.iter().zip(u.iter()) {
        if c < n_eq {
            nu[c] = -m;
        } else {
            mu[c - n_eq] = m.max(0.0);
        }
    }
    let res = residuals(problem, &x, &mu, &nu);
    if status == QpStatus::Optimal && res.max() > opts.tol {
        status = QpStatus::Inaccurate;
    }
    Ok(QpSolution {
        objective: problem.objective(&x),
        x,
        ineq_duals: mu,
        eq_duals: nu,
        residuals: res,
        iterations,
        status,
        active: active.into_iter().filter(|&c| c >= n_eq).map(|c| c - n_eq).collect(),
        objective_trace: trace,
        infeasibility,
    })
}
