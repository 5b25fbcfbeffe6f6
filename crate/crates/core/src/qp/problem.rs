use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Standard-form convex QP data. See the module docs for the sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub q_mat: DMatrix<f64>,
    pub q_vec: DVector<f64>,
    pub g_mat: DMatrix<f64>,
    pub g_vec: DVector<f64>,
    pub d_mat: DMatrix<f64>,
    pub d_vec: DVector<f64>,
}

impl QpProblem {
    /// Validates dimensions, symmetry of `Q` (1e-12) and full row rank of `D`.
    pub fn new(
        q_mat: DMatrix<f64>,
        q_vec: DVector<f64>,
        g_mat: DMatrix<f64>,
        g_vec: DVector<f64>,
        d_mat: DMatrix<f64>,
        d_vec: DVector<f64>,
    ) -> Result<Self> {
        let n = q_vec.len();
        if q_mat.nrows() != n || q_mat.ncols() != n {
            return Err(Error::Dimension(format!(
                "Q is {}x{}, q has length {n}",
                q_mat.nrows(),
                q_mat.ncols()
            )));
        }
        if g_mat.ncols() != n || g_mat.nrows() != g_vec.len() {
            return Err(Error::Dimension("inequality block G, g inconsistent".into()));
        }
        if d_mat.ncols() != n || d_mat.nrows() != d_vec.len() {
            return Err(Error::Dimension("equality block D, d inconsistent".into()));
        }
        if (&q_mat - q_mat.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidArgument("Q is not symmetric".into()));
        }
        if d_mat.nrows() > 0 {
            let sv = d_mat.clone().singular_values();
            if d_mat.nrows() > n || sv.min() <= 1e-12 * sv.max().max(1.0) {
                return Err(Error::InvalidArgument("D is not of full row rank".into()));
            }
        }
        Ok(Self {
            q_mat,
            q_vec,
            g_mat,
            g_vec,
            d_mat,
            d_vec,
        })
    }

    /// Unconstrained problem.
    pub fn unconstrained(q_mat: DMatrix<f64>, q_vec: DVector<f64>) -> Result<Self> {
        let n = q_vec.len();
        Self::new(
            q_mat,
            q_vec,
            DMatrix::zeros(0, n),
            DVector::zeros(0),
            DMatrix::zeros(0, n),
            DVector::zeros(0),
        )
    }

    pub fn dim(&self) -> usize {
        self.q_vec.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) - self.q_vec.dot(x)
    }
}
