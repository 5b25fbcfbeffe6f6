use nalgebra::DMatrix;

use crate::{Error, Result, STOCHASTIC_TOL};

/// Minimal parametrization of an `X×X` stochastic matrix: the `X(X−1)`
/// off-diagonal entries, row by row in increasing column order. The diagonal
/// is `P[i,i] = 1 − Σ_{j≠i} P[i,j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector {
    values: Vec<f64>,
    num_states: usize,
}

impl ThetaVector {
    pub fn new(values: Vec<f64>, num_states: usize) -> Result<Self> {
        if values.len() != num_states * num_states.saturating_sub(1) {
            return Err(Error::Dimension(format!(
                "theta has length {}, expected {} for X = {num_states}",
                values.len(),
                num_states * num_states.saturating_sub(1)
            )));
        }
        Ok(Self { values, num_states })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Position of `P[row, col]` (`row ≠ col`) in the vector.
    pub fn index(num_states: usize, row: usize, col: usize) -> usize {
        debug_assert!(row != col);
        row * (num_states - 1) + if col < row { col } else { col - 1 }
    }

    /// `(row, col)` of the entry stored at position `a`.
    pub fn entry(num_states: usize, a: usize) -> (usize, usize) {
        let row = a / (num_states - 1);
        let k = a % (num_states - 1);
        (row, if k < row { k } else { k + 1 })
    }

    /// Diagonal entries `1 − Σ_{j≠i} θ`.
    pub fn diagonal(&self) -> Vec<f64> {
        let m = self.num_states.saturating_sub(1);
        (0..self.num_states)
            .map(|i| 1.0 - self.values[i * m..(i + 1) * m].iter().sum::<f64>())
            .collect()
    }

    /// Smallest reconstructed entry of `P`; positive iff interior.
    pub fn boundary_distance(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .chain(self.diagonal())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_interior(&self) -> bool {
        self.boundary_distance() > 0.0
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.num_states)
    }
}

/// Reads the off-diagonal entries of a row-stochastic `P`.
pub fn theta_from_p(p: &DMatrix<f64>) -> Result<ThetaVector> {
    let x = p.nrows();
    if x == 0 || p.ncols() != x {
        return Err(Error::Dimension(format!("P is {}x{}", p.nrows(), p.ncols())));
    }
    for (i, row) in p.row_iter().enumerate() {
        if (row.sum() - 1.0).abs() > STOCHASTIC_TOL * 10.0 || row.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument(format!("P row {} is not a probability vector", i + 1)));
        }
    }
    let mut values = Vec::with_capacity(x * (x - 1));
    for i in 0..x {
        for j in (0..x).filter(|&j| j != i) {
            values.push(p[(i, j)]);
        }
    }
    ThetaVector::new(values, x)
}

/// Rebuilds `P`; fails on the first row with a negative entry.
pub fn p_from_theta(theta: &ThetaVector) -> Result<DMatrix<f64>> {
    let x = theta.num_states;
    let diag = theta.diagonal();
    let mut p = DMatrix::zeros(x, x);
    for i in 0..x {
        if diag[i] < 0.0 {
            return Err(Error::InfeasibleTheta(i));
        }
        p[(i, i)] = diag[i];
        for j in (0..x).filter(|&j| j != i) {
            let v = theta.values[ThetaVector::index(x, i, j)];
            if v < 0.0 {
                return Err(Error::InfeasibleTheta(i));
            }
            p[(i, j)] = v;
        }
    }
    Ok(p)
}
