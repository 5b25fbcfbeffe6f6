use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Stationary distribution of a row-stochastic `P`.
///
/// Solves `[(Pᵀ − I); 𝟙ᵀ] π = [0; 1]` in the least-squares sense, which
/// fixes the normalization exactly and avoids complex eigenvectors.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::Dimension(format!("P is {}x{}", n, p.ncols())));
    }
    let mut system = DMatrix::zeros(n + 1, n);
    system
        .view_mut((0, 0), (n, n))
        .copy_from(&(p.transpose() - DMatrix::identity(n, n)));
    system.row_mut(n).fill(1.0);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;

    let svd = system.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(Error::NoStationaryDistribution);
    }
    let pi = svd.solve(&rhs, 0.0).map_err(|e| Error::Singular(e.to_string()))?;

    let residual = (p.transpose() * &pi - &pi).amax();
    if residual > 1e-10 || pi.iter().any(|v| *v < -1e-12) {
        return Err(Error::NoStationaryDistribution);
    }
    // Clip round-off negatives and restore the exact normalization.
    let mut pi = pi.map(|v| v.max(0.0));
    let s = pi.sum();
    pi /= s;
    Ok(pi)
}
