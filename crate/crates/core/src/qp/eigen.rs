use nalgebra::DMatrix;

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(q: &DMatrix<f64>) -> f64 {
    if q.is_empty() {
        return f64::INFINITY;
    }
    q.clone().symmetric_eigenvalues().min()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(q: &DMatrix<f64>) -> f64 {
    if q.is_empty() {
        return f64::NEG_INFINITY;
    }
    q.clone().symmetric_eigenvalues().max()
}
