use nalgebra::DMatrix;

use crate::{Error, Result};

/// `‖P̂ − P‖_F / X`, the root mean squared error over the `X²` entries.
pub fn rmse(p_hat: &DMatrix<f64>, p_true: &DMatrix<f64>) -> Result<f64> {
    if p_hat.shape() != p_true.shape() || p_hat.nrows() != p_hat.ncols() {
        return Err(Error::Dimension(format!(
            "rmse of {:?} against {:?}",
            p_hat.shape(),
            p_true.shape()
        )));
    }
    Ok((p_hat - p_true).norm() / p_hat.nrows() as f64)
}

/// Median (mean of the two middle values for even counts); `None` if empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if values.len() % 2 == 1 {
        return Some(upper);
    }
    let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(0.5 * (lower + upper))
}
