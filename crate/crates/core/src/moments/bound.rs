use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Elementwise lower bound `ℓ` on the stationary distribution, entering the
/// moment-matching problem as `A𝟙 ≥ ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeBound {
    lower: DVector<f64>,
    /// Normalized columns of `(I − Lᵀ)⁻¹` when derived from a bound on `P`.
    vertices: Option<DMatrix<f64>>,
}

impl PolytopeBound {
    /// `ℓ > 0` elementwise and `𝟙ᵀℓ ≤ 1`.
    pub fn elementwise(lower: DVector<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument("empty bound".into()));
        }
        if let Some(i) = lower.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bound entry {} = {} must be positive (uninformative bound)",
                i + 1,
                lower[i]
            )));
        }
        if lower.sum() > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "bound sums to {} > 1, the moment-matching problem would be infeasible",
                lower.sum()
            )));
        }
        Ok(Self { lower, vertices: None })
    }

    pub fn uniform(num_states: usize, value: f64) -> Result<Self> {
        Self::elementwise(DVector::from_element(num_states, value))
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn vertices(&self) -> Option<&DMatrix<f64>> {
        self.vertices.as_ref()
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }
}

/// Derives `ℓ` from an elementwise lower bound `L ≤ P`.
///
/// The stationary distribution lies in the polyhedron spanned by the
/// normalized columns of `(I − Lᵀ)⁻¹`; `ℓᵢ` is the smallest `i`-th
/// coordinate over those vertices. Requires `ρ(L) < 1`, i.e. `(I − Lᵀ)⁻¹ ≥ 0`.
pub fn polytope_from_lower_bound(l: &DMatrix<f64>) -> Result<PolytopeBound> {
    let x = l.nrows();
    if x == 0 || l.ncols() != x {
        return Err(Error::Dimension(format!("L is {}x{}", l.nrows(), l.ncols())));
    }
    if l.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("L must be nonnegative".into()));
    }
    let inv = (DMatrix::identity(x, x) - l.transpose())
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - L^T".into()))?;
    if inv.iter().any(|v| *v < -1e-12) {
        return Err(Error::InvalidArgument("spectral radius of L is not below 1".into()));
    }
    let mut vertices = inv;
    for mut col in vertices.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    let lower = DVector::from_fn(x, |i, _| vertices.row(i).min());
    let mut bound = PolytopeBound::elementwise(lower)?;
    bound.vertices = Some(vertices);
    Ok(bound)
}
