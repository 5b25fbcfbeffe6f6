use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, STOCHASTIC_TOL};

/// Smallest singular value of `B` below which `rank(B) < X` is assumed.
pub const RANK_TOL: f64 = 1e-10;

/// A finite HMM: transition matrix `P` (X×X), observation matrix `B` (X×Y)
/// and initial distribution `pi0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    p: DMatrix<f64>,
    b: DMatrix<f64>,
    pi0: DVector<f64>,
}

impl HmmModel {
    /// Builds a model and requires structural validity.
    pub fn new(p: DMatrix<f64>, b: DMatrix<f64>, pi0: DVector<f64>) -> Result<Self> {
        let model = Self::new_unchecked(p, b, pi0)?;
        let report = validate_model(&model, ValidationLevel::Structural);
        if !report.is_valid() {
            return Err(Error::InvalidModel(report.to_string()));
        }
        Ok(model)
    }

    /// Builds a model checking only dimensions. Use [`validate_model`] to
    /// inspect the stochastic invariants.
    pub fn new_unchecked(p: DMatrix<f64>, b: DMatrix<f64>, pi0: DVector<f64>) -> Result<Self> {
        let x = p.nrows();
        if x == 0 {
            return Err(Error::Dimension("model needs at least one state".into()));
        }
        if p.ncols() != x {
            return Err(Error::Dimension(format!("P is {}x{}, expected square", x, p.ncols())));
        }
        if b.nrows() != x || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {x} rows and at least one column",
                b.nrows(),
                b.ncols()
            )));
        }
        if pi0.len() != x {
            return Err(Error::Dimension(format!("pi0 has length {}, expected {x}", pi0.len())));
        }
        Ok(Self { p, b, pi0 })
    }

    pub fn num_states(&self) -> usize {
        self.p.nrows()
    }

    pub fn num_outputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn pi0(&self) -> &DVector<f64> {
        &self.pi0
    }

    /// Same sensor and initial distribution, different dynamics.
    pub fn with_transition(&self, p: DMatrix<f64>) -> Result<Self> {
        Self::new(p, self.b.clone(), self.pi0.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationLevel {
    /// Dimensions and stochasticity.
    Structural,
    /// Structural plus `P > 0`, `B > 0` and `rank(B) = X`.
    Assumption1,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failures.is_empty() {
            return write!(f, "ok");
        }
        write!(f, "{}", self.failures.join("; "))
    }
}

pub(crate) fn check_stochastic_rows(name: &str, m: &DMatrix<f64>, failures: &mut Vec<String>) {
    for (i, row) in m.row_iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
            failures.push(format!("{name}[{},{}] = {} is negative or not finite", i + 1, j + 1, row[j]));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            failures.push(format!("{name} row {} sum {sum}", i + 1));
        }
    }
}

/// Checks the model invariants at the requested level. Failures are listed,
/// never raised.
pub fn validate_model(model: &HmmModel, level: ValidationLevel) -> ValidationReport {
    let mut failures = Vec::new();
    check_stochastic_rows("P", &model.p, &mut failures);
    check_stochastic_rows("B", &model.b, &mut failures);
    if model.pi0.iter().any(|v| !v.is_finite() || *v < 0.0) {
        failures.push("pi0 has a negative entry".into());
    }
    let s: f64 = model.pi0.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        failures.push(format!("pi0 sum {s}"));
    }

    if level == ValidationLevel::Assumption1 {
        if model.p.iter().any(|v| *v <= 0.0) {
            failures.push("P is not strictly positive".into());
        }
        if model.b.iter().any(|v| *v <= 0.0) {
            failures.push("B is not strictly positive".into());
        }
        if !has_full_row_rank(&model.b) {
            failures.push(format!("rank(B) < X = {}", model.num_states()));
        }
    }
    ValidationReport { failures }
}

/// `rank(B) = X`, judged by the smallest singular value.
pub(crate) fn has_full_row_rank(b: &DMatrix<f64>) -> bool {
    if b.nrows() > b.ncols() {
        return false;
    }
    let sv = b.clone().singular_values();
    sv.iter().cloned().fold(f64::INFINITY, f64::min) > RANK_TOL
}
