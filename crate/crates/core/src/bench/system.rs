use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::hmm::{stationary_distribution, validate_model, HmmModel, ValidationLevel};
use crate::moments::PolytopeBound;
use crate::rng::{stream_rng, STREAM_SYSTEM};
use crate::{Error, Result};

pub const MAX_GENERATION_ATTEMPTS: usize = 100;

fn row_normalize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    m
}

/// Random model with a diagonally dominated transition matrix and sensor:
/// `P = rownorm(I + U/X)`, `B = rownorm([I 0] + U'/Y)` with uniform `U, U'`,
/// and uniform `π₀`. Redrawn until the model satisfies the identifiability
/// assumptions.
pub fn generate_random_system(x: usize, y: usize, seed: u64) -> Result<HmmModel> {
    if x == 0 || y < x {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= X <= Y for a full-rank sensor, got X={x}, Y={y}"
        )));
    }
    let mut rng = stream_rng(seed, STREAM_SYSTEM);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let p = DMatrix::from_fn(x, x, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random::<f64>() / x as f64);
        let b = DMatrix::from_fn(x, y, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random::<f64>() / y as f64);
        let model = HmmModel::new(
            row_normalize(p),
            row_normalize(b),
            DVector::from_element(x, 1.0 / x as f64),
        )?;
        if validate_model(&model, ValidationLevel::Assumption1).is_valid() {
            return Ok(model);
        }
    }
    Err(Error::GenerationFailed(MAX_GENERATION_ATTEMPTS))
}

/// Uniform lower bound at a tenth of the smallest stationary probability.
pub fn default_bound(model: &HmmModel) -> Result<PolytopeBound> {
    let pi = stationary_distribution(model.p())?;
    PolytopeBound::uniform(model.num_states(), pi.min() / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::write_model;

    #[test]
    fn scalar_system() {
        let m = generate_random_system(1, 1, 9).unwrap();
        assert_eq!(m.p()[(0, 0)], 1.0);
        assert_eq!(m.b()[(0, 0)], 1.0);
    }

    #[test]
    fn generated_systems_are_valid_and_reproducible() {
        for seed in 0..20 {
            let m = generate_random_system(5, 5, seed).unwrap();
            assert!(validate_model(&m, ValidationLevel::Assumption1).is_valid());
            let again = generate_random_system(5, 5, seed).unwrap();
            assert_eq!(write_model(&m), write_model(&again));
        }
        assert_ne!(
            write_model(&generate_random_system(3, 4, 1).unwrap()),
            write_model(&generate_random_system(3, 4, 2).unwrap())
        );
    }

    #[test]
    fn default_bound_examples() {
        let b = DMatrix::identity(2, 2);
        let pi0 = DVector::from_element(2, 0.5);
        let sym = HmmModel::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]), b.clone(), pi0.clone()).unwrap();
        let l = default_bound(&sym).unwrap();
        assert!((l.lower() - DVector::from_element(2, 0.05)).amax() < 1e-12);
        let ex = HmmModel::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.4, 0.6]), b, pi0).unwrap();
        let l = default_bound(&ex).unwrap();
        assert!((l.lower()[0] - 3.0 / 70.0).abs() < 1e-12);
    }

    #[test]
    fn default_bound_is_slack_at_truth() {
        for seed in 0..10 {
            let m = generate_random_system(5, 5, seed).unwrap();
            let pi = stationary_distribution(m.p()).unwrap();
            let l = default_bound(&m).unwrap();
            assert!(pi.iter().zip(l.lower().iter()).all(|(p, l)| *p >= 10.0 * l - 1e-15));
        }
    }
}
