use nalgebra::DMatrix;
use rand::Rng;

use super::{validate_model, HmmModel, ObservationSequence, ValidationLevel};
use crate::{Error, Result};

/// A simulated run: observations plus the hidden state path that produced them.
#[derive(Debug, Clone)]
pub struct Sample {
    pub obs: ObservationSequence,
    pub states: Vec<usize>,
}

/// Inverse-CDF categorical sampler over the rows of a stochastic matrix.
struct RowSampler {
    cumulative: Vec<Vec<f64>>,
}

impl RowSampler {
    fn new(m: &DMatrix<f64>) -> Self {
        let cumulative = m
            .row_iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { cumulative }
    }

    fn draw<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        draw_cumulative(&self.cumulative[row], rng)
    }
}

fn draw_cumulative<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
    match cum.iter().position(|&c| u < c) {
        Some(i) => i,
        // u can only reach the total through round-off; take the last
        // symbol with positive mass.
        None => {
            let mut i = cum.len() - 1;
            while i > 0 && cum[i] == cum[i - 1] {
                i -= 1;
            }
            i
        }
    }
}

/// Simulates `n_obs` observations: `x₀ ~ π₀`, `yₖ ~ B[xₖ, ·]`,
/// `xₖ₊₁ ~ P[xₖ, ·]`. Deterministic given the generator state.
pub fn sample<R: Rng + ?Sized>(model: &HmmModel, n_obs: usize, rng: &mut R) -> Result<Sample> {
    if n_obs < 2 {
        return Err(Error::InvalidArgument(format!("n_obs = {n_obs}, need at least 2")));
    }
    let report = validate_model(model, ValidationLevel::Structural);
    if !report.is_valid() {
        return Err(Error::InvalidModel(report.to_string()));
    }
    let transitions = RowSampler::new(model.p());
    let emissions = RowSampler::new(model.b());
    let mut init_cum = Vec::with_capacity(model.num_states());
    let mut acc = 0.0;
    for v in model.pi0().iter() {
        acc += v;
        init_cum.push(acc);
    }

    let mut states = Vec::with_capacity(n_obs);
    let mut labels = Vec::with_capacity(n_obs);
    let mut x = draw_cumulative(&init_cum, rng);
    for k in 0..n_obs {
        if k > 0 {
            x = transitions.draw(x, rng);
        }
        states.push(x);
        labels.push(emissions.draw(x, rng));
    }
    Ok(Sample {
        obs: ObservationSequence::new(labels, model.num_outputs())?,
        states,
    })
}
