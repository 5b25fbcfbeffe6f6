use nalgebra::DMatrix;

use super::HmmModel;

/// Markov chain on triples `z = (yₖ, yₖ₊₁, xₖ₊₁)`.
///
/// States are enumerated lexicographically with `yₖ` varying fastest, then
/// `yₖ₊₁`, then `xₖ₊₁`: `index = i + Y·j + Y²·l`.
#[derive(Debug, Clone)]
pub struct LumpedChain {
    pub num_states: usize,
    pub num_outputs: usize,
    pub transition: DMatrix<f64>,
}

impl LumpedChain {
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        let y = self.num_outputs;
        i + y * j + y * y * l
    }

    pub fn size(&self) -> usize {
        self.transition.nrows()
    }

    /// Sums a distribution over `z` down to the `(yₖ, yₖ₊₁)` marginal.
    pub fn pair_marginal(&self, dist: &[f64]) -> DMatrix<f64> {
        let y = self.num_outputs;
        let mut m = DMatrix::zeros(y, y);
        for l in 0..self.num_states {
            for j in 0..y {
                for i in 0..y {
                    m[(i, j)] += dist[self.index(i, j, l)];
                }
            }
        }
        m
    }
}

/// `T[(i,j,l) → (i′,j′,l′)] = 𝟙{i′ = j} · P[l,l′] · B[l′,j′]`.
pub fn lumped_chain(model: &HmmModel) -> LumpedChain {
    let x = model.num_states();
    let y = model.num_outputs();
    let (p, b) = (model.p(), model.b());
    let mut chain = LumpedChain {
        num_states: x,
        num_outputs: y,
        transition: DMatrix::zeros(y * y * x, y * y * x),
    };
    for l in 0..x {
        for j in 0..y {
            for i in 0..y {
                let from = chain.index(i, j, l);
                for l2 in 0..x {
                    for j2 in 0..y {
                        let to = chain.index(j, j2, l2);
                        chain.transition[(from, to)] = p[(l, l2)] * b[(l2, j2)];
                    }
                }
            }
        }
    }
    chain
}
