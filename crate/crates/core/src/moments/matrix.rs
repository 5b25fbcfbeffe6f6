use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::hmm::{stationary_distribution, HmmModel, ObservationSequence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// `M_k` for a fixed time index.
    Analytic(usize),
    AnalyticStationary,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    Step(usize),
    Stationary,
}

/// Joint law (or empirical frequency) of consecutive observation pairs:
/// `M[i, j] = Pr(yₖ = i, yₖ₊₁ = j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    m: DMatrix<f64>,
    kind: MomentKind,
}

impl MomentMatrix {
    /// Requires a square, nonnegative matrix summing to one.
    pub fn new(m: DMatrix<f64>, kind: MomentKind) -> Result<Self> {
        if m.nrows() != m.ncols() || m.is_empty() {
            return Err(Error::Dimension(format!("moment matrix is {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("moment matrix has a negative entry".into()));
        }
        let s = m.sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("moment matrix sums to {s}")));
        }
        Ok(Self { m, kind })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn num_outputs(&self) -> usize {
        self.m.nrows()
    }

    /// CSV with a `y1,…,yY` header and one row per first label.
    pub fn to_csv(&self) -> String {
        let y = self.num_outputs();
        let mut out = String::new();
        let header: Vec<String> = (1..=y).map(|j| format!("y{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.m.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// `M_k = Bᵀ diag((Pᵀ)ᵏ π₀) P B`; the stationary order uses `π∞`.
pub fn analytic_moments(model: &HmmModel, order: MomentOrder) -> Result<MomentMatrix> {
    let (p, b) = (model.p(), model.b());
    let (dist, kind): (DVector<f64>, _) = match order {
        MomentOrder::Step(k) => {
            let pt = p.transpose();
            let mut d = model.pi0().clone();
            for _ in 0..k {
                d = &pt * d;
            }
            (d, MomentKind::Analytic(k))
        }
        MomentOrder::Stationary => (stationary_distribution(p)?, MomentKind::AnalyticStationary),
    };
    let m = b.transpose() * DMatrix::from_diagonal(&dist) * p * b;
    MomentMatrix::new(m, kind)
}

/// `M̂[i, j] = #{k < N : yₖ = i, yₖ₊₁ = j} / N`, in one pass over the data.
pub fn empirical_moments(obs: &ObservationSequence) -> Result<MomentMatrix> {
    obs.require_pairs()?;
    let y = obs.num_outputs();
    let labels = obs.pass();
    let mut counts = vec![0u64; y * y];
    for w in labels.windows(2) {
        counts[w[0] + y * w[1]] += 1;
    }
    let n = obs.num_pairs() as f64;
    let m = DMatrix::from_column_slice(y, y, &counts.iter().map(|&c| c as f64 / n).collect::<Vec<_>>());
    MomentMatrix::new(m, MomentKind::Empirical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example() -> HmmModel {
        HmmModel::new(
            DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.4, 0.6]),
            DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.3, 0.7]),
            DVector::from_vec(vec![0.5, 0.5]),
        )
        .unwrap()
    }

    /// `Pr(y_k = i, y_{k+1} = j)` by summing over every state path `x_0..x_{k+1}`.
    fn path_enumeration_moments(model: &HmmModel, k: usize) -> DMatrix<f64> {
        let x = model.num_states();
        let y = model.num_outputs();
        let len = k + 2;
        let mut m = DMatrix::zeros(y, y);
        let total = x.pow(len as u32);
        for code in 0..total {
            let mut path = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                path.push(c % x);
                c /= x;
            }
            let mut prob = model.pi0()[path[0]];
            for t in 1..len {
                prob *= model.p()[(path[t - 1], path[t])];
            }
            for i in 0..y {
                for j in 0..y {
                    m[(i, j)] += prob * model.b()[(path[k], i)] * model.b()[(path[k + 1], j)];
                }
            }
        }
        m
    }

    #[test]
    fn noiseless_sensor_reduces_to_diag_pi0_p() {
        let m = HmmModel::new(
            DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.4, 0.6]),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let m0 = analytic_moments(&m, MomentOrder::Step(0)).unwrap();
        assert_eq!(m0.matrix(), &DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.0, 0.0]));
    }

    #[test]
    fn fully_symmetric_model_has_flat_moments() {
        let m = HmmModel::new(
            DMatrix::from_element(3, 3, 1.0 / 3.0),
            DMatrix::from_element(3, 3, 1.0 / 3.0),
            DVector::from_vec(vec![0.2, 0.3, 0.5]),
        )
        .unwrap();
        for order in [MomentOrder::Step(0), MomentOrder::Step(4), MomentOrder::Stationary] {
            let mk = analytic_moments(&m, order).unwrap();
            assert!(mk.matrix().iter().all(|v| (v - 1.0 / 9.0).abs() < 1e-15));
        }
    }

    #[test]
    fn analytic_moments_match_path_enumeration() {
        let m = example();
        let m3 = analytic_moments(&m, MomentOrder::Step(3)).unwrap();
        let oracle = path_enumeration_moments(&m, 3);
        assert!((m3.matrix() - oracle).amax() < 1e-15);
        assert_eq!(m3.kind(), MomentKind::Analytic(3));
    }

    #[test]
    fn moments_converge_to_stationary() {
        let m = example();
        let inf = analytic_moments(&m, MomentOrder::Stationary).unwrap();
        let dists: Vec<f64> = (0..10)
            .map(|k| (analytic_moments(&m, MomentOrder::Step(k)).unwrap().matrix() - inf.matrix()).norm())
            .collect();
        assert!(dists.windows(2).all(|w| w[1] <= w[0]));
        assert!(dists[9] < 1e-4);
    }

    #[test]
    fn constant_sequence() {
        let obs = ObservationSequence::new(vec![0, 0, 0, 0], 2).unwrap();
        let m = empirical_moments(&obs).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(obs.passes(), 1);
    }

    #[test]
    fn alternating_sequence() {
        // (1,2,1,2,1) in 1-based labels: pairs 12, 21, 12, 21
        let obs = ObservationSequence::new(vec![0, 1, 0, 1, 0], 2).unwrap();
        let m = empirical_moments(&obs).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
    }

    #[test]
    fn empirical_moments_need_two_observations() {
        let obs = ObservationSequence::new(vec![0], 2).unwrap();
        assert!(empirical_moments(&obs).is_err());
    }

    #[test]
    fn empirical_moments_converge() {
        let m = example();
        let s = sample(&m, 100_001, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mhat = empirical_moments(&s.obs).unwrap();
        let inf = analytic_moments(&m, MomentOrder::Stationary).unwrap();
        assert!((mhat.matrix() - inf.matrix()).norm() <= 0.02);
        assert!((mhat.matrix().sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let obs = ObservationSequence::new(vec![0, 1, 0, 1, 0], 2).unwrap();
        let csv = empirical_moments(&obs).unwrap().to_csv();
        assert_eq!(csv, "y1,y2\n0,0.5\n0.5,0\n");
    }
}
