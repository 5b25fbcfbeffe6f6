use thiserror::Error;

use crate::qp::QpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no unique stationary distribution")]
    NoStationaryDistribution,

    #[error("moment matching not strictly convex: rank(B) < X")]
    NotStrictlyConvex,

    #[error("degenerate stationary mass in row {0}")]
    DegenerateMass(usize),

    #[error("quadratic program failed with status {status:?} (residual {residual:.3e})")]
    Qp { status: QpStatus, residual: f64 },

    #[error("impossible observation at step {0}")]
    ImpossibleObservation(usize),

    #[error("infeasible parameter vector: negative diagonal in row {0}")]
    InfeasibleTheta(usize),

    #[error("finite difference step {h:e} too close to the boundary (distance {dist:e})")]
    BoundaryTooClose { h: f64, dist: f64 },

    #[error("perturbation too large for bound: delta {delta:e} >= lambda_min {lambda:e}")]
    PerturbationTooLarge { delta: f64, lambda: f64 },

    #[error("state {0} starved: zero expected visits")]
    StateStarved(usize),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("random system generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
}

impl Error {
    /// Input or validation problems, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::InvalidModel(_)
                | Error::Parse { .. }
                | Error::InvalidArgument(_)
                | Error::Io(_)
                | Error::UnknownEstimator(_)
        )
    }
}
