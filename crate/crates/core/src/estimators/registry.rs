use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{
    estimate_em, estimate_mm, estimate_two_step, project_inward, random_transition, EmOptions, EstimationReport,
    Method, NewtonOptions, PhaseTiming,
};
use crate::hmm::ObservationSequence;
use crate::likelihood::{p_from_theta, theta_from_p};
use crate::moments::PolytopeBound;
use crate::rng::{stream_rng, STREAM_EM_INIT};
use crate::{Error, Result};

/// Everything an estimator may need for one run.
#[derive(Debug, Clone)]
pub struct EstimationInput<'a> {
    pub obs: &'a ObservationSequence,
    pub b: &'a DMatrix<f64>,
    pub pi0: &'a DVector<f64>,
    pub bound: &'a PolytopeBound,
    /// True transition matrix, required only by EM-True.
    pub truth: Option<&'a DMatrix<f64>>,
    /// Seed for the random EM initialization.
    pub init_seed: u64,
    pub em: EmOptions,
    pub newton: NewtonOptions,
}

pub trait Estimator: Send + Sync {
    fn method(&self) -> Method;

    fn name(&self) -> &'static str {
        self.method().name()
    }

    fn estimate(&self, input: &EstimationInput<'_>) -> Result<EstimationReport>;
}

struct MomentMatching;
struct TwoStep;
struct EmRandom;
struct EmFromMoments;
struct EmFromTruth;

impl Estimator for MomentMatching {
    fn method(&self) -> Method {
        Method::Mm
    }

    fn estimate(&self, input: &EstimationInput<'_>) -> Result<EstimationReport> {
        estimate_mm(input.obs, input.b, input.bound, &input.newton.qp)
    }
}

impl Estimator for TwoStep {
    fn method(&self) -> Method {
        Method::TwoStep
    }

    fn estimate(&self, input: &EstimationInput<'_>) -> Result<EstimationReport> {
        estimate_two_step(input.obs, input.b, input.pi0, input.bound, &input.newton)
    }
}

impl Estimator for EmRandom {
    fn method(&self) -> Method {
        Method::Em
    }

    fn estimate(&self, input: &EstimationInput<'_>) -> Result<EstimationReport> {
        let mut rng = stream_rng(input.init_seed, STREAM_EM_INIT);
        let p_init = random_transition(input.b.nrows(), &mut rng);
        estimate_em(input.obs, input.b, input.pi0, &p_init, &input.em)
    }
}

impl Estimator for EmFromMoments {
    fn method(&self) -> Method {
        Method::EmMm
    }

    fn estimate(&self, input: &EstimationInput<'_>) -> Result<EstimationReport> {
        let start = Instant::now();
        let mm = estimate_mm(input.obs, input.b, input.bound, &input.newton.qp)?;
        // Zeros are absorbing for EM, so start strictly inside.
        let (theta, _) = project_inward(&mm.theta_hat, input.newton.projection_eps)?;
        let p_init = p_from_theta(&theta)?;
        let mm_seconds = start.elapsed().as_secs_f64();
        let mut report = estimate_em(input.obs, input.b, input.pi0, &p_init, &input.em)?;
        report.method = Method::EmMm;
        report.passes += mm.passes;
        report.qp_residual = mm.qp_residual;
        report.timings.insert(0, PhaseTiming { phase: "mm", seconds: mm_seconds });
        Ok(report)
    }
}

impl Estimator for EmFromTruth {
    fn method(&self) -> Method {
        Method::EmTrue
    }

    fn estimate(&self, input: &EstimationInput<'_>) -> Result<EstimationReport> {
        let truth = input
            .truth
            .ok_or_else(|| Error::InvalidArgument("em-true needs the true transition matrix".into()))?;
        theta_from_p(truth)?;
        let mut report = estimate_em(input.obs, input.b, input.pi0, truth, &input.em)?;
        report.method = Method::EmTrue;
        Ok(report)
    }
}

/// Estimators selectable by name.
pub struct EstimatorRegistry {
    entries: Vec<Box<dyn Estimator>>,
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Registry holding `mm`, `2s`, `em`, `em-mm` and `em-true`.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(MomentMatching));
        r.register(Box::new(TwoStep));
        r.register(Box::new(EmRandom));
        r.register(Box::new(EmFromMoments));
        r.register(Box::new(EmFromTruth));
        r
    }

    /// Adds an estimator, replacing any existing one with the same name.
    pub fn register(&mut self, estimator: Box<dyn Estimator>) {
        self.entries.retain(|e| e.name() != estimator.name());
        self.entries.push(estimator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Estimator> {
        let key = name.trim().to_ascii_lowercase();
        let key = key.parse::<Method>().map(|m| m.name().to_string()).unwrap_or(key);
        self.entries
            .iter()
            .find(|e| e.name() == key)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownEstimator(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}
