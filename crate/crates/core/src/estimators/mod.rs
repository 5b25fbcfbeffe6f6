//! Transition-matrix estimators: moment matching (MM), the two-step
//! estimator (MM followed by one constrained Newton step, 2S) and a
//! Baum-Welch baseline with the sensor held fixed (EM, EM-MM, EM-True).

mod em;
mod mm;
mod newton;
mod registry;
mod report;
mod two_step;

pub use em::{estimate_em, random_transition, EmOptions};
pub use mm::{estimate_mm, estimate_mm_from_moments};
pub use newton::{newton_step, project_inward, NewtonDiagnostics, NewtonOptions};
pub use registry::{EstimationInput, Estimator, EstimatorRegistry};
pub use report::{EstimationReport, Method, PhaseTiming};
pub use two_step::{estimate_two_step, two_step_with};
