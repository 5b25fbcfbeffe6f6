//! Model representation, simulation, stationary analysis and the lumped
//! observation-pair chain.

mod io;
mod lumped;
pub(crate) mod model;
mod observations;
mod sample;
mod stationary;

pub use io::{parse_lower_bound, parse_model, parse_observations, write_model, write_observations};
pub use lumped::{lumped_chain, LumpedChain};
pub use model::{validate_model, HmmModel, ValidationLevel, ValidationReport};
pub use observations::ObservationSequence;
pub use sample::{sample, Sample};
pub use stationary::stationary_distribution;
