//! Seeded Monte Carlo harness: random systems, replicate sweeps over sample
//! sizes, median aggregation and CSV output.

mod config;
mod run;
mod stats;
mod system;

pub use config::{parse_config, parse_size, BenchmarkConfig, BoundPolicy};
pub use run::{run_benchmark, BenchmarkOutcome, BenchmarkRow, ReplicateRecord, ReplicateStatus, MEDIAN_HEADER};
pub use stats::{median, rmse};
pub use system::{default_bound, generate_random_system, MAX_GENERATION_ATTEMPTS};
