use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use super::{default_bound, generate_random_system, median, rmse, BenchmarkConfig, BoundPolicy};
use crate::estimators::{EstimationInput, EstimationReport, EstimatorRegistry, Method, NewtonOptions};
use crate::hmm::{sample, HmmModel};
use crate::moments::PolytopeBound;
use crate::rng::{stream_rng, STREAM_SAMPLING};
use crate::{Error, Result};

pub const MEDIAN_HEADER: &str =
    "N,mom,em,em_mom,em_true,newton,mom_time,em_time,em_mom_time,em_true_time,newton_time";

#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateStatus {
    Ok,
    /// Completed, but the Hessian had to be regularized.
    NonNdHessian,
    Failed(String),
}

impl ReplicateStatus {
    pub fn label(&self) -> String {
        match self {
            ReplicateStatus::Ok => "ok".into(),
            ReplicateStatus::NonNdHessian => "non_nd_hessian".into(),
            ReplicateStatus::Failed(msg) => format!("failed: {}", msg.replace([',', '\n'], ";")),
        }
    }

    pub fn completed(&self) -> bool {
        !matches!(self, ReplicateStatus::Failed(_))
    }
}

/// One estimator run on one replicate at one sample size.
#[derive(Debug, Clone)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    pub method: Method,
    pub status: ReplicateStatus,
    pub rmse: Option<f64>,
    /// Wall clock around the estimator call.
    pub seconds: f64,
    pub report: Option<EstimationReport>,
}

/// Medians over completed replicates at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub n: usize,
    pub rmse: BTreeMap<Method, f64>,
    pub seconds: BTreeMap<Method, f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub rows: Vec<BenchmarkRow>,
    /// Ordered by replicate, then size, then arm.
    pub records: Vec<ReplicateRecord>,
    /// Generating system of each replicate.
    pub systems: Vec<HmmModel>,
    pub median_csv: String,
    pub raw_csv: String,
}

impl BenchmarkOutcome {
    pub fn records_for(&self, n: usize, method: Method) -> impl Iterator<Item = &ReplicateRecord> {
        self.records.iter().filter(move |r| r.n == n && r.method == method)
    }

    pub fn row(&self, n: usize) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Path of the raw per-replicate CSV belonging to a median CSV path.
pub fn raw_path(median_path: &Path) -> PathBuf {
    let stem = median_path.file_stem().and_then(|s| s.to_str()).unwrap_or("benchmark");
    median_path.with_file_name(format!("{stem}_raw.csv"))
}

fn replicate_bound(config: &BenchmarkConfig, model: &HmmModel) -> Result<PolytopeBound> {
    match config.bound {
        BoundPolicy::TenthOfMinStationary => default_bound(model),
        BoundPolicy::Uniform(v) => PolytopeBound::uniform(model.num_states(), v),
    }
}

fn run_replicate(
    config: &BenchmarkConfig,
    registry: &EstimatorRegistry,
    replicate: usize,
) -> Result<(HmmModel, Vec<ReplicateRecord>)> {
    let seed = config.seed ^ replicate as u64;
    let model = match &config.model {
        Some(m) => m.clone(),
        None => generate_random_system(config.num_states, config.num_outputs, seed)?,
    };
    let bound = replicate_bound(config, &model)?;
    let max_n = *config.sizes.iter().max().expect("validated nonempty");
    let mut rng = stream_rng(seed, STREAM_SAMPLING);
    let full = sample(&model, max_n + 1, &mut rng)?.obs;

    let mut records = Vec::with_capacity(config.sizes.len() * config.arms.len());
    for &n in &config.sizes {
        let obs = full.prefix(n)?;
        for &method in &config.arms {
            let estimator = registry.get(method.name())?;
            let input = EstimationInput {
                obs: &obs,
                b: model.b(),
                pi0: model.pi0(),
                bound: &bound,
                truth: Some(model.p()),
                init_seed: seed,
                em: config.em,
                newton: NewtonOptions::default(),
            };
            let start = Instant::now();
            let result = estimator.estimate(&input);
            let seconds = start.elapsed().as_secs_f64();
            let record = match result {
                Ok(report) => ReplicateRecord {
                    replicate,
                    seed,
                    n,
                    method,
                    status: if report.non_nd_hessian {
                        ReplicateStatus::NonNdHessian
                    } else {
                        ReplicateStatus::Ok
                    },
                    rmse: Some(rmse(&report.p_hat, model.p())?),
                    seconds,
                    report: Some(report),
                },
                Err(e) if !e.is_input_error() => {
                    warn!("replicate {replicate}, N={n}, {}: {e}", method.tag());
                    ReplicateRecord {
                        replicate,
                        seed,
                        n,
                        method,
                        status: ReplicateStatus::Failed(e.to_string()),
                        rmse: None,
                        seconds,
                        report: None,
                    }
                }
                Err(e) => return Err(e),
            };
            records.push(record);
        }
    }
    Ok((model, records))
}

fn aggregate(config: &BenchmarkConfig, records: &[ReplicateRecord]) -> Vec<BenchmarkRow> {
    config
        .sizes
        .iter()
        .map(|&n| {
            let mut row = BenchmarkRow { n, rmse: BTreeMap::new(), seconds: BTreeMap::new() };
            for &method in &config.arms {
                let done: Vec<&ReplicateRecord> = records
                    .iter()
                    .filter(|r| r.n == n && r.method == method && r.status.completed())
                    .collect();
                let errors: Vec<f64> = done.iter().filter_map(|r| r.rmse).collect();
                let times: Vec<f64> = done.iter().map(|r| r.seconds).collect();
                if let (Some(e), Some(t)) = (median(&errors), median(&times)) {
                    row.rmse.insert(method, e);
                    row.seconds.insert(method, t);
                }
            }
            row
        })
        .collect()
}

fn median_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(MEDIAN_HEADER);
    out.push('\n');
    for row in rows {
        let mut cells = vec![row.n.to_string()];
        cells.extend(Method::ALL.iter().map(|m| row.rmse.get(m).map(|v| v.to_string()).unwrap_or_default()));
        cells.extend(Method::ALL.iter().map(|m| row.seconds.get(m).map(|v| format!("{v:.6}")).unwrap_or_default()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn raw_csv(num_states: usize, records: &[ReplicateRecord]) -> String {
    let mut out = String::from("replicate,seed,N,method,status,rmse,seconds,regularization,iterations,passes");
    for i in 1..=num_states {
        for j in 1..=num_states {
            let _ = write!(out, ",p_{i}_{j}");
        }
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{:.6}",
            r.replicate,
            r.seed,
            r.n,
            r.method.csv_key(),
            r.status.label(),
            r.rmse.map(|v| v.to_string()).unwrap_or_default(),
            r.seconds
        );
        match &r.report {
            Some(rep) => {
                let _ = write!(
                    out,
                    ",{},{},{}",
                    rep.regularization,
                    rep.iterations.map(|v| v.to_string()).unwrap_or_default(),
                    rep.passes
                );
                for row in rep.p_hat.row_iter() {
                    for v in row.iter() {
                        let _ = write!(out, ",{v}");
                    }
                }
            }
            None => out.push_str(&",".repeat(3 + num_states * num_states)),
        }
        out.push('\n');
    }
    out
}

/// Runs every arm on every replicate and sample size. Replicate `r` uses seed
/// `config.seed ^ r` for its system, its observations and any random EM
/// start; all sizes are prefixes of one sampled sequence, so arms and sizes
/// are compared on shared data. Writes both CSV files when `config.output`
/// is set.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkOutcome> {
    config.validate()?;
    let registry = EstimatorRegistry::with_defaults();
    let work = |r: usize| run_replicate(config, &registry, r);
    let results: Vec<Result<(HmmModel, Vec<ReplicateRecord>)>> = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| (0..config.replicates).into_par_iter().map(work).collect()),
        None => (0..config.replicates).into_par_iter().map(work).collect(),
    };
    let mut systems = Vec::with_capacity(config.replicates);
    let mut records = Vec::new();
    for result in results {
        let (model, recs) = result?;
        systems.push(model);
        records.extend(recs);
    }
    let rows = aggregate(config, &records);
    let outcome = BenchmarkOutcome {
        median_csv: median_csv(&rows),
        raw_csv: raw_csv(config.num_states, &records),
        rows,
        records,
        systems,
    };
    if let Some(path) = &config.output {
        std::fs::write(path, &outcome.median_csv)?;
        let raw = raw_path(path);
        std::fs::write(&raw, &outcome.raw_csv)?;
        info!("wrote {} and {}", path.display(), raw.display());
    }
    Ok(outcome)
}
