use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use hmm_twostep::bench::{parse_config, rmse, run_benchmark, BenchmarkConfig};
use hmm_twostep::estimators::{EmOptions, EstimationInput, NewtonOptions};
use hmm_twostep::hmm::{
    parse_lower_bound, parse_model, parse_observations, sample, stationary_distribution, validate_model,
    write_observations, ValidationLevel,
};
use hmm_twostep::moments::{analytic_moments, empirical_moments, polytope_from_lower_bound, MomentOrder};
use hmm_twostep::qp::QpOptions;
use hmm_twostep::rng::{stream_rng, STREAM_SAMPLING};
use hmm_twostep::{EstimationReport, EstimatorRegistry, HmmModel, PolytopeBound};
use nalgebra::DVector;

#[derive(Parser)]
#[command(name = "hmm2s", version, about = "Estimate HMM transition matrices with a known observation matrix")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an observation sequence from a model file.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Number of observation pairs (the sequence has one more label).
        #[arg(short = 'n', long)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Estimate the transition matrix from observations.
    Estimate {
        /// Estimator: mm, 2s, em, em-mm or em-true.
        #[arg(long, default_value = "2s")]
        method: String,
        /// Model file supplying B and pi0; its P is used for `--bound auto`,
        /// as the EM-True start and as the RMSE reference.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        /// `auto` (a tenth of the smallest stationary probability of the
        /// model's P), one value, or a comma-separated list.
        #[arg(long, default_value = "auto")]
        bound: String,
        /// Elementwise lower bound on P; overrides `--bound`.
        #[arg(long)]
        lower_bound: Option<PathBuf>,
        /// Seed of the random EM start.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        em_tol: f64,
        #[arg(long, default_value_t = 500)]
        em_max_iter: usize,
        #[arg(long, value_enum, default_value_t = Format::Kv)]
        format: Format,
        /// Write the final KKT system of the moment-matching QP as CSV.
        #[arg(long)]
        dump_kkt: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo sweep and write median and raw CSV files.
    Benchmark {
        /// Flat key=value file; flags given here override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        x: Option<usize>,
        #[arg(long)]
        y: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated sample sizes in pairs, e.g. `1e3,1e4`.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated estimator names.
        #[arg(long)]
        arms: Option<String>,
        #[arg(long)]
        bound: Option<String>,
        #[arg(long)]
        em_tol: Option<f64>,
        #[arg(long)]
        em_max_iter: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Fixed model used for every replicate instead of random systems.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Median CSV path; the raw CSV is written next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a model file.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Level::Assumption1)]
        level: Level,
    },
    /// Print the second-order moment matrix as CSV.
    Moments {
        #[arg(long)]
        model: PathBuf,
        /// Empirical moments of this sequence instead of analytic ones.
        #[arg(long)]
        obs: Option<PathBuf>,
        /// Lag of the analytic moment; stationary if omitted.
        #[arg(long)]
        step: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Kv,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Structural,
    Assumption1,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> anyhow::Result<HmmModel> {
    parse_model(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn parse_bound(spec: &str, model: &HmmModel) -> anyhow::Result<PolytopeBound> {
    let x = model.num_states();
    if spec == "auto" {
        let pi = stationary_distribution(model.p())?;
        return Ok(PolytopeBound::uniform(x, pi.min() / 10.0)?);
    }
    let values = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| hmm_twostep::Error::InvalidArgument(format!("invalid bound `{spec}`")))?;
    match values.len() {
        1 => Ok(PolytopeBound::uniform(x, values[0])?),
        n if n == x => Ok(PolytopeBound::elementwise(DVector::from_vec(values))?),
        n => Err(hmm_twostep::Error::Dimension(format!("bound has {n} values, model has {x} states")).into()),
    }
}

fn simulate(model: &Path, pairs: usize, seed: u64, output: Option<&Path>) -> anyhow::Result<()> {
    let model = load_model(model)?;
    let mut rng = stream_rng(seed, STREAM_SAMPLING);
    let s = sample(&model, pairs + 1, &mut rng)?;
    let text = write_observations(&s.obs);
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    method: &str,
    model: &Path,
    obs: &Path,
    bound: &str,
    lower_bound: Option<&Path>,
    seed: u64,
    em: EmOptions,
    format: Format,
    dump_kkt: Option<PathBuf>,
) -> anyhow::Result<()> {
    let registry = EstimatorRegistry::with_defaults();
    let estimator = registry.get(method)?;
    let model = load_model(model)?;
    let obs = parse_observations(&read(obs)?, model.num_outputs()).with_context(|| format!("parsing {}", obs.display()))?;
    let bound = match lower_bound {
        Some(path) => polytope_from_lower_bound(&parse_lower_bound(&read(path)?)?)?,
        None => parse_bound(bound, &model)?,
    };
    let newton = NewtonOptions {
        qp: QpOptions { kkt_dump: dump_kkt, ..QpOptions::default() },
        ..NewtonOptions::default()
    };
    let input = EstimationInput {
        obs: &obs,
        b: model.b(),
        pi0: model.pi0(),
        bound: &bound,
        truth: Some(model.p()),
        init_seed: seed,
        em,
        newton,
    };
    let report = estimator.estimate(&input)?;
    let error = rmse(&report.p_hat, model.p())?;
    match format {
        Format::Kv => {
            print!("{}", report.to_key_value());
            println!("rmse = {error:e}");
        }
        Format::Csv => {
            println!("{},rmse", EstimationReport::csv_header(model.num_states()));
            println!("{},{error:e}", report.csv_row());
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn benchmark(
    config: Option<&Path>,
    x: Option<usize>,
    y: Option<usize>,
    reps: Option<usize>,
    sizes: Option<String>,
    seed: Option<u64>,
    arms: Option<String>,
    bound: Option<String>,
    em_tol: Option<f64>,
    em_max_iter: Option<usize>,
    threads: Option<usize>,
    model: Option<&Path>,
    output: Option<PathBuf>,
) -> anyhow::Result<()> {
    let mut cfg = match config {
        Some(path) => parse_config(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        None => BenchmarkConfig::default(),
    };
    let overrides = [
        ("x", x.map(|v| v.to_string())),
        ("y", y.map(|v| v.to_string())),
        ("reps", reps.map(|v| v.to_string())),
        ("sizes", sizes),
        ("seed", seed.map(|v| v.to_string())),
        ("arms", arms),
        ("bound", bound),
        ("em_tol", em_tol.map(|v| v.to_string())),
        ("em_max_iter", em_max_iter.map(|v| v.to_string())),
        ("threads", threads.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if let Some(path) = model {
        let m = load_model(path)?;
        cfg.num_states = m.num_states();
        cfg.num_outputs = m.num_outputs();
        cfg.model = Some(m);
    }
    if output.is_some() || cfg.output.is_none() {
        cfg.output = Some(output.unwrap_or_else(|| PathBuf::from("benchmark.csv")));
    }
    let outcome = run_benchmark(&cfg)?;
    print!("{}", outcome.median_csv);
    Ok(())
}

fn validate(model: &Path, level: Level) -> anyhow::Result<()> {
    let text = read(model)?;
    // Structural problems surface as parse errors with a line number.
    let model = parse_model(&text).with_context(|| format!("parsing {}", model.display()))?;
    let level = match level {
        Level::Structural => ValidationLevel::Structural,
        Level::Assumption1 => ValidationLevel::Assumption1,
    };
    let report = validate_model(&model, level);
    if report.is_valid() {
        println!("valid");
        Ok(())
    } else {
        println!("{report}");
        bail!(hmm_twostep::Error::InvalidModel(format!("{} check(s) failed", report.failures.len())))
    }
}

fn moments(model: &Path, obs: Option<&Path>, step: Option<usize>) -> anyhow::Result<()> {
    let model = load_model(model)?;
    let m = match obs {
        Some(path) => empirical_moments(&parse_observations(&read(path)?, model.num_outputs())?)?,
        None => analytic_moments(&model, step.map_or(MomentOrder::Stationary, MomentOrder::Step))?,
    };
    print!("{}", m.to_csv());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { model, pairs, seed, output } => simulate(&model, pairs, seed, output.as_deref()),
        Command::Estimate {
            method,
            model,
            obs,
            bound,
            lower_bound,
            seed,
            em_tol,
            em_max_iter,
            format,
            dump_kkt,
        } => estimate(
            &method,
            &model,
            &obs,
            &bound,
            lower_bound.as_deref(),
            seed,
            EmOptions { tol: em_tol, max_iter: em_max_iter },
            format,
            dump_kkt,
        ),
        Command::Benchmark {
            config,
            x,
            y,
            reps,
            sizes,
            seed,
            arms,
            bound,
            em_tol,
            em_max_iter,
            threads,
            model,
            output,
        } => benchmark(
            config.as_deref(),
            x,
            y,
            reps,
            sizes,
            seed,
            arms,
            bound,
            em_tol,
            em_max_iter,
            threads,
            model.as_deref(),
            output,
        ),
        Command::Validate { model, level } => validate(&model, level),
        Command::Moments { model, obs, step } => moments(&model, obs.as_deref(), step),
    }
}

/// 1 for bad input or a failed validation, 2 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<hmm_twostep::Error>()) {
        Some(e) if !e.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors exit with 1; clap's own default of 2 is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
