use std::path::PathBuf;

use crate::estimators::{EmOptions, Method};
use crate::hmm::HmmModel;
use crate::{Error, Result};

/// How the lower bound for moment matching is chosen per replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundPolicy {
    /// `ℓ = min π∞ / 10` for the generating system.
    TenthOfMinStationary,
    /// A fixed uniform value.
    Uniform(f64),
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub num_states: usize,
    pub num_outputs: usize,
    /// Sample sizes, counted in observation pairs.
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub arms: Vec<Method>,
    pub bound: BoundPolicy,
    pub em: EmOptions,
    /// Median CSV path; the raw CSV goes next to it with a `_raw` suffix.
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Fixed system used for every replicate instead of random ones.
    pub model: Option<HmmModel>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            num_states: 5,
            num_outputs: 5,
            sizes: vec![100, 200, 500, 1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000],
            replicates: 100,
            seed: 0,
            arms: Method::ALL.to_vec(),
            bound: BoundPolicy::TenthOfMinStationary,
            em: EmOptions::default(),
            output: None,
            threads: None,
            model: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("sample sizes must be nonempty and at least 2".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidArgument("at least one estimator arm is required".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        if let Some(m) = &self.model {
            if m.num_states() != self.num_states || m.num_outputs() != self.num_outputs {
                return Err(Error::Dimension(format!(
                    "fixed model is {}x{}, config says X={}, Y={}",
                    m.num_states(),
                    m.num_outputs(),
                    self.num_states,
                    self.num_outputs
                )));
            }
        }
        Ok(())
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidArgument(format!("{key}: invalid {what} `{value}`"));
        match key {
            "x" | "states" => self.num_states = value.parse().map_err(|_| bad("integer"))?,
            "y" | "outputs" => self.num_outputs = value.parse().map_err(|_| bad("integer"))?,
            "sizes" => {
                self.sizes = value
                    .split(',')
                    .map(|s| parse_size(s.trim()))
                    .collect::<Result<Vec<_>>>()?
            }
            "reps" | "replicates" => self.replicates = value.parse().map_err(|_| bad("integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "arms" | "methods" => {
                self.arms = value
                    .split(',')
                    .map(|s| s.trim().parse::<Method>())
                    .collect::<Result<Vec<_>>>()?;
                self.arms.sort();
                self.arms.dedup();
            }
            "bound" => {
                self.bound = match value {
                    "tenth-of-min-stationary" | "auto" => BoundPolicy::TenthOfMinStationary,
                    v => BoundPolicy::Uniform(v.parse().map_err(|_| bad("bound"))?),
                }
            }
            "em_tol" => self.em.tol = value.parse().map_err(|_| bad("number"))?,
            "em_max_iter" => self.em.max_iter = value.parse().map_err(|_| bad("integer"))?,
            "output" => self.output = Some(PathBuf::from(value)),
            "threads" => self.threads = Some(value.parse().map_err(|_| bad("integer"))?),
            _ => return Err(Error::InvalidArgument(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

/// Parses a sample size, accepting plain integers and forms like `1e4` or `5e5`.
pub fn parse_size(s: &str) -> Result<usize> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid sample size `{s}`")))?;
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!("invalid sample size `{s}`")))
    }
}

/// Parses flat `key = value` text (one per line, `#` comments) on top of the
/// defaults.
pub fn parse_config(text: &str) -> Result<BenchmarkConfig> {
    let mut config = BenchmarkConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected key=value, got `{line}`"),
        })?;
        config
            .set(&key.trim().to_ascii_lowercase(), value.trim())
            .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
    }
    config.validate()?;
    Ok(config)
}
