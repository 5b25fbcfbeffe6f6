use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::likelihood::ThetaVector;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Moment matching only.
    Mm,
    /// Moment matching followed by one Newton step.
    TwoStep,
    /// Baum-Welch from a random transition matrix.
    Em,
    /// Baum-Welch started at the moment-matching estimate.
    EmMm,
    /// Baum-Welch started at the true transition matrix.
    EmTrue,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mm, Method::Em, Method::EmMm, Method::EmTrue, Method::TwoStep];

    /// Display tag.
    pub fn tag(self) -> &'static str {
        match self {
            Method::Mm => "MM",
            Method::TwoStep => "2S",
            Method::Em => "EM",
            Method::EmMm => "EM-MM",
            Method::EmTrue => "EM-True",
        }
    }

    /// Name used on the command line and in the estimator registry.
    pub fn name(self) -> &'static str {
        match self {
            Method::Mm => "mm",
            Method::TwoStep => "2s",
            Method::Em => "em",
            Method::EmMm => "em-mm",
            Method::EmTrue => "em-true",
        }
    }

    /// Column key in benchmark CSV files.
    pub fn csv_key(self) -> &'static str {
        match self {
            Method::Mm => "mom",
            Method::TwoStep => "newton",
            Method::Em => "em",
            Method::EmMm => "em_mom",
            Method::EmTrue => "em_true",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let lower = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower || m.tag().to_ascii_lowercase() == lower || m.csv_key() == lower)
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTiming {
    pub phase: &'static str,
    pub seconds: f64,
}

/// Result of one estimator run with its diagnostics.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub method: Method,
    pub p_hat: DMatrix<f64>,
    pub pi_hat: Option<DVector<f64>>,
    pub theta_hat: ThetaVector,
    /// Log-likelihood. For 2S this is the value at the Newton base point,
    /// which is what the second pass computes.
    pub loglik: Option<f64>,
    /// Euclidean norm of the score, at the same point as `loglik`.
    pub gradient_norm: Option<f64>,
    /// Whether the unregularized Hessian was negative definite.
    pub hessian_negative_definite: Option<bool>,
    /// Set when the Hessian had to be regularized.
    pub non_nd_hessian: bool,
    /// Observed information `−H/N` at the base point (2S only).
    pub fisher: Option<DMatrix<f64>>,
    pub regularization: f64,
    pub iterations: Option<usize>,
    pub loglik_trace: Vec<f64>,
    pub timings: Vec<PhaseTiming>,
    /// Passes over the observation sequence made by this run.
    pub passes: usize,
    /// Largest KKT residual of the moment-matching QP, when one was solved.
    pub qp_residual: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

impl EstimationReport {
    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    pub fn num_states(&self) -> usize {
        self.p_hat.nrows()
    }

    /// One `key = value` line per field; matrices are rows joined by `;`.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method = {}", self.method.tag());
        let _ = writeln!(out, "p_hat = {}", fmt_matrix(&self.p_hat));
        if let Some(pi) = &self.pi_hat {
            let _ = writeln!(out, "pi_hat = {}", pi.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(
            out,
            "theta_hat = {}",
            self.theta_hat.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        );
        if let Some(l) = self.loglik {
            let _ = writeln!(out, "loglik = {l}");
        }
        if let Some(g) = self.gradient_norm {
            let _ = writeln!(out, "gradient_norm = {g:e}");
        }
        if let Some(nd) = self.hessian_negative_definite {
            let _ = writeln!(out, "hessian_negative_definite = {nd}");
        }
        let _ = writeln!(out, "non_nd_hessian = {}", self.non_nd_hessian);
        let _ = writeln!(out, "regularization = {}", self.regularization);
        if let Some(f) = &self.fisher {
            let _ = writeln!(out, "fisher = {}", fmt_matrix(f));
        }
        if let Some(it) = self.iterations {
            let _ = writeln!(out, "iterations = {it}");
        }
        let _ = writeln!(out, "passes = {}", self.passes);
        if let Some(r) = self.qp_residual {
            let _ = writeln!(out, "qp_residual = {r:e}");
        }
        for t in &self.timings {
            let _ = writeln!(out, "seconds_{} = {:.6}", t.phase, t.seconds);
        }
        out
    }

    /// CSV header matching [`EstimationReport::csv_row`] for `x` states.
    pub fn csv_header(x: usize) -> String {
        let mut cols: Vec<String> = [
            "method",
            "loglik",
            "gradient_norm",
            "non_nd_hessian",
            "regularization",
            "iterations",
            "passes",
            "seconds",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for i in 1..=x {
            for j in 1..=x {
                cols.push(format!("p_{i}_{j}"));
            }
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.method.tag().to_string(),
            self.loglik.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(self.gradient_norm),
            self.non_nd_hessian.to_string(),
            self.regularization.to_string(),
            self.iterations.map(|v| v.to_string()).unwrap_or_default(),
            self.passes.to_string(),
            format!("{:.6}", self.total_seconds()),
        ];
        for r in self.p_hat.row_iter() {
            cols.extend(r.iter().map(|v| v.to_string()));
        }
        cols.join(",")
    }
}
