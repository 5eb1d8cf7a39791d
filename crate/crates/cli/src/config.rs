//! Experiment configuration: a JSON file whose fields can each be
//! overridden on the command line.

use std::path::{Path, PathBuf};

use localgd_core::sweep::StepsizePolicy;
use localgd_core::synthetic::Variant;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A JSON value that may be a number or a keyword such as `"theory"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Number(f64),
    Keyword(String),
}

impl Setting {
    fn as_text(&self) -> String {
        match self {
            Setting::Number(v) => v.to_string(),
            Setting::Keyword(s) => s.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    OneOverN,
    Fixed(f64),
}

impl std::str::FromStr for LambdaPolicy {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s == "1/n" {
            return Ok(LambdaPolicy::OneOverN);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(LambdaPolicy::Fixed(v)),
            _ => Err(CliError::Usage(format!("lambda {s:?} is not 1/n or a non-negative number"))),
        }
    }
}

impl LambdaPolicy {
    pub fn value(self, n: usize) -> f64 {
        match self {
            LambdaPolicy::OneOverN => 1.0 / n as f64,
            LambdaPolicy::Fixed(v) => v,
        }
    }
}

/// Every field optional, as read from a config file or from flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub dataset: Option<PathBuf>,
    pub variant: Option<Variant>,
    #[serde(rename = "M")]
    pub workers: Option<usize>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub lambda: Option<Setting>,
    pub gamma: Option<Setting>,
    #[serde(rename = "H")]
    pub intervals: Option<Vec<usize>>,
    #[serde(rename = "T")]
    pub total_steps: Option<usize>,
    pub rho: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

impl PartialConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Fields set in `other` win.
    pub fn overridden_by(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            dataset: other.dataset.or(self.dataset),
            variant: other.variant.or(self.variant),
            workers: other.workers.or(self.workers),
            d: other.d.or(self.d),
            n: other.n.or(self.n),
            seed: other.seed.or(self.seed),
            lambda: other.lambda.or(self.lambda),
            gamma: other.gamma.or(self.gamma),
            intervals: other.intervals.or(self.intervals),
            total_steps: other.total_steps.or(self.total_steps),
            rho: other.rho.or(self.rho),
            out: other.out.or(self.out),
            tol: other.tol.or(self.tol),
        }
    }
}

/// Where the objective comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// A LIBSVM file split into `M` contiguous shards; `d` pads the dimension.
    Dataset { path: PathBuf, d: Option<usize> },
    /// The label-sorted logistic dataset, or random shifted quadratics.
    Synthetic { variant: Variant, d: usize, n: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub source: Source,
    #[serde(rename = "M")]
    pub workers: usize,
    pub lambda: LambdaPolicy,
    pub gamma: StepsizePolicy,
    #[serde(rename = "H")]
    pub intervals: Vec<usize>,
    #[serde(rename = "T")]
    pub total_steps: usize,
    pub rho: Vec<f64>,
    pub out: PathBuf,
    pub tol: f64,
}

pub const DEFAULT_INTERVALS: [usize; 3] = [1, 4, 16];
pub const DEFAULT_RHO: [f64; 3] = [0.1, 1.0, 10.0];

impl ExperimentConfig {
    /// Fills defaults and checks the invariants: a nonempty H list,
    /// `T ≥ max H` and non-negative cost ratios.
    pub fn resolve(p: PartialConfig) -> CliResult<Self> {
        let usage = |m: String| Err(CliError::Usage(m));
        let source = match p.dataset {
            Some(path) => Source::Dataset { path, d: p.d },
            None => Source::Synthetic {
                variant: p.variant.unwrap_or(Variant::Logistic),
                d: p.d.unwrap_or(50),
                n: p.n.unwrap_or(2000),
                seed: p.seed.unwrap_or(0),
            },
        };
        let gamma = match p.gamma {
            None => StepsizePolicy::Experiment,
            Some(s) => s.as_text().parse().map_err(|e: localgd_core::Error| CliError::Usage(e.to_string()))?,
        };
        let lambda = match p.lambda {
            None => LambdaPolicy::OneOverN,
            Some(s) => s.as_text().parse()?,
        };
        let intervals = p.intervals.unwrap_or_else(|| DEFAULT_INTERVALS.to_vec());
        let total_steps = p.total_steps.unwrap_or(2048);
        let rho = p.rho.unwrap_or_else(|| DEFAULT_RHO.to_vec());
        let workers = p.workers.unwrap_or(10);
        let tol = p.tol.unwrap_or(localgd_core::objectives::DEFAULT_REFERENCE_TOL);

        if intervals.is_empty() {
            return usage("the H list is empty".into());
        }
        if intervals.contains(&0) {
            return usage("every H must be at least 1".into());
        }
        let max_h = *intervals.iter().max().unwrap();
        if total_steps < max_h {
            return usage(format!("T = {total_steps} is below the largest H = {max_h}"));
        }
        if let Some(r) = rho.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return usage(format!("cost ratio {r} must be non-negative"));
        }
        if workers == 0 {
            return usage("M must be at least 1".into());
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return usage(format!("tolerance {tol} must be positive"));
        }
        Ok(Self {
            source,
            workers,
            lambda,
            gamma,
            intervals,
            total_steps,
            rho,
            out: p.out.unwrap_or_else(|| PathBuf::from("localgd-out")),
            tol,
        })
    }
}

/// Parses a comma-separated list such as `1,4,16`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|item| item.trim().parse::<T>().map_err(|_| format!("{item:?} in list {text:?} is not valid")))
        .collect()
}
