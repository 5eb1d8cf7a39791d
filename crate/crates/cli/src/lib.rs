//! Command-line front end for local gradient descent experiments: `run`,
//! `verify`, `plan` and `parse`.

pub mod config;
pub mod error;
pub mod parse;
pub mod plan;
pub mod run;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use localgd_core::sweep::{StepsizePolicy, SweepConfig};
use localgd_core::synthetic::Variant;

use config::{parse_list, ExperimentConfig, PartialConfig, Setting};
pub use error::{CliError, CliResult};

/// Environment variable capping the worker threads used for sweeps and runs.
pub const THREADS_ENV: &str = "LOCALGD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "localgd", version, about = "Local gradient descent experiments and bound verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run local GD for each H and write CSV plus JSON metadata.
    Run(RunArgs),
    /// Check the convergence lemmas and theorem over a seeded sweep.
    Verify(VerifyArgs),
    /// Plan steps and synchronization interval for a target accuracy.
    Plan(PlanArgs),
    /// Summarize a LIBSVM file.
    Parse(ParseArgs),
}

/// A comma-separated flag value.
#[derive(Clone, Debug)]
pub struct List<T>(pub Vec<T>);

fn usize_list(s: &str) -> Result<List<usize>, String> {
    parse_list(s).map(List)
}

fn float_list(s: &str) -> Result<List<f64>, String> {
    parse_list(s).map(List)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// LIBSVM file (optionally .gz); a synthetic instance is used otherwise.
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Synthetic variant.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// Number of workers.
    #[arg(long = "M", value_name = "INT")]
    pub workers: Option<usize>,
    /// Dimension of the synthetic instance, or padded dataset dimension.
    #[arg(long = "d", visible_alias = "dim", value_name = "INT")]
    pub d: Option<usize>,
    /// Rows of the synthetic logistic dataset.
    #[arg(long, value_name = "INT")]
    pub n: Option<usize>,
    #[arg(long = "H", value_name = "LIST", value_parser = usize_list)]
    pub intervals: Option<List<usize>>,
    #[arg(long = "T", value_name = "INT")]
    pub total_steps: Option<usize>,
    /// theory (1/(4LH)), experiment (1/L) or a number.
    #[arg(long, value_name = "POLICY")]
    pub gamma: Option<String>,
    /// 1/n or a number.
    #[arg(long, value_name = "POLICY")]
    pub lambda: Option<String>,
    /// Communication cost per round in units of one gradient step.
    #[arg(long, value_name = "LIST", value_parser = float_list)]
    pub rho: Option<List<f64>>,
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Gradient-norm tolerance for the reference solution.
    #[arg(long, value_name = "FLOAT")]
    pub tol: Option<f64>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: localgd_core::Error| e.to_string())
}

impl RunArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            dataset: self.dataset.clone(),
            variant: self.variant,
            workers: self.workers,
            d: self.d,
            n: self.n,
            seed: self.seed,
            lambda: self.lambda.clone().map(Setting::Keyword),
            gamma: self.gamma.clone().map(Setting::Keyword),
            intervals: self.intervals.clone().map(|l| l.0),
            total_steps: self.total_steps,
            rho: self.rho.clone().map(|l| l.0),
            out: self.out.clone(),
            tol: self.tol,
        }
    }

    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => PartialConfig::load(path)?,
            None => PartialConfig::default(),
        };
        ExperimentConfig::resolve(file.overridden_by(self.partial()))
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON config; its seed, gamma, tol and out fields are used.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
    /// theory (default), experiment or a number.
    #[arg(long, value_name = "POLICY")]
    pub gamma: Option<String>,
    #[arg(long, value_name = "FLOAT")]
    pub tol: Option<f64>,
    /// Also check the tighter constants of the variance lemma's derivation.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Perturb one averaged iterate per instance before checking.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

impl VerifyArgs {
    pub fn resolve(&self) -> CliResult<(SweepConfig, PathBuf)> {
        let file = match &self.config {
            Some(path) => PartialConfig::load(path)?,
            None => PartialConfig::default(),
        };
        let gamma = match self.gamma.clone().map(Setting::Keyword).or(file.gamma) {
            None => StepsizePolicy::Theory,
            Some(Setting::Number(g)) => g.to_string().parse().map_err(usage)?,
            Some(Setting::Keyword(s)) => s.parse().map_err(usage)?,
        };
        let defaults = SweepConfig::default();
        let config = SweepConfig {
            instances: self.instances,
            seed: self.seed.or(file.seed).unwrap_or(defaults.seed),
            gamma,
            tol: self.tol.or(file.tol).unwrap_or(defaults.tol),
            strict: self.strict,
            inject_fault: self.inject_fault,
        };
        let out = self.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("localgd-out"));
        Ok((config, out))
    }
}

fn usage(e: localgd_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Target accuracy.
    #[arg(long)]
    pub epsilon: f64,
    /// Smoothness constant.
    #[arg(long = "L")]
    pub smoothness: f64,
    /// Gradient dissimilarity at the optimum.
    #[arg(long)]
    pub sigma2: f64,
    /// Squared initial distance to the optimum.
    #[arg(long)]
    pub r0sq: f64,
    /// Stepsize, at most 1/(4L); defaults to 1/(4L).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub path: PathBuf,
    /// Pad the feature dimension.
    #[arg(long = "d", visible_alias = "dim", value_name = "INT")]
    pub d: Option<usize>,
}

/// What a finished command should print and how it should exit.
pub struct Report {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: u8,
}

pub fn execute(cli: &Cli) -> CliResult<Report> {
    let mut report = Report {
        stdout: String::new(),
        stderr: String::new(),
        exit_code: 0,
    };
    match &cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let runs = run::cmd_run(&config)?;
            for m in &runs {
                let status = match (m.diverged_at, &m.csv) {
                    (Some(step), _) => format!("diverged at step {step}"),
                    (None, Some(csv)) => format!("wrote {}", config.out.join(csv).display()),
                    (None, None) => "no output".into(),
                };
                report.stdout += &format!("H={:<4} gamma={:.6e} rounds={:<6} {status}\n", m.interval, m.gamma, m.comm_rounds);
            }
            if runs.iter().any(|m| m.reference_degraded) {
                report.stderr += "warning: reference solution did not reach the requested tolerance (reference-degraded)\n";
            }
        }
        Command::Verify(args) => {
            let (config, out) = args.resolve()?;
            let (summary, outcomes) = verify::cmd_verify(&config, &out)?;
            report.stdout = verify::describe(&summary, &outcomes) + "\n";
            report.exit_code = if summary.all_passed() { 0 } else { 1 };
        }
        Command::Plan(args) => {
            let plan = plan::cmd_plan(args.epsilon, args.smoothness, args.sigma2, args.r0sq, args.gamma)?;
            report.stdout = serde_json::to_string_pretty(&plan).expect("plan report serializes") + "\n";
            report.stderr = plan::table(&plan);
        }
        Command::Parse(args) => {
            let summary = parse::cmd_parse(&args.path, args.d)?;
            report.stdout = parse::describe(&summary) + "\n";
        }
    }
    Ok(report)
}

/// Runs `f` on a pool sized by [`THREADS_ENV`] when it is set.
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> CliResult<R> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(f()),
        Ok(v) => {
            let threads: usize = v
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
