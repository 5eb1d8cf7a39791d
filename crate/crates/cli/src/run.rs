//! `localgd run`: one local GD trajectory per synchronization interval,
//! written as CSV with a JSON metadata sidecar.

use std::path::Path;

use localgd_core::libsvm::{partition_by_index, read_libsvm, shards_to_suite};
use localgd_core::synthetic::{self, DatasetSpec, Variant};
use localgd_core::theory::{self, CheckReport};
use localgd_core::{run_local_gd, Error, ObjectiveSuite, ReferenceSolution, SyncSchedule, TrajectoryRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Source};
use crate::error::{CliError, CliResult};

/// Abstract wall clock in units of one local gradient step, where one
/// communication round costs `rho` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub rho: f64,
}

impl CostModel {
    pub fn wall_clock(self, steps: usize, rounds: usize) -> f64 {
        steps as f64 + self.rho * rounds as f64
    }
}

/// The objective built from a config, with what is needed to describe it.
pub struct Problem {
    pub suite: ObjectiveSuite,
    pub rows: Option<usize>,
    pub lambda: Option<f64>,
}

pub fn build_problem(config: &ExperimentConfig) -> CliResult<Problem> {
    match &config.source {
        Source::Dataset { path, d } => {
            let mut ds = read_libsvm(path).map_err(|source| CliError::Dataset {
                path: path.clone(),
                source,
            })?;
            if let Some(d) = d {
                ds = ds.with_dim(*d)?;
            }
            let lambda = config.lambda.value(ds.n());
            let suite = shards_to_suite(&ds, &partition_by_index(ds.n(), config.workers)?, lambda)?;
            Ok(Problem { suite, rows: Some(ds.n()), lambda: Some(lambda) })
        }
        Source::Synthetic { variant: Variant::Logistic, d, n, seed } => {
            let spec = DatasetSpec { n: *n, dim: *d, ..DatasetSpec::default() };
            let ds = synthetic::label_sorted_dataset(*seed, &spec)?;
            let lambda = config.lambda.value(ds.n());
            let suite = shards_to_suite(&ds, &partition_by_index(ds.n(), config.workers)?, lambda)?;
            Ok(Problem { suite, rows: Some(ds.n()), lambda: Some(lambda) })
        }
        Source::Synthetic { variant: Variant::Quadratic, d, seed, .. } => {
            let mut rng = synthetic::rng_for(*seed, 0);
            let suite = synthetic::random_suite(&mut rng, Variant::Quadratic, config.workers, *d)?;
            Ok(Problem { suite, rows: None, lambda: None })
        }
    }
}

/// Solves for `x*`, accepting a capped solve as "reference-degraded".
pub fn reference(suite: &ObjectiveSuite, tol: f64) -> CliResult<(ReferenceSolution, bool)> {
    match suite.solve_reference(tol) {
        Ok(r) => Ok((r, false)),
        Err(Error::Convergence { partial, .. }) => Ok((*partial, true)),
        Err(e) => Err(e.into()),
    }
}

/// Sync every `interval` steps, with a final shorter epoch when the
/// interval does not divide `total_steps`.
pub fn schedule(interval: usize, total_steps: usize) -> CliResult<SyncSchedule> {
    let mut times: Vec<usize> = (0..total_steps).step_by(interval).collect();
    times.push(total_steps);
    Ok(SyncSchedule::from_times(times)?)
}

#[derive(Debug, Serialize)]
pub struct Theorem1Recheck {
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
}

#[derive(Debug, Serialize)]
pub struct RunMetadata {
    #[serde(rename = "H")]
    pub interval: usize,
    #[serde(rename = "T")]
    pub total_steps: usize,
    #[serde(rename = "M")]
    pub workers: usize,
    pub d: usize,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub gamma: f64,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub sigma2: f64,
    pub f_star: f64,
    pub reference_residual: f64,
    pub reference_iterations: usize,
    pub reference_degraded: bool,
    pub tol: f64,
    pub rho: Vec<f64>,
    pub comm_rounds: usize,
    /// First step with a non-finite value; no CSV is written then.
    pub diverged_at: Option<usize>,
    pub csv: Option<String>,
    pub theorem1: Theorem1Recheck,
    pub config: ExperimentConfig,
}

fn csv_header(rho: &[f64]) -> Vec<String> {
    let mut header = vec!["step".to_string(), "comm_rounds_so_far".to_string()];
    header.extend(rho.iter().map(|r| format!("wall_clock_rho_{r}")));
    header.extend(["subopt_hat", "subopt_avg", "variance", "dist2"].map(String::from));
    header
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, traj: &TrajectoryRecord, rho: &[f64]) -> CliResult<()> {
    let to_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(csv_header(rho)).map_err(to_err)?;
    for t in 0..=traj.total_steps() {
        let rounds = traj.schedule.rounds_through(t);
        let mut row = vec![t.to_string(), rounds.to_string()];
        row.extend(rho.iter().map(|&r| float(CostModel { rho: r }.wall_clock(t, rounds))));
        row.extend([traj.gap[t], traj.avg_gap[t], traj.variance[t], traj.dist2[t]].map(float));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

/// Runs every interval in the config and returns the metadata written for
/// each, in the order of the H list.
pub fn cmd_run(config: &ExperimentConfig) -> CliResult<Vec<RunMetadata>> {
    let problem = build_problem(config)?;
    let suite = &problem.suite;
    let (reference, degraded) = reference(suite, config.tol)?;
    let l = suite.smoothness();
    let x0 = vec![0.0; suite.dim()];
    std::fs::create_dir_all(&config.out).map_err(CliError::io(&config.out))?;

    config
        .intervals
        .par_iter()
        .map(|&h| {
            let gamma = config.gamma.stepsize(l, h);
            let sched = schedule(h, config.total_steps)?;
            let stem = format!("run_H{h}");
            let mut meta = RunMetadata {
                interval: h,
                total_steps: config.total_steps,
                workers: config.workers,
                d: suite.dim(),
                n: problem.rows,
                lambda: problem.lambda,
                gamma,
                smoothness: l,
                sigma2: reference.sigma2,
                f_star: reference.f_star,
                reference_residual: reference.grad_norm_residual,
                reference_iterations: reference.iterations_used,
                reference_degraded: degraded,
                tol: config.tol,
                rho: config.rho.clone(),
                comm_rounds: sched.sync_times().len() - 1,
                diverged_at: None,
                csv: None,
                theorem1: Theorem1Recheck { applicable: false, report: None },
                config: config.clone(),
            };
            match run_local_gd(suite, &reference, gamma, &sched, &x0) {
                Ok(traj) => {
                    if theory::stepsize_admissible(gamma, l, sched.interval()) {
                        let report = theory::check_theorem1(&traj, l, reference.sigma2)?;
                        if !report.pass {
                            return Err(CliError::Invariant(format!(
                                "H = {h}: final averaged gap exceeds the ergodic bound: {:?}",
                                report.violations
                            )));
                        }
                        meta.theorem1 = Theorem1Recheck { applicable: true, report: Some(report) };
                    }
                    let csv_name = format!("{stem}.csv");
                    write_csv(&config.out.join(&csv_name), &traj, &config.rho)?;
                    meta.csv = Some(csv_name);
                }
                Err(Error::Divergence { step }) => meta.diverged_at = Some(step),
                Err(e) => return Err(e.into()),
            }
            write_json(&config.out.join(format!("{stem}.json")), &meta)?;
            Ok(meta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_clock_formula() {
        assert_eq!(CostModel { rho: 10.0 }.wall_clock(100, 10), 200.0);
        assert_eq!(CostModel { rho: 0.0 }.wall_clock(7, 7), 7.0);
    }

    #[test]
    fn schedules_with_a_short_last_epoch() {
        assert_eq!(schedule(4, 10).unwrap().sync_times(), &[0, 4, 8, 10]);
        assert_eq!(schedule(8, 16).unwrap().rounds_through(16), 2);
        let every = schedule(1, 5).unwrap();
        assert!((0..=5).all(|t| every.rounds_through(t) == t));
    }

    #[test]
    fn header_lists_each_rho() {
        assert_eq!(
            csv_header(&[0.1, 10.0]),
            vec!["step", "comm_rounds_so_far", "wall_clock_rho_0.1", "wall_clock_rho_10", "subopt_hat", "subopt_avg", "variance", "dist2"]
        );
    }

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
