//! `localgd verify`: the seeded property sweep with JSON reports.

use std::path::Path;

use localgd_core::sweep::{run_sweep, CheckStatus, InstanceOutcome, SweepConfig};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::run::write_json;

#[derive(Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub instances: usize,
    pub failed_instances: Vec<usize>,
    pub checks_passed: usize,
    pub checks_failed: usize,
    /// Checks whose stepsize precondition did not hold.
    pub checks_skipped: usize,
}

impl VerifySummary {
    pub fn all_passed(&self) -> bool {
        self.checks_failed == 0
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    summary: &'a VerifySummary,
    config: &'a SweepConfig,
    instances: &'a [InstanceOutcome],
}

pub fn summarize(outcomes: &[InstanceOutcome]) -> VerifySummary {
    let mut s = VerifySummary {
        instances: outcomes.len(),
        ..VerifySummary::default()
    };
    for o in outcomes {
        for c in &o.checks {
            match c.status {
                CheckStatus::Pass => s.checks_passed += 1,
                CheckStatus::Fail => s.checks_failed += 1,
                CheckStatus::Precondition => s.checks_skipped += 1,
            }
        }
        if !o.passed() {
            s.failed_instances.push(o.spec.index);
        }
    }
    s
}

/// Runs the sweep and writes `verify_report.json` into `out`.
pub fn cmd_verify(config: &SweepConfig, out: &Path) -> CliResult<(VerifySummary, Vec<InstanceOutcome>)> {
    if !(config.tol > 0.0 && config.tol.is_finite()) {
        return Err(CliError::Usage(format!("tolerance {} must be positive", config.tol)));
    }
    let outcomes = run_sweep(config)?;
    let summary = summarize(&outcomes);
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    write_json(
        &out.join("verify_report.json"),
        &VerifyReport {
            summary: &summary,
            config,
            instances: &outcomes,
        },
    )?;
    Ok((summary, outcomes))
}

/// One line per failed or skipped check, then a summary line.
pub fn describe(summary: &VerifySummary, outcomes: &[InstanceOutcome]) -> String {
    let mut lines = Vec::new();
    for o in outcomes {
        for c in &o.checks {
            match c.status {
                CheckStatus::Fail => {
                    let n = c.report.as_ref().map_or(0, |r| r.violations.len());
                    lines.push(format!("FAIL instance {} {}: {n} violations", o.spec.index, c.name));
                }
                CheckStatus::Precondition => {
                    lines.push(format!(
                        "SKIP instance {} {}: precondition ({})",
                        o.spec.index,
                        c.name,
                        c.reason.as_deref().unwrap_or("")
                    ));
                }
                CheckStatus::Pass => {}
            }
        }
    }
    lines.push(format!(
        "{} instances: {} checks passed, {} failed, {} skipped",
        summary.instances, summary.checks_passed, summary.checks_failed, summary.checks_skipped
    ));
    lines.join("\n")
}
