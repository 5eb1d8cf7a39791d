//! `localgd plan`: communication planning for a target accuracy.

use localgd_core::theory::{plan_communication, round_plan, PlannerResult, Regime, RoundedPlan};
use localgd_core::Error;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub plan: PlannerResult,
    pub rounded: RoundedPlan,
    pub gd_equivalent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Set when the continuous interval is below one step, so the rounded
    /// plan no longer guarantees `epsilon` at this stepsize.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Plans at `gamma`, or at the largest admissible `1/(4L)` when omitted.
pub fn cmd_plan(epsilon: f64, smoothness: f64, sigma2: f64, r0sq: f64, gamma: Option<f64>) -> CliResult<PlanReport> {
    let gamma = gamma.unwrap_or(1.0 / (4.0 * smoothness));
    let plan = plan_communication(epsilon, smoothness, sigma2, r0sq, gamma).map_err(|e| match e {
        Error::Argument(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let rounded = round_plan(&plan, smoothness);
    let gd_equivalent = plan.regime == Regime::LowAccuracy;
    let note = gd_equivalent.then(|| {
        format!(
            "epsilon >= 3*sigma2/L = {}: local steps cannot beat gradient descent, which needs the same {} rounds",
            3.0 * sigma2 / smoothness,
            plan.lower_bound_comm
        )
    });
    let warning = (plan.interval < 1.0).then(|| {
        format!(
            "H < 1 at this stepsize: with one local step the target needs gamma <= {}",
            plan.gamma * plan.interval
        )
    });
    Ok(PlanReport {
        plan,
        rounded,
        gd_equivalent,
        note,
        warning,
    })
}

pub fn table(report: &PlanReport) -> String {
    let p = &report.plan;
    let r = &report.rounded;
    let regime = match p.regime {
        Regime::LowAccuracy => "low-accuracy",
        Regime::HighAccuracy => "high-accuracy",
    };
    let mut out = format!(
        "epsilon {}  gamma {}  regime {regime}\n\
         {:<12}{:>20}{:>12}\n\
         {:<12}{:>20.6}{:>12}\n\
         {:<12}{:>20.6}{:>12}\n\
         {:<12}{:>20.6}{:>12}\n\
         lower bound on rounds: {:.6}\n",
        p.epsilon,
        p.gamma,
        "",
        "continuous",
        "rounded",
        "T",
        p.total_steps,
        r.total_steps,
        "H",
        p.interval,
        r.interval,
        "T/H",
        p.comm_rounds,
        r.comm_rounds,
        p.lower_bound_comm,
    );
    if !r.gamma_admissible {
        out.push_str("warning: gamma exceeds 1/(4LH) for the rounded H\n");
    }
    if let Some(w) = &report.warning {
        out.push_str("warning: ");
        out.push_str(w);
        out.push('\n');
    }
    if let Some(note) = &report.note {
        out.push_str(note);
        out.push('\n');
    }
    out
}
