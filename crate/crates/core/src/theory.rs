//! Convergence bounds, the communication planner, and mechanical checks of
//! each bound along a recorded trajectory.
//!
//! Every check compares `lhs ≤ rhs + slack` with an additive slack of
//! [`SLACK`] scaled by the magnitude of the quantities involved. The slack
//! absorbs the error of the numerically computed `x*`.

use serde::{Deserialize, Serialize};

use crate::engine::TrajectoryRecord;
use crate::error::{Error, Result};

pub const SLACK: f64 = 1e-8;

// Relative tolerance when testing γ against a stepsize ceiling, so that a
// γ computed as exactly 1/(4LH) is admitted despite rounding.
const STEPSIZE_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Step index, or epoch index for per-epoch checks.
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`, which exceeded the slack.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub total_points: usize,
    pub violations: Vec<Violation>,
    /// Largest slack applied at any point.
    pub slack_used: f64,
    /// Smallest `rhs − lhs` observed; negative only alongside violations.
    pub min_margin: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            total_points: 0,
            violations: Vec::new(),
            slack_used: 0.0,
            min_margin: f64::INFINITY,
            pass: true,
        }
    }

    fn point(&mut self, index: usize, lhs: f64, rhs: f64, slack: f64) {
        self.total_points += 1;
        self.slack_used = self.slack_used.max(slack);
        let gap = lhs - rhs;
        self.min_margin = self.min_margin.min(-gap);
        // NaN on either side counts as a violation.
        if gap.is_nan() || gap > slack {
            self.violations.push(Violation { index, lhs, rhs, gap });
            self.pass = false;
        }
    }
}

fn stepsize_ceiling(smoothness: f64, interval: usize) -> f64 {
    1.0 / (4.0 * smoothness * interval as f64)
}

/// `γ ≤ 1/(4LH)`, up to rounding.
pub fn stepsize_admissible(gamma: f64, smoothness: f64, interval: usize) -> bool {
    gamma > 0.0 && gamma <= stepsize_ceiling(smoothness, interval) * (1.0 + STEPSIZE_RTOL)
}

fn require_admissible(gamma: f64, smoothness: f64, interval: usize) -> Result<()> {
    if stepsize_admissible(gamma, smoothness, interval) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "stepsize {gamma} exceeds 1/(4LH) = {} for L = {smoothness}, H = {interval}",
            stepsize_ceiling(smoothness, interval)
        )))
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {value} must be positive and finite")))
    }
}

fn require_nonnegative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {value} must be non-negative and finite")))
    }
}

/// One-step recursion of the optimality gap:
/// `‖r_{t+1}‖² ≤ ‖r_t‖² + γL(1+2γL)V_t − 2γ(1−2γL)D_t` for any γ,
/// plus the simplified form `‖r_t‖² + (3/2)γLV_t − γD_t` when `γ ≤ 1/(4L)`.
pub fn check_lemma1(traj: &TrajectoryRecord, smoothness: f64) -> Result<Vec<CheckReport>> {
    require_positive("L", smoothness)?;
    let gamma = traj.gamma;
    let gl = gamma * smoothness;
    let mut general = CheckReport::new("lemma1");
    let simplified_applies = stepsize_admissible(gamma, smoothness, 1);
    let mut simplified = CheckReport::new("lemma1_simplified");
    for t in 0..traj.total_steps() {
        let r2 = traj.dist2[t];
        let v = traj.variance[t];
        let d = traj.bregman[t];
        let lhs = traj.dist2[t + 1];
        let slack = SLACK * (1.0 + r2);
        general.point(t, lhs, r2 + gl * (1.0 + 2.0 * gl) * v - 2.0 * gamma * (1.0 - 2.0 * gl) * d, slack);
        if simplified_applies {
            simplified.point(t, lhs, r2 + 1.5 * gl * v - gamma * d, slack);
        }
    }
    let mut reports = vec![general];
    if simplified_applies {
        reports.push(simplified);
    }
    Ok(reports)
}

/// Per-epoch variance bounds. Requires `γ ≤ 1/(4LH)`.
///
/// Checks `Σ V_t ≤ 5Lγ²H² Σ D_t + Σ 8γ²H²σ²` and
/// `Σ ((3/2)LV_t − D_t) ≤ −½ Σ D_t + Σ 12Lγ²H²σ²` over every epoch.
pub fn check_lemma2(traj: &TrajectoryRecord, smoothness: f64, sigma2: f64) -> Result<Vec<CheckReport>> {
    check_lemma2_with(traj, smoothness, sigma2, false)
}

/// As [`check_lemma2`]; `strict` additionally checks the tighter constants
/// `15/2` and `45/4` that the derivation actually produces.
pub fn check_lemma2_with(
    traj: &TrajectoryRecord,
    smoothness: f64,
    sigma2: f64,
    strict: bool,
) -> Result<Vec<CheckReport>> {
    require_positive("L", smoothness)?;
    require_nonnegative("sigma2", sigma2)?;
    let h = traj.interval();
    require_admissible(traj.gamma, smoothness, h)?;
    let g2h2 = traj.gamma * traj.gamma * (h * h) as f64;

    let mut constants = vec![("lemma2_variance_sum", "lemma2_combined", 8.0, 12.0)];
    if strict {
        constants.push(("lemma2_variance_sum_proof_constants", "lemma2_combined_proof_constants", 7.5, 11.25));
    }
    let mut reports = Vec::new();
    for (first_name, second_name, c_var, c_comb) in constants {
        let mut first = CheckReport::new(first_name);
        let mut second = CheckReport::new(second_name);
        for (p, epoch) in traj.schedule.epochs().enumerate() {
            let count = epoch.len() as f64;
            let sum_v: f64 = traj.variance[epoch.clone()].iter().sum();
            let sum_d: f64 = traj.bregman[epoch].iter().sum();
            let slack = SLACK * (1.0 + sigma2 + sum_d.abs());
            first.point(p, sum_v, 5.0 * smoothness * g2h2 * sum_d + count * c_var * g2h2 * sigma2, slack);
            second.point(
                p,
                1.5 * smoothness * sum_v - sum_d,
                -0.5 * sum_d + count * c_comb * smoothness * g2h2 * sigma2,
                slack,
            );
        }
        reports.push(first);
        reports.push(second);
    }
    Ok(reports)
}

/// `‖g_t‖² ≤ 2L²V_t + 4L·D_t` at every step.
pub fn check_lemma3(traj: &TrajectoryRecord, smoothness: f64) -> Result<CheckReport> {
    require_positive("L", smoothness)?;
    let mut report = CheckReport::new("lemma3");
    for t in 0..=traj.total_steps() {
        let lhs = traj.grad_norm2[t];
        let rhs = 2.0 * smoothness * smoothness * traj.variance[t] + 4.0 * smoothness * traj.bregman[t];
        report.point(t, lhs, rhs, SLACK * (1.0 + lhs));
    }
    Ok(report)
}

/// `−2⟨x̂_t − x*, g_t⟩ ≤ −2D_t + L·V_t` at every step.
pub fn check_lemma4(traj: &TrajectoryRecord, smoothness: f64) -> Result<CheckReport> {
    require_positive("L", smoothness)?;
    let mut report = CheckReport::new("lemma4");
    for t in 0..=traj.total_steps() {
        let inner = traj.inner_rg[t];
        let d = traj.bregman[t];
        let rhs = -2.0 * d + smoothness * traj.variance[t];
        report.point(t, -2.0 * inner, rhs, SLACK * (1.0 + inner.abs() + d.abs()));
    }
    Ok(report)
}

/// `2‖x_0 − x*‖²/(γT) + 24γ²σ²H²L`, valid for `0 < γ ≤ 1/(4LH)`.
pub fn theorem1_bound(
    gamma: f64,
    total_steps: usize,
    interval: usize,
    smoothness: f64,
    sigma2: f64,
    r0sq: f64,
) -> Result<f64> {
    require_positive("L", smoothness)?;
    require_nonnegative("sigma2", sigma2)?;
    require_nonnegative("r0sq", r0sq)?;
    if total_steps == 0 || interval == 0 {
        return Err(Error::Argument("step count and interval must be at least 1".into()));
    }
    if !stepsize_admissible(gamma, smoothness, interval) {
        return Err(Error::Argument(format!(
            "stepsize {gamma} outside (0, 1/(4LH)] for L = {smoothness}, H = {interval}"
        )));
    }
    let h = interval as f64;
    Ok(2.0 * r0sq / (gamma * total_steps as f64) + 24.0 * gamma * gamma * sigma2 * h * h * smoothness)
}

/// `f(x̄_T) − f* ≤ theorem1_bound(γ, T, H, L, σ², ‖x_0 − x*‖²)` at the end of the run.
pub fn check_theorem1(traj: &TrajectoryRecord, smoothness: f64, sigma2: f64) -> Result<CheckReport> {
    let h = traj.interval();
    require_admissible(traj.gamma, smoothness, h)?;
    let total = traj.total_steps();
    let r0sq = traj.dist2[0];
    let mut report = CheckReport::new("theorem1");
    let lhs = traj.avg_gap[total];
    let rhs = theorem1_bound(traj.gamma, total, h, smoothness, sigma2, r0sq)?;
    report.point(total, lhs, rhs, SLACK * (1.0 + lhs.abs()));
    Ok(report)
}

/// The ergodic bound at every synchronization time `t_p > 0`, each treated
/// as the horizon of a run truncated there.
pub fn check_theorem1_at_sync_times(
    traj: &TrajectoryRecord,
    smoothness: f64,
    sigma2: f64,
) -> Result<CheckReport> {
    let h = traj.interval();
    require_admissible(traj.gamma, smoothness, h)?;
    let r0sq = traj.dist2[0];
    let mut report = CheckReport::new("theorem1_sync_times");
    for &t in &traj.schedule.sync_times()[1..] {
        let lhs = traj.avg_gap[t];
        let rhs = theorem1_bound(traj.gamma, t, h, smoothness, sigma2, r0sq)?;
        report.point(t, lhs, rhs, SLACK * (1.0 + lhs.abs()));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `ε ≥ 3σ²/L`: communication matches plain gradient descent.
    LowAccuracy,
    HighAccuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerResult {
    pub epsilon: f64,
    pub gamma: f64,
    /// Continuous `T(γ) = 4‖x_0 − x*‖²/(εγ)`.
    pub total_steps: f64,
    /// Continuous `H(γ) = 1/(4·max{L, σ√(3L/ε)}·γ)`.
    pub interval: f64,
    pub comm_rounds: f64,
    /// `16‖x_0 − x*‖²/ε · max{L, σ√(3L/ε)}`
    pub lower_bound_comm: f64,
    pub regime: Regime,
}

/// `max{L, σ√(3L/ε)}`
fn planner_scale(epsilon: f64, smoothness: f64, sigma2: f64) -> f64 {
    smoothness.max((sigma2 * 3.0 * smoothness / epsilon).sqrt())
}

/// Number of steps and the synchronization interval that reach accuracy
/// `ε` with the fewest communication rounds at stepsize `γ ≤ 1/(4L)`.
pub fn plan_communication(
    epsilon: f64,
    smoothness: f64,
    sigma2: f64,
    r0sq: f64,
    gamma: f64,
) -> Result<PlannerResult> {
    require_positive("epsilon", epsilon)?;
    require_positive("L", smoothness)?;
    require_nonnegative("sigma2", sigma2)?;
    require_nonnegative("r0sq", r0sq)?;
    if !stepsize_admissible(gamma, smoothness, 1) {
        return Err(Error::Argument(format!(
            "stepsize {gamma} outside (0, 1/(4L)] for L = {smoothness}"
        )));
    }
    let scale = planner_scale(epsilon, smoothness, sigma2);
    let total_steps = 4.0 * r0sq / (epsilon * gamma);
    let interval = 1.0 / (4.0 * scale * gamma);
    Ok(PlannerResult {
        epsilon,
        gamma,
        total_steps,
        interval,
        comm_rounds: total_steps / interval,
        lower_bound_comm: 16.0 * r0sq / epsilon * scale,
        regime: if epsilon >= 3.0 * sigma2 / smoothness {
            Regime::LowAccuracy
        } else {
            Regime::HighAccuracy
        },
    })
}

/// An integer plan derived from a continuous [`PlannerResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundedPlan {
    pub total_steps: usize,
    pub interval: usize,
    pub comm_rounds: usize,
    /// Whether `γ ≤ 1/(4LH)` still holds for the rounded interval.
    pub gamma_admissible: bool,
}

/// Rounds `H` up (down when rounding up would break `γ ≤ 1/(4LH)`), then
/// rounds `T` up to a multiple of `H`.
pub fn round_plan(plan: &PlannerResult, smoothness: f64) -> RoundedPlan {
    let mut interval = (plan.interval.ceil() as usize).max(1);
    if !stepsize_admissible(plan.gamma, smoothness, interval) {
        interval = (plan.interval.floor() as usize).max(1);
    }
    let rounds = ((plan.total_steps / interval as f64).ceil() as usize).max(1);
    RoundedPlan {
        total_steps: rounds * interval,
        interval,
        comm_rounds: rounds,
        gamma_admissible: stepsize_admissible(plan.gamma, smoothness, interval),
    }
}

/// `8L‖x_0 − x*‖²/√(MT) + 3Mσ²H²/(2LT)`: the ergodic bound at
/// `γ = √M/(4L√T)`, valid for `H ≤ √T/√M`.
pub fn corollary_bound(
    total_steps: usize,
    workers: usize,
    interval: usize,
    smoothness: f64,
    sigma2: f64,
    r0sq: f64,
) -> Result<f64> {
    Ok(corollary_report(total_steps, workers, interval, smoothness, sigma2, r0sq)?.bound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub gamma: f64,
    pub bound: f64,
    /// Interval `T^{1/4} M^{−3/4}` that keeps the `1/√(MT)` rate.
    pub rate_interval: f64,
    /// `T / rate_interval = T^{3/4} M^{3/4}`.
    pub rate_comm_rounds: f64,
}

pub fn corollary_report(
    total_steps: usize,
    workers: usize,
    interval: usize,
    smoothness: f64,
    sigma2: f64,
    r0sq: f64,
) -> Result<CorollaryReport> {
    require_positive("L", smoothness)?;
    require_nonnegative("sigma2", sigma2)?;
    require_nonnegative("r0sq", r0sq)?;
    if total_steps == 0 || workers == 0 || interval == 0 {
        return Err(Error::Argument("T, M and H must be at least 1".into()));
    }
    let (t, m, h) = (total_steps as f64, workers as f64, interval as f64);
    if h * h * m > t {
        return Err(Error::Argument(format!("interval {interval} exceeds √T/√M = {}", (t / m).sqrt())));
    }
    let gamma = m.sqrt() / (4.0 * smoothness * t.sqrt());
    let bound = 8.0 * smoothness * r0sq / (m * t).sqrt() + 3.0 * m * sigma2 * h * h / (2.0 * smoothness * t);
    debug_assert!({
        let via_theorem = theorem1_bound(gamma, total_steps, interval, smoothness, sigma2, r0sq)
            .expect("γ = √M/(4L√T) is admissible when H ≤ √T/√M");
        (via_theorem - bound).abs() <= 1e-12 * bound.abs().max(f64::MIN_POSITIVE)
    });
    let rate_interval = t.powf(0.25) * m.powf(-0.75);
    Ok(CorollaryReport {
        gamma,
        bound,
        rate_interval,
        rate_comm_rounds: t / rate_interval,
    })
}
