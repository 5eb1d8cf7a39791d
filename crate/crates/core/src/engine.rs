//! Local gradient descent with periodic model averaging.
//!
//! Every worker starts an epoch from the shared average, takes local
//! gradient steps on its own objective, and at the next synchronization time
//! all workers are replaced by their exact average. The engine records the
//! analysis quantities of the average iterate at every step.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::objectives::{ObjectiveSuite, ReferenceSolution};

/// Communication times `0 = t_0 < t_1 < … < t_P = T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncSchedule {
    sync_times: Vec<usize>,
}

impl SyncSchedule {
    /// `{0, H, 2H, …, T}`; `T` must be a positive multiple of `H`.
    pub fn uniform(interval: usize, total_steps: usize) -> Result<Self> {
        if interval == 0 || total_steps == 0 {
            return Err(Error::Argument("interval and step count must be at least 1".into()));
        }
        if total_steps % interval != 0 {
            return Err(Error::Argument(format!(
                "step count {total_steps} is not a multiple of the interval {interval}"
            )));
        }
        Ok(Self {
            sync_times: (0..=total_steps).step_by(interval).collect(),
        })
    }

    /// Arbitrary schedule; must start at 0, increase strictly, and contain
    /// at least one step.
    pub fn from_times(sync_times: Vec<usize>) -> Result<Self> {
        if sync_times.first() != Some(&0) {
            return Err(Error::Argument("schedule must start at step 0".into()));
        }
        if sync_times.len() < 2 {
            return Err(Error::Argument("schedule needs a final synchronization after step 0".into()));
        }
        if sync_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("synchronization times must increase strictly".into()));
        }
        Ok(Self { sync_times })
    }

    pub fn sync_times(&self) -> &[usize] {
        &self.sync_times
    }

    /// Longest gap between consecutive synchronizations.
    pub fn interval(&self) -> usize {
        self.sync_times.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(1)
    }

    pub fn total_steps(&self) -> usize {
        *self.sync_times.last().expect("schedule is never empty")
    }

    pub fn is_sync(&self, t: usize) -> bool {
        self.sync_times.binary_search(&t).is_ok()
    }

    /// Number of averaging rounds in `(0, t]`.
    pub fn rounds_through(&self, t: usize) -> usize {
        self.sync_times.partition_point(|&s| s <= t) - 1
    }

    /// Half-open step ranges `[t_p, t_{p+1})` of each epoch.
    pub fn epochs(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.sync_times.windows(2).map(|w| w[0]..w[1])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Keep average iterates only at synchronization times; scalar series
    /// are always complete.
    pub thin: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub hat_x: Vec<f64>,
}

/// Instrumented history of one run. Every scalar series has `T + 1`
/// entries indexed by step, except `update_residual` which has `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub gamma: f64,
    pub schedule: SyncSchedule,
    pub reference: ReferenceSolution,
    pub x0: Vec<f64>,
    /// Average iterates, at every step or only at sync times when thinned.
    pub iterates: Vec<Snapshot>,
    /// `V_t = (1/M) Σ ‖x_t^m − x̂_t‖²`
    pub variance: Vec<f64>,
    /// `‖g_t‖²` with `g_t = (1/M) Σ ∇f_m(x_t^m)`
    pub grad_norm2: Vec<f64>,
    /// `⟨x̂_t − x*, g_t⟩`
    pub inner_rg: Vec<f64>,
    /// `D_f(x̂_t, x*)`
    pub bregman: Vec<f64>,
    /// `‖x̂_t − x*‖²`
    pub dist2: Vec<f64>,
    /// `f(x̂_t) − f*`
    pub gap: Vec<f64>,
    /// `f(x̄_t) − f*` for the running average `x̄_t` of `x̂_0 … x̂_{t−1}`
    /// (`x̂_0` at `t = 0`).
    pub avg_gap: Vec<f64>,
    /// `‖x̂_{t+1} − (x̂_t − γ g_t)‖`
    pub update_residual: Vec<f64>,
    /// `x̄_T = (1/T) Σ_{t<T} x̂_t`
    pub bar_x: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn total_steps(&self) -> usize {
        self.schedule.total_steps()
    }

    pub fn interval(&self) -> usize {
        self.schedule.interval()
    }

    pub fn final_iterate(&self) -> &[f64] {
        &self.iterates.last().expect("trajectory has a final snapshot").hat_x
    }

    /// `(f(x̂_t) − f*) / (f(x̂_0) − f*)`
    pub fn relative_gap(&self, step: usize) -> f64 {
        self.gap[step] / self.gap[0]
    }

    /// Fewest communication rounds after which the average iterate at a
    /// synchronization time has relative gap at most `eps`.
    pub fn rounds_to_relative_gap(&self, eps: f64) -> Option<usize> {
        self.schedule
            .sync_times()
            .iter()
            .position(|&t| self.relative_gap(t) <= eps)
    }

    pub fn iterate_at(&self, step: usize) -> Option<&[f64]> {
        self.iterates
            .binary_search_by_key(&step, |s| s.step)
            .ok()
            .map(|i| self.iterates[i].hat_x.as_slice())
    }
}

/// Runs local GD over `schedule` from `x0`.
pub fn run_local_gd(
    suite: &ObjectiveSuite,
    reference: &ReferenceSolution,
    gamma: f64,
    schedule: &SyncSchedule,
    x0: &[f64],
) -> Result<TrajectoryRecord> {
    run_local_gd_with(suite, reference, gamma, schedule, x0, EngineOptions::default())
}

/// Plain gradient descent: local GD that averages after every step.
pub fn run_gd(
    suite: &ObjectiveSuite,
    reference: &ReferenceSolution,
    gamma: f64,
    total_steps: usize,
    x0: &[f64],
) -> Result<TrajectoryRecord> {
    let schedule = SyncSchedule::uniform(1, total_steps)?;
    run_local_gd(suite, reference, gamma, &schedule, x0)
}

pub fn run_local_gd_with(
    suite: &ObjectiveSuite,
    reference: &ReferenceSolution,
    gamma: f64,
    schedule: &SyncSchedule,
    x0: &[f64],
    options: EngineOptions,
) -> Result<TrajectoryRecord> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Argument(format!("stepsize {gamma} must be positive")));
    }
    check_dim(suite.dim(), x0.len())?;
    check_dim(suite.dim(), reference.x_star.len())?;
    let total = schedule.total_steps();
    let m = suite.workers();
    let x_star = &reference.x_star;
    let f_star = reference.f_star;
    let grad_star = suite.grad_unchecked(x_star);

    let mut record = TrajectoryRecord {
        gamma,
        schedule: schedule.clone(),
        reference: reference.clone(),
        x0: x0.to_vec(),
        iterates: Vec::new(),
        variance: Vec::with_capacity(total + 1),
        grad_norm2: Vec::with_capacity(total + 1),
        inner_rg: Vec::with_capacity(total + 1),
        bregman: Vec::with_capacity(total + 1),
        dist2: Vec::with_capacity(total + 1),
        gap: Vec::with_capacity(total + 1),
        avg_gap: Vec::with_capacity(total + 1),
        update_residual: Vec::with_capacity(total),
        bar_x: Vec::new(),
    };

    let mut workers = vec![x0.to_vec(); m];
    let mut running_sum = vec![0.0; suite.dim()];
    let mut predicted: Option<Vec<f64>> = None;

    for t in 0..=total {
        let hat = linalg::mean(&workers);
        let grads = suite.local_grads(&workers);
        if !linalg::all_finite(&hat) || grads.iter().any(|g| !linalg::all_finite(g)) {
            return Err(Error::Divergence { step: t });
        }
        let variance = workers.iter().map(|x| linalg::dist2(x, &hat)).sum::<f64>() / m as f64;
        let g = average_in_order(&grads);
        let offset = linalg::sub(&hat, x_star);
        let gap = suite.value_unchecked(&hat) - f_star;
        let avg_gap = if t == 0 {
            gap
        } else {
            let bar: Vec<f64> = running_sum.iter().map(|s| s / t as f64).collect();
            suite.value_unchecked(&bar) - f_star
        };
        let scalars = [variance, gap, avg_gap];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: t });
        }

        if let Some(p) = predicted.take() {
            record.update_residual.push(linalg::dist2(&hat, &p).sqrt());
        }
        record.variance.push(variance);
        record.grad_norm2.push(linalg::norm2(&g));
        record.inner_rg.push(linalg::dot(&offset, &g));
        record.bregman.push(gap - linalg::dot(&grad_star, &offset));
        record.dist2.push(linalg::norm2(&offset));
        record.gap.push(gap);
        record.avg_gap.push(avg_gap);

        if t == total {
            record.bar_x = running_sum.iter().map(|s| s / total as f64).collect();
            record.iterates.push(Snapshot { step: t, hat_x: hat });
            break;
        }

        let mut next = hat.clone();
        linalg::axpy(-gamma, &g, &mut next);
        predicted = Some(next);
        linalg::axpy(1.0, &hat, &mut running_sum);
        if !options.thin || schedule.is_sync(t) {
            record.iterates.push(Snapshot { step: t, hat_x: hat });
        }

        for (x, gm) in workers.iter_mut().zip(&grads) {
            linalg::axpy(-gamma, gm, x);
        }
        if schedule.is_sync(t + 1) {
            let avg = linalg::mean(&workers);
            for x in workers.iter_mut() {
                x.copy_from_slice(&avg);
            }
        }
    }
    Ok(record)
}

fn average_in_order(vectors: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for v in vectors {
        linalg::axpy(1.0, v, &mut out);
    }
    let m = vectors.len() as f64;
    out.iter_mut().for_each(|o| *o /= m);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::LocalFunction;

    fn two_quadratics() -> (ObjectiveSuite, ReferenceSolution) {
        let suite = ObjectiveSuite::new(vec![
            LocalFunction::quadratic(vec![0.0]),
            LocalFunction::quadratic(vec![2.0]),
        ])
        .unwrap();
        let reference = suite.solve_reference(1e-12).unwrap();
        (suite, reference)
    }

    #[test]
    fn uniform_schedules() {
        assert_eq!(SyncSchedule::uniform(1, 3).unwrap().sync_times(), &[0, 1, 2, 3]);
        assert_eq!(SyncSchedule::uniform(4, 8).unwrap().sync_times(), &[0, 4, 8]);
        assert!(SyncSchedule::uniform(3, 8).is_err());
        assert!(SyncSchedule::uniform(0, 8).is_err());
        assert!(SyncSchedule::uniform(1, 0).is_err());
    }

    #[test]
    fn general_schedules() {
        let s = SyncSchedule::from_times(vec![0, 2, 7, 9]).unwrap();
        assert_eq!(s.interval(), 5);
        assert_eq!(s.total_steps(), 9);
        assert_eq!(s.rounds_through(0), 0);
        assert_eq!(s.rounds_through(6), 1);
        assert_eq!(s.rounds_through(7), 2);
        assert_eq!(s.epochs().collect::<Vec<_>>(), vec![0..2, 2..7, 7..9]);
        assert!(SyncSchedule::from_times(vec![1, 2]).is_err());
        assert!(SyncSchedule::from_times(vec![0]).is_err());
        assert!(SyncSchedule::from_times(vec![0, 3, 3]).is_err());
    }

    #[test]
    fn rounds_for_uniform_schedules() {
        let s = SyncSchedule::uniform(1, 10).unwrap();
        assert!((0..=10).all(|t| s.rounds_through(t) == t));
        let s = SyncSchedule::uniform(8, 32).unwrap();
        assert_eq!(s.rounds_through(16), 2);
        assert_eq!(s.rounds_through(15), 1);
    }

    #[test]
    fn hand_computed_two_worker_run() {
        // x_{t+1} = x_t − γ(x_t − b): worker 2 goes 0 → 0.5 → 0.875.
        let (suite, reference) = two_quadratics();
        let schedule = SyncSchedule::uniform(2, 2).unwrap();
        let traj = run_local_gd(&suite, &reference, 0.25, &schedule, &[0.0]).unwrap();
        assert_eq!(traj.iterate_at(1).unwrap(), &[0.25]);
        assert_eq!(traj.variance[1], 0.0625);
        assert!((traj.final_iterate()[0] - 0.4375).abs() <= 1e-15);
        assert_eq!(traj.variance[2], 0.0);
        assert_eq!(traj.bar_x, vec![0.125]);
    }

    #[test]
    fn quadratic_gd_with_unit_step_lands_on_the_mean() {
        let (suite, reference) = two_quadratics();
        let traj = run_gd(&suite, &reference, 1.0, 3, &[7.0]).unwrap();
        assert_eq!(traj.iterate_at(1).unwrap(), &[1.0]);
        assert_eq!(traj.dist2[1], 0.0);
    }

    #[test]
    fn thinned_run_keeps_sync_snapshots_only() {
        let (suite, reference) = two_quadratics();
        let schedule = SyncSchedule::uniform(4, 12).unwrap();
        let full = run_local_gd(&suite, &reference, 0.1, &schedule, &[3.0]).unwrap();
        let thin =
            run_local_gd_with(&suite, &reference, 0.1, &schedule, &[3.0], EngineOptions { thin: true }).unwrap();
        assert_eq!(full.iterates.len(), 13);
        let steps: Vec<usize> = thin.iterates.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 4, 8, 12]);
        assert_eq!(full.variance, thin.variance);
        assert_eq!(full.bar_x, thin.bar_x);
    }

    #[test]
    fn divergence_is_reported() {
        let (suite, reference) = two_quadratics();
        // |1 − γ| > 1 grows geometrically until it overflows.
        let err = run_gd(&suite, &reference, 1e150, 50, &[3.0]).unwrap_err();
        assert!(matches!(err, Error::Divergence { step } if step > 0), "{err:?}");
    }

    #[test]
    fn argument_errors() {
        let (suite, reference) = two_quadratics();
        let s = SyncSchedule::uniform(1, 2).unwrap();
        assert!(run_local_gd(&suite, &reference, 0.0, &s, &[0.0]).is_err());
        assert!(run_local_gd(&suite, &reference, f64::NAN, &s, &[0.0]).is_err());
        assert!(run_local_gd(&suite, &reference, 0.1, &s, &[0.0, 1.0]).is_err());
    }
}
