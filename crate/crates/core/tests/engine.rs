mod common;

use common::*;
use localgd_core::engine::EngineOptions;
use localgd_core::synthetic::{self, DatasetSpec, Variant};
use localgd_core::{run_gd, run_local_gd, run_local_gd_with, Error, LocalFunction, ObjectiveSuite, SyncSchedule};

fn variants() -> [Variant; 2] {
    [Variant::Quadratic, Variant::Logistic]
}

#[test]
fn update_identity_holds_at_every_step() {
    for (seed, variant) in (0..6).zip(variants().into_iter().cycle()) {
        let inst = random_instance(seed, variant, 5, 7);
        let l = inst.suite.smoothness();
        let schedule = SyncSchedule::uniform(4, 40).unwrap();
        let traj = run_local_gd(&inst.suite, &inst.reference, 1.0 / (4.0 * l), &schedule, &inst.x0).unwrap();
        assert_eq!(traj.update_residual.len(), 40);
        for t in 0..40 {
            let scale = 1.0 + norm(traj.iterate_at(t).unwrap());
            assert!(traj.update_residual[t] <= 1e-12 * scale, "step {t}: {:e}", traj.update_residual[t]);
        }
    }
}

#[test]
fn variance_vanishes_exactly_at_sync_times() {
    let inst = random_instance(11, Variant::Logistic, 4, 5);
    let l = inst.suite.smoothness();
    let schedule = SyncSchedule::from_times(vec![0, 3, 4, 9, 15]).unwrap();
    let traj = run_local_gd(&inst.suite, &inst.reference, 1.0 / (4.0 * l), &schedule, &inst.x0).unwrap();
    for t in 0..=15 {
        if schedule.is_sync(t) {
            assert_eq!(traj.variance[t], 0.0, "step {t}");
        } else {
            assert!(traj.variance[t] > 0.0, "step {t}");
        }
    }
}

#[test]
fn quadratic_iterates_match_hand_recurrence() {
    let targets = [-1.0, 0.5, 4.0];
    let suite = ObjectiveSuite::new(targets.iter().map(|b| LocalFunction::quadratic(vec![*b])).collect()).unwrap();
    let reference = suite.solve_reference(1e-12).unwrap();
    let (gamma, h, steps) = (0.1, 3, 12);
    let traj = run_local_gd(&suite, &reference, gamma, &SyncSchedule::uniform(h, steps).unwrap(), &[2.0]).unwrap();
    let hand = quadratic_local_gd_1d(&targets, gamma, h, steps, 2.0);
    for (t, xs) in hand.iter().enumerate() {
        let avg = xs.iter().sum::<f64>() / 3.0;
        let v = xs.iter().map(|x| (x - avg) * (x - avg)).sum::<f64>() / 3.0;
        assert!((traj.iterate_at(t).unwrap()[0] - avg).abs() <= 1e-14, "step {t}");
        assert!((traj.variance[t] - v).abs() <= 1e-14, "step {t}");
    }
}

#[test]
fn homogeneous_workers_reduce_to_gradient_descent() {
    let mut rng = synthetic::rng_for(2, 2);
    let one = synthetic::random_suite(&mut rng, Variant::Logistic, 1, 6).unwrap();
    let suite = ObjectiveSuite::new(vec![one.functions()[0].clone(); 5]).unwrap();
    let reference = suite.solve_reference(1e-10).unwrap();
    let x0 = synthetic::normal_vector(&mut rng, 6, 3.0);
    let gamma = 1.0 / (4.0 * suite.smoothness() * 8.0);
    let traj = run_local_gd(&suite, &reference, gamma, &SyncSchedule::uniform(8, 64).unwrap(), &x0).unwrap();
    assert!(traj.variance.iter().all(|v| *v == 0.0));
    let gd = centralized_gd(&one, gamma, 64, &x0);
    for (t, x) in gd.iter().enumerate() {
        let hat = traj.iterate_at(t).unwrap();
        assert!(diff_norm(hat, x) <= 1e-12 * (1.0 + norm(x)), "step {t}");
    }
}

#[test]
fn interval_one_matches_centralized_gd() {
    for seed in 0..8 {
        let variant = variants()[seed as usize % 2];
        let inst = random_instance(seed, variant, 4, 5);
        let gamma = 1.0 / (4.0 * inst.suite.smoothness());
        let traj = run_gd(&inst.suite, &inst.reference, gamma, 50, &inst.x0).unwrap();
        let gd = centralized_gd(&inst.suite, gamma, 50, &inst.x0);
        for (t, x) in gd.iter().enumerate() {
            assert!(diff_norm(traj.iterate_at(t).unwrap(), x) <= 1e-12 * (1.0 + norm(x)), "seed {seed} step {t}");
        }
    }
}

#[test]
fn single_worker_is_gd_for_any_interval() {
    let inst = random_instance(3, Variant::Logistic, 1, 4);
    let gamma = 1.0 / (4.0 * inst.suite.smoothness());
    let traj = run_local_gd(&inst.suite, &inst.reference, gamma, &SyncSchedule::uniform(5, 30).unwrap(), &inst.x0).unwrap();
    let gd = centralized_gd(&inst.suite, gamma, 30, &inst.x0);
    for (t, x) in gd.iter().enumerate() {
        assert!(diff_norm(traj.iterate_at(t).unwrap(), x) <= 1e-12 * (1.0 + norm(x)));
        assert_eq!(traj.variance[t], 0.0);
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let inst = random_instance(21, Variant::Logistic, 10, 20);
    let gamma = 1.0 / inst.suite.smoothness();
    let schedule = SyncSchedule::uniform(8, 80).unwrap();
    let a = run_local_gd(&inst.suite, &inst.reference, gamma, &schedule, &inst.x0).unwrap();
    let b = run_local_gd(&inst.suite, &inst.reference, gamma, &schedule, &inst.x0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thinning_keeps_scalars_and_sync_iterates() {
    let inst = random_instance(8, Variant::Quadratic, 3, 4);
    let gamma = 0.05;
    let schedule = SyncSchedule::uniform(4, 20).unwrap();
    let full = run_local_gd(&inst.suite, &inst.reference, gamma, &schedule, &inst.x0).unwrap();
    let thin = run_local_gd_with(&inst.suite, &inst.reference, gamma, &schedule, &inst.x0, EngineOptions { thin: true }).unwrap();
    assert_eq!(full.gap, thin.gap);
    assert_eq!(full.variance, thin.variance);
    assert_eq!(thin.iterates.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 4, 8, 12, 16, 20]);
    assert_eq!(thin.iterate_at(8), full.iterate_at(8));
    assert_eq!(thin.iterate_at(9), None);
    assert_eq!(full.bar_x, thin.bar_x);
}

#[test]
fn averaged_iterate_is_the_mean_of_past_iterates() {
    let inst = random_instance(5, Variant::Logistic, 3, 3);
    let traj = run_local_gd(&inst.suite, &inst.reference, 0.1, &SyncSchedule::uniform(2, 10).unwrap(), &inst.x0).unwrap();
    let mut bar = vec![0.0; 3];
    for t in 0..10 {
        for (b, x) in bar.iter_mut().zip(traj.iterate_at(t).unwrap()) {
            *b += x / 10.0;
        }
    }
    assert!(diff_norm(&bar, &traj.bar_x) <= 1e-14);
    let gap = inst.suite.value(&bar).unwrap() - inst.reference.f_star;
    assert!((traj.avg_gap[10] - gap).abs() <= 1e-13);
}

#[test]
fn logistic_gd_at_inverse_smoothness_is_monotone() {
    let (_, suite) = synthetic::non_iid_logistic_suite(1, &DatasetSpec { n: 400, dim: 10, ..DatasetSpec::default() }, 4).unwrap();
    let reference = suite.solve_reference(1e-10).unwrap();
    let traj = run_gd(&suite, &reference, 1.0 / suite.smoothness(), 200, &[0.0; 10]).unwrap();
    for t in 1..=200 {
        assert!(traj.gap[t] <= traj.gap[t - 1] + 1e-15, "step {t}");
    }
}

#[test]
fn oversized_stepsize_reports_divergence() {
    let suite = ObjectiveSuite::new(vec![LocalFunction::quadratic(vec![1.0])]).unwrap();
    let reference = suite.solve_reference(1e-12).unwrap();
    let err = run_gd(&suite, &reference, 3.0, 5000, &[3.0]).unwrap_err();
    assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
}

#[test]
fn rejects_bad_arguments() {
    let inst = random_instance(1, Variant::Quadratic, 2, 3);
    let schedule = SyncSchedule::uniform(1, 4).unwrap();
    assert!(run_local_gd(&inst.suite, &inst.reference, 0.0, &schedule, &inst.x0).is_err());
    assert!(matches!(
        run_local_gd(&inst.suite, &inst.reference, 0.1, &schedule, &[0.0]),
        Err(Error::Dimension { .. })
    ));
}
