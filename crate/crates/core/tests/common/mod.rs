//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code path it is used to check.

#![allow(dead_code)]

use localgd_core::synthetic::{self, Variant};
use localgd_core::{ObjectiveSuite, ReferenceSolution};

/// Central finite differences with step `1e-6·(1 + ‖x‖)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// `AᵀA` for dense rows.
pub fn gram(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let mut g = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    g
}

/// Centralized gradient descent on `f`, returning `x_0 … x_T`.
pub fn centralized_gd(suite: &ObjectiveSuite, gamma: f64, steps: usize, x0: &[f64]) -> Vec<Vec<f64>> {
    let mut xs = vec![x0.to_vec()];
    for _ in 0..steps {
        let x = xs.last().unwrap();
        let g = suite.grad(x).unwrap();
        xs.push(x.iter().zip(&g).map(|(a, b)| a - gamma * b).collect());
    }
    xs
}

/// Per-worker iterates of local GD on one-dimensional shifted quadratics,
/// by the hand recurrence `x ← x − γ(x − b_m)` with averaging every `h` steps.
pub fn quadratic_local_gd_1d(targets: &[f64], gamma: f64, h: usize, steps: usize, x0: f64) -> Vec<Vec<f64>> {
    let mut xs = vec![x0; targets.len()];
    let mut history = vec![xs.clone()];
    for t in 1..=steps {
        for (x, b) in xs.iter_mut().zip(targets) {
            *x -= gamma * (*x - b);
        }
        if t % h == 0 {
            let avg = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter_mut().for_each(|x| *x = avg);
        }
        history.push(xs.clone());
    }
    history
}

pub struct Instance {
    pub suite: ObjectiveSuite,
    pub reference: ReferenceSolution,
    pub x0: Vec<f64>,
}

pub fn random_instance(seed: u64, variant: Variant, workers: usize, dim: usize) -> Instance {
    let mut rng = synthetic::rng_for(seed, 77);
    let suite = synthetic::random_suite(&mut rng, variant, workers, dim).unwrap();
    let reference = suite.solve_reference(1e-10).unwrap();
    let x0 = synthetic::normal_vector(&mut rng, dim, 3.0);
    Instance { suite, reference, x0 }
}
