//! Smooth convex local objectives `f_m`, the averaged objective
//! `f = (1/M) Σ f_m`, and the reference quantities every check is measured
//! against: `x*`, `f(x*)` and the heterogeneity `σ² = (1/M) Σ ‖∇f_m(x*)‖²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, CsrMatrix};

/// Relative tolerance for the power iteration behind logistic smoothness.
pub const POWER_ITERATION_TOL: f64 = 1e-9;
pub const POWER_ITERATION_MAX_ITER: usize = 10_000;
/// Relative inflation applied to power-iteration smoothness estimates, which
/// approach the largest eigenvalue from below.
pub const SMOOTHNESS_INFLATION: f64 = 1e-6;
pub const DEFAULT_REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITER: usize = 10_000_000;

// Below this many nonzeros per gradient the rayon fan-out costs more than it saves.
const PARALLEL_WORK_THRESHOLD: usize = 64 * 1024;

/// `log(1 + exp(t))` without overflow for large `|t|`.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// The standard logistic function `1 / (1 + exp(-t))`.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// One worker's objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalFunction {
    /// `½‖x − target‖²`
    QuadraticShift { target: Vec<f64> },
    /// `(1/n) Σ_i log(1 + exp(−y_i ⟨a_i, x⟩)) + (λ/2)‖x‖²`
    LogisticL2 {
        features: CsrMatrix,
        labels: Vec<f64>,
        lambda: f64,
    },
}

impl LocalFunction {
    pub fn quadratic(target: Vec<f64>) -> Self {
        LocalFunction::QuadraticShift { target }
    }

    pub fn logistic(features: CsrMatrix, labels: Vec<f64>, lambda: f64) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Argument("logistic objective needs at least one row".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::Argument(format!(
                "{} labels for {} rows",
                labels.len(),
                features.nrows()
            )));
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::Argument(format!("label {bad} is not ±1")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!("regularization {lambda} must be finite and ≥ 0")));
        }
        Ok(LocalFunction::LogisticL2 {
            features,
            labels,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            LocalFunction::QuadraticShift { target } => target.len(),
            LocalFunction::LogisticL2 { features, .. } => features.ncols(),
        }
    }

    fn work(&self) -> usize {
        match self {
            LocalFunction::QuadraticShift { target } => target.len(),
            LocalFunction::LogisticL2 { features, .. } => features.nnz() + features.ncols(),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.grad_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            LocalFunction::QuadraticShift { target } => 0.5 * linalg::dist2(x, target),
            LocalFunction::LogisticL2 {
                features,
                labels,
                lambda,
            } => {
                let n = labels.len() as f64;
                let loss: f64 = labels
                    .iter()
                    .enumerate()
                    .map(|(i, y)| softplus(-y * features.row_dot(i, x)))
                    .sum();
                if *lambda > 0.0 {
                    loss / n + 0.5 * lambda * linalg::norm2(x)
                } else {
                    loss / n
                }
            }
        }
    }

    pub(crate) fn grad_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LocalFunction::QuadraticShift { target } => linalg::sub(x, target),
            LocalFunction::LogisticL2 {
                features,
                labels,
                lambda,
            } => {
                let n = labels.len() as f64;
                let weights: Vec<f64> = labels
                    .iter()
                    .enumerate()
                    .map(|(i, y)| -y * sigmoid(-y * features.row_dot(i, x)) / n)
                    .collect();
                let mut g = features.tmatvec(&weights);
                linalg::axpy(*lambda, x, &mut g);
                g
            }
        }
    }

    /// Gradient Lipschitz constant of this function.
    ///
    /// Exact for the quadratic; for the logistic loss this is
    /// `s_max(A)² / (4n) + λ` with `s_max` from power iteration, inflated by
    /// [`SMOOTHNESS_INFLATION`].
    pub fn smoothness(&self) -> Result<f64> {
        match self {
            LocalFunction::QuadraticShift { .. } => Ok(1.0),
            LocalFunction::LogisticL2 {
                features,
                labels,
                lambda,
            } => {
                let s2 = features.max_singular_value_sq(POWER_ITERATION_TOL, POWER_ITERATION_MAX_ITER)?;
                let l = s2 / (4.0 * labels.len() as f64) + lambda;
                Ok(l * (1.0 + SMOOTHNESS_INFLATION))
            }
        }
    }
}

/// Largest per-function smoothness constant.
pub fn estimate_smoothness(functions: &[LocalFunction]) -> Result<f64> {
    if functions.is_empty() {
        return Err(Error::Argument("empty objective suite".into()));
    }
    let mut l = 0.0f64;
    for f in functions {
        l = l.max(f.smoothness()?);
    }
    Ok(l)
}

/// The `M` local objectives plus the shared dimension and smoothness bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectiveSuite {
    functions: Vec<LocalFunction>,
    dim: usize,
    smoothness: f64,
}

impl ObjectiveSuite {
    /// Validates dimensions and estimates `L`.
    pub fn new(functions: Vec<LocalFunction>) -> Result<Self> {
        let dim = Self::common_dim(&functions)?;
        let smoothness = estimate_smoothness(&functions)?;
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(Error::Argument(format!(
                "smoothness constant {smoothness} must be positive (objective is flat)"
            )));
        }
        Ok(Self {
            functions,
            dim,
            smoothness,
        })
    }

    /// Uses a caller-supplied `L`, which must still be positive.
    pub fn with_smoothness(functions: Vec<LocalFunction>, smoothness: f64) -> Result<Self> {
        let dim = Self::common_dim(&functions)?;
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(Error::Argument(format!("smoothness constant {smoothness} must be positive")));
        }
        Ok(Self {
            functions,
            dim,
            smoothness,
        })
    }

    fn common_dim(functions: &[LocalFunction]) -> Result<usize> {
        let first = functions
            .first()
            .ok_or_else(|| Error::Argument("empty objective suite".into()))?;
        let dim = first.dim();
        for f in functions {
            check_dim(dim, f.dim())?;
        }
        Ok(dim)
    }

    pub fn functions(&self) -> &[LocalFunction] {
        &self.functions
    }

    pub fn workers(&self) -> usize {
        self.functions.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn parallel(&self) -> bool {
        self.functions.len() > 1
            && self.functions.iter().map(LocalFunction::work).sum::<usize>() >= PARALLEL_WORK_THRESHOLD
    }

    /// Gradients of each `f_m` at its own point, in worker order.
    pub(crate) fn local_grads(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if self.parallel() {
            self.functions
                .par_iter()
                .zip(points.par_iter())
                .map(|(f, x)| f.grad_unchecked(x))
                .collect()
        } else {
            self.functions
                .iter()
                .zip(points)
                .map(|(f, x)| f.grad_unchecked(x))
                .collect()
        }
    }

    fn local_grads_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        if self.parallel() {
            self.functions.par_iter().map(|f| f.grad_unchecked(x)).collect()
        } else {
            self.functions.iter().map(|f| f.grad_unchecked(x)).collect()
        }
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        let values: Vec<f64> = if self.parallel() {
            self.functions.par_iter().map(|f| f.value_unchecked(x)).collect()
        } else {
            self.functions.iter().map(|f| f.value_unchecked(x)).collect()
        };
        values.iter().sum::<f64>() / values.len() as f64
    }

    pub(crate) fn grad_unchecked(&self, x: &[f64]) -> Vec<f64> {
        average(&self.local_grads_at(x))
    }

    /// `f(x) = (1/M) Σ f_m(x)`
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value_unchecked(x))
    }

    /// `∇f(x) = (1/M) Σ ∇f_m(x)`
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.grad_unchecked(x))
    }

    /// `(1/M) Σ_m ‖∇f_m(x_star)‖²`
    pub fn compute_sigma2(&self, x_star: &[f64]) -> Result<f64> {
        check_dim(self.dim, x_star.len())?;
        let grads = self.local_grads_at(x_star);
        Ok(grads.iter().map(|g| linalg::norm2(g)).sum::<f64>() / grads.len() as f64)
    }

    /// Bregman divergence of `f`: `f(x) − f(y) − ⟨∇f(y), x − y⟩`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let gy = self.grad_unchecked(y);
        Ok(self.value_unchecked(x) - self.value_unchecked(y) - linalg::dot(&gy, &linalg::sub(x, y)))
    }

    /// Gradient descent at stepsize `1/L` from the origin until
    /// `‖∇f(x)‖ ≤ tol`.
    pub fn solve_reference(&self, tol: f64) -> Result<ReferenceSolution> {
        self.solve_reference_capped(tol, REFERENCE_MAX_ITER)
    }

    pub fn solve_reference_capped(&self, tol: f64, max_iter: usize) -> Result<ReferenceSolution> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::Argument(format!("tolerance {tol} must be positive")));
        }
        let step = 1.0 / self.smoothness;
        let mut x = vec![0.0; self.dim];
        let mut iterations = 0;
        let mut g = self.grad_unchecked(&x);
        let mut residual = linalg::norm(&g);
        while residual > tol && iterations < max_iter {
            linalg::axpy(-step, &g, &mut x);
            g = self.grad_unchecked(&x);
            residual = linalg::norm(&g);
            iterations += 1;
            if !residual.is_finite() {
                return Err(Error::Divergence { step: iterations });
            }
        }
        let solution = ReferenceSolution {
            f_star: self.value_unchecked(&x),
            sigma2: self.compute_sigma2(&x)?,
            x_star: x,
            grad_norm_residual: residual,
            iterations_used: iterations,
        };
        if residual > tol {
            return Err(Error::Convergence {
                iterations,
                residual,
                tol,
                partial: Box::new(solution),
            });
        }
        Ok(solution)
    }
}

fn average(vectors: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let m = vectors.len() as f64;
    out.iter_mut().for_each(|o| *o /= m);
    out
}

/// A numerically computed minimizer of `f` with its certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub sigma2: f64,
    /// Achieved `‖∇f(x_star)‖`.
    pub grad_norm_residual: f64,
    pub iterations_used: usize,
}
