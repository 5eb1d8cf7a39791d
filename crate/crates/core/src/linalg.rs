//! Dense vector helpers and a compressed sparse row matrix.
//!
//! Every reduction runs in ascending index order so that results are
//! bit-reproducible across runs and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean of equal-length vectors, computed as `v_0 + (1/n) Σ (v_i - v_0)`.
///
/// The shifted form returns `v_0` bit-exactly when all inputs are identical.
pub fn mean<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<f64> {
    let first = vectors[0].as_ref();
    let n = vectors.len() as f64;
    let mut shift = vec![0.0; first.len()];
    for v in &vectors[1..] {
        for ((s, x), f) in shift.iter_mut().zip(v.as_ref()).zip(first) {
            *s += x - f;
        }
    }
    first.iter().zip(&shift).map(|(f, s)| f + s / n).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Row-major sparse matrix with sorted column indices in every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from rows of `(column, value)` pairs.
    ///
    /// Columns must be strictly ascending within a row and below `ncols`.
    pub fn from_rows<R: AsRef<[(usize, f64)]>>(ncols: usize, rows: &[R]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(c, v) in row.as_ref() {
                if c >= ncols {
                    return Err(Error::Argument(format!(
                        "row {r}: column {c} out of range for dimension {ncols}"
                    )));
                }
                if prev.is_some_and(|p| c <= p) {
                    return Err(Error::Argument(format!(
                        "row {r}: column indices not strictly ascending"
                    )));
                }
                prev = Some(c);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds a matrix from dense rows, dropping exact zeros.
    pub fn from_dense(ncols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let sparse: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(ncols, &sparse)
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(c, v)| v * x[c]).sum()
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row_dot(i, x)).collect()
    }

    /// `Aᵀ y`
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (i, yi) in y.iter().enumerate() {
            for (c, v) in self.row(i) {
                out[c] += v * yi;
            }
        }
        out
    }

    /// Largest squared singular value, by power iteration on `AᵀA`.
    ///
    /// Stops once the Rayleigh quotient changes by at most `rel_tol`
    /// relative between iterations.
    pub fn max_singular_value_sq(&self, rel_tol: f64, max_iter: usize) -> Result<f64> {
        if self.nnz() == 0 {
            return Ok(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<f64> = (0..self.ncols).map(|_| rng.gen_range(0.5..1.5)).collect();
        let n0 = norm(&v);
        v.iter_mut().for_each(|x| *x /= n0);

        let mut estimate = 0.0;
        for _ in 0..max_iter {
            let w = self.tmatvec(&self.matvec(&v));
            // Rayleigh quotient vᵀAᵀAv for unit v
            let next = dot(&v, &w);
            let wn = norm(&w);
            if wn == 0.0 {
                return Ok(0.0);
            }
            v = w.into_iter().map(|x| x / wn).collect();
            if (next - estimate).abs() <= rel_tol * next.abs() {
                return Ok(next.max(wn));
            }
            estimate = next;
        }
        Err(Error::PowerIteration {
            iterations: max_iter,
            last_estimate: estimate,
            last_iterate: v,
        })
    }
}
