//! Seeded problem instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::libsvm::{partition_by_index, shards_to_suite, SparseDataset};
use crate::linalg::{self, CsrMatrix};
use crate::objectives::{LocalFunction, ObjectiveSuite};

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal_vector<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Quadratic,
    Logistic,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Variant::Quadratic),
            "logistic" => Ok(Variant::Logistic),
            other => Err(Error::Argument(format!("unknown variant {other:?}"))),
        }
    }
}

/// `½‖x − b_m‖²` per worker with Gaussian targets of the given spread.
pub fn quadratic_functions<R: Rng>(rng: &mut R, workers: usize, dim: usize, spread: f64) -> Vec<LocalFunction> {
    (0..workers)
        .map(|_| LocalFunction::quadratic(normal_vector(rng, dim, spread)))
        .collect()
}

/// Heterogeneous logistic workers: each worker draws its features around
/// its own mean and labels them with its own noisy linear rule.
pub fn logistic_functions<R: Rng>(
    rng: &mut R,
    workers: usize,
    dim: usize,
    rows: std::ops::RangeInclusive<usize>,
    lambda: f64,
) -> Result<Vec<LocalFunction>> {
    let shared = normal_vector(rng, dim, 1.0);
    (0..workers)
        .map(|_| {
            let n = rng.gen_range(rows.clone());
            let center = normal_vector(rng, dim, 1.0);
            let mut rule = normal_vector(rng, dim, 1.0);
            linalg::axpy(1.0, &shared, &mut rule);
            let mut dense = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let mut a = normal_vector(rng, dim, 1.0);
                linalg::axpy(1.0, &center, &mut a);
                let noise: f64 = rng.sample(StandardNormal);
                labels.push(if linalg::dot(&a, &rule) + noise >= 0.0 { 1.0 } else { -1.0 });
                dense.push(a);
            }
            LocalFunction::logistic(CsrMatrix::from_dense(dim, &dense)?, labels, lambda)
        })
        .collect()
}

/// A random suite of the given variant.
pub fn random_suite<R: Rng>(rng: &mut R, variant: Variant, workers: usize, dim: usize) -> Result<ObjectiveSuite> {
    let functions = match variant {
        Variant::Quadratic => quadratic_functions(rng, workers, dim, 2.0),
        Variant::Logistic => {
            let lambda = rng.gen_range(0.02..0.2);
            logistic_functions(rng, workers, dim, 5..=20, lambda)?
        }
    };
    ObjectiveSuite::new(functions)
}

/// Shape of a generated binary classification dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n: usize,
    pub dim: usize,
    /// Probability of flipping each label; 0 keeps the data separable.
    pub flip: f64,
    /// Feature `j` (0-based) is drawn with standard deviation `decay^j`
    /// before the row is normalized, giving a geometric feature spectrum.
    pub decay: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            dim: 50,
            flip: 0.0,
            decay: 0.85,
        }
    }
}

/// Dataset labelled by a random linear rule with unit-norm rows, sorted so
/// that all `-1` rows precede all `+1` rows.
///
/// Contiguous sharding of the result is maximally non-i.i.d.: most shards
/// see a single class.
pub fn label_sorted_dataset(seed: u64, spec: &DatasetSpec) -> Result<SparseDataset> {
    let DatasetSpec { n, dim, flip, decay } = *spec;
    if n == 0 || dim == 0 {
        return Err(Error::Argument("dataset needs at least one row and one feature".into()));
    }
    if !(0.0..=1.0).contains(&flip) {
        return Err(Error::Argument(format!("flip probability {flip} outside [0, 1]")));
    }
    if !(decay > 0.0 && decay <= 1.0) {
        return Err(Error::Argument(format!("feature decay {decay} outside (0, 1]")));
    }
    let mut rng = rng_for(seed, 0);
    let scales: Vec<f64> = (0..dim).map(|j| decay.powi(j as i32)).collect();
    let rule = normal_vector(&mut rng, dim, 1.0);
    let mut samples: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
        .map(|_| {
            let mut a: Vec<f64> = normal_vector(&mut rng, dim, 1.0)
                .into_iter()
                .zip(&scales)
                .map(|(z, s)| z * s)
                .collect();
            let norm = linalg::norm(&a);
            a.iter_mut().for_each(|v| *v /= norm);
            let mut y = if linalg::dot(&a, &rule) >= 0.0 { 1.0 } else { -1.0 };
            if flip > 0.0 && rng.gen_bool(flip) {
                y = -y;
            }
            (y, a.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect())
        })
        .collect();
    // Shuffle first so the stable sort does not preserve generation order.
    samples.shuffle(&mut rng);
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (labels, rows) = samples.into_iter().unzip();
    SparseDataset::new(rows, labels, dim)
}

/// The label-sorted dataset split into `workers` contiguous shards with
/// `λ = 1/n`.
pub fn non_iid_logistic_suite(seed: u64, spec: &DatasetSpec, workers: usize) -> Result<(SparseDataset, ObjectiveSuite)> {
    let ds = label_sorted_dataset(seed, spec)?;
    let partition = partition_by_index(ds.n(), workers)?;
    let suite = shards_to_suite(&ds, &partition, 1.0 / ds.n() as f64)?;
    Ok((ds, suite))
}
