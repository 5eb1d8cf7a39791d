//! LIBSVM text format and the contiguous, index-based worker partition.
//!
//! ```text
//! +1 1:0.5 3:2.0   # label, then 1-based index:value pairs
//! -1
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::objectives::{LocalFunction, ObjectiveSuite};

/// Binary-labelled sparse rows with 0-based, strictly ascending indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseDataset {
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Always `+1.0` or `-1.0`.
    pub labels: Vec<f64>,
    pub dim: usize,
}

impl SparseDataset {
    pub fn new(rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Argument(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::Argument(format!("label {bad} is not ±1")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.windows(2).any(|w| w[0].0 >= w[1].0) || row.last().is_some_and(|(c, _)| *c >= dim) {
                return Err(Error::Argument(format!("row {i}: indices must ascend and stay below {dim}")));
            }
        }
        Ok(Self { rows, labels, dim })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Pads the feature dimension, e.g. to align train and test files.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::Argument(format!(
                "requested dimension {dim} is below the inferred dimension {}",
                self.dim
            )));
        }
        self.dim = dim;
        Ok(self)
    }

    /// Canonical LIBSVM text: `+1`/`-1` labels, 1-based indices and the
    /// shortest round-tripping decimal for every value.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for (row, y) in self.rows.iter().zip(&self.labels) {
            out.push_str(if *y > 0.0 { "+1" } else { "-1" });
            for (c, v) in row {
                let _ = write!(out, " {}:{}", c + 1, v);
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> DatasetSummary {
        let per_row: Vec<usize> = self.rows.iter().map(Vec::len).collect();
        let positives = self.labels.iter().filter(|y| **y > 0.0).count();
        DatasetSummary {
            n: self.n(),
            d: self.dim,
            positives,
            negatives: self.n() - positives,
            nnz: self.nnz(),
            min_row_nnz: per_row.iter().copied().min().unwrap_or(0),
            max_row_nnz: per_row.iter().copied().max().unwrap_or(0),
            mean_row_nnz: if self.n() == 0 {
                0.0
            } else {
                self.nnz() as f64 / self.n() as f64
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub positives: usize,
    pub negatives: usize,
    pub nnz: usize,
    pub min_row_nnz: usize,
    pub max_row_nnz: usize,
    pub mean_row_nnz: f64,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// A label and its sparse features.
type Sample = (f64, Vec<(usize, f64)>);

fn parse_line(lineno: usize, line: &str) -> Result<Option<Sample>> {
    let content = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = content.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_error(lineno, format!("label {label_tok:?} is not numeric")))?;
    if label.is_nan() {
        return Err(parse_error(lineno, "label is NaN"));
    }
    let label = if label > 0.0 { 1.0 } else { -1.0 };

    let mut features = Vec::new();
    let mut prev: Option<usize> = None;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_error(lineno, format!("feature {tok:?} is missing ':'")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_error(lineno, format!("feature index {idx:?} is not a non-negative integer")))?;
        if idx < 1 {
            return Err(parse_error(lineno, "feature indices are 1-based"));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| parse_error(lineno, format!("feature value {val:?} is not numeric")))?;
        if !val.is_finite() {
            return Err(parse_error(lineno, format!("feature value {val} is not finite")));
        }
        if let Some(p) = prev {
            if idx == p {
                return Err(parse_error(lineno, format!("duplicate feature index {idx}")));
            }
            if idx < p {
                return Err(parse_error(lineno, format!("feature index {idx} follows {p}; indices must ascend")));
            }
        }
        prev = Some(idx);
        features.push((idx - 1, val));
    }
    Ok(Some((label, features)))
}

/// Parses LIBSVM text from a reader, one sample per line.
///
/// Blank lines and anything after `#` are ignored. Labels `> 0` map to `+1`
/// and all others to `-1`. Errors carry the 1-based line number.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some((label, features)) = parse_line(i + 1, &line)? {
            if let Some((c, _)) = features.last() {
                dim = dim.max(c + 1);
            }
            labels.push(label);
            rows.push(features);
        }
    }
    Ok(SparseDataset { rows, labels, dim })
}

pub fn parse_libsvm_str(text: &str) -> Result<SparseDataset> {
    parse_libsvm(text.as_bytes())
}

/// Reads a LIBSVM file, decompressing transparently when the name ends in `.gz`.
pub fn read_libsvm(path: &Path) -> Result<SparseDataset> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_libsvm(BufReader::new(reader))
}

/// Row offsets of `M` contiguous shards: `boundaries[m]..boundaries[m+1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub boundaries: Vec<usize>,
}

impl PartitionSpec {
    pub fn workers(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn shard(&self, m: usize) -> std::ops::Range<usize> {
        self.boundaries[m]..self.boundaries[m + 1]
    }

    pub fn shard_sizes(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Splits `n` rows into `workers` contiguous blocks in original order, the
/// first `n mod workers` blocks one row larger.
pub fn partition_by_index(n: usize, workers: usize) -> Result<PartitionSpec> {
    if workers == 0 {
        return Err(Error::Argument("worker count must be at least 1".into()));
    }
    if workers > n {
        return Err(Error::Argument(format!("{workers} workers for {n} rows leaves empty shards")));
    }
    let base = n / workers;
    let extra = n % workers;
    let mut boundaries = Vec::with_capacity(workers + 1);
    boundaries.push(0);
    for m in 0..workers {
        let size = base + usize::from(m < extra);
        boundaries.push(boundaries[m] + size);
    }
    Ok(PartitionSpec { boundaries })
}

/// One L2-regularized logistic objective per shard, each averaged over its
/// own rows.
pub fn shards_to_suite(ds: &SparseDataset, spec: &PartitionSpec, lambda: f64) -> Result<ObjectiveSuite> {
    if spec.boundaries.first() != Some(&0) || spec.boundaries.last() != Some(&ds.n()) {
        return Err(Error::Argument("partition does not cover the dataset".into()));
    }
    if spec.boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("partition has an empty or inverted shard".into()));
    }
    let functions = (0..spec.workers())
        .map(|m| {
            let range = spec.shard(m);
            let features = CsrMatrix::from_rows(ds.dim, &ds.rows[range.clone()])?;
            LocalFunction::logistic(features, ds.labels[range].to_vec(), lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    ObjectiveSuite::new(functions)
}
