//! `localgd parse`: summary statistics for a LIBSVM file.

use std::path::Path;

use localgd_core::libsvm::{read_libsvm, DatasetSummary};

use crate::error::{CliError, CliResult};

pub fn cmd_parse(path: &Path, dim: Option<usize>) -> CliResult<DatasetSummary> {
    let mut ds = read_libsvm(path).map_err(|source| CliError::Dataset {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(d) = dim {
        ds = ds.with_dim(d)?;
    }
    Ok(ds.summary())
}

pub fn describe(s: &DatasetSummary) -> String {
    format!(
        "n {}\nd {}\nlabels +1: {}  -1: {}\nnnz {} (per row min {}, mean {:.3}, max {})",
        s.n, s.d, s.positives, s.negatives, s.nnz, s.min_row_nnz, s.mean_row_nnz, s.max_row_nnz
    )
}
