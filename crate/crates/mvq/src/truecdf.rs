//! Exact Burgers CDF tabulated on a grid, cached on disk by content hash.

use std::path::{Path, PathBuf};

use mvq_core::metrics::CdfGrid;
use mvq_core::models::burgers_true_cdf_at;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::io::write_atomic;

/// Bumped whenever the quadrature changes, so stale tables are not reused.
const TABLE_VERSION: u32 = 1;

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct CachedTable {
    sigma2: f64,
    horizon: f64,
    points: Vec<f64>,
    values: Vec<f64>,
}

/// Cache key: hash of the exact bit patterns of `sigma2`, `horizon` and the grid.
pub fn table_key(sigma2: f64, horizon: f64, grid: &CdfGrid) -> String {
    let mut h = Sha256::new();
    h.update(TABLE_VERSION.to_le_bytes());
    h.update(sigma2.to_bits().to_le_bytes());
    h.update(horizon.to_bits().to_le_bytes());
    for x in grid.points() {
        h.update(x.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..12])
}

/// Evaluates `F_T` at every grid point.
pub fn tabulate(sigma2: f64, horizon: f64, grid: &CdfGrid) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = grid
        .points()
        .par_iter()
        .map(|&x| burgers_true_cdf_at(sigma2, horizon, x))
        .collect();
    Ok(values?)
}

/// Tabulated CDF, read from `cache_dir` when present and written there otherwise.
///
/// A corrupt or mismatching cache file is recomputed and replaced.
pub fn cached_true_cdf(
    cache_dir: Option<&Path>,
    sigma2: f64,
    horizon: f64,
    grid: &CdfGrid,
) -> Result<Vec<f64>, CliError> {
    let Some(dir) = cache_dir else {
        return tabulate(sigma2, horizon, grid);
    };
    let path = cache_path(dir, sigma2, horizon, grid);
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(t) = serde_json::from_slice::<CachedTable>(&bytes) {
            let same_grid = t.points.len() == grid.len()
                && t.points
                    .iter()
                    .zip(grid.points())
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            if same_grid
                && t.sigma2 == sigma2
                && t.horizon == horizon
                && t.values.len() == grid.len()
            {
                return Ok(t.values);
            }
        }
    }
    let values = tabulate(sigma2, horizon, grid)?;
    let table = CachedTable {
        sigma2,
        horizon,
        points: grid.points().to_vec(),
        values,
    };
    let bytes = serde_json::to_vec(&table).expect("table serializes");
    write_atomic(&path, &bytes)?;
    Ok(table.values)
}

pub fn cache_path(dir: &Path, sigma2: f64, horizon: f64, grid: &CdfGrid) -> PathBuf {
    dir.join(format!(
        "burgers-cdf-{}.json",
        table_key(sigma2, horizon, grid)
    ))
}
