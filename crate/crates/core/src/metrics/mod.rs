//! Error functionals and distribution summaries.

mod cdf;
mod density;
mod wasserstein;

pub use cdf::{empirical_cdf, sup_cdf_error, sup_cdf_error_tabulated, CdfGrid, StepCdf};
pub use density::{
    kde_density_2d, scott_bandwidth_2d, voronoi_cell_density_2d, BoundingBox, DensitySurface,
    VoronoiCell,
};
pub use wasserstein::{wasserstein_1d, wasserstein_discrete_exact, EXACT_TRANSPORT_MAX_ATOMS};

use crate::error::{invalid, Result};
use crate::measure::MeasureView;

/// `int |xi|^2 mu(dxi)`.
pub fn second_moment(mu: MeasureView<'_>) -> f64 {
    mu.integrate(|x| x.iter().map(|v| v * v).sum())
}

/// Least-squares line through `(log2 x_i, log2 y_i)`; returns `(slope, intercept)`.
pub fn fit_log2_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("slope fit needs at least two (x, y) pairs"));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("slope fit needs positive finite values"));
    }
    let n = xs.len() as f64;
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|v| libm::log2(*v)).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|v| libm::log2(*v)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
