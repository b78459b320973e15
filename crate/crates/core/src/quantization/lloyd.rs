use alloc::vec;
use alloc::vec::Vec;

use super::{quantization_error, GaussianMixture1D, Quantizer, Voronoi1D};
use crate::error::{invalid, Result};
use crate::math::KahanSum;
use crate::measure::{find_duplicate, MeasureView};

/// Stopping tolerance on the max-norm displacement for library calls.
pub const DEFAULT_LLOYD_TOL: f64 = 1e-9;
/// Iteration cap for library calls.
pub const DEFAULT_LLOYD_MAX_ITERS: usize = 100;

/// Diagnostics of one or more Lloyd iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LloydStats {
    /// Cells that received no mass and kept their previous point.
    pub empty_cells: usize,
    /// Coinciding updated points that had to be nudged apart.
    pub collisions: usize,
}

impl LloydStats {
    pub fn merge(&mut self, other: LloydStats) {
        self.empty_cells += other.empty_cells;
        self.collisions += other.collisions;
    }
}

/// Measure a quantizer is fitted to.
#[derive(Debug, Clone, Copy)]
pub enum LloydTarget<'a> {
    /// Finitely supported measure, any dimension (K-means).
    Empirical(MeasureView<'a>),
    /// One-dimensional Gaussian mixture with exact cell integrals.
    Mixture(&'a GaussianMixture1D),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub quantizer: Quantizer,
    pub iterations: usize,
    /// Quadratic quantization error of `quantizer` against the target.
    pub final_error: f64,
    pub stats: LloydStats,
}

/// One Lloyd (K-means) iteration against a finitely supported measure.
///
/// Every point with a non-empty Voronoi cell moves to the weighted mean of the
/// atoms it attracts. Points with empty cells stay where they are.
pub fn lloyd_step_empirical(mu: MeasureView<'_>, x: &Quantizer) -> (Quantizer, LloydStats) {
    let d = x.dim();
    assert_eq!(mu.dim(), d, "dimension mismatch");
    let k = x.len();
    let projector = x.projector();
    let mut mass = vec![KahanSum::new(); k];
    let mut sums = vec![KahanSum::new(); k * d];
    let mut hits = vec![false; k];
    for (xi, w) in mu.iter() {
        let j = projector.project(xi);
        hits[j] = true;
        mass[j].add(w);
        for (s, v) in sums[j * d..(j + 1) * d].iter_mut().zip(xi) {
            s.add(w * v);
        }
    }
    let mut points = x.points().to_vec();
    let mut stats = LloydStats::default();
    for j in 0..k {
        let m = mass[j].value();
        if !hits[j] || m <= 0.0 {
            stats.empty_cells += 1;
            continue;
        }
        for c in 0..d {
            points[j * d + c] = sums[j * d + c].value() / m;
        }
    }
    stats.collisions = separate_collisions(d, &mut points);
    (Quantizer::from_raw(d, points), stats)
}

/// One Lloyd iteration against a one-dimensional Gaussian mixture.
///
/// Cell masses and first moments are exact; the returned points are in
/// increasing order. A cell whose mass is below `1e-300` keeps its point.
pub fn lloyd_step_mixture_1d(mu: &GaussianMixture1D, x: &Quantizer) -> (Quantizer, LloydStats) {
    assert_eq!(x.dim(), 1, "mixture Lloyd is one-dimensional");
    let cells = Voronoi1D::new(x);
    let moments = mu.cell_moments(&cells);
    let mut stats = LloydStats::default();
    let mut points: Vec<f64> = cells.sorted_points().to_vec();
    for (j, p) in points.iter_mut().enumerate() {
        let m = moments.mass[j];
        if m < 1e-300 {
            stats.empty_cells += 1;
            continue;
        }
        let lo = cells.boundary(j);
        let hi = cells.boundary(j + 1);
        *p = (moments.first[j] / m).clamp(lo, hi);
    }
    stats.collisions = separate_collisions(1, &mut points);
    points.sort_unstable_by(f64::total_cmp);
    (Quantizer::from_raw(1, points), stats)
}

/// Nudges the first coordinate of the later of two coinciding points upward
/// one ulp at a time until all points are distinct. Returns the nudge count.
fn separate_collisions(dim: usize, points: &mut [f64]) -> usize {
    let mut n = 0;
    while let Some((_, later)) = find_duplicate(dim, points) {
        let v = &mut points[later * dim];
        *v = v.next_up();
        n += 1;
    }
    n
}

fn max_displacement(a: &Quantizer, b: &Quantizer) -> f64 {
    a.points()
        .iter()
        .zip(b.points())
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// Iterates Lloyd steps from `x0` until the max-norm displacement drops below
/// `tol` or `max_iters` steps were taken.
pub fn lloyd_optimize(
    target: LloydTarget<'_>,
    x0: &Quantizer,
    max_iters: usize,
    tol: f64,
) -> Result<LloydOutcome> {
    if max_iters == 0 || !(tol >= 0.0) {
        return Err(invalid("Lloyd needs max_iters >= 1 and tol >= 0"));
    }
    let mut x = match target {
        LloydTarget::Empirical(mu) => {
            if mu.dim() != x0.dim() {
                return Err(invalid("dimension mismatch"));
            }
            x0.clone()
        }
        LloydTarget::Mixture(_) => {
            if x0.dim() != 1 {
                return Err(invalid("mixture Lloyd needs a one-dimensional quantizer"));
            }
            x0.sorted_1d()
        }
    };
    let mut stats = LloydStats::default();
    let mut iterations = 0;
    while iterations < max_iters {
        let (next, s) = match target {
            LloydTarget::Empirical(mu) => lloyd_step_empirical(mu, &x),
            LloydTarget::Mixture(mix) => lloyd_step_mixture_1d(mix, &x),
        };
        stats.merge(s);
        iterations += 1;
        let moved = max_displacement(&x, &next);
        x = next;
        if moved < tol {
            break;
        }
    }
    let final_error = match target {
        LloydTarget::Empirical(mu) => quantization_error(mu, &x, 2.0),
        LloydTarget::Mixture(mix) => mix.quantization_error(&x),
    };
    Ok(LloydOutcome {
        quantizer: x,
        iterations,
        final_error,
        stats,
    })
}
