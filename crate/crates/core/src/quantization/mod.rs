//! Quantizers, nearest-point projection, quantization error and Lloyd's algorithm.

mod lloyd;
pub(crate) mod mixture;
mod voronoi1d;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::KahanSum;
use crate::measure::{validate_points, DiscreteMeasure, MeasureView, ParticleEnsemble};

pub use lloyd::{
    lloyd_optimize, lloyd_step_empirical, lloyd_step_mixture_1d, LloydOutcome, LloydStats,
    LloydTarget, DEFAULT_LLOYD_MAX_ITERS, DEFAULT_LLOYD_TOL,
};
pub use mixture::{GaussianMixture1D, MixtureComponent};
pub use voronoi1d::Voronoi1D;

/// `K` pairwise distinct points of `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    points: Vec<f64>,
    dim: usize,
}

impl Quantizer {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        validate_points(dim, &points, "quantizer")?;
        Ok(Self { points, dim })
    }

    pub fn from_1d(points: Vec<f64>) -> Result<Self> {
        Self::new(1, points)
    }

    /// `k` evenly spaced points covering `[lo, hi]` end to end.
    pub fn uniform_grid(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k == 0 || !(lo < hi) {
            return Err(invalid(format!(
                "bad uniform grid [{lo}, {hi}] with {k} points"
            )));
        }
        if k == 1 {
            return Self::from_1d(vec![0.5 * (lo + hi)]);
        }
        let pts = (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect();
        Self::from_1d(pts)
    }

    pub(crate) fn from_raw(dim: usize, points: Vec<f64>) -> Self {
        debug_assert!(validate_points(dim, &points, "quantizer").is_ok());
        Self { points, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Quantization level `K`.
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }

    /// One-dimensional quantizer with points in increasing order.
    pub fn sorted_1d(&self) -> Self {
        assert_eq!(self.dim, 1);
        let mut p = self.points.clone();
        p.sort_unstable_by(f64::total_cmp);
        Self::from_raw(1, p)
    }

    /// Nearest point to `xi` by brute force; ties go to the smallest index.
    pub fn project(&self, xi: &[f64]) -> (usize, &[f64]) {
        assert_eq!(xi.len(), self.dim, "dimension mismatch");
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in 0..self.len() {
            let d = squared_distance(xi, self.point(k));
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        (best, self.point(best))
    }

    /// Fast exact nearest-point search structure for this quantizer.
    pub fn projector(&self) -> Projector {
        Projector::new(self)
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Nearest-point search returning the same index as [`Quantizer::project`].
///
/// In one dimension it bisects the Voronoi boundaries. In higher dimension the
/// points are sorted by first coordinate and scanned outward from the query;
/// the scan stops once the first-coordinate gap alone exceeds the best squared
/// distance, which is exact because floating-point sums of non-negative terms
/// never drop below any partial sum.
#[derive(Debug, Clone)]
pub enum Projector {
    Line(Voronoi1D),
    Sweep {
        dim: usize,
        /// Points reordered by first coordinate.
        sorted: Vec<f64>,
        first: Vec<f64>,
        original: Vec<usize>,
    },
}

impl Projector {
    pub fn new(x: &Quantizer) -> Self {
        if x.dim() == 1 {
            return Self::Line(Voronoi1D::new(x));
        }
        let d = x.dim();
        let mut original: Vec<usize> = (0..x.len()).collect();
        original.sort_unstable_by(|&a, &b| x.point(a)[0].total_cmp(&x.point(b)[0]));
        let mut sorted = Vec::with_capacity(x.points().len());
        for &i in &original {
            sorted.extend_from_slice(x.point(i));
        }
        let first = original.iter().map(|&i| x.point(i)[0]).collect();
        Self::Sweep {
            dim: d,
            sorted,
            first,
            original,
        }
    }

    /// Index (in the quantizer's own order) of the nearest point to `xi`.
    pub fn project(&self, xi: &[f64]) -> usize {
        match self {
            Self::Line(v) => v.project(xi[0]),
            Self::Sweep {
                dim,
                sorted,
                first,
                original,
            } => {
                let k = first.len();
                let start = first.partition_point(|&p| p < xi[0]);
                let row = |s: usize| &sorted[s * dim..(s + 1) * dim];
                let mut best = usize::MAX;
                let mut best_d = f64::INFINITY;
                let consider = |s: usize, best: &mut usize, best_d: &mut f64| {
                    let d = squared_distance(xi, row(s));
                    if *best == usize::MAX
                        || d < *best_d
                        || (d == *best_d && original[s] < original[*best])
                    {
                        *best_d = d;
                        *best = s;
                    }
                };
                let (mut lo, mut hi) = (start, start);
                let (mut left_open, mut right_open) = (start > 0, start < k);
                while left_open || right_open {
                    if right_open {
                        let g = first[hi] - xi[0];
                        if g * g > best_d {
                            right_open = false;
                        } else {
                            consider(hi, &mut best, &mut best_d);
                            hi += 1;
                            right_open = hi < k;
                        }
                    }
                    if left_open {
                        let g = xi[0] - first[lo - 1];
                        if g * g > best_d {
                            left_open = false;
                        } else {
                            consider(lo - 1, &mut best, &mut best_d);
                            lo -= 1;
                            left_open = lo > 0;
                        }
                    }
                }
                original[best]
            }
        }
    }
}

/// Result of projecting a measure onto a quantizer.
fn projected_masses(mu: MeasureView<'_>, projector: &Projector, k: usize) -> Vec<KahanSum> {
    let mut mass = vec![KahanSum::new(); k];
    for (xi, w) in mu.iter() {
        mass[projector.project(xi)].add(w);
    }
    mass
}

/// `e_{K,p}(mu, x) = [ sum_atoms w * min_k |xi - x_k|^p ]^{1/p}`.
pub fn quantization_error(mu: MeasureView<'_>, x: &Quantizer, p: f64) -> f64 {
    assert!(p >= 1.0, "order must be at least 1");
    assert_eq!(mu.dim(), x.dim(), "dimension mismatch");
    let projector = x.projector();
    let mut acc = KahanSum::new();
    for (xi, w) in mu.iter() {
        let d2 = squared_distance(xi, x.point(projector.project(xi)));
        let dp = if p == 2.0 {
            d2
        } else {
            libm::pow(libm::sqrt(d2), p)
        };
        acc.add(w * dp);
    }
    libm::pow(acc.value(), 1.0 / p)
}

/// Voronoi weights of an ensemble: `w_k = #{n : Proj(X_n) = x_k} / N`, kept as exact counts.
pub fn voronoi_weights(particles: &ParticleEnsemble, x: &Quantizer) -> DiscreteMeasure {
    assert_eq!(particles.dim(), x.dim(), "dimension mismatch");
    let projector = x.projector();
    let mut counts = vec![0u64; x.len()];
    for xi in particles.particles() {
        counts[projector.project(xi)] += 1;
    }
    DiscreteMeasure::from_counts(x.dim(), x.points().to_vec(), counts)
        .expect("quantizer points are distinct and N >= 1")
}

/// Projection `mu o Proj_x^{-1}` of an arbitrary measure view.
pub fn project_measure(mu: MeasureView<'_>, x: &Quantizer) -> Result<DiscreteMeasure> {
    if let MeasureView::Ensemble(e) = mu {
        return Ok(voronoi_weights(e, x));
    }
    if mu.dim() != x.dim() {
        return Err(invalid("dimension mismatch"));
    }
    let mass = projected_masses(mu, &x.projector(), x.len());
    let weights: Vec<f64> = mass.iter().map(|m| m.value()).collect();
    let total = crate::math::kahan_sum(weights.iter().copied());
    DiscreteMeasure::new(
        x.dim(),
        x.points().to_vec(),
        weights.iter().map(|w| w / total).collect(),
    )
}
