use alloc::vec::Vec;

use super::Quantizer;

/// Voronoi partition of the real line generated by a one-dimensional quantizer.
///
/// With sorted points `x_1 < ... < x_K` and midpoints `c_k = (x_k + x_{k+1}) / 2`,
/// cell `k` is `(c_{k-1}, c_k]`, `c_0 = -inf`, `c_K = +inf`: a boundary point
/// belongs to the lower cell, consistent with the nearest-point tie rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Voronoi1D {
    sorted: Vec<f64>,
    /// `original[k]` is the quantizer index of the `k`-th smallest point.
    original: Vec<usize>,
    boundaries: Vec<f64>,
}

impl Voronoi1D {
    /// # Panics
    /// If the quantizer is not one-dimensional.
    pub fn new(x: &Quantizer) -> Self {
        assert_eq!(x.dim(), 1, "Voronoi1D needs a one-dimensional quantizer");
        let pts = x.points();
        let mut original: Vec<usize> = (0..pts.len()).collect();
        original.sort_unstable_by(|&a, &b| pts[a].total_cmp(&pts[b]));
        let sorted: Vec<f64> = original.iter().map(|&i| pts[i]).collect();
        let boundaries = sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self {
            sorted,
            original,
            boundaries,
        }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Points in increasing order.
    pub fn sorted_points(&self) -> &[f64] {
        &self.sorted
    }

    pub fn original_index(&self, sorted_index: usize) -> usize {
        self.original[sorted_index]
    }

    /// Finite interior boundaries `c_1 .. c_{K-1}`.
    pub fn interior_boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Boundary `c_k` for `k = 0..=K`, infinite at both ends.
    pub fn boundary(&self, k: usize) -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k == self.sorted.len() {
            f64::INFINITY
        } else {
            self.boundaries[k - 1]
        }
    }

    /// Sorted index of the cell containing `xi`.
    ///
    /// Bisection locates the two neighbours of `xi`; squared distances then
    /// decide, and equal distances go to the smallest quantizer index, exactly
    /// like a brute-force nearest-neighbour search.
    pub fn sorted_cell_of(&self, xi: f64) -> usize {
        let k = self.sorted.len();
        let pos = self.sorted.partition_point(|&p| p < xi);
        let d2 = |s: usize| {
            let d = xi - self.sorted[s];
            d * d
        };
        let mut best = if pos == k {
            k - 1
        } else if pos == 0 {
            0
        } else {
            let (l, r) = (pos - 1, pos);
            let (dl, dr) = (d2(l), d2(r));
            if dl < dr || (dl == dr && self.original[l] < self.original[r]) {
                l
            } else {
                r
            }
        };
        let best_d = d2(best);
        // Rounding can make several consecutive points equidistant.
        let mut s = best;
        while s > 0 && d2(s - 1) == best_d {
            s -= 1;
            if self.original[s] < self.original[best] {
                best = s;
            }
        }
        let mut s = best.max(pos.min(k - 1));
        while s + 1 < k && d2(s + 1) == best_d {
            s += 1;
            if self.original[s] < self.original[best] {
                best = s;
            }
        }
        best
    }

    /// Quantizer index of the point nearest to `xi`.
    pub fn project(&self, xi: f64) -> usize {
        self.original[self.sorted_cell_of(xi)]
    }
}
