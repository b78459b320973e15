use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, CoreError, Result};
use crate::math::KahanSum;
use crate::measure::{DiscreteMeasure, MeasureView};

/// Density values on a rectangular grid, `values[iy * xs.len() + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySurface {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensitySurface {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }
}

/// Scott's rule for an isotropic planar kernel: `n_eff^{-1/6}` times the root
/// mean of the two coordinate variances, with `n_eff = 1 / sum w^2`.
pub fn scott_bandwidth_2d(mu: MeasureView<'_>) -> f64 {
    assert_eq!(mu.dim(), 2);
    let mean: [f64; 2] = [mu.integrate(|x| x[0]), mu.integrate(|x| x[1])];
    let var = mu.integrate(|x| {
        let (a, b) = (x[0] - mean[0], x[1] - mean[1]);
        0.5 * (a * a + b * b)
    });
    let n_eff = 1.0 / crate::math::kahan_sum(mu.iter().map(|(_, w)| w * w));
    libm::pow(n_eff, -1.0 / 6.0) * libm::sqrt(var)
}

/// Isotropic Gaussian kernel density estimate of a planar measure.
///
/// With `bandwidth = None` the bandwidth follows [`scott_bandwidth_2d`].
pub fn kde_density_2d(
    mu: MeasureView<'_>,
    bandwidth: Option<f64>,
    xs: &[f64],
    ys: &[f64],
) -> Result<DensitySurface> {
    if mu.dim() != 2 {
        return Err(invalid("planar KDE needs two-dimensional atoms"));
    }
    let b = bandwidth.unwrap_or_else(|| scott_bandwidth_2d(mu));
    if !(b.is_finite() && b > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {b}")));
    }
    let norm = 1.0 / (2.0 * PI * b * b);
    let inv = 1.0 / (2.0 * b * b);
    let mut values = vec![0.0; xs.len() * ys.len()];
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            let mut acc = KahanSum::new();
            for (u, w) in mu.iter() {
                let (dx, dy) = (x - u[0], y - u[1]);
                acc.add(w * libm::exp(-(dx * dx + dy * dy) * inv));
            }
            values[iy * xs.len() + ix] = norm * acc.value();
        }
    }
    Ok(DensitySurface {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        values,
        bandwidth: b,
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Smallest box containing every atom, widened by `margin` on each side.
    pub fn around(mu: MeasureView<'_>, margin: f64) -> Self {
        let mut b = BoundingBox {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (u, _) in mu.iter() {
            b.x0 = b.x0.min(u[0]);
            b.x1 = b.x1.max(u[0]);
            b.y0 = b.y0.min(u[1]);
            b.y1 = b.y1.max(u[1]);
        }
        b.x0 -= margin;
        b.x1 += margin;
        b.y0 -= margin;
        b.y1 += margin;
        b
    }

    fn contains(&self, p: &[f64]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

/// A Voronoi cell clipped to the bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub site: [f64; 2],
    pub weight: f64,
    /// Counter-clockwise vertices.
    pub polygon: Vec<[f64; 2]>,
    pub area: f64,
    /// `weight / area`.
    pub density: f64,
}

/// Voronoi cells of a planar discrete measure inside `bbox`, with the
/// piecewise-constant density `weight / area` on each cell.
///
/// Each cell is the box clipped by the bisector half-planes of every other
/// site, so collinear or two-site inputs need no special case.
pub fn voronoi_cell_density_2d(
    mu: &DiscreteMeasure,
    bbox: BoundingBox,
) -> Result<Vec<VoronoiCell>> {
    if mu.dim() != 2 {
        return Err(invalid("Voronoi densities need two-dimensional atoms"));
    }
    if !(bbox.x0 < bbox.x1 && bbox.y0 < bbox.y1) {
        return Err(invalid("empty bounding box"));
    }
    let k = mu.len();
    let mut cells = Vec::with_capacity(k);
    for i in 0..k {
        let s = mu.atom(i);
        if !bbox.contains(s) {
            return Err(invalid(format!("atom {i} lies outside the bounding box")));
        }
        let mut poly = vec![
            [bbox.x0, bbox.y0],
            [bbox.x1, bbox.y0],
            [bbox.x1, bbox.y1],
            [bbox.x0, bbox.y1],
        ];
        for j in 0..k {
            if j == i {
                continue;
            }
            let t = mu.atom(j);
            // Keep points closer to s: (t - s) . p <= (|t|^2 - |s|^2) / 2.
            let n = [t[0] - s[0], t[1] - s[1]];
            let c = 0.5 * ((t[0] * t[0] + t[1] * t[1]) - (s[0] * s[0] + s[1] * s[1]));
            poly = clip(&poly, n, c);
            if poly.is_empty() {
                break;
            }
        }
        let area = shoelace(&poly);
        if !(area > 0.0) {
            return Err(CoreError::DegenerateGeometry(format!(
                "Voronoi cell of atom {i} has no area inside the box"
            )));
        }
        let weight = mu.weights()[i];
        cells.push(VoronoiCell {
            site: [s[0], s[1]],
            weight,
            polygon: poly,
            area,
            density: weight / area,
        });
    }
    Ok(cells)
}

/// Sutherland-Hodgman clip of a convex polygon by `n . p <= c`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (idx, p) in poly.iter().enumerate() {
        let q = &poly[(idx + 1) % poly.len()];
        let (sp, sq) = (side(p), side(q));
        if sp <= 0.0 {
            out.push(*p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = KahanSum::new();
    for (idx, p) in poly.iter().enumerate() {
        let q = &poly[(idx + 1) % poly.len()];
        acc.add(p[0] * q[1] - q[0] * p[1]);
    }
    0.5 * acc.value()
}
