use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Quantizer, Voronoi1D};
use crate::error::{invalid, Result};
use crate::math::{self, KahanSum};
use crate::measure::MASS_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub mean: f64,
    /// Standard deviation; zero means a point mass at `mean`.
    pub std: f64,
    pub weight: f64,
}

/// `sum_i p_i N(m_i, s_i^2)` on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture1D {
    components: Vec<MixtureComponent>,
}

/// Per-cell totals of a mixture over a one-dimensional Voronoi partition.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CellMoments {
    pub mass: Vec<f64>,
    pub first: Vec<f64>,
}

impl GaussianMixture1D {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.mean.is_finite() && c.std.is_finite() && c.std >= 0.0) {
                return Err(invalid(format!("bad mixture component {c:?}")));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(invalid("mixture weights must be non-negative"));
            }
        }
        let total = math::kahan_sum(components.iter().map(|c| c.weight));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        Self::new(vec![MixtureComponent {
            mean,
            std,
            weight: 1.0,
        }])
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn cdf(&self, xi: f64) -> f64 {
        math::kahan_sum(
            self.components
                .iter()
                .map(|c| c.weight * math::gaussian_cdf(c.mean, c.std, xi)),
        )
    }

    /// Mass and first moment of every Voronoi cell `(c_{k-1}, c_k]`.
    pub(crate) fn cell_moments(&self, cells: &Voronoi1D) -> CellMoments {
        let k = cells.len();
        let mut mass = vec![KahanSum::new(); k];
        let mut first = vec![KahanSum::new(); k];
        let mut cm = vec![0.0; k];
        let mut cf = vec![0.0; k];
        for c in &self.components {
            if c.weight == 0.0 {
                continue;
            }
            if c.std == 0.0 {
                let s = cells.sorted_cell_of(c.mean);
                mass[s].add(c.weight);
                first[s].add(c.weight * c.mean);
                continue;
            }
            component_cells(c.mean, c.std, cells, &mut cm, Some(&mut cf));
            for j in 0..k {
                if cm[j] != 0.0 {
                    mass[j].add(c.weight * cm[j]);
                    first[j].add(c.weight * cf[j]);
                }
            }
        }
        CellMoments {
            mass: mass.iter().map(KahanSum::value).collect(),
            first: first.iter().map(KahanSum::value).collect(),
        }
    }

    /// Quadratic quantization error `|| Y - Proj_x(Y) ||_2` in closed form.
    pub fn quantization_error(&self, x: &Quantizer) -> f64 {
        let cells = Voronoi1D::new(x);
        let pts = cells.sorted_points();
        let mut acc = KahanSum::new();
        for c in &self.components {
            if c.weight == 0.0 {
                continue;
            }
            if c.std == 0.0 {
                let d = c.mean - pts[cells.sorted_cell_of(c.mean)];
                acc.add(c.weight * d * d);
                continue;
            }
            for (j, &xj) in pts.iter().enumerate() {
                let mo = math::normal_interval_moments(
                    c.mean,
                    c.std,
                    cells.boundary(j),
                    cells.boundary(j + 1),
                );
                if mo.mass == 0.0 {
                    continue;
                }
                let shift = c.mean - xj;
                let centred_first = mo.first - c.mean * mo.mass;
                acc.add(
                    c.weight
                        * (mo.second_central
                            + 2.0 * shift * centred_first
                            + shift * shift * mo.mass),
                );
            }
        }
        libm::sqrt(acc.value().max(0.0))
    }
}

/// Cell masses (and optionally first moments) of `N(mean, std^2)`, `std > 0`,
/// over the cells of `cells`, in sorted order.
///
/// The normal CDF is evaluated once per boundary. Each boundary keeps both the
/// lower-tail and upper-tail probability, each accurate on its own side of the
/// mean, and a cell's mass is differenced from whichever tail avoids
/// cancellation.
pub(crate) fn component_cells(
    mean: f64,
    std: f64,
    cells: &Voronoi1D,
    mass: &mut [f64],
    mut first: Option<&mut [f64]>,
) {
    let k = cells.len();
    debug_assert!(mass.len() == k && std > 0.0);
    // Boundary j = 0..=k as (z, lower tail, upper tail, pdf).
    let boundary = |j: usize| -> (f64, f64, f64, f64) {
        let c = cells.boundary(j);
        if c == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, 0.0, 1.0, 0.0);
        }
        if c == f64::INFINITY {
            return (f64::INFINITY, 1.0, 0.0, 0.0);
        }
        let z = (c - mean) / std;
        let (lo, up) = if z < 0.0 {
            let lo = math::std_normal_cdf(z);
            (lo, 1.0 - lo)
        } else {
            let up = math::std_normal_sf(z);
            (1.0 - up, up)
        };
        (z, lo, up, math::std_normal_pdf(z))
    };
    let mut left = boundary(0);
    for j in 0..k {
        let right = boundary(j + 1);
        let m = if left.0 >= 0.0 {
            left.2 - right.2
        } else if right.0 <= 0.0 {
            right.1 - left.1
        } else {
            1.0 - right.2 - left.1
        }
        .max(0.0);
        mass[j] = m;
        if let Some(f) = first.as_deref_mut() {
            f[j] = mean * m + std * (left.3 - right.3);
        }
        left = right;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_masses_sum_to_one() {
        let x = Quantizer::uniform_grid(-2.0, 3.0, 41).unwrap();
        let cells = Voronoi1D::new(&x);
        let mut m = vec![0.0; 41];
        component_cells(0.4, 0.7, &cells, &mut m, None);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_error_matches_empirical_limit() {
        // K = 1 at the mean: error is the standard deviation.
        let mix = GaussianMixture1D::normal(1.0, 2.0).unwrap();
        let e = mix.quantization_error(&Quantizer::from_1d(vec![1.0]).unwrap());
        assert!((e - 2.0).abs() < 1e-13);
        // Point mass sitting on a quantizer point.
        let dirac = GaussianMixture1D::normal(0.5, 0.0).unwrap();
        let e = dirac.quantization_error(&Quantizer::from_1d(vec![0.5, 3.0]).unwrap());
        assert_eq!(e, 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        let c = |w| MixtureComponent {
            mean: 0.0,
            std: 1.0,
            weight: w,
        };
        assert!(GaussianMixture1D::new(vec![c(0.5), c(0.4)]).is_err());
        assert!(GaussianMixture1D::new(vec![c(1.5), c(-0.5)]).is_err());
        assert!(GaussianMixture1D::new(vec![]).is_err());
    }
}
