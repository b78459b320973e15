use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::KahanSum;
use crate::measure::MeasureView;

/// Abscissae at which simulated and reference CDFs are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfGrid {
    points: Vec<f64>,
}

impl CdfGrid {
    pub const DEFAULT_LO: f64 = -2.5;
    pub const DEFAULT_HI: f64 = 3.5;
    pub const DEFAULT_POINTS: usize = 601;

    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("CDF grid needs finite points"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("CDF grid must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// `n >= 2` equispaced points from `lo` to `hi` inclusive.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) {
            return Err(invalid(format!("bad CDF grid [{lo}, {hi}] x {n}")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for CdfGrid {
    /// 601 points on `[-2.5, 3.5]`, spacing 0.01.
    fn default() -> Self {
        Self::uniform(Self::DEFAULT_LO, Self::DEFAULT_HI, Self::DEFAULT_POINTS)
            .expect("default grid is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cumulative {
    /// Integer occupation counts: the CDF is an exact ratio of integers.
    Counts {
        cum: Vec<u64>,
        total: u64,
    },
    Weights(Vec<f64>),
}

/// Right-continuous step CDF of a one-dimensional finitely supported measure.
///
/// Empirical measures keep integer counts, so an ensemble and a discrete
/// measure holding the same multiset of positions give bitwise-equal values.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    atoms: Vec<f64>,
    cum: Cumulative,
}

impl StepCdf {
    /// # Panics
    /// If the measure is not one-dimensional.
    pub fn from_view(mu: MeasureView<'_>) -> Self {
        assert_eq!(mu.dim(), 1, "step CDF needs a one-dimensional measure");
        let n = mu.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| mu.atom(a)[0].total_cmp(&mu.atom(b)[0]));
        let atoms: Vec<f64> = order.iter().map(|&k| mu.atom(k)[0]).collect();
        let cum = match mu.counts() {
            Some((counts, total)) => {
                let mut acc = 0u64;
                let cum = order
                    .iter()
                    .map(|&k| {
                        acc += counts.map_or(1, |c| c[k]);
                        acc
                    })
                    .collect();
                Cumulative::Counts { cum, total }
            }
            None => {
                let mut acc = KahanSum::new();
                let cum = order
                    .iter()
                    .map(|&k| {
                        acc.add(mu.weight(k));
                        acc.value()
                    })
                    .collect();
                Cumulative::Weights(cum)
            }
        };
        Self { atoms, cum }
    }

    /// Mass of `(-inf, xi]`.
    pub fn eval(&self, xi: f64) -> f64 {
        let idx = self.atoms.partition_point(|&a| a <= xi);
        if idx == 0 {
            return 0.0;
        }
        match &self.cum {
            Cumulative::Counts { cum, total } => cum[idx - 1] as f64 / *total as f64,
            Cumulative::Weights(cum) => cum[idx - 1],
        }
    }

    /// Sorted atom positions (repeated for coinciding particles).
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }
}

/// `mu((-inf, xi])` for a one-dimensional measure.
pub fn empirical_cdf(mu: MeasureView<'_>, xi: f64) -> f64 {
    StepCdf::from_view(mu).eval(xi)
}

/// `max_x |F_mu(x) - F(x)|` over the grid points.
pub fn sup_cdf_error<F: Fn(f64) -> f64>(mu: MeasureView<'_>, true_cdf: F, grid: &CdfGrid) -> f64 {
    let f = StepCdf::from_view(mu);
    grid.points()
        .iter()
        .map(|&x| (f.eval(x) - true_cdf(x)).abs())
        .fold(0.0, f64::max)
}

/// Like [`sup_cdf_error`] with the reference CDF tabulated on the grid.
pub fn sup_cdf_error_tabulated(
    mu: MeasureView<'_>,
    true_values: &[f64],
    grid: &CdfGrid,
) -> Result<f64> {
    if true_values.len() != grid.len() {
        return Err(invalid(format!(
            "{} reference values for a grid of {}",
            true_values.len(),
            grid.len()
        )));
    }
    let f = StepCdf::from_view(mu);
    Ok(grid
        .points()
        .iter()
        .zip(true_values)
        .map(|(&x, &v)| (f.eval(x) - v).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{DiscreteMeasure, ParticleEnsemble};
    use alloc::vec;

    #[test]
    fn cdf_examples() {
        let p = [0.0];
        let d = MeasureView::PointMass(&p);
        assert_eq!(empirical_cdf(d, -0.1), 0.0);
        assert_eq!(empirical_cdf(d, 0.0), 1.0);
        let e = ParticleEnsemble::from_positions(vec![3.0, 1.0, 2.0], 0).unwrap();
        assert_eq!(empirical_cdf(e.view(), 2.0), 2.0 / 3.0);
        let q = DiscreteMeasure::new(1, vec![2.0, -1.0], vec![0.7, 0.3]).unwrap();
        assert_eq!(empirical_cdf(q.view(), 0.0), 0.3);
    }

    #[test]
    fn sup_error_examples() {
        let g = CdfGrid::default();
        assert_eq!(g.len(), 601);
        assert_eq!(g.points()[600], 3.5);
        let p = [0.0];
        let err = sup_cdf_error(
            MeasureView::PointMass(&p),
            |x| if x >= 1.0 { 1.0 } else { 0.0 },
            &g,
        );
        assert_eq!(err, 1.0);
        let e = ParticleEnsemble::from_positions(vec![0.5, -0.5], 0).unwrap();
        let f = StepCdf::from_view(e.view());
        assert_eq!(sup_cdf_error(e.view(), |x| f.eval(x), &g), 0.0);
    }

    #[test]
    fn counts_and_ensemble_agree_bitwise() {
        let e =
            ParticleEnsemble::from_positions(vec![0.3, -1.0, 0.3, 2.0, 0.3, 5.0, -1.0], 0).unwrap();
        let m =
            DiscreteMeasure::from_counts(1, vec![5.0, 0.3, -1.0, 2.0], vec![1, 3, 2, 1]).unwrap();
        let (a, b) = (StepCdf::from_view(e.view()), StepCdf::from_view(m.view()));
        for x in [-2.0, -1.0, 0.0, 0.3, 1.0, 2.0, 4.9, 5.0, 7.0] {
            assert_eq!(a.eval(x).to_bits(), b.eval(x).to_bits());
        }
    }

    #[test]
    fn grid_validation() {
        assert!(CdfGrid::new(vec![0.0, 0.0]).is_err());
        assert!(CdfGrid::uniform(1.0, 0.0, 5).is_err());
    }
}
