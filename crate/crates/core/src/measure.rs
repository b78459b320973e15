//! Particle ensembles, finitely supported measures and read-only views over both.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::math::KahanSum;

/// Tolerance on the total mass of a [`DiscreteMeasure`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `N` particle states in `R^d` at grid index `time_index`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    states: Vec<f64>,
    dim: usize,
    time_index: usize,
}

impl ParticleEnsemble {
    pub fn new(dim: usize, states: Vec<f64>, time_index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ensemble dimension must be positive"));
        }
        if states.is_empty() || !states.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "{} state values do not form a non-empty N x {dim} array",
                states.len()
            )));
        }
        if let Some(i) = states.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite state in particle {}", i / dim)));
        }
        Ok(Self {
            states,
            dim,
            time_index,
        })
    }

    /// Builds from one-dimensional positions.
    pub fn from_positions(positions: Vec<f64>, time_index: usize) -> Result<Self> {
        Self::new(1, positions, time_index)
    }

    pub(crate) fn from_raw(dim: usize, states: Vec<f64>, time_index: usize) -> Self {
        debug_assert!(dim > 0 && !states.is_empty() && states.len().is_multiple_of(dim));
        Self {
            states,
            dim,
            time_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of particles `N`.
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn particle(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn particles(&self) -> core::slice::ChunksExact<'_, f64> {
        self.states.chunks_exact(self.dim)
    }

    /// Flat row-major state array.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn into_states(self) -> Vec<f64> {
        self.states
    }

    pub fn view(&self) -> MeasureView<'_> {
        MeasureView::Ensemble(self)
    }
}

/// Occupation counts behind an empirical quantized measure; weights are `count / total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomCounts {
    pub counts: Vec<u64>,
    pub total: u64,
}

/// `sum_k w_k delta_{x_k}` with distinct atoms and weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    dim: usize,
    weights: Vec<f64>,
    counts: Option<AtomCounts>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_points(dim, &atoms, "measure atoms")?;
        let k = atoms.len() / dim;
        if weights.len() != k {
            return Err(invalid(format!("{} weights for {k} atoms", weights.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and non-negative"));
        }
        let total = crate::math::kahan_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            atoms,
            dim,
            weights,
            counts: None,
        })
    }

    /// Empirical measure from integer occupation counts (weights `c_k / sum c`).
    pub fn from_counts(dim: usize, atoms: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        validate_points(dim, &atoms, "measure atoms")?;
        let k = atoms.len() / dim;
        if counts.len() != k {
            return Err(invalid(format!("{} counts for {k} atoms", counts.len())));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(invalid("counts sum to zero"));
        }
        let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self {
            atoms,
            dim,
            weights,
            counts: Some(AtomCounts { counts, total }),
        })
    }

    /// Unit mass at `point`.
    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::new(point.len(), point.to_vec(), alloc::vec![1.0])
    }

    /// Uniform weights over distinct one-dimensional atoms.
    pub fn uniform_1d(atoms: &[f64]) -> Result<Self> {
        let k = atoms.len();
        Self::from_counts(1, atoms.to_vec(), alloc::vec![1; k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, k: usize) -> &[f64] {
        &self.atoms[k * self.dim..(k + 1) * self.dim]
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn counts(&self) -> Option<&AtomCounts> {
        self.counts.as_ref()
    }

    pub fn view(&self) -> MeasureView<'_> {
        MeasureView::Discrete(self)
    }
}

/// Read-only access to the measure argument of the coefficients.
#[derive(Debug, Clone, Copy)]
pub enum MeasureView<'a> {
    /// Empirical measure of an ensemble, weight `1/N` per particle.
    Ensemble(&'a ParticleEnsemble),
    Discrete(&'a DiscreteMeasure),
    PointMass(&'a [f64]),
}

impl<'a> MeasureView<'a> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ensemble(e) => e.dim(),
            Self::Discrete(d) => d.dim(),
            Self::PointMass(x) => x.len(),
        }
    }

    /// Number of atoms (particles count separately even when they coincide).
    pub fn len(&self) -> usize {
        match self {
            Self::Ensemble(e) => e.len(),
            Self::Discrete(d) => d.len(),
            Self::PointMass(_) => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn atom(&self, k: usize) -> &'a [f64] {
        match *self {
            Self::Ensemble(e) => e.particle(k),
            Self::Discrete(d) => d.atom(k),
            Self::PointMass(x) => {
                assert_eq!(k, 0, "point mass has a single atom");
                x
            }
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        match self {
            Self::Ensemble(e) => 1.0 / e.len() as f64,
            Self::Discrete(d) => d.weights[k],
            Self::PointMass(_) => 1.0,
        }
    }

    /// Integer occupation counts when the view is empirical.
    pub fn counts(&self) -> Option<(Option<&'a [u64]>, u64)> {
        match *self {
            Self::Ensemble(e) => Some((None, e.len() as u64)),
            Self::Discrete(d) => d.counts.as_ref().map(|c| (Some(&c.counts[..]), c.total)),
            Self::PointMass(_) => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [f64], f64)> + '_ {
        (0..self.len()).map(move |k| (self.atom(k), self.weight(k)))
    }

    /// `int f dmu` as a compensated weighted atom sum.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = KahanSum::new();
        for (x, w) in self.iter() {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Returns a pair of indices of coincident points, if any.
pub(crate) fn find_duplicate(dim: usize, points: &[f64]) -> Option<(usize, usize)> {
    let k = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_unstable_by(|&i, &j| cmp_points(row(i), row(j)).then(i.cmp(&j)));
    order
        .windows(2)
        .find(|w| cmp_points(row(w[0]), row(w[1])) == Ordering::Equal)
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

pub(crate) fn validate_points(dim: usize, points: &[f64], what: &str) -> Result<()> {
    if dim == 0 {
        return Err(invalid(format!("{what}: dimension must be positive")));
    }
    if points.is_empty() || !points.len().is_multiple_of(dim) {
        return Err(invalid(format!(
            "{what}: {} values do not form a non-empty K x {dim} array",
            points.len()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{what}: non-finite coordinate")));
    }
    if let Some((i, j)) = find_duplicate(dim, points) {
        return Err(invalid(format!("{what}: points {i} and {j} coincide")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn discrete_measure_validation() {
        assert!(DiscreteMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.5]).is_ok());
        assert!(DiscreteMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(1, vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(1, vec![-0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(1, vec![0.0, 1.0], vec![-0.1, 1.1]).is_err());
        assert!(DiscreteMeasure::new(2, vec![0.0, 1.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn duplicate_detection_in_two_dims() {
        let pts = [-0.0, 3.0, 0.0, 5.0, 0.0, 3.0];
        assert_eq!(find_duplicate(2, &pts), Some((0, 2)));
        assert_eq!(find_duplicate(2, &[0.0, 1.0, 1.0, 0.0]), None);
    }

    #[test]
    fn counts_give_rational_weights() {
        let m = DiscreteMeasure::from_counts(1, vec![0.0, 1.0], vec![1, 2]).unwrap();
        assert_eq!(m.weights(), &[1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn view_integration_is_weighted_atom_sum() {
        let e = ParticleEnsemble::from_positions(vec![1.0, 2.0, 3.0, 6.0], 0).unwrap();
        assert_eq!(e.view().integrate(|x| x[0]), 3.0);
        let d = DiscreteMeasure::new(1, vec![-1.0, 2.0], vec![0.3, 0.7]).unwrap();
        assert!((d.view().integrate(|x| x[0] * x[0]) - (0.3 + 2.8)).abs() < 1e-15);
        let p = [4.0];
        assert_eq!(MeasureView::PointMass(&p).integrate(|x| x[0]), 4.0);
    }

    #[test]
    fn ensemble_rejects_non_finite() {
        assert!(ParticleEnsemble::from_positions(vec![0.0, f64::NAN], 0).is_err());
        assert!(ParticleEnsemble::new(2, vec![0.0, 1.0, 2.0], 0).is_err());
    }
}
