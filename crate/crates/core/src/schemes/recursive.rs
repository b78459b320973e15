//! Deterministic recursive quantization in dimension one.
//!
//! Given the quantized law `sum_i p_i delta_{x_i}` at `t_m`, one Euler step
//! started from atom `x_i` is exactly `N(m_i, s_i^2)` with
//! `m_i = x_i + h b(t_m, x_i, mu_hat)` and `s_i = sqrt(h) |sigma(t_m, x_i, mu_hat)|`.
//! Projecting that Gaussian onto the next quantizer's Voronoi cells gives the
//! transition probabilities in closed form.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{LloydStart, Observer};
use crate::error::{invalid, CoreError, Result};
use crate::grid::TimeGrid;
use crate::math::KahanSum;
use crate::measure::DiscreteMeasure;
use crate::model::{InitialLaw, MeanFieldModel};
use crate::quantization::{
    lloyd_step_mixture_1d, mixture, GaussianMixture1D, LloydStats, MixtureComponent, Quantizer,
    Voronoi1D,
};

/// Largest tolerated deviation of a row or weight sum from one; smaller
/// deviations are renormalized away and counted.
pub const WEIGHT_RENORMALIZATION_TOL: f64 = 1e-10;

/// Quantized law `(x^(m), p^(m))` at grid index `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveQState {
    pub quantizer: Quantizer,
    pub weights: Vec<f64>,
    pub time_index: usize,
}

impl RecursiveQState {
    /// `sum_k p_k delta_{x_k}`.
    pub fn measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(1, self.quantizer.points().to_vec(), self.weights.clone())
            .expect("recursive weights are normalized")
    }
}

/// `pi[i][j]`: probability of moving from atom `i` at `t_m` to cell `j` at `t_{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecursiveDiagnostics {
    /// Transition rows rescaled because their sum was off by a rounding error.
    pub renormalized_rows: usize,
    /// Weight vectors rescaled for the same reason.
    pub renormalized_weights: usize,
    /// Sources with zero conditional variance, sent whole to one cell.
    pub degenerate_sources: usize,
    /// Degenerate sources whose mean sat exactly on a cell boundary.
    pub boundary_hits: usize,
    pub lloyd: LloydStats,
}

impl RecursiveDiagnostics {
    fn merge(&mut self, o: &RecursiveDiagnostics) {
        self.renormalized_rows += o.renormalized_rows;
        self.renormalized_weights += o.renormalized_weights;
        self.degenerate_sources += o.degenerate_sources;
        self.boundary_hits += o.boundary_hits;
        self.lloyd.merge(o.lloyd);
    }
}

/// Output of one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub matrix: TransitionMatrix,
    pub next_weights: Vec<f64>,
    pub diagnostics: RecursiveDiagnostics,
}

fn check_model(model: &dyn MeanFieldModel) -> Result<()> {
    if model.dim() != 1 {
        return Err(CoreError::Unsupported(format!(
            "recursive quantization is one-dimensional; the model has d = {} and Voronoi cell \
             integrals of Gaussians have no closed form beyond d = 1",
            model.dim()
        )));
    }
    if model.vlasov().is_none() {
        return Err(CoreError::Unsupported(
            "recursive quantization needs a model in Vlasov form".into(),
        ));
    }
    Ok(())
}

/// Conditional means and standard deviations `(m_i, s_i)` of the next Euler
/// state given each current atom.
fn predict(
    model: &dyn MeanFieldModel,
    state: &RecursiveQState,
    grid: &TimeGrid,
) -> Result<Vec<(f64, f64)>> {
    let m = state.time_index;
    let t = grid.node(m);
    let h = grid.step();
    let mu = DiscreteMeasure::new(1, state.quantizer.points().to_vec(), state.weights.clone())?;
    let frozen = model.freeze(t, mu.view());
    let q = model.noise_dim();
    let mut b = [0.0];
    let mut s = vec![0.0; q];
    let sqrt_h = libm::sqrt(h);
    let mut out = Vec::with_capacity(state.quantizer.len());
    for &x in state.quantizer.points() {
        frozen.drift(&[x], &mut b);
        frozen.diffusion(&[x], &mut s);
        let norm = libm::sqrt(s.iter().map(|v| v * v).sum());
        let mean = x + h * b[0];
        let sd = sqrt_h * norm;
        if !(mean.is_finite() && sd.is_finite()) {
            return Err(CoreError::NonFiniteOutput {
                what: "transition moments",
                t,
            });
        }
        out.push((mean, sd));
    }
    Ok(out)
}

/// Rescales `v` to unit sum, or fails if it is off by more than the tolerance.
fn normalize(v: &mut [f64], step: usize) -> Result<bool> {
    let total = crate::math::kahan_sum(v.iter().copied());
    let deviation = (total - 1.0).abs();
    if !(deviation <= WEIGHT_RENORMALIZATION_TOL) {
        return Err(CoreError::MassDrift { step, deviation });
    }
    if deviation > 0.0 {
        for w in v.iter_mut() {
            *w /= total;
        }
        return Ok(true);
    }
    Ok(false)
}

fn transition_from_prediction(
    pred: &[(f64, f64)],
    weights: &[f64],
    next_x: &Quantizer,
    step: usize,
) -> Result<Transition> {
    let cells = Voronoi1D::new(next_x);
    let k_from = pred.len();
    let k_to = next_x.len();
    let mut data = vec![0.0; k_from * k_to];
    let mut diag = RecursiveDiagnostics::default();
    let mut sorted_row = vec![0.0; k_to];
    for (i, &(mean, sd)) in pred.iter().enumerate() {
        let row = &mut data[i * k_to..(i + 1) * k_to];
        if sd == 0.0 {
            diag.degenerate_sources += 1;
            let s = cells.sorted_cell_of(mean);
            if (s > 0 && mean == cells.boundary(s)) || mean == cells.boundary(s + 1) {
                diag.boundary_hits += 1;
            }
            row[cells.original_index(s)] = 1.0;
        } else {
            mixture::component_cells(mean, sd, &cells, &mut sorted_row, None);
            for (s, &v) in sorted_row.iter().enumerate() {
                row[cells.original_index(s)] = v;
            }
        }
        if normalize(row, step)? {
            diag.renormalized_rows += 1;
        }
    }
    let mut next = vec![KahanSum::new(); k_to];
    for (i, &p) in weights.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (j, acc) in next.iter_mut().enumerate() {
            let v = data[i * k_to + j];
            if v != 0.0 {
                acc.add(p * v);
            }
        }
    }
    let mut next_weights: Vec<f64> = next.iter().map(KahanSum::value).collect();
    if normalize(&mut next_weights, step)? {
        diag.renormalized_weights += 1;
    }
    Ok(Transition {
        matrix: TransitionMatrix {
            rows: k_from,
            cols: k_to,
            data,
        },
        next_weights,
        diagnostics: diag,
    })
}

/// Transition matrix from `state` to the cells of `next_x` and the induced
/// weights `p'_j = sum_i pi_ij p_i`.
pub fn recursive_transition_1d(
    model: &dyn MeanFieldModel,
    state: &RecursiveQState,
    next_x: &Quantizer,
    grid: &TimeGrid,
) -> Result<Transition> {
    check_model(model)?;
    if next_x.dim() != 1 || state.quantizer.dim() != 1 {
        return Err(invalid("recursive quantizers must be one-dimensional"));
    }
    if state.weights.len() != state.quantizer.len() {
        return Err(invalid("one weight per quantizer point is required"));
    }
    if state.time_index >= grid.steps() {
        return Err(invalid("state already at the last node"));
    }
    let pred = predict(model, state, grid)?;
    transition_from_prediction(&pred, &state.weights, next_x, state.time_index + 1)
}

/// Where the quantizers `x^(0..=M)` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerSource {
    /// The same quantizer at every node (or the Lloyd starting point).
    Constant(Quantizer),
    /// One quantizer per node, `M + 1` in total.
    Sequence(Vec<Quantizer>),
}

/// States `(x^(m), p^(m))` for `m = 0..=M` and the accumulated diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveRun {
    pub states: Vec<RecursiveQState>,
    pub diagnostics: RecursiveDiagnostics,
}

impl RecursiveRun {
    pub fn terminal(&self) -> &RecursiveQState {
        self.states.last().expect("at least the initial state")
    }
}

/// Mass of the exact initial law in each Voronoi cell of `x`.
fn initial_weights(law: &InitialLaw, x: &Quantizer) -> Result<Vec<f64>> {
    let mix = initial_mixture(law)?;
    let cells = Voronoi1D::new(x);
    let moments = mix.cell_moments(&cells);
    let mut w = vec![0.0; x.len()];
    for (s, m) in moments.mass.iter().enumerate() {
        w[cells.original_index(s)] = *m;
    }
    normalize(&mut w, 0)?;
    Ok(w)
}

fn initial_mixture(law: &InitialLaw) -> Result<GaussianMixture1D> {
    match law {
        InitialLaw::PointMass(x) if x.len() == 1 => GaussianMixture1D::normal(x[0], 0.0),
        InitialLaw::DiagonalGaussian { mean, variance } if mean.len() == 1 => {
            GaussianMixture1D::normal(mean[0], libm::sqrt(variance[0]))
        }
        _ => Err(invalid(
            "recursive quantization needs a one-dimensional initial law",
        )),
    }
}

fn lloyd_iterate(
    mix: &GaussianMixture1D,
    x: &Quantizer,
    iters: usize,
    stats: &mut LloydStats,
) -> Quantizer {
    let mut x = x.clone();
    for _ in 0..iters {
        let (next, s) = lloyd_step_mixture_1d(mix, &x);
        stats.merge(s);
        x = next;
    }
    x
}

/// Runs the recursive scheme over the grid.
///
/// With `lloyd_iters = 0` the quantizers come straight from `source`. With
/// `lloyd_iters = L >= 1` the initial quantizer gets `L` Lloyd iterations
/// against the exact initial law, and at every step the next quantizer is
/// obtained by `L` Lloyd iterations against the predicted mixture
/// `sum_i p_i N(m_i, s_i^2)`, started from the current quantizer or from the
/// source's quantizer for that node, as chosen by `start`.
pub fn simulate_recursive_q(
    model: &dyn MeanFieldModel,
    grid: &TimeGrid,
    source: &QuantizerSource,
    lloyd_iters: usize,
    start: LloydStart,
    observer: &mut dyn Observer,
) -> Result<RecursiveRun> {
    check_model(model)?;
    let steps = grid.steps();
    let quantizer_at = |m: usize| -> &Quantizer {
        match source {
            QuantizerSource::Constant(x) => x,
            QuantizerSource::Sequence(xs) => &xs[m],
        }
    };
    match source {
        QuantizerSource::Sequence(xs) => {
            if xs.len() != steps + 1 {
                return Err(invalid(format!(
                    "{} quantizers for {} nodes",
                    xs.len(),
                    steps + 1
                )));
            }
            if xs.iter().any(|x| x.dim() != 1) {
                return Err(invalid("recursive quantizers must be one-dimensional"));
            }
        }
        QuantizerSource::Constant(x) => {
            if x.dim() != 1 {
                return Err(invalid("recursive quantizers must be one-dimensional"));
            }
        }
    }
    let mut diag = RecursiveDiagnostics::default();
    let law = model.initial_law();
    let mut x0 = quantizer_at(0).clone();
    if lloyd_iters > 0 {
        x0 = lloyd_iterate(&initial_mixture(law)?, &x0, lloyd_iters, &mut diag.lloyd);
    }
    let weights = initial_weights(law, &x0)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(RecursiveQState {
        quantizer: x0,
        weights,
        time_index: 0,
    });
    observer.observe(0, 0.0, states[0].measure().view());
    for m in 0..steps {
        let cur = &states[m];
        let pred = predict(model, cur, grid)?;
        let next_x = if lloyd_iters > 0 {
            let comps: Vec<MixtureComponent> = pred
                .iter()
                .zip(&cur.weights)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&(mean, std), &weight)| MixtureComponent { mean, std, weight })
                .collect();
            let mix = GaussianMixture1D::new(comps)?;
            let from = match start {
                LloydStart::Previous => &cur.quantizer,
                LloydStart::Source => quantizer_at(m + 1),
            };
            lloyd_iterate(&mix, from, lloyd_iters, &mut diag.lloyd)
        } else {
            quantizer_at(m + 1).clone()
        };
        let tr = transition_from_prediction(&pred, &cur.weights, &next_x, m + 1)?;
        diag.merge(&tr.diagnostics);
        let next = RecursiveQState {
            quantizer: next_x,
            weights: tr.next_weights,
            time_index: m + 1,
        };
        observer.observe(m + 1, grid.node(m + 1), next.measure().view());
        states.push(next);
    }
    Ok(RecursiveRun {
        states,
        diagnostics: diag,
    })
}
