//! The three spatial discretizations of the Euler scheme.

pub mod hybrid;
pub mod particle;
pub mod recursive;

pub use hybrid::{
    distinct_positions, hybrid_step, seed_quantizer, simulate_hybrid, HybridQuantizer, HybridRun,
    HybridRunConfig, HybridStep,
};
pub use particle::{initial_ensemble, particle_step, simulate_particles, ParticleRunConfig};
pub use recursive::{
    recursive_transition_1d, simulate_recursive_q, QuantizerSource, RecursiveDiagnostics,
    RecursiveQState, RecursiveRun, Transition, TransitionMatrix, WEIGHT_RENORMALIZATION_TOL,
};

use alloc::vec;

use crate::error::{CoreError, Result};
use crate::measure::MeasureView;
use crate::model::MeanFieldModel;

/// Where the per-step Lloyd iterations of the quantization schemes start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LloydStart {
    /// The quantizer of the previous step (warm start).
    #[default]
    Previous,
    /// A quantizer supplied with the run configuration, the same at every step.
    Source,
}

/// States beyond this magnitude are reported as an Euler blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

/// Receives the measure of a scheme at each grid node, in time order.
pub trait Observer {
    fn observe(&mut self, time_index: usize, t: f64, mu: MeasureView<'_>);
}

impl<F: FnMut(usize, f64, MeasureView<'_>)> Observer for F {
    fn observe(&mut self, time_index: usize, t: f64, mu: MeasureView<'_>) {
        self(time_index, t, mu)
    }
}

/// Observer that ignores everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: usize, _: f64, _: MeasureView<'_>) {}
}

/// One Euler-Maruyama step of every row of `states` with the measure argument
/// frozen at `mu`: `x + h b(t, x, mu) + sqrt(h) sigma(t, x, mu) z`.
///
/// `noise` holds one row of `q` standard normals per state.
#[allow(clippy::too_many_arguments)]
pub(crate) fn euler_advance(
    model: &dyn MeanFieldModel,
    t: f64,
    h: f64,
    step: usize,
    mu: MeasureView<'_>,
    states: &[f64],
    noise: &[f64],
) -> Result<vec::Vec<f64>> {
    let d = model.dim();
    let q = model.noise_dim();
    let sqrt_h = libm::sqrt(h);
    let frozen = model.freeze(t, mu);
    let mut out = vec![0.0; states.len()];
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * q];
    for (n, (x, z)) in states
        .chunks_exact(d)
        .zip(noise.chunks_exact(q))
        .enumerate()
    {
        frozen.drift(x, &mut b);
        frozen.diffusion(x, &mut s);
        let row = &mut out[n * d..(n + 1) * d];
        for i in 0..d {
            let mut noise_term = 0.0;
            for j in 0..q {
                noise_term += s[i * q + j] * z[j];
            }
            let v = x[i] + h * b[i] + sqrt_h * noise_term;
            if !v.is_finite() || v.abs() > BLOW_UP_THRESHOLD {
                return Err(CoreError::BlowUp {
                    step,
                    particle: n,
                    value: v,
                });
            }
            row[i] = v;
        }
    }
    Ok(out)
}
