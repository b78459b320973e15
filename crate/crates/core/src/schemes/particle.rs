//! The interacting particle method: `N` Euler chains coupled through their
//! empirical measure.

use alloc::format;

use super::{euler_advance, Observer};
use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::measure::ParticleEnsemble;
use crate::model::MeanFieldModel;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRunConfig {
    pub particles: usize,
    pub grid: TimeGrid,
    pub seed: u64,
    pub stream: u64,
}

impl ParticleRunConfig {
    pub fn new(particles: usize, grid: TimeGrid, seed: u64) -> Self {
        Self {
            particles,
            grid,
            seed,
            stream: 0,
        }
    }
}

/// `N` i.i.d. draws from the model's initial law.
pub fn initial_ensemble(
    model: &dyn MeanFieldModel,
    n: usize,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    if n == 0 {
        return Err(invalid("need at least one particle"));
    }
    let law = model.initial_law();
    if law.dim() != model.dim() {
        return Err(invalid("initial law dimension differs from the model"));
    }
    Ok(law.sample(n, rng))
}

/// Advances every particle by one Euler step with the empirical measure of
/// the input ensemble. Draws `N x q` normals in particle order.
pub fn particle_step(
    model: &dyn MeanFieldModel,
    ensemble: &ParticleEnsemble,
    grid: &TimeGrid,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let m = ensemble.time_index();
    if m >= grid.steps() {
        return Err(invalid(format!("ensemble already at the last node ({m})")));
    }
    if ensemble.dim() != model.dim() {
        return Err(invalid("ensemble dimension differs from the model"));
    }
    let noise = rng.gaussian_increments(ensemble.len(), model.noise_dim());
    let states = euler_advance(
        model,
        grid.node(m),
        grid.step(),
        m + 1,
        ensemble.view(),
        ensemble.states(),
        &noise,
    )?;
    Ok(ParticleEnsemble::from_raw(model.dim(), states, m + 1))
}

/// Runs the particle method to the horizon, handing each ensemble to
/// `observer`, and returns the terminal ensemble.
pub fn simulate_particles(
    model: &dyn MeanFieldModel,
    config: &ParticleRunConfig,
    observer: &mut dyn Observer,
) -> Result<ParticleEnsemble> {
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut ens = initial_ensemble(model, config.particles, &mut rng)?;
    let grid = &config.grid;
    observer.observe(0, 0.0, ens.view());
    for m in 0..grid.steps() {
        ens = particle_step(model, &ens, grid, &mut rng)?;
        observer.observe(m + 1, grid.node(m + 1), ens.view());
    }
    Ok(ens)
}
