//! Hybrid particle-quantization: particles evolve as in the particle method,
//! but the measure fed to the coefficients is the empirical measure projected
//! onto a `K`-point quantizer.

use alloc::format;
use alloc::vec::Vec;

use super::{euler_advance, particle::initial_ensemble, Observer};
use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::measure::{DiscreteMeasure, ParticleEnsemble};
use crate::model::MeanFieldModel;
use crate::quantization::{lloyd_step_empirical, voronoi_weights, LloydStats, Quantizer};
use crate::rng::RngStream;

/// How the quantizer `x^(m)` is chosen at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum HybridQuantizer {
    /// The same quantizer at every step, no Lloyd iterations.
    Fixed(Quantizer),
    /// `k` points seeded from the initial particles, refined by `iters` Lloyd
    /// iterations per step against the current particles, warm-started from
    /// the previous step.
    Lloyd { k: usize, iters: usize },
    /// `iters` Lloyd iterations per step against the current particles,
    /// restarted from `start` at every step.
    LloydFrom { start: Quantizer, iters: usize },
    /// The distinct particle positions themselves: the projection is then the
    /// identity and the scheme coincides with the particle method.
    PinnedToParticles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridRunConfig {
    pub particles: usize,
    pub grid: TimeGrid,
    pub quantizer: HybridQuantizer,
    pub seed: u64,
    pub stream: u64,
}

/// Output of [`hybrid_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct HybridStep {
    /// Particles at `t_{m+1}`.
    pub particles: ParticleEnsemble,
    /// Quantizer used at `t_m`, after its Lloyd iterations.
    pub quantizer: Quantizer,
    /// Quantized measure at `t_m` that drove the step.
    pub measure: DiscreteMeasure,
    pub lloyd: LloydStats,
}

/// Terminal state of a hybrid run.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridRun {
    pub particles: ParticleEnsemble,
    pub quantizer: Quantizer,
    /// Quantized law at `T`.
    pub measure: DiscreteMeasure,
    pub lloyd: LloydStats,
    /// Steps at which the particles had fewer distinct positions than `K`.
    pub degenerate_seeds: usize,
}

/// One hybrid step: `lloyd_iters` Lloyd iterations of `x` on the particles,
/// Voronoi weights, then an Euler step with the quantized measure.
pub fn hybrid_step(
    model: &dyn MeanFieldModel,
    particles: &ParticleEnsemble,
    x: &Quantizer,
    lloyd_iters: usize,
    grid: &TimeGrid,
    rng: &mut RngStream,
) -> Result<HybridStep> {
    let m = particles.time_index();
    if m >= grid.steps() {
        return Err(invalid(format!("particles already at the last node ({m})")));
    }
    if particles.dim() != model.dim() || x.dim() != model.dim() {
        return Err(invalid("particle, quantizer and model dimensions differ"));
    }
    let mut x = x.clone();
    let mut lloyd = LloydStats::default();
    for _ in 0..lloyd_iters {
        let (next, s) = lloyd_step_empirical(particles.view(), &x);
        lloyd.merge(s);
        x = next;
    }
    let measure = voronoi_weights(particles, &x);
    let noise = rng.gaussian_increments(particles.len(), model.noise_dim());
    let states = euler_advance(
        model,
        grid.node(m),
        grid.step(),
        m + 1,
        measure.view(),
        particles.states(),
        &noise,
    )?;
    Ok(HybridStep {
        particles: ParticleEnsemble::from_raw(model.dim(), states, m + 1),
        quantizer: x,
        measure,
        lloyd,
    })
}

/// Distinct particle positions, sorted lexicographically.
pub fn distinct_positions(particles: &ParticleEnsemble) -> Quantizer {
    let d = particles.dim();
    let mut rows: Vec<&[f64]> = particles.particles().collect();
    rows.sort_unstable_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    rows.dedup_by(|a, b| a == b);
    let pts: Vec<f64> = rows.concat();
    Quantizer::from_raw(d, pts)
}

/// Initial `K`-point quantizer for a particle sample.
///
/// In one dimension the points are the sample quantiles of levels
/// `(k + 1/2) / K`; in higher dimension they are the particles at evenly
/// strided draw indices. Ties are resolved by falling back to evenly strided
/// distinct positions. When the sample has fewer than `K` distinct positions,
/// those are padded with points beyond the largest first coordinate and the
/// second value is `true`.
pub fn seed_quantizer(particles: &ParticleEnsemble, k: usize) -> Result<(Quantizer, bool)> {
    if k == 0 {
        return Err(invalid("quantization level must be positive"));
    }
    let d = particles.dim();
    let n = particles.len();
    let pick = |len: usize, i: usize| ((2 * i + 1) * len) / (2 * k);
    let picked: Vec<f64> = if d == 1 {
        let mut sorted = particles.states().to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        (0..k).map(|i| sorted[pick(n, i).min(n - 1)]).collect()
    } else {
        (0..k)
            .flat_map(|i| particles.particle(pick(n, i).min(n - 1)).to_vec())
            .collect()
    };
    if crate::measure::find_duplicate(d, &picked).is_none() {
        return Ok((Quantizer::from_raw(d, picked), false));
    }
    let distinct = distinct_positions(particles);
    let u = distinct.len();
    if u >= k {
        let pts: Vec<f64> = (0..k)
            .flat_map(|i| distinct.point(pick(u, i)).to_vec())
            .collect();
        return Ok((Quantizer::from_raw(d, pts), false));
    }
    let mut pts = distinct.into_points();
    let max_first = pts
        .chunks_exact(d)
        .map(|r| r[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let min_first = pts
        .chunks_exact(d)
        .map(|r| r[0])
        .fold(f64::INFINITY, f64::min);
    let spacing = 1e-3 * (max_first - min_first).max(1.0);
    let anchor = pts[..d].to_vec();
    for j in 1..=(k - u) {
        let mut row = anchor.clone();
        row[0] = max_first + spacing * j as f64;
        pts.extend_from_slice(&row);
    }
    Ok((Quantizer::new(d, pts)?, true))
}

/// Runs the hybrid scheme to the horizon. `observer` receives the quantized
/// measure at every node; the returned run carries the one at `T`.
pub fn simulate_hybrid(
    model: &dyn MeanFieldModel,
    config: &HybridRunConfig,
    observer: &mut dyn Observer,
) -> Result<HybridRun> {
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut particles = initial_ensemble(model, config.particles, &mut rng)?;
    let grid = &config.grid;
    let mut lloyd = LloydStats::default();
    let mut degenerate_seeds = 0;
    let iters = match config.quantizer {
        HybridQuantizer::Lloyd { iters, .. } | HybridQuantizer::LloydFrom { iters, .. } => iters,
        _ => 0,
    };
    let mut x = match &config.quantizer {
        HybridQuantizer::Fixed(x) | HybridQuantizer::LloydFrom { start: x, .. } => {
            if x.dim() != model.dim() {
                return Err(invalid("quantizer dimension differs from the model"));
            }
            x.clone()
        }
        HybridQuantizer::Lloyd { k, .. } => {
            let (x, degenerate) = seed_quantizer(&particles, *k)?;
            degenerate_seeds += usize::from(degenerate);
            x
        }
        HybridQuantizer::PinnedToParticles => distinct_positions(&particles),
    };
    let mut reseed = degenerate_seeds > 0;
    for m in 0..grid.steps() {
        match &config.quantizer {
            HybridQuantizer::PinnedToParticles => x = distinct_positions(&particles),
            HybridQuantizer::LloydFrom { start, .. } => x = start.clone(),
            // The step-0 quantizer was seeded above.
            HybridQuantizer::Lloyd { k, .. } if reseed && m > 0 => {
                let (seeded, degenerate) = seed_quantizer(&particles, *k)?;
                degenerate_seeds += usize::from(degenerate);
                reseed = degenerate;
                x = seeded;
            }
            _ => {}
        }
        let step = hybrid_step(model, &particles, &x, iters, grid, &mut rng)?;
        observer.observe(m, grid.node(m), step.measure.view());
        lloyd.merge(step.lloyd);
        particles = step.particles;
        x = step.quantizer;
    }
    // Quantized law at the horizon, built the same way as within the loop.
    match &config.quantizer {
        HybridQuantizer::PinnedToParticles => x = distinct_positions(&particles),
        HybridQuantizer::LloydFrom { start, .. } => x = start.clone(),
        HybridQuantizer::Lloyd { k, .. } if reseed && grid.steps() > 0 => {
            let (seeded, degenerate) = seed_quantizer(&particles, *k)?;
            degenerate_seeds += usize::from(degenerate);
            x = seeded;
        }
        _ => {}
    }
    for _ in 0..iters {
        let (next, s) = lloyd_step_empirical(particles.view(), &x);
        lloyd.merge(s);
        x = next;
    }
    let measure = voronoi_weights(&particles, &x);
    observer.observe(grid.steps(), grid.horizon(), measure.view());
    Ok(HybridRun {
        particles,
        quantizer: x,
        measure,
        lloyd,
        degenerate_seeds,
    })
}
