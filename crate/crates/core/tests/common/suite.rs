//! Property checks shared by the integration tests and the acceptance runner.
//!
//! Each check returns a one-line summary on success and the first violation
//! otherwise.

use std::path::Path;

use mvq_core::math::{gaussian_cdf, std_normal_cdf};
use mvq_core::measure::{DiscreteMeasure, ParticleEnsemble};
use mvq_core::metrics::{wasserstein_1d, wasserstein_discrete_exact};
use mvq_core::model::{evaluate_diffusion, evaluate_drift, MeanFieldModel};
use mvq_core::models::{BurgersModel, FhnModel, FhnParams};
use mvq_core::quantization::{lloyd_step_empirical, quantization_error, Quantizer};
use mvq_core::schemes::{
    initial_ensemble, particle_step, recursive_transition_1d, RecursiveQState,
    WEIGHT_RENORMALIZATION_TOL,
};
use mvq_core::{RngStream, TimeGrid};

pub type Check = Result<String, String>;

/// Uniform variates as `Phi(Z)` of the library's normal stream.
pub struct Uniforms {
    rng: RngStream,
    buf: Vec<f64>,
}

impl Uniforms {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: RngStream::new(seed, 0xacce),
            buf: Vec::new(),
        }
    }

    pub fn next(&mut self) -> f64 {
        if self.buf.is_empty() {
            self.buf = self.rng.gaussian_increments(256, 1);
        }
        std_normal_cdf(self.buf.pop().unwrap())
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next() * n as f64) as usize).min(n - 1)
    }

    pub fn weights(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| 0.05 + self.next()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    }
}

/// Row sums of every transition matrix and the total weight, at every step.
pub fn transition_rows_normalized(steps: usize) -> Check {
    let model = BurgersModel::benchmark();
    let grid = TimeGrid::new(1.0, steps).map_err(|e| e.to_string())?;
    let x = Quantizer::uniform_grid(-2.5, 3.5, 64).map_err(|e| e.to_string())?;
    let mut weights = vec![0.0; x.len()];
    weights[x.project(&[0.0]).0] = 1.0;
    let mut state = RecursiveQState {
        quantizer: x.clone(),
        weights,
        time_index: 0,
    };
    let mut worst = 0.0f64;
    for m in 0..steps {
        let tr = recursive_transition_1d(&model, &state, &x, &grid)
            .map_err(|e| format!("step {m}: {e}"))?;
        for i in 0..tr.matrix.rows() {
            let dev = (tr.matrix.row(i).iter().sum::<f64>() - 1.0).abs();
            if dev > WEIGHT_RENORMALIZATION_TOL {
                return Err(format!("step {m}, row {i}: row sum off by {dev:e}"));
            }
            worst = worst.max(dev);
        }
        let dev = (tr.next_weights.iter().sum::<f64>() - 1.0).abs();
        if dev > WEIGHT_RENORMALIZATION_TOL {
            return Err(format!("step {m}: total weight off by {dev:e}"));
        }
        worst = worst.max(dev);
        state = RecursiveQState {
            quantizer: x.clone(),
            weights: tr.next_weights,
            time_index: m + 1,
        };
    }
    Ok(format!("{steps} steps, largest deviation {worst:.1e}"))
}

/// One Lloyd step never raises the quadratic quantization error.
pub fn lloyd_monotone(instances: usize) -> Check {
    let mut u = Uniforms::new(31);
    for inst in 0..instances {
        let d = 1 + inst % 3;
        let n = 5 + u.below(60);
        let k = 1 + u.below(8);
        let atoms: Vec<f64> = (0..n * d).map(|_| u.range(-2.0, 2.0)).collect();
        let mu = DiscreteMeasure::new(d, atoms, u.weights(n)).map_err(|e| e.to_string())?;
        let pts: Vec<f64> = (0..k * d).map(|_| u.range(-2.0, 2.0)).collect();
        let mut q = Quantizer::new(d, pts).map_err(|e| e.to_string())?;
        let mut err = quantization_error(mu.view(), &q, 2.0);
        for it in 0..4 {
            let (next, _) = lloyd_step_empirical(mu.view(), &q);
            let e = quantization_error(mu.view(), &next, 2.0);
            if e > err * (1.0 + 1e-12) + 1e-15 {
                return Err(format!("instance {inst}, iteration {it}: {err} -> {e}"));
            }
            err = e;
            q = next;
        }
    }
    Ok(format!("{instances} instances"))
}

/// Quantile-formula `W_p` against exact transport on small 1D instances.
pub fn wasserstein_cross_oracle(instances: usize) -> Check {
    let mut u = Uniforms::new(1234);
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let n = 1 + u.below(12);
        let m = 1 + u.below(12);
        let a: Vec<f64> = (0..n).map(|_| u.range(-3.0, 3.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| u.range(-3.0, 3.0)).collect();
        let mu = DiscreteMeasure::new(1, a, u.weights(n)).map_err(|e| e.to_string())?;
        let nu = DiscreteMeasure::new(1, b, u.weights(m)).map_err(|e| e.to_string())?;
        for p in [1.0, 2.0, 3.0] {
            let fast = wasserstein_1d(mu.view(), nu.view(), p);
            let exact =
                wasserstein_discrete_exact(mu.view(), nu.view(), p).map_err(|e| e.to_string())?;
            let gap = (fast - exact).abs();
            if gap >= 1e-10 {
                return Err(format!("instance {inst}, p = {p}: {fast} vs {exact}"));
            }
            worst = worst.max(gap);
        }
    }
    Ok(format!("{instances} instances, largest gap {worst:.1e}"))
}

/// Updating particles one by one, in reverse order, against the input
/// measure reproduces `particle_step` bitwise.
pub fn frozen_measure_order_invariance(cases: usize) -> Check {
    let grid = TimeGrid::new(1.0, 10).map_err(|e| e.to_string())?;
    for case in 0..cases {
        let fhn = case % 2 == 1;
        let model: Box<dyn MeanFieldModel> = if fhn {
            Box::new(FhnModel::default())
        } else {
            Box::new(BurgersModel::new(0.7).map_err(|e| e.to_string())?)
        };
        let n = 2 + case % 37;
        let mut rng = RngStream::new(case as u64, 0);
        let e0 = if fhn {
            initial_ensemble(model.as_ref(), n, &mut rng).map_err(|e| e.to_string())?
        } else {
            ParticleEnsemble::new(1, rng.gaussian_increments(n, 1), 0).map_err(|e| e.to_string())?
        };
        let mut noise_rng = rng.clone();
        let stepped =
            particle_step(model.as_ref(), &e0, &grid, &mut rng).map_err(|e| e.to_string())?;
        let (d, q) = (model.dim(), model.noise_dim());
        let z = noise_rng.gaussian_increments(n, q);
        let h = grid.step();
        for i in (0..n).rev() {
            let x = e0.particle(i);
            let b = evaluate_drift(model.as_ref(), 0.0, x, e0.view()).map_err(|e| e.to_string())?;
            let s =
                evaluate_diffusion(model.as_ref(), 0.0, x, e0.view()).map_err(|e| e.to_string())?;
            for k in 0..d {
                let mut noise = 0.0;
                for j in 0..q {
                    noise += s[k * q + j] * z[i * q + j];
                }
                let v = x[k] + h * b[k] + h.sqrt() * noise;
                if v.to_bits() != stepped.particle(i)[k].to_bits() {
                    return Err(format!("case {case}, particle {i}, coordinate {k}"));
                }
            }
        }
    }
    Ok(format!("{cases} ensembles"))
}

/// `sigma_32` is zero off `(0, 1)` and below 1e-8 just inside it.
pub fn sigma32_boundaries() -> Check {
    let p = FhnParams::default();
    for x1 in [-2.0, -0.5, 0.0, 0.8, 1.5] {
        for x3 in [0.0, 1.0, -0.3, 1.2] {
            let v = p.sigma32(&[x1, 0.1, x3]);
            if v != 0.0 {
                return Err(format!("sigma32({x1}, ., {x3}) = {v}"));
            }
        }
        for x3 in [1e-6, 1.0 - 1e-6] {
            let v = p.sigma32(&[x1, 0.1, x3]);
            if v.abs() >= 1e-8 {
                return Err(format!("sigma32({x1}, ., {x3}) = {v:e}"));
            }
        }
    }
    Ok("zero on the boundary, < 1e-8 at 1e-6 inside".into())
}

/// `gaussian_cdf` against 50-digit reference values.
pub fn gaussian_cdf_fixture(path: &Path) -> Check {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut worst = 0.0f64;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.parse().map_err(|_| format!("bad row {line}")))
            .collect::<Result<_, _>>()?;
        worst = worst.max((gaussian_cdf(v[0], v[1], v[2]) - v[3]).abs());
        rows += 1;
    }
    if rows < 1000 {
        return Err(format!("fixture has {rows} rows"));
    }
    if worst > 1e-14 {
        return Err(format!("largest error {worst:e} over {rows} points"));
    }
    Ok(format!("{rows} points, largest error {worst:.1e}"))
}
