//! Small models with known behaviour, used as test oracles.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::measure::MeasureView;
use crate::model::{FrozenCoefficients, InitialLaw, MeanFieldModel, VlasovKernel, MAX_DIM};

/// A model whose kernels ignore the interaction argument `u`.
///
/// The coefficients are then independent of the measure, so freezing skips
/// the sum over atoms and a step costs O(N).
#[derive(Debug, Clone)]
pub struct LocalModel<K> {
    kernel: K,
    dim: usize,
    noise_dim: usize,
    initial: InitialLaw,
}

impl<K: VlasovKernel> LocalModel<K> {
    pub fn new(kernel: K, dim: usize, noise_dim: usize, initial: InitialLaw) -> Result<Self> {
        if dim == 0 || noise_dim == 0 || dim > MAX_DIM || noise_dim > MAX_DIM {
            return Err(invalid("local models need 1 <= d, q <= 8"));
        }
        initial.validate()?;
        if initial.dim() != dim {
            return Err(invalid("initial law dimension mismatch"));
        }
        Ok(Self {
            kernel,
            dim,
            noise_dim,
            initial,
        })
    }
}

struct FrozenLocal<'a, K> {
    kernel: &'a K,
    t: f64,
}

impl<K: VlasovKernel> FrozenCoefficients for FrozenLocal<'_, K> {
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        self.kernel.beta(self.t, x, x, out);
    }

    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        self.kernel.a(self.t, x, x, out);
    }
}

impl<K: VlasovKernel> MeanFieldModel for LocalModel<K> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn initial_law(&self) -> &InitialLaw {
        &self.initial
    }

    fn freeze<'a>(&'a self, t: f64, _mu: MeasureView<'a>) -> Box<dyn FrozenCoefficients + 'a> {
        Box::new(FrozenLocal {
            kernel: &self.kernel,
            t,
        })
    }

    fn vlasov(&self) -> Option<&dyn VlasovKernel> {
        Some(&self.kernel)
    }
}

/// `beta = drift` in every coordinate and `a = sigma I` (with `q = d`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantKernel {
    pub drift: f64,
    pub sigma: f64,
    pub dim: usize,
}

impl VlasovKernel for ConstantKernel {
    fn beta(&self, _t: f64, _x: &[f64], _u: &[f64], out: &mut [f64]) {
        out.fill(self.drift);
    }

    fn a(&self, _t: f64, _x: &[f64], _u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.dim {
            out[i * self.dim + i] = self.sigma;
        }
    }
}

/// Ornstein-Uhlenbeck: `b = -x`, `sigma = 1`, independent of the measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuKernel;

impl VlasovKernel for OuKernel {
    fn beta(&self, _t: f64, x: &[f64], _u: &[f64], out: &mut [f64]) {
        out[0] = -x[0];
    }

    fn a(&self, _t: f64, _x: &[f64], _u: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }
}

/// `b = 0`, `sigma = 0`: everything stays put.
pub fn zero_model(initial: InitialLaw) -> Result<LocalModel<ConstantKernel>> {
    let d = initial.dim();
    LocalModel::new(
        ConstantKernel {
            drift: 0.0,
            sigma: 0.0,
            dim: d,
        },
        d,
        d,
        initial,
    )
}

/// `b = drift`, `sigma = 0`: exact translation by `drift * t`.
pub fn constant_drift_model(drift: f64, initial: InitialLaw) -> Result<LocalModel<ConstantKernel>> {
    let d = initial.dim();
    LocalModel::new(
        ConstantKernel {
            drift,
            sigma: 0.0,
            dim: d,
        },
        d,
        d,
        initial,
    )
}

/// One-dimensional Brownian motion `sigma B_t` in Vlasov form (`beta = 0`, `a = sigma`).
pub fn brownian_model(sigma: f64, initial: InitialLaw) -> Result<LocalModel<ConstantKernel>> {
    LocalModel::new(
        ConstantKernel {
            drift: 0.0,
            sigma,
            dim: 1,
        },
        1,
        1,
        initial,
    )
}

/// `dX = -X dt + dB`.
pub fn ou_model(initial: InitialLaw) -> Result<LocalModel<OuKernel>> {
    LocalModel::new(OuKernel, 1, 1, initial)
}

/// Variance after `steps` Euler steps of size `h` of `dX = -X dt + dB` from a
/// deterministic start: `sum_j h (1 - h)^{2 (steps - 1 - j)}`.
pub fn ou_euler_variance(h: f64, steps: usize) -> f64 {
    let r = (1.0 - h) * (1.0 - h);
    let mut v = 0.0;
    for _ in 0..steps {
        v = r * v + h;
    }
    v
}

/// Named catalogue of the oracle models, all started from `delta_0` in `R`.
pub fn toy_models() -> Vec<(String, Box<dyn MeanFieldModel>)> {
    let origin = || InitialLaw::PointMass(vec![0.0]);
    vec![
        (
            String::from("zero"),
            Box::new(zero_model(origin()).expect("valid")) as Box<dyn MeanFieldModel>,
        ),
        (
            String::from("constant-drift"),
            Box::new(constant_drift_model(1.0, origin()).expect("valid")),
        ),
        (
            String::from("ou"),
            Box::new(ou_model(origin()).expect("valid")),
        ),
        (
            String::from("brownian"),
            Box::new(brownian_model(1.0, origin()).expect("valid")),
        ),
    ]
}
