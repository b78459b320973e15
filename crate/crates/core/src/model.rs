//! The mean-field model abstraction.
//!
//! A model's coefficients `b(t, x, mu)` and `sigma(t, x, mu)` are evaluated in
//! two stages. [`MeanFieldModel::freeze`] receives the time and the measure
//! argument once per Euler step and may precompute whatever summary of the
//! measure it needs (a sorted CDF, a moment). The returned
//! [`FrozenCoefficients`] are then evaluated for each state `x`. This keeps the
//! per-particle cost independent of the number of atoms whenever the model
//! allows it.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, CoreError, Result};
use crate::math::KahanSum;
use crate::measure::{MeasureView, ParticleEnsemble};
use crate::rng::RngStream;

/// Largest state or noise dimension supported by the kernel-sum models.
pub const MAX_DIM: usize = 8;

/// Coefficients with the measure argument fixed.
pub trait FrozenCoefficients {
    /// Writes `b(t, x, mu)` into `out` (length `d`).
    fn drift(&self, x: &[f64], out: &mut [f64]);
    /// Writes `sigma(t, x, mu)` into `out` as a row-major `d x q` matrix.
    fn diffusion(&self, x: &[f64], out: &mut [f64]);
}

/// Interaction kernels of a model in Vlasov form:
/// `b(t, x, mu) = int beta(t, x, u) mu(du)` and `sigma(t, x, mu) = int a(t, x, u) mu(du)`.
pub trait VlasovKernel: Send + Sync {
    fn beta(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]);
    /// Row-major `d x q`.
    fn a(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]);
}

/// A McKean-Vlasov SDE `dX = b(t, X, mu_t) dt + sigma(t, X, mu_t) dB`, `mu_t = law(X_t)`.
pub trait MeanFieldModel: Send + Sync {
    /// State dimension `d`.
    fn dim(&self) -> usize;
    /// Brownian dimension `q`.
    fn noise_dim(&self) -> usize;
    fn initial_law(&self) -> &InitialLaw;
    fn freeze<'a>(&'a self, t: f64, mu: MeasureView<'a>) -> Box<dyn FrozenCoefficients + 'a>;
    /// The Vlasov kernels, when the coefficients are linear in the measure.
    fn vlasov(&self) -> Option<&dyn VlasovKernel> {
        None
    }
}

/// Law of `X_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    PointMass(Vec<f64>),
    /// Independent coordinates `N(mean_i, variance_i)`.
    DiagonalGaussian {
        mean: Vec<f64>,
        variance: Vec<f64>,
    },
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            Self::PointMass(x) => x.len(),
            Self::DiagonalGaussian { mean, .. } => mean.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PointMass(x) if x.iter().all(|v| v.is_finite()) && !x.is_empty() => Ok(()),
            Self::DiagonalGaussian { mean, variance }
                if !mean.is_empty()
                    && mean.len() == variance.len()
                    && mean.iter().all(|v| v.is_finite())
                    && variance.iter().all(|v| v.is_finite() && *v >= 0.0) =>
            {
                Ok(())
            }
            _ => Err(invalid("malformed initial law")),
        }
    }

    /// Draws `n` i.i.d. copies of `X_0`, coordinate by coordinate in particle order.
    /// A point mass consumes no randomness.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> ParticleEnsemble {
        assert!(n > 0, "need at least one particle");
        let states = match self {
            Self::PointMass(x) => x.repeat(n),
            Self::DiagonalGaussian { mean, variance } => {
                let d = mean.len();
                let mut z = vec![0.0; n * d];
                rng.fill_standard_normal(&mut z);
                let stds: Vec<f64> = variance.iter().map(|v| libm::sqrt(*v)).collect();
                for row in z.chunks_exact_mut(d) {
                    for i in 0..d {
                        row[i] = mean[i] + stds[i] * row[i];
                    }
                }
                z
            }
        };
        ParticleEnsemble::from_raw(self.dim(), states, 0)
    }
}

/// `b(t, x, mu)` with a finiteness check.
pub fn evaluate_drift(
    model: &dyn MeanFieldModel,
    t: f64,
    x: &[f64],
    mu: MeasureView<'_>,
) -> Result<Vec<f64>> {
    check_dims(model, x, &mu)?;
    let mut out = vec![0.0; model.dim()];
    model.freeze(t, mu).drift(x, &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteOutput { what: "drift", t });
    }
    Ok(out)
}

/// `sigma(t, x, mu)` as a row-major `d x q` matrix, with a finiteness check.
pub fn evaluate_diffusion(
    model: &dyn MeanFieldModel,
    t: f64,
    x: &[f64],
    mu: MeasureView<'_>,
) -> Result<Vec<f64>> {
    check_dims(model, x, &mu)?;
    let mut out = vec![0.0; model.dim() * model.noise_dim()];
    model.freeze(t, mu).diffusion(x, &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteOutput {
            what: "diffusion",
            t,
        });
    }
    Ok(out)
}

fn check_dims(model: &dyn MeanFieldModel, x: &[f64], mu: &MeasureView<'_>) -> Result<()> {
    if x.len() != model.dim() || mu.dim() != model.dim() {
        return Err(invalid(format!(
            "model dimension {} but state has {} and measure {} coordinates",
            model.dim(),
            x.len(),
            mu.dim()
        )));
    }
    Ok(())
}

/// A model defined by its Vlasov kernels; coefficients are compensated sums over atoms.
#[derive(Debug, Clone)]
pub struct KernelModel<K> {
    kernel: K,
    dim: usize,
    noise_dim: usize,
    initial: InitialLaw,
}

impl<K: VlasovKernel> KernelModel<K> {
    pub fn new(kernel: K, dim: usize, noise_dim: usize, initial: InitialLaw) -> Result<Self> {
        if dim == 0 || noise_dim == 0 || dim > MAX_DIM || noise_dim > MAX_DIM {
            return Err(invalid(format!(
                "kernel models need 1 <= d, q <= {MAX_DIM}"
            )));
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

    pub fn kernel(&self) -> &K {
        &self.kernel
    }
}

struct KernelSum<'a, K> {
    kernel: &'a K,
    t: f64,
    mu: MeasureView<'a>,
    dim: usize,
    noise_dim: usize,
}

impl<K: VlasovKernel> KernelSum<'_, K> {
    fn accumulate(&self, len: usize, out: &mut [f64], eval: impl Fn(&[f64], &mut [f64])) {
        let mut scratch = [0.0; MAX_DIM * MAX_DIM];
        let mut acc = [KahanSum::new(); MAX_DIM * MAX_DIM];
        for (u, w) in self.mu.iter() {
            eval(u, &mut scratch[..len]);
            for i in 0..len {
                acc[i].add(w * scratch[i]);
            }
        }
        for i in 0..len {
            out[i] = acc[i].value();
        }
    }
}

impl<K: VlasovKernel> FrozenCoefficients for KernelSum<'_, K> {
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        self.accumulate(self.dim, out, |u, s| self.kernel.beta(self.t, x, u, s));
    }

    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        self.accumulate(self.dim * self.noise_dim, out, |u, s| {
            self.kernel.a(self.t, x, u, s)
        });
    }
}

impl<K: VlasovKernel> MeanFieldModel for KernelModel<K> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn initial_law(&self) -> &InitialLaw {
        &self.initial
    }

    fn freeze<'a>(&'a self, t: f64, mu: MeasureView<'a>) -> Box<dyn FrozenCoefficients + 'a> {
        Box::new(KernelSum {
            kernel: &self.kernel,
            t,
            mu,
            dim: self.dim,
            noise_dim: self.noise_dim,
        })
    }

    fn vlasov(&self) -> Option<&dyn VlasovKernel> {
        Some(&self.kernel)
    }
}

/// Reference evaluation of Vlasov coefficients: the explicit K-term weighted sum.
pub fn vlasov_drift_sum(
    kernel: &dyn VlasovKernel,
    d: usize,
    t: f64,
    x: &[f64],
    mu: MeasureView<'_>,
) -> Vec<f64> {
    let mut out = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for (u, w) in mu.iter() {
        kernel.beta(t, x, u, &mut tmp);
        for i in 0..d {
            out[i] += w * tmp[i];
        }
    }
    out
}

/// Reference `sum_k w_k a(t, x, u_k)`.
pub fn vlasov_diffusion_sum(
    kernel: &dyn VlasovKernel,
    d: usize,
    q: usize,
    t: f64,
    x: &[f64],
    mu: MeasureView<'_>,
) -> Vec<f64> {
    let mut out = vec![0.0; d * q];
    let mut tmp = vec![0.0; d * q];
    for (u, w) in mu.iter() {
        kernel.a(t, x, u, &mut tmp);
        for i in 0..d * q {
            out[i] += w * tmp[i];
        }
    }
    out
}
