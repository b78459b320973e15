use alloc::boxed::Box;
use alloc::format;

use crate::error::{invalid, CoreError, Result};
use crate::math::{self, adaptive_simpson};
use crate::measure::MeasureView;
use crate::metrics::StepCdf;
use crate::model::{FrozenCoefficients, InitialLaw, MeanFieldModel, VlasovKernel};

/// Diffusion variance of the benchmark.
pub const BURGERS_SIGMA2: f64 = 0.2;

/// `dX = (int H(X - y) mu(dy)) dt + sigma dB`, `H(z) = 1{z >= 0}`, `X_0 = 0`.
#[derive(Debug, Clone)]
pub struct BurgersModel {
    kernel: BurgersKernel,
    initial: InitialLaw,
}

/// `beta(x, u) = 1{x >= u}`, `a = sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersKernel {
    pub sigma: f64,
}

impl VlasovKernel for BurgersKernel {
    fn beta(&self, _t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        out[0] = if x[0] >= u[0] { 1.0 } else { 0.0 };
    }

    fn a(&self, _t: f64, _x: &[f64], _u: &[f64], out: &mut [f64]) {
        out[0] = self.sigma;
    }
}

impl BurgersModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!(
                "Burgers sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            kernel: BurgersKernel { sigma },
            initial: InitialLaw::PointMass(alloc::vec![0.0]),
        })
    }

    /// The benchmark model, `sigma^2 = 0.2`.
    pub fn benchmark() -> Self {
        Self::new(libm::sqrt(BURGERS_SIGMA2)).expect("positive sigma")
    }

    pub fn sigma(&self) -> f64 {
        self.kernel.sigma
    }
}

/// The measure enters only through its CDF, built once per freeze by sorting.
struct FrozenBurgers {
    cdf: StepCdf,
    sigma: f64,
}

impl FrozenCoefficients for FrozenBurgers {
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.cdf.eval(x[0]);
    }

    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = self.sigma;
    }
}

impl MeanFieldModel for BurgersModel {
    fn dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn initial_law(&self) -> &InitialLaw {
        &self.initial
    }

    fn freeze<'a>(&'a self, _t: f64, mu: MeasureView<'a>) -> Box<dyn FrozenCoefficients + 'a> {
        Box::new(FrozenBurgers {
            cdf: StepCdf::from_view(mu),
            sigma: self.kernel.sigma,
        })
    }

    fn vlasov(&self) -> Option<&dyn VlasovKernel> {
        Some(&self.kernel)
    }
}

/// `int H(x - y) mu(dy) = mu((-inf, x])`.
pub fn burgers_drift(x: f64, mu: MeasureView<'_>) -> f64 {
    StepCdf::from_view(mu).eval(x)
}

/// Absolute tolerance of each quadrature.
const QUAD_TOL: f64 = 1e-10;
/// Integrand values below `e^{-700}` (about `1e-304`) are dropped.
const EXPONENT_CUTOFF: f64 = 700.0;
const MAX_DEPTH: u32 = 40;

/// CDF at time `t > 0` of the Burgers solution started from `X_0 = 0`,
/// from the Hopf-Cole representation
///
/// `F_t(x) = int_0^inf e^{-E_+(y)} dy / (int_{-inf}^0 e^{-E_-(y)} dy + int_0^inf e^{-E_+(y)} dy)`
///
/// with `E_-(y) = (x-y)^2 / (2 t s2)` and `E_+(y) = E_-(y) + y / s2`, evaluated
/// by adaptive Simpson quadrature.
pub fn burgers_true_cdf_at(sigma2: f64, t: f64, x: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite() && t > 0.0 && t.is_finite() && x.is_finite()) {
        return Err(invalid("true CDF needs sigma^2 > 0, t > 0 and finite x"));
    }
    // Both exponents are shifted quadratics: E(y) = (y - c)^2 / (2 t s2) + e0.
    let width2 = 2.0 * t * sigma2;
    let (c_minus, e0_minus) = (x, 0.0);
    let (c_plus, e0_plus) = (x - t, (x - 0.5 * t) / sigma2);
    let min_on = |c: f64, e0: f64, lo: f64, hi: f64| {
        let y = c.clamp(lo, hi);
        (y - c) * (y - c) / width2 + e0
    };
    let e_min = min_on(c_minus, e0_minus, f64::NEG_INFINITY, 0.0).min(min_on(
        c_plus,
        e0_plus,
        0.0,
        f64::INFINITY,
    ));
    let integrate = |c: f64, e0: f64, lo: f64, hi: f64| -> Result<f64> {
        // Region where the shifted exponent stays below the cutoff.
        let room = EXPONENT_CUTOFF + e_min - e0;
        if room <= 0.0 {
            return Ok(0.0);
        }
        let r = libm::sqrt(room * width2);
        let (a, b) = ((c - r).max(lo), (c + r).min(hi));
        if a >= b {
            return Ok(0.0);
        }
        let f = |y: f64| libm::exp(-((y - c) * (y - c) / width2 + e0 - e_min));
        // Panels no wider than a quarter of the kernel scale, so that the
        // initial Simpson samples always resolve the peak.
        let scale = 0.25 * libm::sqrt(t * sigma2);
        let panels = libm::ceil((b - a) / scale).max(1.0) as usize;
        let tol = QUAD_TOL / panels as f64;
        let mut acc = math::KahanSum::new();
        for k in 0..panels {
            let pa = a + (b - a) * k as f64 / panels as f64;
            let pb = if k + 1 == panels {
                b
            } else {
                a + (b - a) * (k + 1) as f64 / panels as f64
            };
            let v = adaptive_simpson(&f, pa, pb, tol, MAX_DEPTH)
                .map_err(|_| CoreError::QuadratureFailure { x })?;
            acc.add(v);
        }
        Ok(acc.value())
    };
    let num = integrate(c_plus, e0_plus, 0.0, f64::INFINITY)?;
    let left = integrate(c_minus, e0_minus, f64::NEG_INFINITY, 0.0)?;
    let den = left + num;
    if !(den > 0.0) {
        return Err(CoreError::QuadratureFailure { x });
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// [`burgers_true_cdf_at`] at the benchmark horizon `T = 1`.
pub fn burgers_true_cdf(sigma2: f64, x: f64) -> Result<f64> {
    burgers_true_cdf_at(sigma2, 1.0, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;
    use crate::model::evaluate_drift;
    use alloc::vec;

    #[test]
    fn drift_examples() {
        let z = [0.0];
        assert_eq!(burgers_drift(0.0, MeasureView::PointMass(&z)), 1.0);
        let u = DiscreteMeasure::uniform_1d(&[-1.0, 1.0]).unwrap();
        assert_eq!(burgers_drift(0.0, u.view()), 0.5);
        let w = DiscreteMeasure::new(1, vec![-1.0, 0.0, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(burgers_drift(0.1, w.view()), 0.5);
        let m = BurgersModel::benchmark();
        assert_eq!(
            evaluate_drift(&m, 0.0, &[0.0], MeasureView::PointMass(&z)).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn true_cdf_limits() {
        assert!(burgers_true_cdf(0.2, -10.0).unwrap() < 1e-6);
        assert!(burgers_true_cdf(0.2, 10.0).unwrap() > 1.0 - 1e-6);
        let a = burgers_true_cdf(0.2, 0.3).unwrap();
        let b = burgers_true_cdf(0.2, 0.31).unwrap();
        assert!(a < b);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BurgersModel::new(0.0).is_err());
        assert!(burgers_true_cdf(-0.2, 0.0).is_err());
        assert!(burgers_true_cdf_at(0.2, 0.0, 0.0).is_err());
    }
}
