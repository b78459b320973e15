use alloc::boxed::Box;
use alloc::vec;

use crate::error::{invalid, Result};
use crate::measure::MeasureView;
use crate::model::{FrozenCoefficients, InitialLaw, MeanFieldModel, VlasovKernel};

/// Parameters of the mean-field FitzHugh-Nagumo network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub v0: f64,
    pub sigma_v0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub i_ext: f64,
    pub sigma_ext: f64,
    pub omega0: f64,
    pub sigma_omega0: f64,
    pub v_rev: f64,
    pub a_r: f64,
    pub a_d: f64,
    pub t_max: f64,
    pub lambda: f64,
    pub y0: f64,
    pub sigma_y0: f64,
    pub j: f64,
    pub sigma_j: f64,
    pub v_t: f64,
    pub gamma: f64,
    pub big_lambda: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            v0: 0.0,
            sigma_v0: 0.4,
            a: 0.7,
            b: 0.8,
            c: 0.08,
            i_ext: 0.5,
            sigma_ext: 0.5,
            omega0: 0.5,
            sigma_omega0: 0.4,
            v_rev: 1.0,
            a_r: 1.0,
            a_d: 1.0,
            t_max: 1.0,
            lambda: 0.2,
            y0: 0.3,
            sigma_y0: 0.05,
            j: 1.0,
            sigma_j: 0.2,
            v_t: 2.0,
            gamma: 0.1,
            big_lambda: 0.5,
        }
    }
}

impl FhnParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.v0,
            self.sigma_v0,
            self.a,
            self.b,
            self.c,
            self.i_ext,
            self.sigma_ext,
            self.omega0,
            self.sigma_omega0,
            self.v_rev,
            self.a_r,
            self.a_d,
            self.t_max,
            self.lambda,
            self.y0,
            self.sigma_y0,
            self.j,
            self.sigma_j,
            self.v_t,
            self.gamma,
            self.big_lambda,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("FHN parameters must be finite"));
        }
        if !(self.t_max > 0.0 && self.a_r >= 0.0 && self.a_d >= 0.0) {
            return Err(invalid("FHN needs T_max > 0 and a_r, a_d >= 0"));
        }
        if self.sigma_v0 < 0.0 || self.sigma_omega0 < 0.0 || self.sigma_y0 < 0.0 {
            return Err(invalid(
                "FHN initial covariance entries must be non-negative",
            ));
        }
        Ok(())
    }

    /// Synaptic opening rate `a_r T_max (1 - x3) / (1 + exp(-lambda (x1 - V_T)))`.
    fn opening(&self, x: &[f64]) -> f64 {
        self.a_r * self.t_max * (1.0 - x[2]) / (1.0 + libm::exp(-self.lambda * (x[0] - self.v_t)))
    }

    /// Drift with the measure summarized by `m3 = int z3 mu(dz)`.
    pub fn drift(&self, x: &[f64], m3: f64, out: &mut [f64]) {
        let x1 = x[0];
        out[0] = x1 - x1 * x1 * x1 / 3.0 - x[1] + self.i_ext - self.j * (x1 - self.v_rev) * m3;
        out[1] = self.c * (x1 + self.a - self.b * x[1]);
        out[2] = self.opening(x) - self.a_d * x[2];
    }

    /// Row-major `3 x 3` diffusion with the measure summarized by `m3`.
    pub fn diffusion(&self, x: &[f64], m3: f64, out: &mut [f64]) {
        out.fill(0.0);
        out[0] = self.sigma_ext;
        out[2] = -self.sigma_j * (x[0] - self.v_rev) * m3;
        out[7] = self.sigma32(x);
    }

    /// Entry `(3, 2)` of the diffusion matrix; zero outside `0 < x3 < 1`.
    pub fn sigma32(&self, x: &[f64]) -> f64 {
        let x3 = x[2];
        if !(x3 > 0.0 && x3 < 1.0) {
            return 0.0;
        }
        let u = 2.0 * x3 - 1.0;
        let inner = (self.opening(x) + self.a_d * x3).max(0.0);
        libm::sqrt(inner) * self.gamma * libm::exp(-self.big_lambda / (1.0 - u * u))
    }

    /// `N((V0, omega0, y0), diag(sigma_V0, sigma_omega0, sigma_y0))`: the
    /// diagonal entries are variances.
    pub fn initial_law(&self) -> InitialLaw {
        InitialLaw::DiagonalGaussian {
            mean: vec![self.v0, self.omega0, self.y0],
            variance: vec![self.sigma_v0, self.sigma_omega0, self.sigma_y0],
        }
    }
}

/// The FitzHugh-Nagumo network, `d = q = 3`.
#[derive(Debug, Clone)]
pub struct FhnModel {
    params: FhnParams,
    initial: InitialLaw,
}

impl FhnModel {
    pub fn new(params: FhnParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            initial: params.initial_law(),
            params,
        })
    }

    pub fn params(&self) -> &FhnParams {
        &self.params
    }
}

impl Default for FhnModel {
    fn default() -> Self {
        Self::new(FhnParams::default()).expect("default parameters are valid")
    }
}

struct FrozenFhn<'a> {
    params: &'a FhnParams,
    m3: f64,
}

impl FrozenCoefficients for FrozenFhn<'_> {
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        self.params.drift(x, self.m3, out);
    }

    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        self.params.diffusion(x, self.m3, out);
    }
}

/// The coefficients are affine in `mu`, so `beta(x, u)` and `a(x, u)` are the
/// coefficients with `m3` replaced by `u3`.
impl VlasovKernel for FhnParams {
    fn beta(&self, _t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        self.drift(x, u[2], out);
    }

    fn a(&self, _t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        self.diffusion(x, u[2], out);
    }
}

impl MeanFieldModel for FhnModel {
    fn dim(&self) -> usize {
        3
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn initial_law(&self) -> &InitialLaw {
        &self.initial
    }

    fn freeze<'a>(&'a self, _t: f64, mu: MeasureView<'a>) -> Box<dyn FrozenCoefficients + 'a> {
        Box::new(FrozenFhn {
            params: &self.params,
            m3: mu.integrate(|z| z[2]),
        })
    }

    fn vlasov(&self) -> Option<&dyn VlasovKernel> {
        Some(&self.params)
    }
}
