//! Scalar numerics: compensated summation, Gaussian distribution functions,
//! truncated Gaussian moments and adaptive quadrature.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if libm::fabs(self.sum) >= libm::fabs(value) {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<KahanSum>().value()
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal distribution function, `P(Z <= z)`.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal survival function, `P(Z > z)`, accurate in the upper tail.
#[inline]
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Distribution function of `N(mean, std^2)` at `xi`.
///
/// A zero standard deviation gives the right-continuous step at `mean`.
pub fn gaussian_cdf(mean: f64, std: f64, xi: f64) -> f64 {
    debug_assert!(std >= 0.0, "negative standard deviation");
    if std == 0.0 {
        return if xi >= mean { 1.0 } else { 0.0 };
    }
    std_normal_cdf((xi - mean) / std)
}

/// Mass and partial moments of `N(mean, std^2)` restricted to an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMoments {
    /// `P(a < Y <= b)`.
    pub mass: f64,
    /// `E[Y; a < Y <= b]`.
    pub first: f64,
    /// `E[(Y - mean)^2; a < Y <= b]`.
    pub second_central: f64,
}

fn tail_aware_mass(alpha: f64, beta: f64) -> f64 {
    if alpha >= 0.0 {
        std_normal_sf(alpha) - std_normal_sf(beta)
    } else if beta <= 0.0 {
        std_normal_cdf(beta) - std_normal_cdf(alpha)
    } else {
        1.0 - std_normal_sf(beta) - std_normal_cdf(alpha)
    }
}

#[inline]
fn z_pdf(z: f64) -> f64 {
    if z.is_finite() {
        std_normal_pdf(z)
    } else {
        0.0
    }
}

#[inline]
fn z_times_pdf(z: f64) -> f64 {
    if z.is_finite() {
        z * std_normal_pdf(z)
    } else {
        0.0
    }
}

/// Probability of the interval `(a, b]` under `N(mean, std^2)`, computed from
/// whichever tail avoids cancellation. Requires `std > 0` and `a <= b`.
pub fn normal_interval_mass(mean: f64, std: f64, a: f64, b: f64) -> f64 {
    tail_aware_mass((a - mean) / std, (b - mean) / std).max(0.0)
}

/// Mass, first moment and second central moment of `N(mean, std^2)` over
/// `(a, b]`, with infinite endpoints allowed. Requires `std > 0`.
///
/// The first moment uses `E[Y; a<Y<=b] = mean * mass + std * (pdf(alpha) - pdf(beta))`
/// so that no numerical integration is needed.
pub fn normal_interval_moments(mean: f64, std: f64, a: f64, b: f64) -> IntervalMoments {
    let alpha = (a - mean) / std;
    let beta = (b - mean) / std;
    let mass = tail_aware_mass(alpha, beta).max(0.0);
    let first = mean * mass + std * (z_pdf(alpha) - z_pdf(beta));
    let second_central = std * std * (mass + z_times_pdf(alpha) - z_times_pdf(beta));
    IntervalMoments {
        mass,
        first,
        second_central: second_central.max(0.0),
    }
}

/// Closed form of `int_a^b xi f(xi) dxi` for the `N(mean, std^2)` density `f`.
pub fn gaussian_partial_expectation(mean: f64, std: f64, a: f64, b: f64) -> f64 {
    if std == 0.0 {
        return if mean > a && mean <= b { mean } else { 0.0 };
    }
    let bracket = |xi: f64| {
        if xi.is_finite() {
            let u = (xi - mean) / std;
            libm::exp(-0.5 * u * u)
        } else {
            0.0
        }
    };
    -std / libm::sqrt(2.0 * PI) * (bracket(b) - bracket(a))
        + mean * (gaussian_cdf(mean, std, b) - gaussian_cdf(mean, std, a))
}

/// Adaptive Simpson quadrature failure: tolerance not met within budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureBudgetExceeded;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Subintervals are refined until the Lyness estimate `|S2 - S1| / 15` of each
/// panel is below its share of the tolerance, at most `max_depth` levels deep.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> core::result::Result<f64, QuadratureBudgetExceeded> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut acc = KahanSum::new();
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut acc)?;
    Ok(acc.value())
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut KahanSum,
) -> core::result::Result<(), QuadratureBudgetExceeded> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if libm::fabs(delta) <= 15.0 * tol {
        acc.add(left + right + delta / 15.0);
        return Ok(());
    }
    if depth == 0 {
        return Err(QuadratureBudgetExceeded);
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc)?;
    simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc)
}
