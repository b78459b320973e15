//! Independent oracles for the numerical building blocks.

mod common;

use common::suite;

use mvq_core::math::{gaussian_cdf, normal_interval_mass, std_normal_cdf};
use mvq_core::measure::{DiscreteMeasure, MeasureView, ParticleEnsemble};
use mvq_core::metrics::{kde_density_2d, voronoi_cell_density_2d, BoundingBox, CdfGrid};
use mvq_core::model::InitialLaw;
use mvq_core::models::{burgers_true_cdf, toy, BurgersModel, BURGERS_SIGMA2};
use mvq_core::quantization::{
    lloyd_step_empirical, quantization_error, voronoi_weights, Quantizer,
};
use mvq_core::schemes::{
    recursive_transition_1d, simulate_hybrid, simulate_particles, simulate_recursive_q,
    HybridQuantizer, HybridRunConfig, LloydStart, NoObserver, ParticleRunConfig, QuantizerSource,
    RecursiveQState,
};
use mvq_core::{RngStream, TimeGrid};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + uniform(rng)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `F_1(x)` with Gauss-Legendre panels of width 0.05 on a window wide enough
/// that the dropped tails are far below 1e-12.
fn burgers_cdf_gauss_legendre(s2: f64, x: f64, rule: &[(f64, f64)]) -> f64 {
    let e_minus = |y: f64| (x - y) * (x - y) / (2.0 * s2);
    let e_plus = |y: f64| e_minus(y) + y / s2;
    let shift = {
        let ym = x.min(0.0);
        let yp = (x - 1.0).max(0.0);
        e_minus(ym).min(e_plus(yp))
    };
    let panel = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> f64 {
        let n = ((b - a) / 0.05).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let mut s = 0.0;
        for k in 0..n {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            for &(t, w) in rule {
                s += 0.5 * (hi - lo) * w * f(0.5 * (hi - lo) * t + 0.5 * (hi + lo));
            }
        }
        s
    };
    let reach = 12.0;
    let left = panel(
        &|y| (-(e_minus(y) - shift)).exp(),
        (x - reach).min(-1e-9),
        0.0,
    );
    let right = panel(
        &|y| (-(e_plus(y) - shift)).exp(),
        0.0,
        (x - 1.0 + reach).max(1e-9),
    );
    right / (left + right)
}

/// Closed form of the same ratio: both integrals are Gaussian.
fn burgers_cdf_closed_form(s2: f64, x: f64) -> f64 {
    let s = s2.sqrt();
    let left = std_normal_cdf(-x / s);
    // log of the prefactor of the right integral relative to the left one.
    let log_ratio = -(x - 0.5) / s2;
    let right_phi = std_normal_cdf((x - 1.0) / s);
    if right_phi == 0.0 {
        return 0.0;
    }
    let right = (log_ratio + right_phi.ln()).exp();
    right / (left + right)
}

#[test]
fn burgers_cdf_simpson_agrees_with_gauss_legendre_and_closed_form() {
    let grid = CdfGrid::default();
    let rule = gauss_legendre(20);
    let mut worst_gl = 0.0f64;
    let mut worst_cf = 0.0f64;
    for &x in grid.points() {
        let simpson = burgers_true_cdf(BURGERS_SIGMA2, x).unwrap();
        worst_gl =
            worst_gl.max((simpson - burgers_cdf_gauss_legendre(BURGERS_SIGMA2, x, &rule)).abs());
        worst_cf = worst_cf.max((simpson - burgers_cdf_closed_form(BURGERS_SIGMA2, x)).abs());
    }
    assert!(worst_gl < 1e-9, "Gauss-Legendre gap {worst_gl:e}");
    assert!(worst_cf < 1e-9, "closed-form gap {worst_cf:e}");
}

#[test]
fn one_recursive_step_matches_monte_carlo() {
    let model = BurgersModel::benchmark();
    let grid = TimeGrid::new(1.0, 10).unwrap();
    let x = Quantizer::from_1d(vec![-0.8, -0.3, 0.0, 0.2, 0.5, 0.9, 1.4]).unwrap();
    let p = vec![0.1, 0.15, 0.2, 0.25, 0.1, 0.15, 0.05];
    let state = RecursiveQState {
        quantizer: x.clone(),
        weights: p.clone(),
        time_index: 3,
    };
    let tr = recursive_transition_1d(&model, &state, &x, &grid).unwrap();

    // Sample the Euler step directly: pick an atom by weight, move it with the
    // frozen Burgers drift (mass at or below it), add noise, project.
    let h = grid.step();
    let sigma = BURGERS_SIGMA2.sqrt();
    let drift: Vec<f64> = (0..7)
        .map(|i| {
            (0..7)
                .filter(|&j| x.point(j)[0] <= x.point(i)[0])
                .map(|j| p[j])
                .sum()
        })
        .collect();
    let cum: Vec<f64> = p
        .iter()
        .scan(0.0, |s, w| {
            *s += w;
            Some(*s)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut normals = RngStream::new(99, 1);
    let n = 10_000_000usize;
    let mut counts = [0u64; 7];
    let mut z = vec![0.0; 100_000];
    let mut done = 0;
    while done < n {
        normals.fill_standard_normal(&mut z);
        for &zk in &z {
            let u = uniform(&mut rng);
            let i = cum.iter().position(|&c| u < c).unwrap_or(6);
            let y = x.point(i)[0] + h * drift[i] + h.sqrt() * sigma * zk;
            counts[x.project(&[y]).0] += 1;
        }
        done += z.len();
    }
    for j in 0..7 {
        let mc = counts[j] as f64 / n as f64;
        assert!(
            (mc - tr.next_weights[j]).abs() < 3e-4,
            "cell {j}: {mc} vs {}",
            tr.next_weights[j]
        );
    }
}

#[test]
fn brownian_recursion_tracks_the_exact_gaussian() {
    let sigma = 0.7;
    let model = toy::brownian_model(sigma, InitialLaw::PointMass(vec![0.0])).unwrap();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let x = Quantizer::uniform_grid(-3.0, 3.0, 501).unwrap();
    let run = simulate_recursive_q(
        &model,
        &grid,
        &QuantizerSource::Constant(x.clone()),
        0,
        LloydStart::Previous,
        &mut NoObserver,
    )
    .unwrap();
    let w = &run.terminal().weights;
    // Compare the CDF at the cell boundaries with N(0, sigma^2).
    let mut cum = 0.0;
    let mut worst = 0.0f64;
    for k in 0..500 {
        cum += w[k];
        let edge = 0.5 * (x.point(k)[0] + x.point(k + 1)[0]);
        worst = worst.max((cum - gaussian_cdf(0.0, sigma, edge)).abs());
    }
    assert!(worst < 2e-3, "sup CDF gap {worst}");
}

#[test]
fn ou_particles_match_the_euler_variance_recursion() {
    let model = toy::ou_model(InitialLaw::PointMass(vec![0.0])).unwrap();
    let grid = TimeGrid::new(1.0, 100).unwrap();
    let n = 100_000;
    let ens =
        simulate_particles(&model, &ParticleRunConfig::new(n, grid, 8), &mut NoObserver).unwrap();
    let mean = ens.states().iter().sum::<f64>() / n as f64;
    let var = ens
        .states()
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    let exact = toy::ou_euler_variance(grid.step(), 100);
    // Sample variance of n normals has relative sd sqrt(2 / n).
    let tol = 5.0 * exact * (2.0 / n as f64).sqrt();
    assert!((var - exact).abs() < tol, "{var} vs {exact}");
    assert!(mean.abs() < 5.0 * (exact / n as f64).sqrt());
}

#[test]
fn voronoi_weights_of_normal_sample_match_cell_masses() {
    let n = 100_000;
    let mut rng = RngStream::new(5, 0);
    let sample = rng.gaussian_increments(n, 1);
    let ens = ParticleEnsemble::from_positions(sample, 0).unwrap();
    let x = Quantizer::from_1d(vec![-2.0, -1.2, -0.6, -0.2, 0.0, 0.3, 0.9, 1.5, 2.4]).unwrap();
    let mu = voronoi_weights(&ens, &x);
    let pts = x.points();
    for k in 0..pts.len() {
        let lo = if k == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (pts[k - 1] + pts[k])
        };
        let hi = if k + 1 == pts.len() {
            f64::INFINITY
        } else {
            0.5 * (pts[k] + pts[k + 1])
        };
        let exact = normal_interval_mass(0.0, 1.0, lo, hi);
        let sd = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((mu.weights()[k] - exact).abs() < 5.0 * sd, "cell {k}");
    }
}

#[test]
fn projection_matches_brute_force_nearest_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pts: Vec<f64> = (0..200).map(|_| 10.0 * uniform(&mut rng) - 5.0).collect();
    let x = Quantizer::from_1d(pts.clone()).unwrap();
    let proj = x.projector();
    for _ in 0..10_000 {
        let q = 12.0 * uniform(&mut rng) - 6.0;
        let brute = (0..pts.len())
            .min_by(|&a, &b| {
                (pts[a] - q)
                    .abs()
                    .total_cmp(&(pts[b] - q).abs())
                    .then(a.cmp(&b))
            })
            .unwrap();
        assert_eq!(proj.project(&[q]), brute, "query {q}");
        assert_eq!(x.project(&[q]).0, brute);
    }
}

/// Optimal `k`-point quadratic quantization of sorted 1D atoms: cells are
/// contiguous runs, so a dynamic program over split points is exact.
fn dp_optimal_distortion(xs: &[f64], w: &[f64], k: usize) -> f64 {
    let n = xs.len();
    let cost = |a: usize, b: usize| -> f64 {
        let m: f64 = w[a..b].iter().sum();
        let c: f64 = (a..b).map(|i| w[i] * xs[i]).sum::<f64>() / m;
        (a..b).map(|i| w[i] * (xs[i] - c) * (xs[i] - c)).sum()
    };
    let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
    best[0][0] = 0.0;
    for j in 1..=k {
        for b in 1..=n {
            for a in (j - 1)..b {
                let v = best[j - 1][a] + cost(a, b);
                if v < best[j][b] {
                    best[j][b] = v;
                }
            }
        }
    }
    best[k][n]
}

#[test]
fn lloyd_respects_the_dynamic_programming_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let n = 12 + (rng.next_u64() % 20) as usize;
        let k = 2 + (rng.next_u64() % 4) as usize;
        let mut xs: Vec<f64> = (0..n).map(|_| 6.0 * uniform(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let w = vec![1.0 / n as f64; n];
        let opt = dp_optimal_distortion(&xs, &w, k);
        let mu = DiscreteMeasure::new(1, xs.clone(), w.clone()).unwrap();
        let stride = n / k;
        let mut q =
            Quantizer::from_1d((0..k).map(|i| xs[i * stride + stride / 2]).collect()).unwrap();
        for _ in 0..200 {
            q = lloyd_step_empirical(mu.view(), &q).0;
        }
        let e = quantization_error(mu.view(), &q, 2.0);
        assert!(
            e * e >= opt - 1e-12,
            "Lloyd below the optimum: {} < {opt}",
            e * e
        );
    }
    // On two well-separated clusters Lloyd reaches the optimum.
    let xs = [0.0, 0.1, 0.2, 5.0, 5.2, 5.4];
    let w = [1.0 / 6.0; 6];
    let mu = DiscreteMeasure::new(1, xs.to_vec(), w.to_vec()).unwrap();
    let q = lloyd_step_empirical(mu.view(), &Quantizer::from_1d(vec![1.0, 4.0]).unwrap()).0;
    let e = quantization_error(mu.view(), &q, 2.0);
    assert!((e * e - dp_optimal_distortion(&xs, &w, 2)).abs() < 1e-14);
}

#[test]
fn hybrid_pinned_to_particles_is_bitwise_the_particle_method() {
    let model = BurgersModel::benchmark();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let particles = simulate_particles(
        &model,
        &ParticleRunConfig::new(256, grid, 77),
        &mut NoObserver,
    )
    .unwrap();
    let cfg = HybridRunConfig {
        particles: 256,
        grid,
        quantizer: HybridQuantizer::PinnedToParticles,
        seed: 77,
        stream: 0,
    };
    let hybrid = simulate_hybrid(&model, &cfg, &mut NoObserver).unwrap();
    let a: Vec<u64> = particles.states().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u64> = hybrid
        .particles
        .states()
        .iter()
        .map(|v| v.to_bits())
        .collect();
    assert_eq!(a, b);
}

#[test]
fn kde_mass_on_a_wide_grid_is_close_to_one() {
    let mut rng = RngStream::new(2, 0);
    let pts = rng.gaussian_increments(300, 2);
    let ens = ParticleEnsemble::new(2, pts, 0).unwrap();
    let b = 0.241;
    let bbox = BoundingBox::around(ens.view(), 5.0 * b);
    let n = 161;
    let xs: Vec<f64> = (0..n)
        .map(|i| bbox.x0 + (bbox.x1 - bbox.x0) * i as f64 / (n - 1) as f64)
        .collect();
    let ys: Vec<f64> = (0..n)
        .map(|i| bbox.y0 + (bbox.y1 - bbox.y0) * i as f64 / (n - 1) as f64)
        .collect();
    let s = kde_density_2d(ens.view(), Some(b), &xs, &ys).unwrap();
    let mass = s.values.iter().sum::<f64>() * (xs[1] - xs[0]) * (ys[1] - ys[0]);
    assert!((0.98..=1.0 + 1e-6).contains(&mass), "{mass}");
}

#[test]
fn voronoi_cell_areas_match_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let k = 12;
    let atoms: Vec<f64> = (0..2 * k).map(|_| uniform(&mut rng)).collect();
    let mu = DiscreteMeasure::new(2, atoms.clone(), random_weights(&mut rng, k)).unwrap();
    let bbox = BoundingBox {
        x0: -0.2,
        x1: 1.3,
        y0: -0.1,
        y1: 1.1,
    };
    let cells = voronoi_cell_density_2d(&mu, bbox).unwrap();
    let total: f64 = cells.iter().map(|c| c.area).sum();
    assert!((total - bbox.area()).abs() < 1e-12);
    let samples = 400_000;
    let mut hits = vec![0usize; k];
    for _ in 0..samples {
        let p = [
            bbox.x0 + (bbox.x1 - bbox.x0) * uniform(&mut rng),
            bbox.y0 + (bbox.y1 - bbox.y0) * uniform(&mut rng),
        ];
        let nearest = (0..k)
            .min_by(|&a, &b| {
                let da = (atoms[2 * a] - p[0]).powi(2) + (atoms[2 * a + 1] - p[1]).powi(2);
                let db = (atoms[2 * b] - p[0]).powi(2) + (atoms[2 * b + 1] - p[1]).powi(2);
                da.total_cmp(&db)
            })
            .unwrap();
        hits[nearest] += 1;
    }
    for (i, c) in cells.iter().enumerate() {
        let frac = c.area / bbox.area();
        let mc = hits[i] as f64 / samples as f64;
        let sd = (frac * (1.0 - frac) / samples as f64).sqrt();
        assert!((mc - frac).abs() < 5.0 * sd, "cell {i}: {mc} vs {frac}");
        assert!((c.density * c.area - mu.weights()[i]).abs() < 1e-12);
    }
}

#[test]
fn measure_views_of_counts_and_weights_agree() {
    let ens = ParticleEnsemble::from_positions(vec![0.5, -1.0, 0.5, 2.0], 0).unwrap();
    let mu = DiscreteMeasure::new(1, vec![-1.0, 0.5, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
    let f = |x: &[f64]| x[0] * x[0] + x[0];
    let view: MeasureView<'_> = ens.view();
    assert!((view.integrate(f) - mu.view().integrate(f)).abs() < 1e-15);
}

fn expect(check: suite::Check) {
    if let Err(e) = check {
        panic!("{e}");
    }
}

#[test]
fn gaussian_cdf_matches_high_precision_fixture() {
    expect(suite::gaussian_cdf_fixture(&fixture_path(
        "gaussian_cdf.csv",
    )));
}

#[test]
fn transition_rows_and_weights_stay_normalized_for_a_thousand_steps() {
    expect(suite::transition_rows_normalized(1000));
}

#[test]
fn lloyd_never_increases_quadratic_error() {
    expect(suite::lloyd_monotone(1000));
}

#[test]
fn wasserstein_1d_agrees_with_exact_transport() {
    expect(suite::wasserstein_cross_oracle(100));
}

#[test]
fn frozen_measure_update_is_order_free() {
    expect(suite::frozen_measure_order_invariance(64));
}

#[test]
fn sigma32_vanishes_at_the_boundaries() {
    expect(suite::sigma32_boundaries());
}
