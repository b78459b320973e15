//! Benchmark reproduction checks. Prints one PASS/FAIL line per criterion.
//!
//! The process exits successfully even when a criterion fails, so that
//! `cargo test --workspace` goes on to the remaining test binaries; set
//! `MVQ_ACCEPTANCE_STRICT=1` to exit with status 1 on any failure instead.
//!
//! `MVQ_ACCEPTANCE_FULL=1` runs the FitzHugh-Nagumo table with 200 reruns
//! instead of the reduced 50-rerun mode. `MVQ_ACCEPTANCE_ONLY=C1,C3` limits the
//! run to the listed criteria.

#[path = "../../core/tests/common/suite.rs"]
mod suite;

use std::path::{Path, PathBuf};
use std::time::Instant;

use mvq::config::load_config;
use mvq::experiments::convergence;
use mvq::runner::{run_config, RunOptions};
use mvq::RunConfig;
use mvq_core::models::BurgersModel;
use mvq_core::schemes::{
    simulate_hybrid, simulate_particles, HybridQuantizer, HybridRunConfig, NoObserver,
    ParticleRunConfig,
};
use mvq_core::TimeGrid;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            detail: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.detail
            .push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.detail.push(format!("     {line}"));
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    load_config(&configs().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn options(cache: &Path) -> RunOptions {
    RunOptions {
        out: None,
        cache_dir: Some(cache.to_path_buf()),
    }
}

fn c1(cache: &Path) -> Outcome {
    let mut o = Outcome::new();
    // (config, reference mean, random scheme)
    let rows = [
        ("burgers-particle.json", 0.01021, true),
        ("burgers-recursive.json", 0.01054, false),
        ("burgers-recursive-lloyd.json", 0.01029, false),
        ("burgers-hybrid-lloyd.json", 0.01013, true),
    ];
    let mut times = Vec::new();
    for (file, reference, random) in rows {
        let cfg = load(file);
        let out = run_config(&cfg, &options(cache)).expect(file);
        let s = out
            .summary
            .stat("sup_cdf_error")
            .copied()
            .expect("errors recorded");
        let t = out.summary.wall_time_per_step.map_or(f64::NAN, |t| t.mean);
        times.push((cfg.scheme.name(), t));
        let in_band = (0.005..=0.02).contains(&s.mean);
        let rel = (s.mean - reference) / reference;
        if random {
            let within = (s.mean - reference).abs() <= 3.0 * s.se;
            o.check(
                in_band && within,
                format!(
                    "{:<16} mean {:.5} se {:.5} ({} runs)  ref {reference:.5}  |diff| {:.2} se, {:+.1}%",
                    cfg.scheme.name(),
                    s.mean,
                    s.se,
                    s.n,
                    (s.mean - reference).abs() / s.se,
                    100.0 * rel
                ),
            );
        } else {
            o.check(
                in_band,
                format!(
                    "{:<16} error {:.5} (deterministic)  ref {reference:.5}  {:+.1}%",
                    cfg.scheme.name(),
                    s.mean,
                    100.0 * rel
                ),
            );
        }
    }
    let cfg = load("burgers-hybrid.json");
    let out = run_config(&cfg, &options(cache)).expect("hybrid");
    let s = out.summary.stat("sup_cdf_error").copied().unwrap();
    times.push((
        "hybrid",
        out.summary.wall_time_per_step.map_or(f64::NAN, |t| t.mean),
    ));
    o.check(
        (0.01..=0.03).contains(&s.mean),
        format!(
            "{:<16} mean {:.5} se {:.5}  required in [0.01, 0.03]",
            "hybrid", s.mean, s.se
        ),
    );
    let timing: Vec<String> = times
        .iter()
        .map(|(n, t)| format!("{n} {:.2} ms", 1e3 * t))
        .collect();
    o.note(format!("time per Euler step: {}", timing.join(", ")));
    o
}

fn c2_c7(cache: &Path) -> (Outcome, Outcome) {
    let reference = [0.04691, 0.03409, 0.02438, 0.01785, 0.01407, 0.01131];
    let cfg = load("burgers-particle-sweep.json");
    let out = convergence(&cfg, &options(cache)).expect("particle sweep");
    let mut o2 = Outcome::new();
    for (p, target) in out.points.iter().zip(reference) {
        let se = p.row.std_error / (p.row.reruns as f64).sqrt();
        o2.check(
            (p.row.mean_error - target).abs() <= 3.0 * se,
            format!(
                "N = {:>5}: mean {:.5} se {:.5} ({} runs)  ref {target:.5}  |diff| {:.2} se",
                p.row.sweep_value,
                p.row.mean_error,
                se,
                p.row.reruns,
                (p.row.mean_error - target).abs() / se
            ),
        );
    }
    o2.check(
        (out.slope + 0.285).abs() <= 0.05,
        format!("slope {:.4}  ref -0.285 +/- 0.05", out.slope),
    );
    o2.note(mixed_base_note(&out.points, out.slope));

    // W2 to the reference run, from the same reruns.
    let mut o7 = Outcome::new();
    let mut rms = Vec::new();
    for s in &out.summaries {
        let w = s.stat("wasserstein").expect("wasserstein recorded");
        // RMS from mean and unbiased std.
        let n = w.n as f64;
        let second = w.mean * w.mean + w.std * w.std * (n - 1.0) / n;
        rms.push(second.sqrt());
    }
    for (p, r) in out.points.iter().zip(&rms) {
        o7.note(format!("N = {:>5}: RMS W2 {r:.5}", p.row.sweep_value));
    }
    let monotone = rms.windows(2).all(|w| w[1] < w[0]);
    o7.check(monotone, "RMS W2 decreases with N".into());
    let xs: Vec<f64> = out
        .points
        .iter()
        .map(|p| p.row.sweep_value as f64)
        .collect();
    let slope = log2_slope(&xs, &rms);
    o7.check(
        slope <= -0.2,
        format!("log2 slope {slope:.4}  required <= -0.2"),
    );
    (o2, o7)
}

/// The slope of ln(error) against log2 of the sweep value, which is what the
/// published slopes correspond to numerically.
fn mixed_base_note(points: &[mvq::experiments::ConvergencePoint], slope: f64) -> String {
    let table: Vec<String> = points
        .iter()
        .map(|p| format!("{:.5}", p.row.mean_error))
        .collect();
    format!(
        "ln(error) vs log2 slope {:.4}; errors [{}]",
        slope * std::f64::consts::LN_2,
        table.join(", ")
    )
}

/// Least-squares slope of log2(y) against log2(x).
fn log2_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn c3(cache: &Path) -> Outcome {
    let reference = [0.07347, 0.04176, 0.02360, 0.01471, 0.01043, 0.00829];
    let cfg = load("burgers-recursive-sweep.json");
    let out = convergence(&cfg, &options(cache)).expect("quantizer sweep");
    let mut o = Outcome::new();
    for (p, target) in out.points.iter().zip(reference) {
        let rel = (p.row.mean_error - target) / target;
        o.check(
            rel.abs() <= 0.15,
            format!(
                "K = {:>4}: error {:.5}  ref {target:.5}  {:+.1}%",
                p.row.sweep_value,
                p.row.mean_error,
                100.0 * rel
            ),
        );
    }
    o.check(
        (out.slope + 0.436).abs() <= 0.05,
        format!("slope {:.4}  ref -0.436 +/- 0.05", out.slope),
    );
    o.note(mixed_base_note(&out.points, out.slope));
    o
}

fn c4(cache: &Path, full: bool) -> Outcome {
    let reruns = if full { 200 } else { 50 };
    let widen = 200.0 / reruns as f64;
    let mut o = Outcome::new();
    o.note(format!(
        "{reruns} reruns; mean tolerance x{:.2}, std tolerance {:.0}%",
        widen.sqrt(),
        50.0 * widen.powf(0.25)
    ));
    // (config, reference mean, mean tolerance, reference std)
    let rows = [
        ("fhn-moment-particle-300.json", 1.194, 0.02, 0.058),
        ("fhn-moment-particle-5000.json", 1.205, 0.01, 0.015),
        ("fhn-moment-hybrid.json", 1.192, 0.01, 0.015),
    ];
    for (file, mean, tol, std) in rows {
        let mut cfg = load(file);
        cfg.reruns = reruns;
        let out = run_config(&cfg, &options(cache)).expect(file);
        let s = out
            .summary
            .stat("second_moment")
            .copied()
            .expect("functional recorded");
        let mean_tol = tol * widen.sqrt();
        let std_tol = 0.5 * widen.powf(0.25);
        let label = format!(
            "{} N={}{}",
            cfg.scheme.name(),
            cfg.particles.unwrap_or(0),
            cfg.quantizer_size
                .map(|k| format!("/K={k}"))
                .unwrap_or_default()
        );
        o.check(
            (s.mean - mean).abs() <= mean_tol,
            format!(
                "{label:<24} mean {:.4}  ref {mean} +/- {mean_tol:.3}",
                s.mean
            ),
        );
        o.check(
            ((s.std - std) / std).abs() <= std_tol,
            format!(
                "{label:<24} std  {:.4}  ref {std} +/- {:.0}%",
                s.std,
                100.0 * std_tol
            ),
        );
        if !out.summary.failures.is_empty() {
            o.check(
                false,
                format!("{label}: {} failed runs", out.summary.failures.len()),
            );
        }
    }
    o
}

fn c5() -> Outcome {
    let mut o = Outcome::new();
    let model = BurgersModel::benchmark();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let seed = 20_250_101;
    let particles = simulate_particles(
        &model,
        &ParticleRunConfig::new(256, grid, seed),
        &mut NoObserver,
    )
    .unwrap();
    let cfg = HybridRunConfig {
        particles: 256,
        grid,
        quantizer: HybridQuantizer::PinnedToParticles,
        seed,
        stream: 0,
    };
    let hybrid = simulate_hybrid(&model, &cfg, &mut NoObserver).unwrap();
    let differing = particles
        .states()
        .iter()
        .zip(hybrid.particles.states())
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    o.check(
        differing == 0,
        format!("N = 256, M = 50: {differing} of 256 terminal states differ bitwise"),
    );
    o
}

fn c6() -> Outcome {
    let mut o = Outcome::new();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/gaussian_cdf.csv");
    let checks: [(&str, suite::Check); 6] = [
        (
            "transition rows and weights",
            suite::transition_rows_normalized(1000),
        ),
        ("Lloyd monotonicity", suite::lloyd_monotone(1000)),
        (
            "W_p quantile vs exact transport",
            suite::wasserstein_cross_oracle(100),
        ),
        (
            "frozen-measure order invariance",
            suite::frozen_measure_order_invariance(64),
        ),
        ("sigma_32 boundaries", suite::sigma32_boundaries()),
        (
            "gaussian_cdf vs 50-digit values",
            suite::gaussian_cdf_fixture(&fixture),
        ),
    ];
    for (name, r) in checks {
        match r {
            Ok(msg) => o.check(true, format!("{name}: {msg}")),
            Err(msg) => o.check(false, format!("{name}: {msg}")),
        }
    }
    o
}

fn main() {
    let full = std::env::var("MVQ_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let only: Option<Vec<String>> = std::env::var("MVQ_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_uppercase()).collect());
    let wanted = |c: &str| only.as_ref().is_none_or(|l| l.iter().any(|x| x == c));
    let cache = tempfile::tempdir().expect("temporary cache directory");
    let cache = cache.path();

    let titles = [
        ("C1", "Burgers schemes at N=10000 / K=500"),
        ("C2", "particle sup-CDF error against N"),
        ("C3", "recursive sup-CDF error against K"),
        ("C4", "FitzHugh-Nagumo second moment"),
        ("C5", "pinned hybrid equals particle method bitwise"),
        ("C6", "property suite"),
        ("C7", "W2 rate against a 10^6-particle reference"),
    ];
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut c7 = None;
    for (id, _) in titles {
        if !wanted(id) && !(id == "C2" && wanted("C7")) {
            continue;
        }
        let start = Instant::now();
        let outcome = match id {
            "C1" => c1(cache),
            "C2" => {
                let (o2, o7) = c2_c7(cache);
                c7 = Some((o7, start.elapsed().as_secs_f64()));
                o2
            }
            "C3" => c3(cache),
            "C4" => c4(cache, full),
            "C5" => c5(),
            "C6" => c6(),
            "C7" => match c7.take() {
                Some((o, t)) => {
                    results.push(("C7", o, t));
                    continue;
                }
                None => continue,
            },
            _ => unreachable!(),
        };
        if wanted(id) {
            results.push((id, outcome, start.elapsed().as_secs_f64()));
        }
    }

    let mut failed = 0;
    for (id, o, secs) in &results {
        let title = titles.iter().find(|t| t.0 == *id).unwrap().1;
        for line in &o.detail {
            println!("    {line}");
        }
        println!(
            "{} {id} {title} ({secs:.0} s)",
            if o.pass { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed{}",
        results.len() - failed,
        if full {
            ""
        } else {
            " (reduced FitzHugh-Nagumo mode)"
        }
    );
    let strict = std::env::var("MVQ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
