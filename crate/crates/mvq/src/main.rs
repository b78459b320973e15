use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvq::config::load_config;
use mvq::error::{config_error, CliError};
use mvq::experiments::{convergence, fhn, FhnOutput};
use mvq::io::{read_measure, read_quantizer, write_quantizer};
use mvq::runner::{run_config, write_json, RunOptions};
use mvq::RunConfig;
use mvq_core::measure::ParticleEnsemble;
use mvq_core::metrics::{wasserstein_1d, wasserstein_discrete_exact};
use mvq_core::quantization::{
    lloyd_optimize, GaussianMixture1D, LloydTarget, Quantizer, DEFAULT_LLOYD_MAX_ITERS,
    DEFAULT_LLOYD_TOL,
};
use mvq_core::schemes::seed_quantizer;

/// Simulation of McKean-Vlasov SDEs by particles, recursive quantization and
/// the hybrid particle-quantization scheme.
#[derive(Debug, Parser)]
#[command(name = "mvq", version)]
struct Cli {
    /// Worker threads for concurrent reruns (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a configuration and write per-run reports and a summary.
    Run(RunArgs),
    /// Sweep N or K and fit the log-log error slope.
    Convergence(RunArgs),
    /// FitzHugh-Nagumo density or functional outputs.
    Fhn(RunArgs),
    /// Optimize a quantizer with Lloyd's algorithm.
    Quantize(QuantizeArgs),
    /// Wasserstein distance between two measure CSVs.
    Wasserstein(WassersteinArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Base seed; rerun i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reruns: Option<usize>,
    /// Output root (results land in <out>/<config-hash>/).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QuantizeArgs {
    /// Target measure CSV (coordinates then weight).
    #[arg(long, conflicts_with = "normal")]
    measure: Option<PathBuf>,
    /// One-dimensional normal target given as MEAN,STD.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    normal: Option<Vec<f64>>,
    /// Number of points.
    #[arg(long, short)]
    k: Option<usize>,
    /// Starting quantizer CSV; otherwise seeded from the target.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LLOYD_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_LLOYD_TOL)]
    tol: f64,
    /// Where to write the quantizer CSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct WassersteinArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long, short, default_value_t = 2.0)]
    order: f64,
}

fn load_with_overrides(args: &RunArgs) -> Result<(RunConfig, RunOptions), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reruns {
        cfg.reruns = r;
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok((cfg, RunOptions::to_dir(out)))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

/// Numerical failures in some reruns still produce output, but the exit code says so.
fn failures_status(n: usize) -> Result<ExitCode, CliError> {
    if n > 0 {
        eprintln!("{n} run(s) failed numerically; see summary.json");
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn quantize(args: &QuantizeArgs) -> Result<ExitCode, CliError> {
    let init = args.init.as_deref().map(read_quantizer).transpose()?;
    let outcome = match (&args.measure, &args.normal) {
        (Some(path), None) => {
            let mu = read_measure(path)?;
            let x0 = match init {
                Some(x) => x,
                None => {
                    let k = args
                        .k
                        .ok_or_else(|| config_error("--k or --init is required"))?;
                    let ens = ParticleEnsemble::new(mu.dim(), mu.atoms().to_vec(), 0)?;
                    seed_quantizer(&ens, k)?.0
                }
            };
            lloyd_optimize(
                LloydTarget::Empirical(mu.view()),
                &x0,
                args.max_iters,
                args.tol,
            )?
        }
        (None, Some(ms)) => {
            let [mean, std] = ms[..] else {
                return Err(config_error("--normal takes MEAN,STD"));
            };
            let mix = GaussianMixture1D::normal(mean, std)
                .map_err(|e| config_error(format!("--normal: {e}")))?;
            let x0 = match init {
                Some(x) => x,
                None => {
                    let k = args
                        .k
                        .ok_or_else(|| config_error("--k or --init is required"))?;
                    let half = 3.0 * std;
                    Quantizer::uniform_grid(mean - half, mean + half, k.max(2))?
                }
            };
            lloyd_optimize(LloydTarget::Mixture(&mix), &x0, args.max_iters, args.tol)?
        }
        _ => return Err(config_error("give exactly one of --measure and --normal")),
    };
    write_quantizer(&args.output, &outcome.quantizer)?;
    print_json(&serde_json::json!({
        "points": outcome.quantizer.len(),
        "iterations": outcome.iterations,
        "quantization_error": outcome.final_error,
        "empty_cells": outcome.stats.empty_cells,
        "collisions": outcome.stats.collisions,
    }));
    Ok(ExitCode::SUCCESS)
}

fn wasserstein(args: &WassersteinArgs) -> Result<ExitCode, CliError> {
    let mu = read_measure(&args.first)?;
    let nu = read_measure(&args.second)?;
    if mu.dim() != nu.dim() {
        return Err(CliError::Format(
            "the two measures have different dimensions".into(),
        ));
    }
    if args.order.is_nan() || args.order < 1.0 {
        return Err(config_error("--order must be at least 1"));
    }
    let w = if mu.dim() == 1 {
        wasserstein_1d(mu.view(), nu.view(), args.order)
    } else {
        wasserstein_discrete_exact(mu.view(), nu.view(), args.order)?
    };
    println!("{w:.17e}");
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Run(a) => {
            let (cfg, opts) = load_with_overrides(a)?;
            let out = run_config(&cfg, &opts)?;
            print_json(&out.summary);
            if let Some(d) = &out.dir {
                eprintln!("results in {}", d.display());
            }
            failures_status(out.summary.failures.len())
        }
        Command::Convergence(a) => {
            let (cfg, opts) = load_with_overrides(a)?;
            let out = convergence(&cfg, &opts)?;
            print_json(&out);
            if let Some(d) = &out.dir {
                eprintln!("results in {}", d.display());
            }
            failures_status(out.summaries.iter().map(|s| s.failures.len()).sum())
        }
        Command::Fhn(a) => {
            let (cfg, opts) = load_with_overrides(a)?;
            match fhn(&cfg, &opts)? {
                FhnOutput::Density(d) => {
                    print_json(&serde_json::json!({
                        "bandwidth": d.bandwidth,
                        "kde_mass": d.kde_mass,
                        "cells": d.cells.as_ref().map(Vec::len),
                    }));
                    if let Some(dir) = &d.dir {
                        write_json(
                            &dir.join("density.json"),
                            &serde_json::json!({"bandwidth": d.bandwidth, "kde_mass": d.kde_mass}),
                        )?;
                        eprintln!("results in {}", dir.display());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                FhnOutput::Functional(s) => {
                    print_json(&s);
                    failures_status(s.failures.len())
                }
            }
        }
        Command::Quantize(a) => quantize(a),
        Command::Wasserstein(a) => wasserstein(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("mvq: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mvq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
