//! Executes a configuration: reruns in parallel, metrics, report files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mvq_core::measure::{DiscreteMeasure, MeasureView, ParticleEnsemble};
use mvq_core::metrics::{second_moment, sup_cdf_error_tabulated, wasserstein_1d, CdfGrid};
use mvq_core::model::MeanFieldModel;
use mvq_core::quantization::Quantizer;
use mvq_core::schemes::{
    simulate_hybrid, simulate_particles, simulate_recursive_q, HybridQuantizer, HybridRunConfig,
    LloydStart, NoObserver, ParticleRunConfig, QuantizerSource,
};
use mvq_core::{CoreError, TimeGrid};
use rayon::prelude::*;

use crate::config::{LloydStartConfig, MetricId, ModelConfig, RunConfig, SchemeId};
use crate::error::{config_error, is_numerical, CliError};
use crate::io::write_atomic;
use crate::report::{ErrorReport, RunFailure, Summary};
use crate::truecdf::cached_true_cdf;

/// Where results go and where shared tables are cached.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output root; nothing is written when `None`.
    pub out: Option<PathBuf>,
    /// Directory for the exact-CDF tables; defaults to `<out>/cache`.
    pub cache_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn to_dir(out: impl Into<PathBuf>) -> Self {
        Self {
            out: Some(out.into()),
            cache_dir: None,
        }
    }

    fn cache(&self) -> Option<PathBuf> {
        self.cache_dir
            .clone()
            .or_else(|| self.out.as_ref().map(|o| o.join("cache")))
    }
}

/// Inputs shared by all reruns of one configuration.
#[derive(Debug, Clone)]
pub struct Shared {
    pub grid: TimeGrid,
    pub cdf_grid: CdfGrid,
    /// Exact CDF on `cdf_grid` (Burgers only).
    pub true_cdf: Option<Vec<f64>>,
    /// Large particle run at `T` for the Wasserstein metric.
    pub reference: Option<ParticleEnsemble>,
    /// Quantizer of the grid-based schemes.
    pub fixed_quantizer: Option<Quantizer>,
}

impl Shared {
    pub fn prepare(cfg: &RunConfig, opts: &RunOptions) -> Result<Self, CliError> {
        let grid = TimeGrid::new(cfg.horizon, cfg.steps)
            .map_err(|e| config_error(format!("steps/horizon: {e}")))?;
        let g = cfg.cdf_grid;
        let cdf_grid = CdfGrid::uniform(g.lo, g.hi, g.points)
            .map_err(|e| config_error(format!("cdf_grid: {e}")))?;
        let metrics = cfg.metric_list();
        let true_cdf = match (&cfg.model, metrics.contains(&MetricId::SupCdf)) {
            (ModelConfig::Burgers { sigma2 }, true) => Some(cached_true_cdf(
                opts.cache().as_deref(),
                *sigma2,
                cfg.horizon,
                &cdf_grid,
            )?),
            _ => None,
        };
        let reference = if metrics.contains(&MetricId::Wasserstein) {
            let w = cfg.wasserstein.unwrap_or_default();
            let model = cfg.build_model()?;
            let rc = ParticleRunConfig::new(w.reference_particles, grid, w.reference_seed);
            Some(simulate_particles(model.as_ref(), &rc, &mut NoObserver)?)
        } else {
            None
        };
        let uses_fixed = match cfg.scheme {
            SchemeId::Particle => false,
            SchemeId::Recursive | SchemeId::RecursiveLloyd | SchemeId::Hybrid => true,
            SchemeId::HybridLloyd => cfg.lloyd_start == LloydStartConfig::Grid,
        };
        let fixed_quantizer = if uses_fixed {
            Some(cfg.fixed_quantizer()?)
        } else {
            None
        };
        if let Some(x) = &fixed_quantizer {
            if x.dim() != cfg.model_dim() {
                return Err(config_error(
                    "quantizer_file: dimension differs from the model",
                ));
            }
        }
        Ok(Self {
            grid,
            cdf_grid,
            true_cdf,
            reference,
            fixed_quantizer,
        })
    }
}

/// Terminal measures of one run and the scheme's counters.
struct SchemeOutput {
    measure: TerminalLaw,
    /// Hybrid only: the particle cloud behind the quantized measure.
    particles: Option<ParticleEnsemble>,
    diagnostics: BTreeMap<String, u64>,
}

enum TerminalLaw {
    Particles(ParticleEnsemble),
    Discrete(DiscreteMeasure),
}

impl TerminalLaw {
    fn view(&self) -> MeasureView<'_> {
        match self {
            Self::Particles(p) => p.view(),
            Self::Discrete(m) => m.view(),
        }
    }
}

/// Terminal law of one scheme run plus its particles, when it has any.
#[derive(Debug, Clone)]
pub struct Terminal {
    pub measure: DiscreteMeasure,
    pub particles: Option<ParticleEnsemble>,
}

fn execute(
    cfg: &RunConfig,
    shared: &Shared,
    model: &dyn MeanFieldModel,
    seed: u64,
) -> Result<SchemeOutput, CoreError> {
    let grid = &shared.grid;
    let fixed = || {
        shared
            .fixed_quantizer
            .clone()
            .expect("prepared for this scheme")
    };
    let mut diagnostics = BTreeMap::new();
    match cfg.scheme {
        SchemeId::Particle => {
            let n = cfg.particles.expect("validated");
            let ens = simulate_particles(
                model,
                &ParticleRunConfig::new(n, *grid, seed),
                &mut NoObserver,
            )?;
            Ok(SchemeOutput {
                measure: TerminalLaw::Particles(ens),
                particles: None,
                diagnostics,
            })
        }
        SchemeId::Recursive | SchemeId::RecursiveLloyd => {
            let start = match cfg.lloyd_start {
                LloydStartConfig::Previous => LloydStart::Previous,
                LloydStartConfig::Grid => LloydStart::Source,
            };
            let source = QuantizerSource::Constant(fixed());
            let run = simulate_recursive_q(
                model,
                grid,
                &source,
                cfg.lloyd_iters,
                start,
                &mut NoObserver,
            )?;
            let d = &run.diagnostics;
            diagnostics.insert("renormalized_rows".into(), d.renormalized_rows as u64);
            diagnostics.insert("renormalized_weights".into(), d.renormalized_weights as u64);
            diagnostics.insert("degenerate_sources".into(), d.degenerate_sources as u64);
            diagnostics.insert("boundary_hits".into(), d.boundary_hits as u64);
            diagnostics.insert("lloyd_empty_cells".into(), d.lloyd.empty_cells as u64);
            diagnostics.insert("lloyd_collisions".into(), d.lloyd.collisions as u64);
            Ok(SchemeOutput {
                measure: TerminalLaw::Discrete(run.terminal().measure()),
                particles: None,
                diagnostics,
            })
        }
        SchemeId::Hybrid | SchemeId::HybridLloyd => {
            let quantizer = match (cfg.scheme, cfg.lloyd_start) {
                (SchemeId::Hybrid, _) => HybridQuantizer::Fixed(fixed()),
                (_, LloydStartConfig::Grid) => HybridQuantizer::LloydFrom {
                    start: fixed(),
                    iters: cfg.lloyd_iters,
                },
                (_, LloydStartConfig::Previous) => HybridQuantizer::Lloyd {
                    k: cfg.quantizer_size.expect("validated"),
                    iters: cfg.lloyd_iters,
                },
            };
            let hc = HybridRunConfig {
                particles: cfg.particles.expect("validated"),
                grid: *grid,
                quantizer,
                seed,
                stream: 0,
            };
            let run = simulate_hybrid(model, &hc, &mut NoObserver)?;
            diagnostics.insert("lloyd_empty_cells".into(), run.lloyd.empty_cells as u64);
            diagnostics.insert("lloyd_collisions".into(), run.lloyd.collisions as u64);
            diagnostics.insert("degenerate_seeds".into(), run.degenerate_seeds as u64);
            Ok(SchemeOutput {
                measure: TerminalLaw::Discrete(run.measure),
                particles: Some(run.particles),
                diagnostics,
            })
        }
    }
}

/// Runs one scheme once and returns its terminal law; used by the density
/// experiment, which needs the measures rather than the metrics.
pub fn run_terminal(cfg: &RunConfig, shared: &Shared, seed: u64) -> Result<Terminal, CliError> {
    let model = cfg.build_model()?;
    let out = execute(cfg, shared, model.as_ref(), seed)?;
    let measure = match out.measure {
        TerminalLaw::Discrete(m) => m,
        TerminalLaw::Particles(p) => {
            let n = p.len();
            DiscreteMeasure::new(p.dim(), p.into_states(), vec![1.0 / n as f64; n])?
        }
    };
    Ok(Terminal {
        measure,
        particles: out.particles,
    })
}

/// One rerun: seed `cfg.seed + rerun`.
pub fn run_single(
    cfg: &RunConfig,
    shared: &Shared,
    hash: &str,
    rerun: usize,
) -> Result<ErrorReport, CliError> {
    let model = cfg.build_model()?;
    let seed = cfg.seed.wrapping_add(rerun as u64);
    let start = Instant::now();
    let out = execute(cfg, shared, model.as_ref(), seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let wall_time_per_step = if cfg.steps > 0 {
        elapsed / cfg.steps as f64
    } else {
        0.0
    };

    let mut report = ErrorReport {
        scheme: cfg.scheme.name().into(),
        config_hash: hash.into(),
        seed,
        rerun,
        sup_cdf_error: None,
        wasserstein: None,
        functional_values: BTreeMap::new(),
        wall_time_per_step,
        diagnostics: out.diagnostics,
    };
    let view = out.measure.view();
    for metric in cfg.metric_list() {
        match metric {
            MetricId::SupCdf => {
                let truth = shared.true_cdf.as_ref().expect("prepared");
                report.sup_cdf_error =
                    Some(sup_cdf_error_tabulated(view, truth, &shared.cdf_grid)?);
                if let Some(p) = &out.particles {
                    let e = sup_cdf_error_tabulated(p.view(), truth, &shared.cdf_grid)?;
                    report
                        .functional_values
                        .insert("sup_cdf_error_particles".into(), e);
                }
            }
            MetricId::Wasserstein => {
                let reference = shared.reference.as_ref().expect("prepared");
                let order = cfg.wasserstein.unwrap_or_default().order;
                report.wasserstein = Some(wasserstein_1d(view, reference.view(), order));
            }
            MetricId::SecondMoment => {
                report
                    .functional_values
                    .insert("second_moment".into(), second_moment(view));
                if let Some(p) = &out.particles {
                    report
                        .functional_values
                        .insert("second_moment_particles".into(), second_moment(p.view()));
                }
            }
        }
    }
    if !report.all_finite() {
        return Err(CoreError::NonFiniteOutput {
            what: "metric",
            t: cfg.horizon,
        }
        .into());
    }
    Ok(report)
}

/// Everything a `run` produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub hash: String,
    pub dir: Option<PathBuf>,
    pub reports: Vec<ErrorReport>,
    pub summary: Summary,
}

/// Runs all reruns of `cfg` (concurrently on the current rayon pool) and
/// writes `config.json`, `run-<i>.json` and `summary.json` under
/// `<out>/<config-hash>/`.
///
/// A numerical failure in one rerun is recorded in the summary and does not
/// stop the others; configuration problems abort immediately.
pub fn run_config(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let shared = Shared::prepare(cfg, opts)?;
    run_prepared(cfg, &shared, opts)
}

pub fn run_prepared(
    cfg: &RunConfig,
    shared: &Shared,
    opts: &RunOptions,
) -> Result<RunOutput, CliError> {
    let hash = cfg.hash();
    let results: Vec<Result<ErrorReport, CliError>> = (0..cfg.reruns)
        .into_par_iter()
        .map(|i| run_single(cfg, shared, &hash, i))
        .collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rep) => reports.push(rep),
            Err(CliError::Numerical(e)) if is_numerical(&e) => failures.push(RunFailure {
                rerun: i,
                seed: cfg.seed.wrapping_add(i as u64),
                error: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let summary = Summary::from_reports(cfg.scheme.name(), &hash, &reports, failures);
    let dir = match &opts.out {
        Some(out) => {
            let dir = out.join(&hash);
            write_json(&dir.join("config.json"), cfg)?;
            for r in &reports {
                write_json(&dir.join(format!("run-{}.json", r.rerun)), r)?;
            }
            write_json(&dir.join("summary.json"), &summary)?;
            Some(dir)
        }
        None => None,
    };
    Ok(RunOutput {
        hash,
        dir,
        reports,
        summary,
    })
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Format(format!("{}: {}: {}", path.display(), e.path(), e.inner())))
}
