//! Convergence sweeps and the FitzHugh-Nagumo outputs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mvq_core::measure::{DiscreteMeasure, MeasureView};
use mvq_core::metrics::{
    fit_log2_slope, kde_density_2d, voronoi_cell_density_2d, BoundingBox, VoronoiCell,
};
use serde::{Deserialize, Serialize};

use crate::config::{FhnMode, MetricId, RunConfig, SchemeId};
use crate::error::{config_error, CliError};
use crate::io::{
    write_convergence, write_density, write_measure, write_scatter, write_voronoi_cells,
    ConvergenceRow,
};
use crate::report::Summary;
use crate::runner::{run_prepared, run_terminal, write_json, RunOptions, Shared};

/// Summary key of the error a sweep is measured by.
pub fn primary_metric_key(cfg: &RunConfig) -> &'static str {
    match cfg.metric_list()[0] {
        MetricId::SupCdf => "sup_cdf_error",
        MetricId::Wasserstein => "wasserstein",
        MetricId::SecondMoment => "second_moment",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    #[serde(flatten)]
    pub row: ConvergenceRow,
    /// `sqrt(mean(e^2))` over the reruns.
    pub rms_error: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOutput {
    pub metric: String,
    pub parameter: String,
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `log2(mean error)` against `log2(value)`.
    pub slope: f64,
    pub intercept: f64,
    /// Same fit for the RMS error.
    pub rms_slope: f64,
    #[serde(skip)]
    pub dir: Option<PathBuf>,
    #[serde(skip)]
    pub summaries: Vec<Summary>,
}

/// Runs the configuration at every sweep value and fits the log-log slope.
///
/// Each point is a regular run with its own output directory; the table goes
/// to `<out>/<hash>/convergence.csv` with the fit in `convergence.json`.
pub fn convergence(cfg: &RunConfig, opts: &RunOptions) -> Result<ConvergenceOutput, CliError> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config_error("sweep: required by convergence"))?;
    let key = primary_metric_key(cfg);
    let mut base: Option<Shared> = None;
    let mut points = Vec::new();
    let mut summaries = Vec::new();
    for &v in &sweep.values {
        let point_cfg = cfg.at_sweep_value(v);
        point_cfg.validate()?;
        let shared = match &base {
            // The time grid, CDF table and reference do not depend on N or K.
            Some(b) => Shared {
                fixed_quantizer: if b.fixed_quantizer.is_some() {
                    Some(point_cfg.fixed_quantizer()?)
                } else {
                    None
                },
                ..b.clone()
            },
            None => Shared::prepare(&point_cfg, opts)?,
        };
        let out = run_prepared(&point_cfg, &shared, opts)?;
        base.get_or_insert(shared);
        let errors: Vec<f64> = out
            .reports
            .iter()
            .filter_map(|r| r.values().get(key).copied())
            .collect();
        let stat = out
            .summary
            .stat(key)
            .ok_or_else(|| CliError::Format(format!("no successful run at sweep value {v}")))?;
        let rms = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
        points.push(ConvergencePoint {
            row: ConvergenceRow {
                sweep_value: v,
                mean_error: stat.mean,
                std_error: stat.std,
                reruns: stat.n,
            },
            rms_error: rms,
            config_hash: out.hash,
        });
        summaries.push(out.summary);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.row.sweep_value as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.row.mean_error).collect();
    let rms: Vec<f64> = points.iter().map(|p| p.rms_error).collect();
    let (slope, intercept) = fit_log2_slope(&xs, &ys)?;
    let (rms_slope, _) = fit_log2_slope(&xs, &rms)?;
    let mut output = ConvergenceOutput {
        metric: key.into(),
        parameter: format!("{:?}", sweep.parameter).to_lowercase(),
        points,
        slope,
        intercept,
        rms_slope,
        dir: None,
        summaries,
    };
    if let Some(out) = &opts.out {
        let dir = out.join(cfg.hash());
        write_json(&dir.join("config.json"), cfg)?;
        let rows: Vec<ConvergenceRow> = output.points.iter().map(|p| p.row).collect();
        write_convergence(&dir.join("convergence.csv"), &rows)?;
        write_json(&dir.join("convergence.json"), &output)?;
        output.dir = Some(dir);
    }
    Ok(output)
}

/// The `(x1, x2)` marginal of a measure, coinciding atoms merged.
pub fn planar_marginal(mu: MeasureView<'_>) -> Result<DiscreteMeasure, CliError> {
    if mu.dim() < 2 {
        return Err(config_error("planar outputs need at least two coordinates"));
    }
    let mut merged: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for (x, w) in mu.iter() {
        // Adding 0.0 maps -0.0 to +0.0 so both land in the same cell.
        let key = ((x[0] + 0.0).to_bits(), (x[1] + 0.0).to_bits());
        *merged.entry(key).or_insert(0.0) += w;
    }
    let mut atoms = Vec::with_capacity(2 * merged.len());
    let mut weights = Vec::with_capacity(merged.len());
    for ((a, b), w) in merged {
        atoms.extend([f64::from_bits(a), f64::from_bits(b)]);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(DiscreteMeasure::new(2, atoms, weights)?)
}

#[derive(Debug, Clone)]
pub struct DensityOutput {
    pub dir: Option<PathBuf>,
    pub bandwidth: f64,
    /// Grid quadrature of the KDE surface.
    pub kde_mass: f64,
    /// Hybrid runs only.
    pub cells: Option<Vec<VoronoiCell>>,
}

/// One run, then the `(x1, x2)` scatter, a Gaussian KDE of the particles and,
/// for the hybrid schemes, the Voronoi-cell density of the quantized law.
pub fn fhn_density(cfg: &RunConfig, opts: &RunOptions) -> Result<DensityOutput, CliError> {
    cfg.validate()?;
    let f = cfg
        .fhn
        .clone()
        .ok_or_else(|| config_error("fhn: required by the fhn command"))?;
    let shared = Shared::prepare(cfg, opts)?;
    let terminal = run_terminal(cfg, &shared, cfg.seed)?;
    let cloud = match &terminal.particles {
        Some(p) => planar_marginal(p.view())?,
        None => planar_marginal(terminal.measure.view())?,
    };
    let b = f.kde_bandwidth;
    let bbox = BoundingBox::around(cloud.view(), 5.0 * b);
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        let n = f.kde_points;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs = axis(bbox.x0, bbox.x1);
    let ys = axis(bbox.y0, bbox.y1);
    let surface = kde_density_2d(cloud.view(), Some(b), &xs, &ys)?;
    let cell = (xs[1] - xs[0]) * (ys[1] - ys[0]);
    let kde_mass = surface.values.iter().sum::<f64>() * cell;
    let hybrid = matches!(cfg.scheme, SchemeId::Hybrid | SchemeId::HybridLloyd);
    let cells = if hybrid {
        let planar = planar_marginal(terminal.measure.view())?;
        let cbox = BoundingBox::around(
            planar.view(),
            0.1 * (bbox.x1 - bbox.x0).max(bbox.y1 - bbox.y0),
        );
        Some(voronoi_cell_density_2d(&planar, cbox)?)
    } else {
        None
    };
    let mut dir = None;
    if let Some(out) = &opts.out {
        let d = out.join(cfg.hash());
        write_json(&d.join("config.json"), cfg)?;
        write_scatter(&d.join("scatter.csv"), cloud.view())?;
        write_density(&d.join("kde.csv"), &surface)?;
        write_measure(&d.join("measure.csv"), terminal.measure.view())?;
        if let Some(c) = &cells {
            write_voronoi_cells(&d.join("voronoi_cells.csv"), c)?;
        }
        dir = Some(d);
    }
    Ok(DensityOutput {
        dir,
        bandwidth: b,
        kde_mass,
        cells,
    })
}

/// Either FHN mode; the functional mode is a plain run of the second moment.
pub fn fhn(cfg: &RunConfig, opts: &RunOptions) -> Result<FhnOutput, CliError> {
    let mode = cfg
        .fhn
        .as_ref()
        .map(|f| f.mode)
        .ok_or_else(|| config_error("fhn: required by the fhn command"))?;
    match mode {
        FhnMode::Density => fhn_density(cfg, opts).map(FhnOutput::Density),
        FhnMode::Functional => {
            if !cfg.metric_list().contains(&MetricId::SecondMoment) {
                return Err(config_error(
                    "metrics: the functional mode reports second_moment",
                ));
            }
            crate::runner::run_config(cfg, opts).map(|o| FhnOutput::Functional(Box::new(o.summary)))
        }
    }
}

#[derive(Debug, Clone)]
pub enum FhnOutput {
    Density(DensityOutput),
    Functional(Box<Summary>),
}
