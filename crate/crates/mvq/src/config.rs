//! Run configuration files: strict JSON, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mvq_core::model::{InitialLaw, MeanFieldModel};
use mvq_core::models::{toy, BurgersModel, FhnModel, FhnParams};
use mvq_core::quantization::Quantizer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_error, CliError};

/// A complete run description as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub scheme: SchemeId,
    /// Particle count `N` (particle and hybrid schemes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    /// Quantization level `K` (recursive and hybrid schemes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantizer_size: Option<usize>,
    pub steps: usize,
    pub horizon: f64,
    #[serde(default)]
    pub lloyd_iters: usize,
    #[serde(default)]
    pub lloyd_start: LloydStartConfig,
    /// Interval of the uniform quantizer used by the grid-based schemes.
    #[serde(default)]
    pub quantizer_grid: Interval,
    /// Fixed quantizer read from CSV instead of the uniform grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantizer_file: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub reruns: usize,
    /// Defaults to `sup_cdf` for Burgers and `second_moment` otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<MetricId>,
    #[serde(default)]
    pub cdf_grid: CdfGridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wasserstein: Option<WassersteinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fhn: Option<FhnRunConfig>,
    /// Output root; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[allow(clippy::large_enum_variant)] // parsed once per run
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Burgers {
        #[serde(default = "burgers_sigma2")]
        sigma2: f64,
    },
    Fhn {
        #[serde(default)]
        params: FhnOverrides,
    },
    Ou {
        #[serde(default)]
        initial: InitialLawConfig,
    },
    Brownian {
        sigma: f64,
        #[serde(default)]
        initial: InitialLawConfig,
    },
    ConstantDrift {
        drift: f64,
        #[serde(default)]
        initial: InitialLawConfig,
    },
    Zero {
        #[serde(default)]
        initial: InitialLawConfig,
    },
}

fn burgers_sigma2() -> f64 {
    mvq_core::models::BURGERS_SIGMA2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLawConfig {
    PointMass(Vec<f64>),
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
}

impl Default for InitialLawConfig {
    fn default() -> Self {
        Self::PointMass(vec![0.0])
    }
}

impl InitialLawConfig {
    fn to_law(&self) -> InitialLaw {
        match self {
            Self::PointMass(x) => InitialLaw::PointMass(x.clone()),
            Self::Gaussian { mean, variance } => InitialLaw::DiagonalGaussian {
                mean: mean.clone(),
                variance: variance.clone(),
            },
        }
    }
}

/// Overrides of the FitzHugh-Nagumo defaults; absent fields keep them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhnOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_ext: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_ext: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_rev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_y0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_lambda: Option<f64>,
}

impl FhnOverrides {
    pub fn apply(&self, mut p: FhnParams) -> FhnParams {
        let pairs: [(&Option<f64>, &mut f64); 21] = [
            (&self.v0, &mut p.v0),
            (&self.sigma_v0, &mut p.sigma_v0),
            (&self.a, &mut p.a),
            (&self.b, &mut p.b),
            (&self.c, &mut p.c),
            (&self.i_ext, &mut p.i_ext),
            (&self.sigma_ext, &mut p.sigma_ext),
            (&self.omega0, &mut p.omega0),
            (&self.sigma_omega0, &mut p.sigma_omega0),
            (&self.v_rev, &mut p.v_rev),
            (&self.a_r, &mut p.a_r),
            (&self.a_d, &mut p.a_d),
            (&self.t_max, &mut p.t_max),
            (&self.lambda, &mut p.lambda),
            (&self.y0, &mut p.y0),
            (&self.sigma_y0, &mut p.sigma_y0),
            (&self.j, &mut p.j),
            (&self.sigma_j, &mut p.sigma_j),
            (&self.v_t, &mut p.v_t),
            (&self.gamma, &mut p.gamma),
            (&self.big_lambda, &mut p.big_lambda),
        ];
        for (src, dst) in pairs {
            if let Some(v) = src {
                *dst = *v;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    Particle,
    Recursive,
    RecursiveLloyd,
    Hybrid,
    HybridLloyd,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Particle => "particle",
            Self::Recursive => "recursive",
            Self::RecursiveLloyd => "recursive-lloyd",
            Self::Hybrid => "hybrid",
            Self::HybridLloyd => "hybrid-lloyd",
        }
    }

    pub fn is_random(self) -> bool {
        !matches!(self, Self::Recursive | Self::RecursiveLloyd)
    }
}

/// Starting point of the per-step Lloyd iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LloydStartConfig {
    /// The previous step's quantizer; the hybrid seeds step 0 from sample quantiles.
    #[default]
    Previous,
    /// The fixed quantizer (uniform grid or `quantizer_file`) at every step.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Interval {
    fn default() -> Self {
        Self { lo: -2.5, hi: 3.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdfGridConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for CdfGridConfig {
    fn default() -> Self {
        use mvq_core::metrics::CdfGrid;
        Self {
            lo: CdfGrid::DEFAULT_LO,
            hi: CdfGrid::DEFAULT_HI,
            points: CdfGrid::DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    /// Sup-distance to the exact Burgers CDF on the CDF grid.
    SupCdf,
    /// `W_p` to a large reference particle run (one-dimensional models).
    Wasserstein,
    /// `int |x|^2 mu(dx)`.
    SecondMoment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WassersteinConfig {
    #[serde(default = "two")]
    pub order: f64,
    #[serde(default = "reference_particles")]
    pub reference_particles: usize,
    #[serde(default = "reference_seed")]
    pub reference_seed: u64,
}

fn two() -> f64 {
    2.0
}

fn reference_particles() -> usize {
    1_000_000
}

fn reference_seed() -> u64 {
    0x5_eed0_f2ef
}

impl Default for WassersteinConfig {
    fn default() -> Self {
        Self {
            order: two(),
            reference_particles: reference_particles(),
            reference_seed: reference_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Particles,
    QuantizerSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhnRunConfig {
    pub mode: FhnMode,
    #[serde(default = "fhn_bandwidth")]
    pub kde_bandwidth: f64,
    /// Evaluation points per axis of the density surface.
    #[serde(default = "kde_points")]
    pub kde_points: usize,
}

fn fhn_bandwidth() -> f64 {
    0.241
}

fn kde_points() -> usize {
    101
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FhnMode {
    /// One run; scatter, KDE and Voronoi-cell density CSVs.
    Density,
    /// Reruns reporting the second-moment functional.
    Functional,
}

/// Parses a configuration, reporting the JSON path of the first offending field.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| config_error(format!("{}: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(file) = &cfg.quantizer_file {
        if file.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.quantizer_file = Some(base.join(file));
        }
    }
    Ok(cfg)
}

impl RunConfig {
    /// Metrics to evaluate, with the model-dependent default.
    pub fn metric_list(&self) -> Vec<MetricId> {
        if !self.metrics.is_empty() {
            let mut m = self.metrics.clone();
            m.sort();
            m.dedup();
            return m;
        }
        match self.model {
            ModelConfig::Burgers { .. } => vec![MetricId::SupCdf],
            _ => vec![MetricId::SecondMoment],
        }
    }

    pub fn model_dim(&self) -> usize {
        match &self.model {
            ModelConfig::Burgers { .. } => 1,
            ModelConfig::Fhn { .. } => 3,
            ModelConfig::Ou { initial }
            | ModelConfig::Brownian { initial, .. }
            | ModelConfig::ConstantDrift { initial, .. }
            | ModelConfig::Zero { initial } => match initial {
                InitialLawConfig::PointMass(x) => x.len(),
                InitialLawConfig::Gaussian { mean, .. } => mean.len(),
            },
        }
    }

    /// Checks field combinations that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |path: &str, msg: &str| Err(config_error(format!("{path}: {msg}")));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return fail("horizon", "must be positive and finite");
        }
        if self.reruns == 0 {
            return fail("reruns", "must be at least 1");
        }
        let needs_particles =
            !matches!(self.scheme, SchemeId::Recursive | SchemeId::RecursiveLloyd);
        let needs_k = self.scheme != SchemeId::Particle;
        let sweeps = |p: SweepParameter| self.sweep.as_ref().is_some_and(|s| s.parameter == p);
        if needs_particles && self.particles.is_none() && !sweeps(SweepParameter::Particles) {
            return fail("particles", "required by this scheme");
        }
        if self.particles == Some(0) {
            return fail("particles", "must be at least 1");
        }
        let k_from_file = self.quantizer_file.is_some() && self.scheme == SchemeId::Hybrid;
        if needs_k
            && self.quantizer_size.is_none()
            && !k_from_file
            && !sweeps(SweepParameter::QuantizerSize)
        {
            return fail("quantizer_size", "required by this scheme");
        }
        if self.quantizer_size == Some(0) {
            return fail("quantizer_size", "must be at least 1");
        }
        let lloyd = matches!(
            self.scheme,
            SchemeId::RecursiveLloyd | SchemeId::HybridLloyd
        );
        if lloyd && self.lloyd_iters == 0 {
            return fail("lloyd_iters", "Lloyd schemes need at least one iteration");
        }
        if !lloyd && self.lloyd_iters != 0 {
            return fail("lloyd_iters", "only the Lloyd schemes iterate");
        }
        if !(self.quantizer_grid.lo < self.quantizer_grid.hi) {
            return fail("quantizer_grid", "lo must be below hi");
        }
        let d = self.model_dim();
        let recursive = matches!(self.scheme, SchemeId::Recursive | SchemeId::RecursiveLloyd);
        if recursive {
            let vlasov = !matches!(self.model, ModelConfig::Fhn { .. });
            if d != 1 || !vlasov {
                return fail(
                    "scheme",
                    "recursive quantization needs a one-dimensional Vlasov model",
                );
            }
        }
        let grid_based =
            self.scheme == SchemeId::Hybrid || self.lloyd_start == LloydStartConfig::Grid;
        if grid_based && d != 1 && self.quantizer_file.is_none() {
            return fail("quantizer_file", "required for fixed quantizers when d > 1");
        }
        let metrics = self.metric_list();
        let burgers = matches!(self.model, ModelConfig::Burgers { .. });
        if metrics.contains(&MetricId::SupCdf) && !burgers {
            return fail(
                "metrics",
                "sup_cdf needs the Burgers model and its exact CDF",
            );
        }
        if metrics.contains(&MetricId::Wasserstein) && d != 1 {
            return fail(
                "metrics",
                "wasserstein is available for one-dimensional models",
            );
        }
        if let Some(w) = &self.wasserstein {
            if !(w.order >= 1.0 && w.order.is_finite()) || w.reference_particles == 0 {
                return fail(
                    "wasserstein",
                    "needs order >= 1 and a positive reference size",
                );
            }
        }
        let g = &self.cdf_grid;
        if g.points < 2 || !(g.lo < g.hi) {
            return fail("cdf_grid", "needs at least two points and lo < hi");
        }
        if let Some(s) = &self.sweep {
            if s.values.len() < 3 {
                return fail(
                    "sweep.values",
                    "a convergence sweep needs at least three values",
                );
            }
            if s.values.contains(&0) {
                return fail("sweep.values", "values must be positive");
            }
            let applies = match s.parameter {
                SweepParameter::Particles => needs_particles,
                SweepParameter::QuantizerSize => needs_k,
            };
            if !applies {
                return fail("sweep.parameter", "the scheme does not use this parameter");
            }
        }
        if let Some(f) = &self.fhn {
            if !matches!(self.model, ModelConfig::Fhn { .. }) {
                return fail("fhn", "only valid with the fhn model");
            }
            if !(f.kde_bandwidth > 0.0) || f.kde_points < 2 {
                return fail(
                    "fhn",
                    "needs a positive bandwidth and at least two grid points",
                );
            }
        }
        if let ModelConfig::Fhn { params } = &self.model {
            params
                .apply(FhnParams::default())
                .validate()
                .map_err(|e| config_error(format!("model.params: {e}")))?;
        }
        Ok(())
    }

    /// Builds the model. Errors here are configuration errors.
    pub fn build_model(&self) -> Result<Box<dyn MeanFieldModel>, CliError> {
        let wrap = |e: mvq_core::CoreError| config_error(format!("model: {e}"));
        Ok(match &self.model {
            ModelConfig::Burgers { sigma2 } => {
                if !(*sigma2 > 0.0) {
                    return Err(config_error("model.sigma2: must be positive"));
                }
                Box::new(BurgersModel::new(sigma2.sqrt()).map_err(wrap)?)
            }
            ModelConfig::Fhn { params } => {
                Box::new(FhnModel::new(params.apply(FhnParams::default())).map_err(wrap)?)
            }
            ModelConfig::Ou { initial } => Box::new(toy::ou_model(initial.to_law()).map_err(wrap)?),
            ModelConfig::Brownian { sigma, initial } => {
                Box::new(toy::brownian_model(*sigma, initial.to_law()).map_err(wrap)?)
            }
            ModelConfig::ConstantDrift { drift, initial } => {
                Box::new(toy::constant_drift_model(*drift, initial.to_law()).map_err(wrap)?)
            }
            ModelConfig::Zero { initial } => {
                Box::new(toy::zero_model(initial.to_law()).map_err(wrap)?)
            }
        })
    }

    /// The fixed quantizer of the grid-based schemes: `quantizer_file` if
    /// given, otherwise `K` equispaced points on `quantizer_grid`.
    pub fn fixed_quantizer(&self) -> Result<Quantizer, CliError> {
        if let Some(path) = &self.quantizer_file {
            return crate::io::read_quantizer(path);
        }
        let k = self
            .quantizer_size
            .ok_or_else(|| config_error("quantizer_size: missing"))?;
        let g = self.quantizer_grid;
        if k == 1 {
            return Quantizer::from_1d(vec![0.5 * (g.lo + g.hi)])
                .map_err(|e| config_error(e.to_string()));
        }
        Quantizer::uniform_grid(g.lo, g.hi, k)
            .map_err(|e| config_error(format!("quantizer_grid: {e}")))
    }

    /// Content hash of everything that affects the numbers (not `out`).
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("out");
        }
        let canonical = serde_json::to_string(&v).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Copy with one sweep value substituted and the sweep removed.
    pub fn at_sweep_value(&self, value: usize) -> RunConfig {
        let mut c = self.clone();
        if let Some(s) = &self.sweep {
            match s.parameter {
                SweepParameter::Particles => c.particles = Some(value),
                SweepParameter::QuantizerSize => c.quantizer_size = Some(value),
            }
        }
        c.sweep = None;
        c
    }
}

/// Parameter overrides as a flat map, for reports.
pub fn describe(cfg: &RunConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("scheme".into(), cfg.scheme.name().into());
    if let Some(n) = cfg.particles {
        m.insert("N".into(), n.to_string());
    }
    if let Some(k) = cfg.quantizer_size {
        m.insert("K".into(), k.to_string());
    }
    m.insert("M".into(), cfg.steps.to_string());
    m.insert("T".into(), cfg.horizon.to_string());
    m
}
