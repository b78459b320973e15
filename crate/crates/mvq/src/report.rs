//! Per-run reports and their aggregate over reruns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one run of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorReport {
    pub scheme: String,
    pub config_hash: String,
    pub seed: u64,
    pub rerun: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_cdf_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wasserstein: Option<f64>,
    #[serde(default)]
    pub functional_values: BTreeMap<String, f64>,
    /// Scheme time divided by the number of Euler steps, in seconds.
    pub wall_time_per_step: f64,
    /// Counters from the scheme (renormalizations, empty cells, ...).
    #[serde(default)]
    pub diagnostics: BTreeMap<String, u64>,
}

impl ErrorReport {
    /// Every recorded number by name; the keys of the summary statistics.
    pub fn values(&self) -> BTreeMap<String, f64> {
        let mut m = self.functional_values.clone();
        if let Some(e) = self.sup_cdf_error {
            m.insert("sup_cdf_error".into(), e);
        }
        if let Some(w) = self.wasserstein {
            m.insert("wasserstein".into(), w);
        }
        m
    }

    pub fn all_finite(&self) -> bool {
        self.values().values().all(|v| v.is_finite()) && self.wall_time_per_step.is_finite()
    }

    /// The report with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_per_step: 0.0,
            ..self.clone()
        }
    }
}

/// Sample mean, standard deviation and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (`n - 1`) standard deviation; zero for a single value.
    pub std: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat {
            n,
            mean,
            std,
            se: std / (n as f64).sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFailure {
    pub rerun: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub scheme: String,
    pub config_hash: String,
    pub reruns: usize,
    pub completed: usize,
    pub values: BTreeMap<String, Stat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_per_step: Option<Stat>,
    #[serde(default)]
    pub failures: Vec<RunFailure>,
}

impl Summary {
    pub fn from_reports(
        scheme: &str,
        config_hash: &str,
        reports: &[ErrorReport],
        failures: Vec<RunFailure>,
    ) -> Self {
        let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in reports {
            for (k, v) in r.values() {
                columns.entry(k).or_default().push(v);
            }
        }
        let times: Vec<f64> = reports.iter().map(|r| r.wall_time_per_step).collect();
        Summary {
            scheme: scheme.into(),
            config_hash: config_hash.into(),
            reruns: reports.len() + failures.len(),
            completed: reports.len(),
            values: columns
                .into_iter()
                .filter_map(|(k, v)| Stat::of(&v).map(|s| (k, s)))
                .collect(),
            wall_time_per_step: Stat::of(&times),
            failures,
        }
    }

    pub fn stat(&self, name: &str) -> Option<&Stat> {
        self.values.get(name)
    }
}
