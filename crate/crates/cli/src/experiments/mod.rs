//! Seeded experiment runners. Each run writes CSV reports and SVG plots into
//! an output directory; every plot has a sibling CSV holding the plotted
//! numbers.

pub mod regression;
pub mod ring;
pub mod spread;
pub mod stats;
pub mod synthetic;
pub mod tnn_curve;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use uanet::absorption::AbsorbError;
use uanet::data::DataError;
use uanet::io::IoError;
use uanet::sqann::{BuildError, SqannConfig, SqannError};
use uanet::tnn::{DummyDeltaRule, TnnError, DEFAULT_SHARPNESS};

use regression::{RegressionConfig, Scaling};
use ring::RingConfig;
use spread::{SpreadConfig, DEFAULT_LEVELS, DEFAULT_NOISE_SIGMA};
use synthetic::SyntheticKind;
use tnn_curve::TnnCurveConfig;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Load(#[from] IoError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Predict(#[from] SqannError),
    #[error(transparent)]
    Tnn(#[from] TnnError),
    #[error(transparent)]
    Absorb(#[from] AbsorbError),
}

impl ExperimentError {
    /// Whether the failure happened while constructing a model.
    pub fn is_construction(&self) -> bool {
        match self {
            ExperimentError::Build(_) | ExperimentError::Tnn(_) => true,
            ExperimentError::Absorb(e) => matches!(e, AbsorbError::Build(_) | AbsorbError::Tnn(_)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TnnCurve,
    SqannRing,
    SqannSpread,
    RegressionAbsorb,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    pub n_fit: Option<usize>,
    pub n_external: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnnSettings {
    #[serde(default = "default_sharpness")]
    pub a: f64,
    #[serde(default)]
    pub dummy: DummyDeltaRule,
}

fn default_sharpness() -> f64 {
    DEFAULT_SHARPNESS
}

/// Regression settings; the fitting size comes from `sizes.n_fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSettings {
    pub data_path: PathBuf,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub has_header: Option<bool>,
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub scaling: Option<Scaling>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub keep_original: Option<bool>,
}

/// A JSON experiment description. Fields a kind does not use are ignored;
/// missing ones take the kind's defaults. Relative paths resolve against the
/// working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sizes: Sizes,
    /// Perturbation half-width for single-spread runs.
    #[serde(default)]
    pub spread: Option<f64>,
    #[serde(default)]
    pub spread_levels: Option<Vec<f64>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub dataset: Option<SyntheticKind>,
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    #[serde(default)]
    pub sqann: Option<SqannConfig>,
    #[serde(default)]
    pub tnn: Option<TnnSettings>,
    #[serde(default)]
    pub regression: Option<RegressionSettings>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))
    }

    pub fn spread_config(&self) -> SpreadConfig {
        let d = SpreadConfig::default();
        SpreadConfig {
            dataset: self.dataset.unwrap_or(d.dataset),
            n_fit: self.sizes.n_fit.unwrap_or(d.n_fit),
            n_external: self.sizes.n_external.unwrap_or(d.n_external),
            levels: self
                .spread_levels
                .clone()
                .unwrap_or_else(|| DEFAULT_LEVELS.to_vec()),
            trials: self.trials.unwrap_or(d.trials),
            noise_sigma: self.noise_sigma.unwrap_or(DEFAULT_NOISE_SIGMA),
            seed: self.seed,
            sqann: self.sqann.unwrap_or_default(),
        }
    }

    pub fn ring_config(&self) -> RingConfig {
        let d = RingConfig::default();
        RingConfig {
            n_fit: self.sizes.n_fit.unwrap_or(d.n_fit),
            n_external: self.sizes.n_external.unwrap_or(d.n_external),
            spread: self.spread.unwrap_or(d.spread),
            seed: self.seed,
            sqann: self.sqann.unwrap_or(d.sqann),
        }
    }

    pub fn tnn_config(&self) -> TnnCurveConfig {
        let d = TnnCurveConfig::default();
        let t = self.tnn.unwrap_or(TnnSettings {
            a: d.a,
            dummy: d.dummy,
        });
        TnnCurveConfig {
            n_fit: self.sizes.n_fit.unwrap_or(d.n_fit),
            a: t.a,
            seed: self.seed,
            dummy: t.dummy,
        }
    }

    pub fn regression_config(&self) -> Result<RegressionConfig, ExperimentError> {
        let r = self.regression.as_ref().ok_or_else(|| {
            ExperimentError::Spec("regression_absorb needs a \"regression\" section".into())
        })?;
        let mut c = RegressionConfig::new(
            r.data_path.clone(),
            r.taus.clone().unwrap_or_else(|| vec![5.0, 2.0]),
        );
        if let Some(t) = &r.target {
            c.target = t.clone();
        }
        if let Some(h) = r.has_header {
            c.has_header = h;
        }
        if let Some(s) = r.scaling {
            c.scaling = s;
        }
        if let Some(m) = r.max_rounds {
            c.max_rounds = m;
        }
        if let Some(k) = r.keep_original {
            c.keep_original = k;
        }
        if let Some(n) = self.sizes.n_fit {
            c.n_fit = n;
        }
        if let Some(s) = self.sqann {
            c.sqann = s;
        }
        Ok(c)
    }
}

fn write(
    dir: &Path,
    name: &str,
    content: &str,
    written: &mut Vec<PathBuf>,
) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|source| ExperimentError::Write {
        path: path.display().to_string(),
        source,
    })?;
    written.push(path);
    Ok(())
}

/// Runs `spec` and writes its reports into `out` (or the spec's output
/// directory). Returns the written paths in a fixed order.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let dir = out.unwrap_or(&spec.output_dir);
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    match spec.kind {
        ExperimentKind::SqannSpread => {
            let report = spread::run_spread_experiment(&spec.spread_config());
            write(dir, "spread_trials.csv", &report.trials_csv(), &mut written)?;
            write(
                dir,
                "spread_samples.csv",
                &report.samples_csv(),
                &mut written,
            )?;
            write(
                dir,
                "spread_summary.csv",
                &report.summary_csv(),
                &mut written,
            )?;
            write(
                dir,
                "spread_boxplot.csv",
                &report.boxplot_csv(),
                &mut written,
            )?;
            write(
                dir,
                "spread_boxplot.svg",
                &report.boxplot_svg(),
                &mut written,
            )?;
        }
        ExperimentKind::SqannRing => {
            let report = ring::run_sqann_ring(&spec.ring_config())?;
            write(dir, "ring_points.csv", &report.points_csv(), &mut written)?;
            write(dir, "ring_links.csv", &report.links_csv(), &mut written)?;
            write(dir, "ring.svg", &report.svg(), &mut written)?;
        }
        ExperimentKind::TnnCurve => {
            let curve = tnn_curve::run_tnn_curve(&spec.tnn_config())?;
            write(dir, "tnn_curve.csv", &curve.curve_csv(), &mut written)?;
            write(dir, "tnn_samples.csv", &curve.samples_csv(), &mut written)?;
            write(dir, "tnn_curve.svg", &curve.svg(), &mut written)?;
        }
        ExperimentKind::RegressionAbsorb => {
            let table = regression::run_regression_absorb(&spec.regression_config()?)?;
            write(dir, "absorption_table.csv", &table.to_csv(), &mut written)?;
        }
    }
    Ok(written)
}
