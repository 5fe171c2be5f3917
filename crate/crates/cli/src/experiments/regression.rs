//! Absorption on a tabular regression dataset: fit SQANN on the first rows,
//! then absorb external rows whose error exceeds each threshold `τ`.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use uanet::absorption::{
    absorb_loop, evaluate, AbsorptionConfig, Ensemble, OodCriterion, SqannBuilder,
};
use uanet::data::{fit_min_max, fit_standardize, InputScaling};
use uanet::io::{load_csv, Column};
use uanet::sqann::{build_sqann, SqannConfig};
use uanet::Dataset;

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    None,
    /// Min-max fitted on the fitting rows.
    MinMaxFit,
    /// Z-score fitted on the fitting rows.
    #[default]
    StandardizeFit,
    /// Z-score fitted on every row.
    StandardizeAll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionConfig {
    pub data_path: PathBuf,
    /// Target column: 0-based index, header name or `last`.
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_n_fit")]
    pub n_fit: usize,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default)]
    pub scaling: Scaling,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_true")]
    pub keep_original: bool,
    #[serde(default)]
    pub sqann: SqannConfig,
}

fn default_target() -> String {
    "last".into()
}
fn default_true() -> bool {
    true
}
fn default_n_fit() -> usize {
    100
}
fn default_taus() -> Vec<f64> {
    vec![5.0, 2.0]
}
fn default_rounds() -> usize {
    1
}

impl RegressionConfig {
    pub fn new(data_path: impl Into<PathBuf>, taus: Vec<f64>) -> Self {
        Self {
            data_path: data_path.into(),
            target: default_target(),
            has_header: true,
            n_fit: default_n_fit(),
            taus,
            scaling: Scaling::default(),
            max_rounds: default_rounds(),
            keep_original: true,
            sqann: SqannConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// `o.` for the model on the initial rows, `e<τ>` after absorption.
    pub label: String,
    pub tau: Option<f64>,
    pub absorbed: usize,
    pub fitting_size: usize,
    pub rounds: usize,
    pub mse: f64,
}

impl TableRow {
    pub fn rmse(&self) -> f64 {
        self.mse.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionTable {
    pub n_total: usize,
    pub rows: Vec<TableRow>,
}

impl AbsorptionTable {
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("row,tau,absorbed,fitting_size,rounds,external_mse,external_rmse\n");
        for r in &self.rows {
            let tau = r.tau.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.label,
                tau,
                r.absorbed,
                r.fitting_size,
                r.rounds,
                r.mse,
                r.rmse()
            );
        }
        s
    }
}

/// Splits at `n_fit` and applies the configured input scaling to both parts.
pub fn prepare(
    data: &Dataset,
    n_fit: usize,
    scaling: Scaling,
) -> Result<(Dataset, Dataset), ExperimentError> {
    let (fit, ext) = data.split_at(n_fit)?;
    let transform = match scaling {
        Scaling::None => return Ok((fit, ext)),
        Scaling::MinMaxFit => InputScaling::MinMax(fit_min_max(&fit)),
        Scaling::StandardizeFit => InputScaling::Standardize(fit_standardize(&fit)),
        Scaling::StandardizeAll => InputScaling::Standardize(fit_standardize(data)),
    };
    Ok((
        transform.apply_dataset(&fit)?,
        transform.apply_dataset(&ext)?,
    ))
}

/// External MSE before absorption and after absorbing at each `τ`. Every
/// `τ` starts again from the initial fitting rows.
pub fn run_regression_absorb(cfg: &RegressionConfig) -> Result<AbsorptionTable, ExperimentError> {
    let target: Column = cfg.target.parse().expect("infallible");
    let data = load_csv(&cfg.data_path, &[target], cfg.has_header)?;
    run_on_dataset(&data, cfg)
}

pub fn run_on_dataset(
    data: &Dataset,
    cfg: &RegressionConfig,
) -> Result<AbsorptionTable, ExperimentError> {
    let (fit, ext) = prepare(data, cfg.n_fit, cfg.scaling)?;
    let (base, _) = build_sqann(&fit, &cfg.sqann)?;
    let initial = evaluate(
        &Ensemble {
            current: &base,
            original: None,
        },
        &ext,
    )?;
    let mut rows = vec![TableRow {
        label: "o.".into(),
        tau: None,
        absorbed: 0,
        fitting_size: fit.len(),
        rounds: 0,
        mse: initial.mse,
    }];
    let builder = SqannBuilder { config: cfg.sqann };
    for &tau in &cfg.taus {
        let acfg = AbsorptionConfig {
            epsilon: tau,
            max_rounds: cfg.max_rounds,
            criterion: OodCriterion::ErrorOnly,
            keep_original: cfg.keep_original,
        };
        let out = absorb_loop(&builder, &fit, &ext, &acfg)?;
        rows.push(TableRow {
            label: format!("e{tau}"),
            tau: Some(tau),
            absorbed: out.report.total_absorbed(),
            fitting_size: out.fitting.len(),
            rounds: out.report.rounds.len(),
            mse: out.report.final_summary().mse,
        });
    }
    Ok(AbsorptionTable {
        n_total: data.len(),
        rows,
    })
}
