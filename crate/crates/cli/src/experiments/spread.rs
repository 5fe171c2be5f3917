//! SQANN on perturbed copies of its fitting data, over increasing spread.
//!
//! For a given trial seed the fitting set and the unit perturbation pattern
//! are identical at every spread level; only their scale changes.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uanet::sqann::{build_sqann, SqannConfig};

use super::stats::{box_stats, mean, median, BoxStats};
use super::synthetic::{gen_synthetic, SyntheticKind, SyntheticParams};
use crate::svg::{Frame, Svg, PALETTE};

pub const DEFAULT_LEVELS: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.4];
pub const DEFAULT_NOISE_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadConfig {
    pub dataset: SyntheticKind,
    pub n_fit: usize,
    pub n_external: usize,
    pub levels: Vec<f64>,
    pub trials: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub sqann: SqannConfig,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        Self {
            dataset: SyntheticKind::Line,
            n_fit: 128,
            n_external: 128,
            levels: DEFAULT_LEVELS.to_vec(),
            trials: 20,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            seed: 0,
            sqann: SqannConfig::default(),
        }
    }
}

/// `|ŷ − y| / max(|y|, 1e-8)`; blows up for targets near zero.
pub fn fractional_error(pred: f64, y: f64) -> f64 {
    (pred - y).abs() / y.abs().max(1e-8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub fitting_max_error: f64,
    pub errors: Vec<f64>,
    pub fractional_errors: Vec<f64>,
    pub interpolated: Vec<bool>,
}

impl TrialStats {
    pub fn n_interp(&self) -> usize {
        self.interpolated.iter().filter(|b| **b).count()
    }

    fn strong_only<'a>(&'a self, v: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        v.iter()
            .zip(&self.interpolated)
            .filter(|(_, i)| !**i)
            .map(|(e, _)| *e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadTrial {
    pub level: f64,
    pub trial: usize,
    /// Construction failures are kept as messages, not propagated.
    pub outcome: Result<TrialStats, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    /// Largest fitting-set error over all successful trials.
    pub fitting_max_error: f64,
    pub median_error: f64,
    pub median_error_strong: f64,
    pub median_fractional_error: f64,
    pub mean_n_interp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadReport {
    pub config: SpreadConfig,
    /// Ordered by (level, trial).
    pub trials: Vec<SpreadTrial>,
}

fn run_trial(cfg: &SpreadConfig, level: f64, trial: usize) -> SpreadTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(trial as u64));
    let params = SyntheticParams {
        kind: cfg.dataset,
        n_fit: cfg.n_fit,
        n_external: cfg.n_external,
        spread: level,
        noise_sigma: cfg.noise_sigma,
    };
    let (fit, ext) = gen_synthetic(&params, &mut rng);
    let outcome = build_sqann(&fit, &cfg.sqann)
        .map_err(|e| e.to_string())
        .and_then(|(model, _)| {
            let mut fitting_max_error = 0.0f64;
            for s in fit.samples() {
                let p = model.predict(&s.x).map_err(|e| e.to_string())?;
                fitting_max_error = fitting_max_error.max((p.y[0] - s.y[0]).abs());
            }
            let mut stats = TrialStats {
                fitting_max_error,
                errors: Vec::with_capacity(ext.len()),
                fractional_errors: Vec::with_capacity(ext.len()),
                interpolated: Vec::with_capacity(ext.len()),
            };
            for s in ext.samples() {
                let p = model.predict(&s.x).map_err(|e| e.to_string())?;
                stats.errors.push((p.y[0] - s.y[0]).abs());
                stats
                    .fractional_errors
                    .push(fractional_error(p.y[0], s.y[0]));
                stats.interpolated.push(p.is_interpolated());
            }
            Ok(stats)
        });
    SpreadTrial {
        level,
        trial,
        outcome,
    }
}

/// Runs every (level, trial) pair; trials run in parallel and are merged in
/// (level, trial) order.
pub fn run_spread_experiment(cfg: &SpreadConfig) -> SpreadReport {
    let jobs: Vec<(f64, usize)> = cfg
        .levels
        .iter()
        .flat_map(|&l| (0..cfg.trials).map(move |t| (l, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(l, t)| run_trial(cfg, l, t))
        .collect();
    SpreadReport {
        config: cfg.clone(),
        trials,
    }
}

impl SpreadReport {
    fn at_level(&self, level: f64) -> impl Iterator<Item = &TrialStats> {
        self.trials
            .iter()
            .filter(move |t| t.level == level)
            .filter_map(|t| t.outcome.as_ref().ok())
    }

    pub fn summaries(&self) -> Vec<LevelSummary> {
        self.config
            .levels
            .iter()
            .map(|&level| {
                let ok: Vec<&TrialStats> = self.at_level(level).collect();
                let total = self.trials.iter().filter(|t| t.level == level).count();
                let errors: Vec<f64> = ok.iter().flat_map(|s| s.errors.iter().copied()).collect();
                let strong: Vec<f64> = ok.iter().flat_map(|s| s.strong_only(&s.errors)).collect();
                let frac: Vec<f64> = ok
                    .iter()
                    .flat_map(|s| s.fractional_errors.iter().copied())
                    .collect();
                let interp: Vec<f64> = ok.iter().map(|s| s.n_interp() as f64).collect();
                LevelSummary {
                    level,
                    trials_ok: ok.len(),
                    trials_failed: total - ok.len(),
                    fitting_max_error: ok.iter().fold(0.0f64, |m, s| m.max(s.fitting_max_error)),
                    median_error: median(&errors),
                    median_error_strong: median(&strong),
                    median_fractional_error: median(&frac),
                    mean_n_interp: mean(&interp),
                }
            })
            .collect()
    }

    /// One row per trial.
    pub fn trials_csv(&self) -> String {
        let mut s = String::from("level,trial,status,fitting_max_error,median_error,median_error_strong,median_fractional_error,n_interp\n");
        for t in &self.trials {
            match &t.outcome {
                Ok(st) => {
                    let strong: Vec<f64> = st.strong_only(&st.errors).collect();
                    let _ = writeln!(
                        s,
                        "{},{},ok,{},{},{},{},{}",
                        t.level,
                        t.trial,
                        st.fitting_max_error,
                        median(&st.errors),
                        median(&strong),
                        median(&st.fractional_errors),
                        st.n_interp()
                    );
                }
                Err(msg) => {
                    let _ = writeln!(
                        s,
                        "{},{},\"failed: {}\",,,,,",
                        t.level,
                        t.trial,
                        msg.replace('"', "'")
                    );
                }
            }
        }
        s
    }

    /// One row per external sample.
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("level,trial,sample,error,fractional_error,interpolated\n");
        for t in &self.trials {
            if let Ok(st) = &t.outcome {
                for (k, e) in st.errors.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        t.level, t.trial, k, e, st.fractional_errors[k], st.interpolated[k] as u8
                    );
                }
            }
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "level,trials_ok,trials_failed,fitting_max_error,median_error,median_error_strong,median_fractional_error,mean_n_interp\n",
        );
        for l in self.summaries() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                l.level,
                l.trials_ok,
                l.trials_failed,
                l.fitting_max_error,
                l.median_error,
                l.median_error_strong,
                l.median_fractional_error,
                l.mean_n_interp
            );
        }
        s
    }

    /// Box statistics per (panel, level), exactly as drawn.
    pub fn boxes(&self) -> Vec<(&'static str, f64, BoxStats)> {
        let mut out = Vec::new();
        for &level in &self.config.levels {
            let ok: Vec<&TrialStats> = self.at_level(level).collect();
            let pooled = |f: &dyn Fn(&TrialStats) -> Vec<f64>| -> Vec<f64> {
                ok.iter().flat_map(|s| f(s)).collect()
            };
            let panels: [(&'static str, Vec<f64>); 5] = [
                ("error", pooled(&|s| s.errors.clone())),
                (
                    "error_strong",
                    pooled(&|s| s.strong_only(&s.errors).collect()),
                ),
                ("fractional_error", pooled(&|s| s.fractional_errors.clone())),
                (
                    "fractional_error_strong",
                    pooled(&|s| s.strong_only(&s.fractional_errors).collect()),
                ),
                ("n_interp", ok.iter().map(|s| s.n_interp() as f64).collect()),
            ];
            for (name, v) in panels {
                out.push((name, level, box_stats(&v)));
            }
        }
        out
    }

    pub fn boxplot_csv(&self) -> String {
        let mut s = String::from("panel,level,count,whisker_low,q1,median,q3,whisker_high\n");
        for (panel, level, b) in self.boxes() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                panel, level, b.count, b.whisker_low, b.q1, b.median, b.q3, b.whisker_high
            );
        }
        s
    }

    /// Five panels side by side, one box per spread level.
    pub fn boxplot_svg(&self) -> String {
        let boxes = self.boxes();
        let panels = [
            "error",
            "error_strong",
            "fractional_error",
            "fractional_error_strong",
            "n_interp",
        ];
        let (pw, ph, margin) = (220.0, 260.0, 60.0);
        let mut svg = Svg::new(
            margin + panels.len() as f64 * (pw + margin),
            ph + 2.0 * margin,
        );
        let n_levels = self.config.levels.len().max(1);
        for (p, name) in panels.iter().enumerate() {
            let mine: Vec<&(&str, f64, BoxStats)> = boxes.iter().filter(|b| b.0 == *name).collect();
            let hi = mine.iter().fold(0.0f64, |m, b| m.max(b.2.whisker_high));
            let frame = Frame {
                left: margin + p as f64 * (pw + margin),
                top: margin,
                width: pw,
                height: ph,
                x_range: (0.0, n_levels as f64),
                y_range: (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 }),
            };
            svg.axes(&frame, name);
            for (i, (_, level, b)) in mine.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let cx = frame.px(i as f64 + 0.5);
                let half = 0.3 * pw / n_levels as f64;
                svg.line(
                    cx,
                    frame.py(b.whisker_low),
                    cx,
                    frame.py(b.whisker_high),
                    "#444",
                    1.0,
                    None,
                );
                svg.rect(
                    cx - half,
                    frame.py(b.q3),
                    2.0 * half,
                    frame.py(b.q1) - frame.py(b.q3),
                    color,
                    "#222",
                );
                svg.line(
                    cx - half,
                    frame.py(b.median),
                    cx + half,
                    frame.py(b.median),
                    "#000",
                    2.0,
                    None,
                );
                svg.text(
                    cx,
                    frame.top + frame.height + 28.0,
                    10.0,
                    "middle",
                    &format!("s={level}"),
                );
            }
        }
        svg.finish()
    }
}
