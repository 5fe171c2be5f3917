//! TNN fitted to samples of `sin(2πx)` on `[0, 1]`, evaluated on a dense grid.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use uanet::tnn::{fit_tnn, DummyDeltaRule, TnnModel, DEFAULT_SHARPNESS};
use uanet::Dataset;

use super::ExperimentError;
use crate::svg::{padded_range, Frame, Svg, PALETTE};

pub const GRID_POINTS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TnnCurveConfig {
    pub n_fit: usize,
    pub a: f64,
    pub seed: u64,
    #[serde(default)]
    pub dummy: DummyDeltaRule,
}

impl Default for TnnCurveConfig {
    fn default() -> Self {
        Self {
            n_fit: 16,
            a: DEFAULT_SHARPNESS,
            seed: 0,
            dummy: DummyDeltaRule::default(),
        }
    }
}

pub fn target(x: f64) -> f64 {
    (2.0 * PI * x).sin()
}

pub struct TnnCurve {
    pub model: TnnModel,
    pub fitting: Dataset,
    /// `(x, prediction, target)` over the grid.
    pub grid: Vec<(f64, f64, f64)>,
}

impl TnnCurve {
    pub fn fitting_max_error(&self) -> f64 {
        self.fitting.samples().iter().fold(0.0f64, |m, s| {
            m.max((self.model.predict(s.x[0])[0] - s.y[0]).abs())
        })
    }

    pub fn curve_csv(&self) -> String {
        let mut s = String::from("x,tnn,target\n");
        for (x, p, t) in &self.grid {
            let _ = writeln!(s, "{x},{p},{t}");
        }
        s
    }

    /// Fitting samples and the mid-points between ordered neighbours, each
    /// with its error and the bound that applies to it.
    pub fn samples_csv(&self) -> String {
        let bound = self.model.error_bound();
        let mut s = String::from("kind,x,y,tnn,error,bound\n");
        let xs = &self.model.ordered_x;
        let ys = &self.model.ordered_y;
        for (x, y) in xs.iter().zip(ys) {
            let p = self.model.predict(*x)[0];
            let _ = writeln!(s, "fitting,{x},{},{p},{},{bound}", y[0], (p - y[0]).abs());
        }
        for k in 1..xs.len() {
            let x = 0.5 * (xs[k - 1] + xs[k]);
            let y = 0.5 * (ys[k - 1][0] + ys[k][0]);
            let p = self.model.predict(x)[0];
            let _ = writeln!(s, "midpoint,{x},{y},{p},{},{}", (p - y).abs(), 2.0 * bound);
        }
        s
    }

    pub fn svg(&self) -> String {
        let (w, h, m) = (640.0, 360.0, 50.0);
        let mut svg = Svg::new(w + 2.0 * m, h + 2.0 * m);
        let f = Frame {
            left: m,
            top: m,
            width: w,
            height: h,
            x_range: (0.0, 1.0),
            y_range: padded_range(self.grid.iter().flat_map(|g| [g.1, g.2])),
        };
        svg.axes(
            &f,
            &format!("TNN, N={}, a={}", self.model.len(), self.model.a),
        );
        let target: Vec<(f64, f64)> = self.grid.iter().map(|g| (f.px(g.0), f.py(g.2))).collect();
        let tnn: Vec<(f64, f64)> = self.grid.iter().map(|g| (f.px(g.0), f.py(g.1))).collect();
        svg.polyline(&target, "#999", 1.0);
        svg.polyline(&tnn, PALETTE[0], 1.5);
        for s in self.fitting.samples() {
            svg.circle(f.px(s.x[0]), f.py(s.y[0]), 3.5, PALETTE[3], "none");
        }
        svg.finish()
    }
}

pub fn run_tnn_curve(cfg: &TnnCurveConfig) -> Result<TnnCurve, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xs: Vec<f64> = (0..cfg.n_fit).map(|_| rng.gen_range(0.0..1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| target(*x)).collect();
    let fitting = Dataset::from_scalar_targets(xs.into_iter().map(|x| vec![x]).collect(), ys)?;
    let model = fit_tnn(&fitting, cfg.a, cfg.dummy)?;
    let grid = (0..GRID_POINTS)
        .map(|i| {
            let x = i as f64 / (GRID_POINTS - 1) as f64;
            (x, model.predict(x)[0], target(x))
        })
        .collect();
    Ok(TnnCurve {
        model,
        fitting,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_respects_bounds() {
        let c = run_tnn_curve(&TnnCurveConfig {
            a: 12.0,
            ..Default::default()
        })
        .unwrap();
        assert!(c.fitting_max_error() <= c.model.error_bound());
        let csv = c.samples_csv();
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let err: f64 = f[4].parse().unwrap();
            let bound: f64 = f[5].parse().unwrap();
            assert!(err <= bound, "{line}");
        }
        assert_eq!(c.curve_csv().lines().count(), GRID_POINTS + 1);
    }
}
