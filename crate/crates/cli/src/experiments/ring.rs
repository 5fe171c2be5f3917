//! Two-ring classification with the interpolation links drawn: every
//! external point that reached no strong neuron is circled and joined to the
//! two fitting samples its output was interpolated from.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use uanet::activations::DsaParams;
use uanet::sqann::{build_sqann, Provenance, SqannConfig};

use super::synthetic::{gen_synthetic, SyntheticKind, SyntheticParams, INNER_LABEL};
use super::ExperimentError;
use crate::svg::{padded_range, Frame, Svg, PALETTE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingConfig {
    pub n_fit: usize,
    pub n_external: usize,
    pub spread: f64,
    pub seed: u64,
    pub sqann: SqannConfig,
}

impl Default for RingConfig {
    fn default() -> Self {
        Self {
            n_fit: 128,
            n_external: 128,
            spread: 0.1,
            seed: 0,
            sqann: SqannConfig {
                dsa: DsaParams {
                    a1: 1.0,
                    a2: 1.0,
                    r: 0.5,
                },
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingPoint {
    pub role: &'static str,
    pub index: usize,
    pub x: [f64; 2],
    pub y: f64,
    pub prediction: f64,
    /// Fitting samples and weights behind an interpolated prediction.
    pub references: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingReport {
    pub points: Vec<RingPoint>,
    pub layers: usize,
}

impl RingReport {
    pub fn fitting_max_error(&self) -> f64 {
        self.max_error("fitting")
    }

    pub fn external_max_error(&self) -> f64 {
        self.max_error("external")
    }

    fn max_error(&self, role: &str) -> f64 {
        self.points
            .iter()
            .filter(|p| p.role == role)
            .fold(0.0f64, |m, p| m.max((p.prediction - p.y).abs()))
    }

    pub fn n_interp(&self) -> usize {
        self.points
            .iter()
            .filter(|p| !p.references.is_empty())
            .count()
    }

    pub fn points_csv(&self) -> String {
        let mut s = String::from("role,index,x1,x2,y,prediction,interpolated\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.role,
                p.index,
                p.x[0],
                p.x[1],
                p.y,
                p.prediction,
                (!p.references.is_empty()) as u8
            );
        }
        s
    }

    /// One row per drawn link.
    pub fn links_csv(&self) -> String {
        let mut s =
            String::from("external_index,reference_index,weight,x1_from,x2_from,x1_to,x2_to\n");
        for (p, r, w, to) in self.links() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.index, r, w, p.x[0], p.x[1], to[0], to[1]
            );
        }
        s
    }

    fn links(&self) -> Vec<(&RingPoint, usize, f64, [f64; 2])> {
        let fitting: std::collections::HashMap<usize, [f64; 2]> = self
            .points
            .iter()
            .filter(|p| p.role == "fitting")
            .map(|p| (p.index, p.x))
            .collect();
        self.points
            .iter()
            .flat_map(|p| p.references.iter().map(move |(r, w)| (p, *r, *w)))
            .map(|(p, r, w)| (p, r, w, fitting[&r]))
            .collect()
    }

    /// Left: fitting dots and external crosses. Right: the same with
    /// interpolated points circled and linked to their references.
    pub fn svg(&self) -> String {
        let (side, margin) = (360.0, 50.0);
        let mut svg = Svg::new(3.0 * margin + 2.0 * side, side + 2.0 * margin);
        let range = padded_range(self.points.iter().flat_map(|p| p.x));
        let color = |y: f64| {
            if y == INNER_LABEL {
                "#ff2020"
            } else {
                "#7a0000"
            }
        };
        for panel in 0..2 {
            let f = Frame {
                left: margin + panel as f64 * (side + margin),
                top: margin,
                width: side,
                height: side,
                x_range: range,
                y_range: range,
            };
            svg.axes(
                &f,
                if panel == 0 {
                    "samples"
                } else {
                    "interpolated samples"
                },
            );
            for p in &self.points {
                let (cx, cy) = (f.px(p.x[0]), f.py(p.x[1]));
                if p.role == "fitting" {
                    svg.circle(cx, cy, 4.0, color(p.y), "none");
                } else {
                    svg.cross(cx, cy, 3.0, color(p.prediction));
                }
            }
            if panel == 1 {
                for (k, (p, _, _, to)) in self.links().into_iter().enumerate() {
                    let dash = if k % 2 == 0 { None } else { Some("4 2") };
                    let c = PALETTE[(p.index / 2) % PALETTE.len()];
                    svg.line(
                        f.px(p.x[0]),
                        f.py(p.x[1]),
                        f.px(to[0]),
                        f.py(to[1]),
                        c,
                        1.0,
                        dash,
                    );
                }
                for p in self.points.iter().filter(|p| !p.references.is_empty()) {
                    svg.circle(f.px(p.x[0]), f.py(p.x[1]), 7.0, "none", "#ff0000");
                }
            }
        }
        svg.finish()
    }
}

pub fn run_sqann_ring(cfg: &RingConfig) -> Result<RingReport, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = SyntheticParams {
        kind: SyntheticKind::TwoRing,
        n_fit: cfg.n_fit,
        n_external: cfg.n_external,
        spread: cfg.spread,
        noise_sigma: 0.0,
    };
    let (fit, ext) = gen_synthetic(&params, &mut rng);
    let (model, _) = build_sqann(&fit, &cfg.sqann)?;
    let mut points = Vec::with_capacity(fit.len() + ext.len());
    for (role, d) in [("fitting", &fit), ("external", &ext)] {
        for s in d.samples() {
            let out = model.predict(&s.x)?;
            let references = match &out.provenance {
                Provenance::Interpolated { neurons, weights } => neurons
                    .iter()
                    .zip(weights)
                    .map(|(n, w)| (n.sample_index, *w))
                    .collect(),
                Provenance::StrongActivation(_) => Vec::new(),
            };
            points.push(RingPoint {
                role,
                index: s.index,
                x: [s.x[0], s.x[1]],
                y: s.y[0],
                prediction: out.y[0],
                references,
            });
        }
    }
    Ok(RingReport {
        points,
        layers: model.layers.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_run_fits_exactly_and_links_interpolations() {
        let cfg = RingConfig {
            n_fit: 40,
            n_external: 40,
            spread: 0.15,
            ..Default::default()
        };
        let r = run_sqann_ring(&cfg).unwrap();
        assert_eq!(r.fitting_max_error(), 0.0);
        let links = r.links_csv().lines().count() - 1;
        let expected: usize = r.points.iter().map(|p| p.references.len()).sum();
        assert_eq!(links, expected);
        assert_eq!(r.svg(), run_sqann_ring(&cfg).unwrap().svg());
    }
}
