//! Seeded 2-D toy datasets and their perturbed external copies.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use uanet::{Dataset, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `x₁ = x₂ = t` plus Gaussian noise, `y = ‖x‖`.
    #[default]
    Line,
    /// `x = R (cos t, sin t)`, `y = cos t`.
    Ring,
    /// Two concentric rings labelled 0.5 (outer) and 1.0 (inner).
    TwoRing,
}

pub const OUTER_LABEL: f64 = 0.5;
pub const INNER_LABEL: f64 = 1.0;
pub const OUTER_RADIUS: (f64, f64) = (0.8, 1.2);
pub const INNER_RADIUS: (f64, f64) = (0.3, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub kind: SyntheticKind,
    pub n_fit: usize,
    pub n_external: usize,
    /// Half-width `s` of the uniform perturbation applied to each component.
    pub spread: f64,
    /// Standard deviation of the line dataset's Gaussian noise.
    pub noise_sigma: f64,
}

impl SyntheticKind {
    /// Ground truth at `x`; `None` for classification labels, which are
    /// carried over from the fitting sample.
    pub fn target(&self, x: &[f64]) -> Option<f64> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        match self {
            SyntheticKind::Line => Some(r),
            SyntheticKind::Ring if r > 0.0 => Some(x[0] / r),
            SyntheticKind::Ring => Some(1.0),
            SyntheticKind::TwoRing => None,
        }
    }
}

fn ring_point<R: Rng>(rng: &mut R, radius: (f64, f64)) -> (Vec<f64>, f64) {
    let t = rng.gen_range(0.0..2.0 * PI);
    let r = rng.gen_range(radius.0..radius.1);
    (vec![r * t.cos(), r * t.sin()], t)
}

/// Fitting set, then an external set where sample `k` copies fitting sample
/// `k mod n_fit` and adds `U(-s, s)` to every input component. External
/// targets are re-evaluated at the perturbed input; ring-class labels are
/// kept. External indices continue after the fitting ones.
pub fn gen_synthetic<R: Rng>(p: &SyntheticParams, rng: &mut R) -> (Dataset, Dataset) {
    assert!(
        p.n_fit > 0 && p.n_external > 0,
        "dataset sizes must be positive"
    );
    let noise = Normal::new(0.0, p.noise_sigma.max(0.0)).expect("finite sigma");
    let mut fit = Vec::with_capacity(p.n_fit);
    for i in 0..p.n_fit {
        let (x, y) = match p.kind {
            SyntheticKind::Line => {
                let t = rng.gen_range(-1.0..1.0);
                let x = vec![t + noise.sample(rng), t + noise.sample(rng)];
                let y = SyntheticKind::Line.target(&x).unwrap();
                (x, y)
            }
            SyntheticKind::Ring => {
                let (x, t) = ring_point(rng, OUTER_RADIUS);
                (x, t.cos())
            }
            SyntheticKind::TwoRing => {
                if i % 2 == 0 {
                    (ring_point(rng, OUTER_RADIUS).0, OUTER_LABEL)
                } else {
                    (ring_point(rng, INNER_RADIUS).0, INNER_LABEL)
                }
            }
        };
        fit.push(Sample::new(x, vec![y], i));
    }

    let mut ext = Vec::with_capacity(p.n_external);
    for k in 0..p.n_external {
        let src = &fit[k % p.n_fit];
        let x: Vec<f64> = src
            .x
            .iter()
            .map(|v| v + p.spread * rng.gen_range(-1.0..1.0))
            .collect();
        let y = p.kind.target(&x).map_or_else(|| src.y.clone(), |t| vec![t]);
        ext.push(Sample::new(x, y, p.n_fit + k));
    }
    (
        Dataset::new(fit).expect("generated fitting set is well-formed"),
        Dataset::new(ext).expect("generated external set is well-formed"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(kind: SyntheticKind, spread: f64) -> SyntheticParams {
        SyntheticParams {
            kind,
            n_fit: 128,
            n_external: 128,
            spread,
            noise_sigma: 0.05,
        }
    }

    #[test]
    fn zero_spread_copies_fitting_set() {
        for kind in [
            SyntheticKind::Line,
            SyntheticKind::Ring,
            SyntheticKind::TwoRing,
        ] {
            let (fit, ext) = gen_synthetic(&params(kind, 0.0), &mut ChaCha8Rng::seed_from_u64(3));
            assert_eq!(fit.len(), 128);
            assert_eq!(ext.len(), 128);
            for (a, b) in fit.samples().iter().zip(ext.samples()) {
                assert_eq!(a.x, b.x);
                if kind != SyntheticKind::Ring {
                    assert_eq!(a.y, b.y);
                } else {
                    assert!((a.y[0] - b.y[0]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ring_labels_and_radii() {
        let (fit, ext) = gen_synthetic(
            &params(SyntheticKind::TwoRing, 0.1),
            &mut ChaCha8Rng::seed_from_u64(1),
        );
        for s in fit.samples().iter().chain(ext.samples()) {
            assert!(s.y == vec![OUTER_LABEL] || s.y == vec![INNER_LABEL]);
        }
        for s in fit.samples() {
            let r = (s.x[0].powi(2) + s.x[1].powi(2)).sqrt();
            let band = if s.y[0] == OUTER_LABEL {
                OUTER_RADIUS
            } else {
                INNER_RADIUS
            };
            assert!(r >= band.0 - 1e-12 && r <= band.1 + 1e-12);
        }
    }

    #[test]
    fn perturbation_is_bounded() {
        let (fit, ext) = gen_synthetic(
            &params(SyntheticKind::Line, 0.2),
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        for (a, b) in fit.samples().iter().zip(ext.samples()) {
            for (u, v) in a.x.iter().zip(&b.x) {
                assert!((u - v).abs() <= 0.2);
            }
            assert_eq!(b.y[0], (b.x[0].powi(2) + b.x[1].powi(2)).sqrt());
        }
    }

    #[test]
    fn same_seed_same_data() {
        let p = params(SyntheticKind::Ring, 0.1);
        let a = gen_synthetic(&p, &mut ChaCha8Rng::seed_from_u64(5));
        let b = gen_synthetic(&p, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}
