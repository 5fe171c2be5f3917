//! Triangularly-constructed network over linearly ordered scalar inputs.
//!
//! `TNN(x) = αᵀ σ(W x + b)` with one hidden neuron per fitting sample. With
//! samples sorted descending, `x^(1) > … > x^(N)`, neuron `j` (0-based) is the
//! step that switches on between `x^(N-j+1)` and `x^(N-j)`: every fitting
//! sample activates a prefix of neurons, and the length of that prefix is the
//! sample's rank. Weights and biases solve the pre-activation equalities
//! `±a` at neighbouring samples; `α` is the difference inverse of the
//! staircase matrix, so retrieval telescopes to the stored output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::sigmoid;
use crate::data::{linear_order, DataError, Dataset, OrderedDataset};

pub const DEFAULT_SHARPNESS: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum TnnError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("sharpness a must be positive and finite, got {0}")]
    Sharpness(f64),
    #[error("gap {gap} at ordered position {position} is not positive")]
    DegenerateGap { position: usize, gap: f64 },
    #[error("tolerance {epsilon} is not below U(N+1) = {limit}")]
    InvalidTolerance { epsilon: f64, limit: f64 },
}

/// How the gap below the smallest sample is chosen. It only shapes the
/// curve to the left of the last sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum DummyDeltaRule {
    /// Arithmetic mean of the `N-1` real gaps.
    #[default]
    MeanGap,
    /// Sum of the real gaps divided by `N`.
    SumOverN,
    /// Repeat the last real gap.
    LastGap,
    Fixed(f64),
}

impl DummyDeltaRule {
    /// Gap used for the smallest sample. With a single sample the
    /// data-driven rules fall back to the unit domain width.
    pub fn resolve(&self, gaps: &[f64]) -> f64 {
        let sum: f64 = gaps.iter().sum();
        match *self {
            _ if gaps.is_empty() && !matches!(self, DummyDeltaRule::Fixed(_)) => 1.0,
            DummyDeltaRule::MeanGap => sum / gaps.len() as f64,
            DummyDeltaRule::SumOverN => sum / (gaps.len() + 1) as f64,
            DummyDeltaRule::LastGap => gaps[gaps.len() - 1],
            DummyDeltaRule::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnnModel {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    /// `output_dim` rows of `N` retrieval coefficients.
    pub alpha: Vec<Vec<f64>>,
    pub a: f64,
    /// Fitting inputs, strictly descending.
    pub ordered_x: Vec<f64>,
    /// Fitting outputs in the same order as `ordered_x`.
    pub ordered_y: Vec<Vec<f64>>,
    /// Original dataset index of each ordered sample.
    pub ordered_index: Vec<usize>,
    pub delta_dummy: f64,
}

/// Builds the network in closed form.
pub fn build_tnn(d: &OrderedDataset, a: f64, rule: DummyDeltaRule) -> Result<TnnModel, TnnError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(TnnError::Sharpness(a));
    }
    let xs = d.xs();
    let n = xs.len();
    let gaps: Vec<f64> = xs.windows(2).map(|w| w[0] - w[1]).collect();
    let dummy = rule.resolve(&gaps);
    for (position, &gap) in gaps.iter().chain(std::iter::once(&dummy)).enumerate() {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(TnnError::DegenerateGap { position, gap });
        }
    }

    let mut weights = Vec::with_capacity(n);
    let mut biases = Vec::with_capacity(n);
    for j in 0..n {
        // neuron j switches between ordered samples s and s + 1
        let s = n - 1 - j;
        let gap = if s + 1 < n { gaps[s] } else { dummy };
        let w = 2.0 * a / gap;
        weights.push(w);
        biases.push(a - w * xs[s]);
    }

    let ys: Vec<&Vec<f64>> = d.samples().iter().map(|s| &s.y).collect();
    let alpha = (0..d.output_dim())
        .map(|c| {
            (0..n)
                .map(|j| {
                    let s = n - 1 - j;
                    if j == 0 {
                        ys[s][c]
                    } else {
                        ys[s][c] - ys[s + 1][c]
                    }
                })
                .collect()
        })
        .collect();

    Ok(TnnModel {
        weights,
        biases,
        alpha,
        a,
        ordered_x: xs,
        ordered_y: ys.into_iter().cloned().collect(),
        ordered_index: d.samples().iter().map(|s| s.index).collect(),
        delta_dummy: dummy,
    })
}

/// Orders `d` and builds a TNN on it.
pub fn fit_tnn(d: &Dataset, a: f64, rule: DummyDeltaRule) -> Result<TnnModel, TnnError> {
    build_tnn(&linear_order(d)?, a, rule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronState {
    On,
    Half,
    Off,
}

impl TnnModel {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn output_dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn pre_activation(&self, x: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w * x + b)
            .collect()
    }

    pub fn hidden(&self, x: f64) -> Vec<f64> {
        self.pre_activation(x).into_iter().map(sigmoid).collect()
    }

    pub fn predict(&self, x: f64) -> Vec<f64> {
        let h = self.hidden(x);
        self.alpha
            .iter()
            .map(|row| row.iter().zip(&h).map(|(a, s)| a * s).sum())
            .collect()
    }

    /// Saturation level `δ = σ(-a)`.
    pub fn delta(&self) -> f64 {
        sigmoid(-self.a)
    }

    /// Largest absolute fitting output over all components.
    pub fn output_bound(&self) -> f64 {
        self.ordered_y
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Guaranteed per-sample fitting error `δ (N+1) U`.
    pub fn error_bound(&self) -> f64 {
        self.delta() * (self.len() as f64 + 1.0) * self.output_bound()
    }

    /// Raw activations plus their saturation pattern. A fitting sample of
    /// rank `k` lights up the first `N-k+1` neurons.
    pub fn activation_pattern(&self, x: f64) -> (Vec<NeuronState>, Vec<f64>) {
        // compared on pre-activations: σ(z) ≥ 1-δ ⇔ z ≥ a
        let tol = 1e-9 * self.a.max(1.0);
        let z = self.pre_activation(x);
        let states = z
            .iter()
            .map(|&z| {
                if z >= self.a - tol {
                    NeuronState::On
                } else if z <= -self.a + tol {
                    NeuronState::Off
                } else {
                    NeuronState::Half
                }
            })
            .collect();
        (states, z.into_iter().map(sigmoid).collect())
    }

    /// Number of leading fully-on neurons; for fitting sample `k` (1-based
    /// rank) this is `N-k+1`.
    pub fn rank_of(&self, x: f64) -> usize {
        self.activation_pattern(x)
            .0
            .iter()
            .take_while(|s| **s == NeuronState::On)
            .count()
    }
}

pub fn tnn_predict(m: &TnnModel, x: f64) -> Vec<f64> {
    m.predict(x)
}

pub fn tnn_activation_pattern(m: &TnnModel, x: f64) -> (Vec<NeuronState>, Vec<f64>) {
    m.activation_pattern(x)
}

pub fn tnn_error_bound(m: &TnnModel) -> f64 {
    m.error_bound()
}

/// Sharpness `a` with `σ(-a) = ε / (U (N+1))`, which caps every fitting
/// error at `ε`.
pub fn required_sharpness(epsilon: f64, n: usize, u: f64) -> Result<f64, TnnError> {
    let limit = u * (n as f64 + 1.0);
    if epsilon.is_nan() || epsilon <= 0.0 || epsilon >= limit {
        return Err(TnnError::InvalidTolerance { epsilon, limit });
    }
    Ok((limit / epsilon - 1.0).ln())
}
