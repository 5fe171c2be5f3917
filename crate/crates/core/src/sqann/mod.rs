//! Semi-quantized activation network.
//!
//! Every fitting sample becomes exactly one neuron. A layer-1 neuron stores
//! the raw input; a layer-`k` neuron stores the activation vector the sample
//! produced at layer `k-1` (its fingerprint). Because the double selective
//! activation peaks at exactly 1 only at zero distance, propagating a fitting
//! sample reproduces its own fingerprint and retrieves its stored output.

mod build;
mod trace;

pub use build::{build_sqann, BuildError};
pub use trace::{ConstructionTrace, TraceEvent};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{dsa, ActivationError, DsaParams};
use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationRule {
    /// Activation-weighted mean of the two most activated neurons.
    #[default]
    TwoNeuron,
    /// Output of the single most activated neuron.
    Nearest,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(
        "thresholds must satisfy 0 < tau_ad < tau_act < 1, got tau_ad={tau_ad}, tau_act={tau_act}"
    )]
    Thresholds { tau_ad: f64, tau_act: f64 },
    #[error("max_construction_steps must be positive")]
    ZeroBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqannConfig {
    pub dsa: DsaParams,
    /// A sample joins the current layer when every activation there is below this.
    pub tau_ad: f64,
    /// Activations above this are strong: collisions during construction,
    /// direct retrieval during prediction.
    pub tau_act: f64,
    /// Step budget; `None` means `50 n²` for a dataset of `n` samples.
    pub max_construction_steps: Option<u64>,
    #[serde(default)]
    pub interpolation: InterpolationRule,
}

impl Default for SqannConfig {
    fn default() -> Self {
        Self {
            dsa: DsaParams::default(),
            tau_ad: 0.1,
            tau_act: 0.9,
            max_construction_steps: None,
            interpolation: InterpolationRule::TwoNeuron,
        }
    }
}

impl SqannConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dsa.validate()?;
        if !(0.0 < self.tau_ad && self.tau_ad < self.tau_act && self.tau_act < 1.0) {
            return Err(ConfigError::Thresholds {
                tau_ad: self.tau_ad,
                tau_act: self.tau_act,
            });
        }
        if self.max_construction_steps == Some(0) {
            return Err(ConfigError::ZeroBudget);
        }
        Ok(())
    }

    pub fn budget_for(&self, n: usize) -> u64 {
        self.max_construction_steps
            .unwrap_or_else(|| 50 * (n as u64).pow(2).max(1))
    }

    pub fn regime(&self, activation: f64) -> Regime {
        if activation > self.tau_act {
            Regime::Strong
        } else if activation < self.tau_ad {
            Regime::Weak
        } else {
            Regime::Moderate
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SqannError {
    #[error("input has dimension {found}, layer expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SqannLayer {
    /// Fingerprints η: raw inputs in layer 1, activation vectors deeper.
    pub nodes: Vec<Vec<f64>>,
    pub alphas: Vec<Vec<f64>>,
    /// Original dataset index of the sample housed in each node.
    pub sample_indices: Vec<usize>,
}

impl SqannLayer {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push(&mut self, node: Vec<f64>, alpha: Vec<f64>, sample: usize) {
        self.nodes.push(node);
        self.alphas.push(alpha);
        self.sample_indices.push(sample);
    }

    /// Node dimension, if the layer has any node.
    pub fn node_dim(&self) -> Option<usize> {
        self.nodes.first().map(Vec::len)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn activate(v: &[f64], layer: &SqannLayer, p: &DsaParams) -> Vec<f64> {
    layer
        .nodes
        .iter()
        .map(|eta| dsa(euclidean(v, eta), p))
        .collect()
}

/// Activation of every node of `layer` for input `v`: `dsa(‖v − η_j‖₂)`.
pub fn layer_activation(
    v: &[f64],
    layer: &SqannLayer,
    p: &DsaParams,
) -> Result<Vec<f64>, SqannError> {
    if let Some(expected) = layer.node_dim() {
        if expected != v.len() {
            return Err(SqannError::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
    }
    Ok(activate(v, layer, p))
}

fn argmax(v: &[f64]) -> Option<(usize, f64)> {
    v.iter()
        .copied()
        .enumerate()
        .fold(None, |best, (j, a)| match best {
            Some((_, b)) if b >= a => best,
            _ => Some((j, a)),
        })
}

/// Location of one neuron. Layers and nodes are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronRef {
    pub layer: usize,
    pub node: usize,
    pub activation: f64,
    pub sample_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    /// One activation vector per propagated layer.
    pub activations: Vec<Vec<f64>>,
    /// Earliest layer holding an activation above `tau_act`, with its argmax.
    pub first_strong: Option<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    StrongActivation(NeuronRef),
    Interpolated {
        neurons: Vec<NeuronRef>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutcome {
    pub y: Vec<f64>,
    pub provenance: Provenance,
    pub all_activations: Vec<Vec<f64>>,
}

impl PredictionOutcome {
    pub fn is_interpolated(&self) -> bool {
        matches!(self.provenance, Provenance::Interpolated { .. })
    }

    /// Largest activation seen anywhere in the network.
    pub fn max_activation(&self) -> f64 {
        self.all_activations
            .iter()
            .flatten()
            .fold(0.0f64, |m, a| m.max(*a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Strong,
    Moderate,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronReport {
    pub neuron: NeuronRef,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub sample_index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub weight: f64,
    pub layer: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub outcome: PredictionOutcome,
    pub neurons: Vec<NeuronReport>,
    pub references: Vec<ReferenceSample>,
    /// No activation exceeded `tau_act`.
    pub ood_suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqannModel {
    pub layers: Vec<SqannLayer>,
    pub config: SqannConfig,
    pub input_dim: usize,
    pub output_dim: usize,
    /// The fitting dataset in construction order; neurons refer back to it
    /// through `sample_indices`.
    pub fitting: Dataset,
}

impl SqannModel {
    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(SqannLayer::len).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), SqannError> {
        if x.len() != self.input_dim {
            return Err(SqannError::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Propagates `x` through the first `upto` layers.
    pub fn forward_to_layer(&self, x: &[f64], upto: usize) -> Result<Propagation, SqannError> {
        self.check_input(x)?;
        let p = &self.config.dsa;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(upto);
        let mut first_strong = None;
        for (l, layer) in self.layers.iter().take(upto).enumerate() {
            let input = activations.last().map(Vec::as_slice).unwrap_or(x);
            let v = activate(input, layer, p);
            if first_strong.is_none() {
                if let Some((j, a)) = argmax(&v).filter(|(_, a)| *a > self.config.tau_act) {
                    first_strong = Some((l, j, a));
                }
            }
            activations.push(v);
        }
        Ok(Propagation {
            activations,
            first_strong,
        })
    }

    fn neuron(&self, layer: usize, node: usize, activation: f64) -> NeuronRef {
        NeuronRef {
            layer,
            node,
            activation,
            sample_index: self.layers[layer].sample_indices[node],
        }
    }

    /// Output for `x`, retrieved from the first strongly activated layer or
    /// interpolated from the two globally most activated neurons.
    pub fn predict(&self, x: &[f64]) -> Result<PredictionOutcome, SqannError> {
        let prop = self.forward_to_layer(x, self.layers.len())?;
        if let Some((l, j, a)) = prop.first_strong {
            return Ok(PredictionOutcome {
                y: self.layers[l].alphas[j].clone(),
                provenance: Provenance::StrongActivation(self.neuron(l, j, a)),
                all_activations: prop.activations,
            });
        }

        // ties: higher activation, then lower layer, then lower node
        let mut ranked: Vec<(usize, usize, f64)> = prop
            .activations
            .iter()
            .enumerate()
            .flat_map(|(l, v)| v.iter().enumerate().map(move |(j, a)| (l, j, *a)))
            .collect();
        ranked.sort_by(|p, q| q.2.total_cmp(&p.2).then(p.0.cmp(&q.0)).then(p.1.cmp(&q.1)));
        let take = match self.config.interpolation {
            InterpolationRule::TwoNeuron => 2,
            InterpolationRule::Nearest => 1,
        };
        let chosen: Vec<NeuronRef> = ranked
            .iter()
            .take(take)
            .map(|&(l, j, a)| self.neuron(l, j, a))
            .collect();

        let total: f64 = chosen.iter().map(|n| n.activation).sum();
        let weights: Vec<f64> = if total > 0.0 {
            chosen.iter().map(|n| n.activation / total).collect()
        } else {
            let mut w = vec![0.0; chosen.len()];
            w[0] = 1.0;
            w
        };
        let mut y = vec![0.0; self.output_dim];
        for (n, w) in chosen.iter().zip(&weights) {
            for (acc, v) in y.iter_mut().zip(&self.layers[n.layer].alphas[n.node]) {
                *acc += w * v;
            }
        }
        Ok(PredictionOutcome {
            y,
            provenance: Provenance::Interpolated {
                neurons: chosen,
                weights,
            },
            all_activations: prop.activations,
        })
    }

    /// Prediction together with the fitting samples behind it and the
    /// strong/moderate/weak regime of every neuron.
    pub fn explain(&self, x: &[f64]) -> Result<ExplanationReport, SqannError> {
        let outcome = self.predict(x)?;
        let neurons = outcome
            .all_activations
            .iter()
            .enumerate()
            .flat_map(|(l, v)| v.iter().enumerate().map(move |(j, a)| (l, j, *a)))
            .map(|(l, j, a)| NeuronReport {
                neuron: self.neuron(l, j, a),
                regime: self.config.regime(a),
            })
            .collect();
        let with_weights: Vec<(NeuronRef, f64)> = match &outcome.provenance {
            Provenance::StrongActivation(n) => vec![(*n, 1.0)],
            Provenance::Interpolated { neurons, weights } => neurons
                .iter()
                .copied()
                .zip(weights.iter().copied())
                .collect(),
        };
        let references = with_weights
            .into_iter()
            .map(|(n, weight)| {
                let sample = self
                    .fitting
                    .by_index(n.sample_index)
                    .expect("every neuron houses a fitting sample");
                ReferenceSample {
                    sample_index: n.sample_index,
                    x: sample.x.clone(),
                    y: sample.y.clone(),
                    weight,
                    layer: n.layer,
                    node: n.node,
                }
            })
            .collect();
        let ood_suspect = outcome.is_interpolated();
        Ok(ExplanationReport {
            outcome,
            neurons,
            references,
            ood_suspect,
        })
    }

    /// Layer index housing each fitting sample, keyed by sample index.
    pub fn housing(&self) -> std::collections::BTreeMap<usize, (usize, usize)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| {
                layer
                    .sample_indices
                    .iter()
                    .enumerate()
                    .map(move |(j, s)| (*s, (l, j)))
            })
            .collect()
    }
}

pub fn forward_to_layer(m: &SqannModel, x: &[f64], upto: usize) -> Result<Propagation, SqannError> {
    m.forward_to_layer(x, upto)
}

pub fn sqann_predict(m: &SqannModel, x: &[f64]) -> Result<PredictionOutcome, SqannError> {
    m.predict(x)
}

pub fn explain(m: &SqannModel, x: &[f64]) -> Result<ExplanationReport, SqannError> {
    m.explain(x)
}
