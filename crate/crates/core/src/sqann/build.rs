//! Layer-by-layer construction.
//!
//! Samples are consumed from an ordered pool. While layer `k` is open, each
//! pooled sample is propagated through layers `1..=k` and takes one of three
//! paths:
//!
//! * collision: some activation exceeds `tau_act`. The earliest such layer
//!   `l_c` receives the sample as a new node. If `l_c < k`, every layer above
//!   `l_c` is torn down and its samples go back to the front of the pool in
//!   the order they were inserted, then construction resumes at `l_c + 1`;
//! * admission: every activation of the open layer is below `tau_ad`;
//! * filtering: anything else stays in the pool for a deeper layer.
//!
//! A pass over the pool closes the open layer. Each pooled sample caches the
//! activation vectors it produced at closed layers; a collision at `l_c`
//! invalidates the cache from `l_c` upward.

use thiserror::Error;

use super::trace::{ConstructionTrace, TraceEvent};
use super::{activate, euclidean, ConfigError, SqannConfig, SqannLayer, SqannModel};
use crate::data::Dataset;

/// Distance treated as "the same fingerprint".
const SAME_POINT: f64 = 1e-12;
/// Output difference treated as "a different target".
const SAME_OUTPUT: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "sample {sample} reproduces the fingerprint of sample {existing} at layer {layer} with a different output"
    )]
    UnresolvableCollision {
        sample: usize,
        existing: usize,
        layer: usize,
    },
    #[error("construction exceeded {steps} steps while building layer {layer}")]
    BudgetExceeded {
        steps: u64,
        layer: usize,
        trace: ConstructionTrace,
    },
}

enum Verdict {
    Collision {
        layer: usize,
        node: usize,
        input: Vec<f64>,
    },
    Admit {
        input: Vec<f64>,
    },
    Filter,
}

struct Builder<'a> {
    data: &'a Dataset,
    cfg: SqannConfig,
    layers: Vec<SqannLayer>,
    /// Outputs of closed layers, per dataset position.
    cache: Vec<Vec<Vec<f64>>>,
    trace: ConstructionTrace,
}

impl<'a> Builder<'a> {
    fn examine(&mut self, pos: usize, open: usize) -> Verdict {
        let data = self.data;
        let x = &data.samples()[pos].x;
        let p = self.cfg.dsa;
        let tau_act = self.cfg.tau_act;
        let stack = &mut self.cache[pos];
        while stack.len() < open {
            let l = stack.len();
            let input = stack.last().unwrap_or(x);
            let v = activate(input, &self.layers[l], &p);
            if let Some(node) = strongest(&v, tau_act) {
                return Verdict::Collision {
                    layer: l,
                    node,
                    input: input.clone(),
                };
            }
            stack.push(v);
        }
        let input = stack.last().unwrap_or(x);
        let v = activate(input, &self.layers[open], &p);
        if let Some(node) = strongest(&v, tau_act) {
            return Verdict::Collision {
                layer: open,
                node,
                input: input.clone(),
            };
        }
        if v.iter().all(|a| *a < self.cfg.tau_ad) {
            Verdict::Admit {
                input: input.clone(),
            }
        } else {
            Verdict::Filter
        }
    }

    fn house(&mut self, pos: usize, layer: usize, input: Vec<f64>) {
        let s = &self.data.samples()[pos];
        self.layers[layer].push(input, s.y.clone(), s.index);
    }

    fn check_resolvable(
        &self,
        pos: usize,
        layer: usize,
        node: usize,
        input: &[f64],
    ) -> Result<(), BuildError> {
        let l = &self.layers[layer];
        let s = &self.data.samples()[pos];
        if euclidean(input, &l.nodes[node]) < SAME_POINT {
            let differs =
                s.y.iter()
                    .zip(&l.alphas[node])
                    .any(|(a, b)| (a - b).abs() > SAME_OUTPUT);
            if differs {
                return Err(BuildError::UnresolvableCollision {
                    sample: s.index,
                    existing: l.sample_indices[node],
                    layer,
                });
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<(SqannModel, ConstructionTrace), BuildError> {
        let n = self.data.len();
        let budget = self.cfg.budget_for(n);
        let mut pool: Vec<usize> = (0..n).collect();
        // positions by original index, to map returned samples back
        let position: std::collections::HashMap<usize, usize> = self
            .data
            .samples()
            .iter()
            .enumerate()
            .map(|(p, s)| (s.index, p))
            .collect();
        let mut open = 0usize;
        let mut steps = 0u64;

        while !pool.is_empty() {
            if self.layers.len() == open {
                self.layers.push(SqannLayer::default());
            }
            let mut i = 0;
            let mut reopened = false;
            while i < pool.len() {
                steps += 1;
                if steps > budget {
                    self.trace.events.push(TraceEvent::BudgetExceeded {
                        layer: open,
                        step: steps,
                    });
                    self.trace.steps = steps;
                    return Err(BuildError::BudgetExceeded {
                        steps: budget,
                        layer: open,
                        trace: self.trace,
                    });
                }
                let pos = pool[i];
                let sample = self.data.samples()[pos].index;
                match self.examine(pos, open) {
                    Verdict::Collision { layer, node, input } => {
                        self.check_resolvable(pos, layer, node, &input)?;
                        pool.remove(i);
                        let destroyed: Vec<usize> = (layer + 1..self.layers.len()).collect();
                        let returned: Vec<usize> = self.layers[layer + 1..]
                            .iter()
                            .flat_map(|l| l.sample_indices.iter().copied())
                            .collect();
                        self.layers.truncate(layer + 1);
                        self.house(pos, layer, input);
                        self.trace.events.push(TraceEvent::Collision {
                            sample,
                            collided_layer: layer,
                            destroyed_layers: destroyed,
                            returned_indices: returned.clone(),
                            step: steps,
                        });
                        if layer < open {
                            for c in &mut self.cache {
                                c.truncate(layer);
                            }
                            let mut next: Vec<usize> =
                                returned.iter().map(|s| position[s]).collect();
                            next.extend_from_slice(&pool);
                            pool = next;
                            open = layer + 1;
                            reopened = true;
                            break;
                        }
                    }
                    Verdict::Admit { input } => {
                        pool.remove(i);
                        self.house(pos, open, input);
                        self.trace.events.push(TraceEvent::Admitted {
                            sample,
                            layer: open,
                            step: steps,
                        });
                    }
                    Verdict::Filter => {
                        self.trace.events.push(TraceEvent::Filtered {
                            sample,
                            from_layer: open,
                            step: steps,
                        });
                        i += 1;
                    }
                }
            }
            if !reopened {
                open += 1;
            }
        }
        self.trace.steps = steps;

        let model = SqannModel {
            layers: self.layers,
            config: self.cfg,
            input_dim: self.data.input_dim(),
            output_dim: self.data.output_dim(),
            fitting: self.data.clone(),
        };
        Ok((model, self.trace))
    }
}

fn strongest(v: &[f64], tau_act: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, a) in v.iter().enumerate() {
        if *a > tau_act && best.is_none_or(|(_, b)| *a > b) {
            best = Some((j, *a));
        }
    }
    best.map(|(j, _)| j)
}

/// Constructs a network housing every sample of `d`, in dataset order.
pub fn build_sqann(
    d: &Dataset,
    cfg: &SqannConfig,
) -> Result<(SqannModel, ConstructionTrace), BuildError> {
    cfg.validate()?;
    Builder {
        data: d,
        cfg: *cfg,
        layers: Vec::new(),
        cache: vec![Vec::new(); d.len()],
        trace: ConstructionTrace::default(),
    }
    .run()
}
