use serde::{Deserialize, Serialize};

/// One construction decision. Layers are 0-based; samples are original
/// dataset indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    Admitted {
        sample: usize,
        layer: usize,
        step: u64,
    },
    Filtered {
        sample: usize,
        from_layer: usize,
        step: u64,
    },
    Collision {
        sample: usize,
        collided_layer: usize,
        destroyed_layers: Vec<usize>,
        /// Samples of the destroyed layers, layer by layer in insertion order.
        returned_indices: Vec<usize>,
        step: u64,
    },
    BudgetExceeded {
        layer: usize,
        step: u64,
    },
}

impl TraceEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::Admitted { .. } => "admitted",
            TraceEvent::Filtered { .. } => "filtered",
            TraceEvent::Collision { .. } => "collision",
            TraceEvent::BudgetExceeded { .. } => "budget_exceeded",
        }
    }

    pub fn step(&self) -> u64 {
        match self {
            TraceEvent::Admitted { step, .. }
            | TraceEvent::Filtered { step, .. }
            | TraceEvent::Collision { step, .. }
            | TraceEvent::BudgetExceeded { step, .. } => *step,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub events: Vec<TraceEvent>,
    pub steps: u64,
}

impl ConstructionTrace {
    pub fn collisions(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Collision { .. }))
    }

    /// Line-delimited log with header `kind,sample,layer,step`. Budget
    /// events leave the sample column empty.
    pub fn to_event_log(&self) -> String {
        let mut out = String::from("kind,sample,layer,step\n");
        for e in &self.events {
            let (sample, layer) = match e {
                TraceEvent::Admitted { sample, layer, .. } => (Some(*sample), *layer),
                TraceEvent::Filtered {
                    sample, from_layer, ..
                } => (Some(*sample), *from_layer),
                TraceEvent::Collision {
                    sample,
                    collided_layer,
                    ..
                } => (Some(*sample), *collided_layer),
                TraceEvent::BudgetExceeded { layer, .. } => (None, *layer),
            };
            let sample = sample.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.kind(), sample, layer, e.step()));
        }
        out
    }
}
