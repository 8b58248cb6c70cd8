use crate::digraph::{Digraph, GraphMetrics};
use crate::error::{FlockError, Result};
use crate::interaction::{DelayProfile, WeightFunction};

/// Communication topology, weight and delays: everything both engines need
/// besides initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub graph: Digraph,
    pub weight: WeightFunction,
    pub delay: DelayProfile,
}

impl Network {
    pub fn new(graph: Digraph, weight: WeightFunction, delay: DelayProfile) -> Self {
        Self {
            graph,
            weight,
            delay,
        }
    }

    pub fn agents(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn metrics(&self) -> GraphMetrics {
        self.graph.compute_metrics()
    }

    /// Relabels agents with `perm` (agent `v` becomes `perm[v]`). Only
    /// profiles whose value does not depend on the edge label survive
    /// relabeling unchanged; random profiles are rejected.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if !self.delay.is_continuous_in_time() {
            return Err(FlockError::InvalidParameter(
                "random per-edge delays cannot be relabeled".into(),
            ));
        }
        Ok(Self {
            graph: self.graph.permuted(perm)?,
            weight: self.weight.clone(),
            delay: self.delay.clone(),
        })
    }
}
