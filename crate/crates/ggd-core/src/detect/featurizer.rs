//! Node features for the GNN encoders.
//!
//! Graphs here carry no node attributes, so the input feature of a node is a
//! one-hot encoding of its (clamped) degree.

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturizerMode {
    DegreeOneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFeaturizer {
    pub mode: FeaturizerMode,
    /// Degrees above this land in the last bucket; output width is
    /// `max_degree_bucket + 1`.
    pub max_degree_bucket: usize,
}

impl Default for NodeFeaturizer {
    fn default() -> Self {
        NodeFeaturizer {
            mode: FeaturizerMode::DegreeOneHot,
            max_degree_bucket: 31,
        }
    }
}

impl NodeFeaturizer {
    pub fn width(&self) -> usize {
        self.max_degree_bucket + 1
    }
}

/// Row `u` is the one-hot of `min(deg(u), max_degree_bucket)`.
pub fn node_features(g: &Graph, featurizer: &NodeFeaturizer) -> Tensor {
    let width = featurizer.width();
    let mut out = Tensor::zeros(&[g.n(), width]);
    for u in 0..g.n() {
        let bucket = g.degree(u).min(featurizer.max_degree_bucket);
        *out.at_mut(u, bucket) = 1.0;
    }
    out
}
