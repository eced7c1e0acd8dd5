//! Shared graph encoder: a stack of GCN layers followed by mean pooling.
//! All three detectors embed graphs into 128 dimensions with this stack.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Graph;
use crate::nn::layers::GcnCache;
use crate::nn::{mean_pool, mean_pool_backward, normalize_adjacency, Activation, GcnLayer, Real, Tensor};
use crate::seeding;

use super::featurizer::{node_features, NodeFeaturizer};

pub const EMBED_DIM: usize = 128;

/// Default hidden widths of the four-layer stack; the last width is the
/// embedding dimension.
pub const DEFAULT_WIDTHS: [usize; 4] = [64, 64, 128, EMBED_DIM];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderShape {
    pub featurizer: NodeFeaturizer,
    pub widths: Vec<usize>,
}

impl Default for EncoderShape {
    fn default() -> Self {
        EncoderShape {
            featurizer: NodeFeaturizer::default(),
            widths: DEFAULT_WIDTHS.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GcnEncoder {
    pub featurizer: NodeFeaturizer,
    pub layers: Vec<GcnLayer>,
}

pub struct EncoderCache {
    a_hat: Tensor,
    x: Tensor,
    layer_caches: Vec<GcnCache>,
    pub embedding: Vec<Real>,
}

impl GcnEncoder {
    /// Hidden layers use ReLU; the final layer is linear so embeddings are
    /// not confined to the positive orthant.
    pub fn init(shape: &EncoderShape, seed: u64) -> Self {
        let mut layers = Vec::with_capacity(shape.widths.len());
        let mut d_in = shape.featurizer.width();
        for (i, &d_out) in shape.widths.iter().enumerate() {
            let act = if i + 1 == shape.widths.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(GcnLayer::new(d_in, d_out, act, seeding::mix(seed, i as u64)));
            d_in = d_out;
        }
        GcnEncoder {
            featurizer: shape.featurizer,
            layers,
        }
    }

    pub fn shape(&self) -> EncoderShape {
        EncoderShape {
            featurizer: self.featurizer,
            widths: self.layers.iter().map(|l| l.w.shape()[1]).collect(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.layers.last().map(|l| l.w.shape()[1]).unwrap_or(0)
    }

    pub fn forward(&self, g: &Graph) -> Result<EncoderCache> {
        let a_hat = normalize_adjacency(g);
        let x = node_features(g, &self.featurizer);
        let mut layer_caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let cache = layer.forward(&a_hat, &h)?;
            h = cache.out.clone();
            layer_caches.push(cache);
        }
        let embedding = mean_pool(&h)?;
        Ok(EncoderCache {
            a_hat,
            x,
            layer_caches,
            embedding,
        })
    }

    pub fn embed(&self, g: &Graph) -> Result<Vec<Real>> {
        Ok(self.forward(g)?.embedding)
    }

    /// Backward from a gradient on the pooled embedding; accumulates one
    /// weight-gradient tensor per layer into `grads`.
    pub fn backward(
        &self,
        cache: &EncoderCache,
        d_embedding: &[Real],
        grads: &mut [Tensor],
    ) -> Result<()> {
        let n = cache.x.shape()[0];
        let mut d_h = mean_pool_backward(n, d_embedding);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            d_h = layer.backward(&cache.a_hat, &cache.layer_caches[i], &d_h, &mut grads[i])?;
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<Tensor> {
        self.layers.iter().map(|l| l.w.clone()).collect()
    }

    pub fn set_params(&mut self, params: &[Tensor]) {
        for (layer, p) in self.layers.iter_mut().zip(params) {
            layer.w = p.clone();
        }
    }

    pub fn num_param_tensors(&self) -> usize {
        self.layers.len()
    }
}
