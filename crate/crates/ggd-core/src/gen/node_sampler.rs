//! Empirical node-count distribution of a reference corpus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Corpus;

/// Samples node counts uniformly from the counts observed in a reference
/// corpus, so a sampled value is always one that actually occurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCountSampler {
    counts: Vec<usize>,
}

impl NodeCountSampler {
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::argument(
                "node-count sampler needs a non-empty reference corpus",
            ));
        }
        Ok(NodeCountSampler {
            counts: corpus.graphs().map(|g| g.n()).collect(),
        })
    }

    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::argument("node-count sampler needs observations"));
        }
        Ok(NodeCountSampler { counts })
    }

    pub fn observed(&self) -> &[usize] {
        &self.counts
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        self.counts[rng.gen_range(0..self.counts.len())]
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, LabeledGraph};
    use crate::seeding;

    #[test]
    fn samples_only_observed_values() {
        let items = vec![
            LabeledGraph::real(Graph::path(10), "d"),
            LabeledGraph::real(Graph::path(12), "d"),
        ];
        let corpus = Corpus::new(items, 0).unwrap();
        let sampler = NodeCountSampler::from_corpus(&corpus).unwrap();
        let mut rng = seeding::rng(1);
        for _ in 0..100 {
            let n = sampler.sample(&mut rng);
            assert!(n == 10 || n == 12);
        }
    }

    #[test]
    fn constant_reference_gives_constant_samples() {
        let sampler = NodeCountSampler::from_counts(vec![10; 5]).unwrap();
        let mut rng = seeding::rng(2);
        assert!((0..50).all(|_| sampler.sample(&mut rng) == 10));
    }
}
