//! Graph generators.
//!
//! Three random models (ER, BA, WS) and three trainable neural generators
//! share one interface: a [`GeneratorSpec`] is fitted against a reference
//! corpus into a [`TrainedGenerator`], which then samples labeled corpora.
//! "Fitting" a random model estimates its unset parameters from the
//! reference corpus; fitting a neural model trains it.

pub mod classic;
pub mod graphite;
pub mod graphrnn;
pub mod node_sampler;
pub mod vgae;

pub use classic::{ba_generate, er_generate, ws_generate, ErEdges};
pub use graphite::{fit_graphite, GraphiteModel};
pub use graphrnn::{fit_graphrnn, GraphRnnConfig, GraphRnnModel};
pub use node_sampler::NodeCountSampler;
pub use vgae::{fit_vgae, NeuralGenConfig, VgaeModel};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::featurizer::NodeFeaturizer;
use crate::error::{Error, Result};
use crate::graph::{Corpus, Graph, LabeledGraph};
use crate::nn::{bundle, GruCell, Tensor};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Er,
    Ba,
    Ws,
    Vgae,
    Graphite,
    #[serde(rename = "graphrnn_s")]
    GraphRnnS,
}

impl std::fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GeneratorKind::Er => "er",
            GeneratorKind::Ba => "ba",
            GeneratorKind::Ws => "ws",
            GeneratorKind::Vgae => "vgae",
            GeneratorKind::Graphite => "graphite",
            GeneratorKind::GraphRnnS => "graphrnn_s",
        };
        write!(f, "{s}")
    }
}

/// A generator identity plus its kind-specific parameter map. Parameters
/// left out are estimated from the reference corpus at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    pub kind: GeneratorKind,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(id: impl Into<String>, kind: GeneratorKind, seed: u64) -> Self {
        GeneratorSpec {
            id: id.into(),
            kind,
            params: serde_json::Map::new(),
            seed,
        }
    }

    pub fn with_param(mut self, key: &str, value: serde_json::Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| {
                Error::Config(format!("generator {}: param {key} must be a number", self.id))
            }),
        }
    }

    fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v.as_u64().map(|u| Some(u as usize)).ok_or_else(|| {
                Error::Config(format!(
                    "generator {}: param {key} must be a non-negative integer",
                    self.id
                ))
            }),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.opt_usize(key)?.unwrap_or(default))
    }

    pub fn neural_config(&self) -> Result<NeuralGenConfig> {
        let d = NeuralGenConfig::default();
        Ok(NeuralGenConfig {
            latent_dim: self.usize_or("latent_dim", d.latent_dim)?,
            hidden: self.usize_or("hidden", d.hidden)?,
            epochs: self.usize_or("epochs", d.epochs)?,
            lr: self.f64_or("lr", d.lr)?,
            rounds: self.usize_or("rounds", d.rounds)?,
        })
    }

    pub fn graphrnn_config(&self) -> Result<GraphRnnConfig> {
        let d = GraphRnnConfig::default();
        Ok(GraphRnnConfig {
            hidden: self.usize_or("hidden", d.hidden)?,
            epochs: self.usize_or("epochs", d.epochs)?,
            lr: self.f64_or("lr", d.lr)?,
        })
    }
}

/// Resolved parameters of a fitted random-model generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ClassicFit {
    Er {
        /// Mean density of the reference corpus; used when neither
        /// `edge_prob` nor `edge_count` is pinned in the spec.
        density: f64,
        pinned_prob: Option<f64>,
        pinned_count: Option<usize>,
    },
    Ba {
        m: usize,
    },
    Ws {
        k: usize,
        beta: f64,
    },
}

pub enum GenModel {
    Classic(ClassicFit),
    Vgae(VgaeModel),
    Graphite(GraphiteModel),
    GraphRnn(GraphRnnModel),
}

/// A generator ready to sample: spec, node-count distribution, parameters.
pub struct TrainedGenerator {
    pub spec: GeneratorSpec,
    /// Dataset id of the corpus this generator was fitted on; sampled
    /// graphs inherit it.
    pub fitted_on: String,
    pub node_sampler: NodeCountSampler,
    /// Per-epoch mean loss for neural kinds; empty for random models.
    pub training_log: Vec<f64>,
    pub model: GenModel,
}

/// Fit a generator against a reference corpus. `salt` is mixed with the
/// spec's own seed so one spec can be refit independently per experiment.
pub fn fit_generator(
    spec: &GeneratorSpec,
    reference: &Corpus,
    salt: u64,
) -> Result<TrainedGenerator> {
    if reference.is_empty() {
        return Err(Error::argument(format!(
            "generator {}: reference corpus is empty",
            spec.id
        )));
    }
    let seed = seeding::mix(spec.seed, salt);
    let fitted_on = reference.items()[0].dataset_id().to_string();
    let node_sampler = match spec.opt_usize("n")? {
        Some(n) => {
            if n == 0 {
                return Err(Error::Config(format!("generator {}: n must be >= 1", spec.id)));
            }
            NodeCountSampler::from_counts(vec![n])?
        }
        None => NodeCountSampler::from_corpus(reference)?,
    };

    let (model, training_log) = match spec.kind {
        GeneratorKind::Er => {
            let pinned_prob = spec.opt_f64("edge_prob")?;
            if let Some(p) = pinned_prob {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!(
                        "generator {}: edge_prob {p} outside [0,1]",
                        spec.id
                    )));
                }
            }
            let fit = ClassicFit::Er {
                density: mean_density(reference),
                pinned_prob,
                pinned_count: spec.opt_usize("edge_count")?,
            };
            (GenModel::Classic(fit), Vec::new())
        }
        GeneratorKind::Ba => {
            let m = match spec.opt_usize("m")? {
                Some(m) if m >= 1 => m,
                Some(_) => {
                    return Err(Error::Config(format!("generator {}: m must be >= 1", spec.id)))
                }
                None => ((mean_degree(reference) / 2.0).round() as usize).max(1),
            };
            (GenModel::Classic(ClassicFit::Ba { m }), Vec::new())
        }
        GeneratorKind::Ws => {
            let k = match spec.opt_usize("k")? {
                Some(k) => k,
                None => {
                    let k = mean_degree(reference).round() as usize;
                    (k - k % 2).max(2)
                }
            };
            if k < 2 || k % 2 != 0 {
                return Err(Error::Config(format!(
                    "generator {}: k must be even and >= 2, got {k}",
                    spec.id
                )));
            }
            let beta = spec.f64_or("beta", 0.1)?;
            if !(0.0..=1.0).contains(&beta) {
                return Err(Error::Config(format!(
                    "generator {}: beta {beta} outside [0,1]",
                    spec.id
                )));
            }
            (GenModel::Classic(ClassicFit::Ws { k, beta }), Vec::new())
        }
        GeneratorKind::Vgae => {
            let config = spec.neural_config()?;
            let (model, log) = fit_vgae(reference, &config, seed)?;
            (GenModel::Vgae(model), log)
        }
        GeneratorKind::Graphite => {
            let config = spec.neural_config()?;
            let (model, log) = fit_graphite(reference, &config, seed)?;
            (GenModel::Graphite(model), log)
        }
        GeneratorKind::GraphRnnS => {
            let config = spec.graphrnn_config()?;
            let (model, log) = fit_graphrnn(reference, &config, seed)?;
            (GenModel::GraphRnn(model), log)
        }
    };

    Ok(TrainedGenerator {
        spec: spec.clone(),
        fitted_on,
        node_sampler,
        training_log,
        model,
    })
}

fn mean_density(corpus: &Corpus) -> f64 {
    let total: f64 = corpus
        .graphs()
        .map(|g| {
            let n = g.n();
            if n >= 2 {
                2.0 * g.num_edges() as f64 / (n as f64 * (n - 1) as f64)
            } else {
                0.0
            }
        })
        .sum();
    total / corpus.len() as f64
}

fn mean_degree(corpus: &Corpus) -> f64 {
    let total: f64 = corpus
        .graphs()
        .map(|g| 2.0 * g.num_edges() as f64 / g.n() as f64)
        .sum();
    total / corpus.len() as f64
}

impl TrainedGenerator {
    /// Sample a corpus of `count` generated graphs. Samples are independent
    /// with per-item derived seeds, so the work is element-parallel and the
    /// output is identical regardless of thread count.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Corpus> {
        let seed = seeding::mix(seeding::mix_str(seed, "sample"), self.spec.seed);
        let graphs: Vec<Graph> = match &self.model {
            GenModel::Classic(fit) => self.sample_classic(fit, count, seed)?,
            GenModel::Vgae(model) => vgae::sample_inner_product(
                count,
                seed,
                model.latent_dim(),
                |rng| self.node_sampler.sample(rng),
                None,
            ),
            GenModel::Graphite(model) => {
                let refine = |z: &Tensor| model.decode_refine(z);
                vgae::sample_inner_product(
                    count,
                    seed,
                    model.encoder.latent_dim(),
                    |rng| self.node_sampler.sample(rng),
                    Some(&refine),
                )
            }
            GenModel::GraphRnn(model) => {
                model.sample_graphs(count, seed, |rng| self.node_sampler.sample(rng))
            }
        };
        let items = graphs
            .into_iter()
            .map(|g| LabeledGraph::generated(g, self.fitted_on.clone(), self.spec.id.clone()))
            .collect();
        Corpus::new(items, seed)
    }

    fn sample_classic(&self, fit: &ClassicFit, count: usize, seed: u64) -> Result<Vec<Graph>> {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|i| {
                let item_seed = seeding::per_item(seed, i as u64);
                let mut rng = seeding::rng(seeding::mix(item_seed, 0xA));
                let n = self.node_sampler.sample(&mut rng);
                let draw_seed = seeding::mix(item_seed, 0xB);
                match *fit {
                    ClassicFit::Er {
                        density,
                        pinned_prob,
                        pinned_count,
                    } => {
                        if let Some(p) = pinned_prob {
                            er_generate(n, ErEdges::Prob(p), draw_seed)
                        } else if let Some(m) = pinned_count {
                            let possible = n * (n - 1) / 2;
                            er_generate(n, ErEdges::Count(m.min(possible)), draw_seed)
                        } else {
                            let possible = n * (n - 1) / 2;
                            let m = (density * possible as f64).round() as usize;
                            er_generate(n, ErEdges::Count(m.min(possible)), draw_seed)
                        }
                    }
                    ClassicFit::Ba { m } => {
                        if n < 2 {
                            Ok(Graph::empty(n))
                        } else {
                            ba_generate(n, m.min(n - 1), draw_seed)
                        }
                    }
                    ClassicFit::Ws { k, beta } => {
                        // Largest even k that fits the sampled node count.
                        let mut k_eff = k.min(n.saturating_sub(1));
                        k_eff -= k_eff % 2;
                        if k_eff < 2 {
                            Ok(Graph::empty(n))
                        } else {
                            ws_generate(n, k_eff, beta, draw_seed)
                        }
                    }
                }
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (detail, tensors) = self.detail_and_tensors();
        let meta = GenMeta {
            spec: self.spec.clone(),
            fitted_on: self.fitted_on.clone(),
            node_counts: self.node_sampler.observed().to_vec(),
            training_log: self.training_log.clone(),
            detail,
        };
        let refs: Vec<&Tensor> = tensors.iter().collect();
        bundle::write_bundle(path, &meta, &refs)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (detail, tensors) = self.detail_and_tensors();
        let meta = GenMeta {
            spec: self.spec.clone(),
            fitted_on: self.fitted_on.clone(),
            node_counts: self.node_sampler.observed().to_vec(),
            training_log: self.training_log.clone(),
            detail,
        };
        let refs: Vec<&Tensor> = tensors.iter().collect();
        bundle::to_bytes(&meta, &refs)
    }

    fn detail_and_tensors(&self) -> (GenDetail, Vec<Tensor>) {
        match &self.model {
            GenModel::Classic(fit) => (GenDetail::Classic(fit.clone()), Vec::new()),
            GenModel::Vgae(m) => (
                GenDetail::Vgae {
                    featurizer: m.featurizer,
                    hidden: m.enc_hidden.w.shape()[1],
                    latent: m.latent_dim(),
                },
                m.params(),
            ),
            GenModel::Graphite(m) => (
                GenDetail::Graphite {
                    featurizer: m.encoder.featurizer,
                    hidden: m.encoder.enc_hidden.w.shape()[1],
                    latent: m.encoder.latent_dim(),
                    rounds: m.refine.len(),
                },
                m.params(),
            ),
            GenModel::GraphRnn(m) => (
                GenDetail::GraphRnn {
                    hidden: m.gru.hidden(),
                    m_width: m.m_width,
                },
                m.params(),
            ),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (meta, tensors): (GenMeta, Vec<Tensor>) = bundle::read_bundle(path)?;
        Self::from_parts(meta, tensors)
    }

    fn from_parts(meta: GenMeta, tensors: Vec<Tensor>) -> Result<Self> {
        let model = match meta.detail {
            GenDetail::Classic(fit) => GenModel::Classic(fit),
            GenDetail::Vgae {
                featurizer,
                hidden,
                latent,
            } => {
                let mut m = VgaeModel::init(featurizer, hidden, latent, 0);
                expect_tensors(&tensors, 3)?;
                m.set_params(&tensors);
                GenModel::Vgae(m)
            }
            GenDetail::Graphite {
                featurizer,
                hidden,
                latent,
                rounds,
            } => {
                let mut m = GraphiteModel::init(hidden, latent, rounds, 0);
                m.encoder.featurizer = featurizer;
                expect_tensors(&tensors, 3 + rounds)?;
                m.set_params(&tensors);
                GenModel::Graphite(m)
            }
            GenDetail::GraphRnn { hidden, m_width } => {
                let mut m = GraphRnnModel {
                    m_width,
                    gru: GruCell::new(m_width, hidden, 0),
                    head_w: Tensor::zeros(&[hidden, m_width]),
                    head_b: Tensor::zeros(&[m_width]),
                };
                expect_tensors(&tensors, 11)?;
                m.set_params(&tensors);
                GenModel::GraphRnn(m)
            }
        };
        Ok(TrainedGenerator {
            spec: meta.spec,
            fitted_on: meta.fitted_on,
            node_sampler: NodeCountSampler::from_counts(meta.node_counts)?,
            training_log: meta.training_log,
            model,
        })
    }
}

fn expect_tensors(tensors: &[Tensor], want: usize) -> Result<()> {
    if tensors.len() != want {
        return Err(Error::Parse(format!(
            "generator file has {} tensors, expected {want}",
            tensors.len()
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct GenMeta {
    spec: GeneratorSpec,
    fitted_on: String,
    node_counts: Vec<usize>,
    training_log: Vec<f64>,
    detail: GenDetail,
}

#[derive(Serialize, Deserialize)]
enum GenDetail {
    Classic(ClassicFit),
    Vgae {
        featurizer: NodeFeaturizer,
        hidden: usize,
        latent: usize,
    },
    Graphite {
        featurizer: NodeFeaturizer,
        hidden: usize,
        latent: usize,
        rounds: usize,
    },
    GraphRnn {
        hidden: usize,
        m_width: usize,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::classic::ws_generate;

    fn ws_reference(count: usize, seed: u64) -> Corpus {
        let items: Vec<LabeledGraph> = (0..count)
            .map(|i| {
                let mut rng = seeding::rng(seeding::per_item(seed, i as u64));
                use rand::Rng;
                let n = rng.gen_range(12..20);
                let g = ws_generate(n, 4, 0.1, seeding::per_item(seed, 1000 + i as u64)).unwrap();
                LabeledGraph::real(g, "ws-ref")
            })
            .collect();
        Corpus::new(items, seed).unwrap()
    }

    #[test]
    fn classic_fit_estimates_parameters() {
        let reference = ws_reference(30, 1);
        let spec = GeneratorSpec::new("ba-1", GeneratorKind::Ba, 5);
        let fitted = fit_generator(&spec, &reference, 0).unwrap();
        match &fitted.model {
            GenModel::Classic(ClassicFit::Ba { m }) => assert_eq!(*m, 2),
            _ => panic!("expected a BA fit"),
        }
        let sample = fitted.sample(10, 3).unwrap();
        assert_eq!(sample.len(), 10);
        for item in sample.iter() {
            assert_eq!(item.generator_id(), Some("ba-1"));
            assert_eq!(item.dataset_id(), "ws-ref");
            let n = item.graph().n();
            assert!((12..20).contains(&n));
            assert_eq!(item.graph().num_edges(), 2 * (n - 2));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let reference = ws_reference(20, 2);
        let spec = GeneratorSpec::new("er-1", GeneratorKind::Er, 9);
        let fitted = fit_generator(&spec, &reference, 0).unwrap();
        let a = fitted.sample(25, 7).unwrap();
        let b = fitted.sample(25, 7).unwrap();
        assert_eq!(a.items(), b.items());
        let c = fitted.sample(25, 8).unwrap();
        assert_ne!(a.items(), c.items());
    }

    #[test]
    fn pinned_er_params_are_respected() {
        let reference = ws_reference(5, 3);
        let spec = GeneratorSpec::new("er-fixed", GeneratorKind::Er, 1)
            .with_param("n", serde_json::json!(12))
            .with_param("edge_count", serde_json::json!(20));
        let fitted = fit_generator(&spec, &reference, 0).unwrap();
        let sample = fitted.sample(8, 1).unwrap();
        for item in sample.iter() {
            assert_eq!(item.graph().n(), 12);
            assert_eq!(item.graph().num_edges(), 20);
        }
    }

    #[test]
    fn generator_round_trips_through_disk() {
        let reference = ws_reference(15, 4);
        let spec = GeneratorSpec::new("vgae-1", GeneratorKind::Vgae, 21)
            .with_param("epochs", serde_json::json!(3))
            .with_param("hidden", serde_json::json!(8))
            .with_param("latent_dim", serde_json::json!(4));
        let fitted = fit_generator(&spec, &reference, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.ggm");
        fitted.save(&path).unwrap();
        let loaded = TrainedGenerator::load(&path).unwrap();
        assert_eq!(loaded.spec, fitted.spec);
        assert_eq!(loaded.training_log, fitted.training_log);
        // Saved and reloaded generators produce identical bytes again.
        assert_eq!(fitted.to_bytes().unwrap(), loaded.to_bytes().unwrap());
    }

    #[test]
    fn generated_graphs_satisfy_graph_invariants() {
        let reference = ws_reference(10, 6);
        for kind in [GeneratorKind::Er, GeneratorKind::Ba, GeneratorKind::Ws] {
            let spec = GeneratorSpec::new(format!("{kind}-inv"), kind, 17);
            let fitted = fit_generator(&spec, &reference, 0).unwrap();
            let sample = fitted.sample(20, 5).unwrap();
            for item in sample.iter() {
                let g = item.graph();
                // Rebuilding through the validating constructor checks
                // no self-loops, no duplicates, and index ranges.
                Graph::new(g.n(), g.edges()).unwrap();
            }
        }
    }
}
