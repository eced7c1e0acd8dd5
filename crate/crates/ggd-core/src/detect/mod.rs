//! Detectors for machine-generated graphs.
//!
//! Three GNN-based models share the same 128-dimensional graph encoder:
//!
//! - [`end_to_end`] — GCN stack + linear head trained with cross-entropy.
//! - [`contrastive`] — self-supervised encoder (augmented views, NT-Xent)
//!   with a margin classifier on the frozen embeddings.
//! - [`metric`] — weight-shared siamese pair scorer with reference-averaged
//!   inference.
//!
//! [`feature_model`] is the statistical-feature baseline.

pub mod augment;
pub mod contrastive;
pub mod encoder;
pub mod end_to_end;
pub mod featurizer;
pub mod feature_model;
pub mod metric;

pub use augment::{augment, AugmentKind};
pub use contrastive::{
    train_contrastive, train_contrastive_encoder, train_linear_classifier, ContrastiveModel,
    LinearClassifier,
};
pub use encoder::{EncoderShape, GcnEncoder, EMBED_DIM};
pub use end_to_end::{predict_end_to_end, train_end_to_end, EndToEndModel};
pub use featurizer::{node_features, FeaturizerMode, NodeFeaturizer};
pub use feature_model::{predict_feature, train_feature_classifier, FeatureModel};
pub use metric::{
    attribution_predict, metric_predict, sample_pairs, train_siamese, MetricModel, PairSample,
    ReferenceEmbeddings,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Authenticity, Corpus, Graph};
use crate::nn::{bundle, Activation, Linear, Real, Tensor};
use crate::stats::FeatureScaler;

/// Shared training knobs. The defaults are the full-scale settings; small
/// profiles override epoch counts and the pair budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// NT-Xent temperature.
    pub tau: f64,
    /// Augmentation strength for contrastive views.
    pub aug_ratio: f64,
    /// Same-label pair budget for the siamese stage (total pairs = 2x).
    pub n_ps: usize,
    /// References per label for metric inference.
    pub n_k: usize,
    pub classifier_epochs: usize,
    pub classifier_lr: f64,
    /// L2 penalty of the margin classifier.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 0.001,
            batch_size: 32,
            tau: 0.5,
            aug_ratio: 0.2,
            n_ps: 20_000,
            n_k: 10,
            classifier_epochs: 100,
            classifier_lr: 0.01,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    E2e,
    Contrastive,
    Metric,
    Feature,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::E2e => "e2e",
            ModelKind::Contrastive => "contrastive",
            ModelKind::Metric => "metric",
            ModelKind::Feature => "feature",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e2e" => Ok(ModelKind::E2e),
            "contrastive" => Ok(ModelKind::Contrastive),
            "metric" => Ok(ModelKind::Metric),
            "feature" => Ok(ModelKind::Feature),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Any trained detector, for the unified train/predict/embed surface.
pub enum AnyModel {
    EndToEnd(EndToEndModel),
    Contrastive(ContrastiveModel),
    Metric(MetricModel),
    Feature(FeatureModel),
}

/// Extra inputs some models need at inference time.
pub struct PredictContext<'a> {
    /// Reference corpus for metric inference.
    pub references: Option<&'a Corpus>,
    pub n_k: usize,
    pub seed: u64,
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::EndToEnd(_) => ModelKind::E2e,
            AnyModel::Contrastive(_) => ModelKind::Contrastive,
            AnyModel::Metric(_) => ModelKind::Metric,
            AnyModel::Feature(_) => ModelKind::Feature,
        }
    }

    /// Pre-classifier 128-dimensional embedding; the feature baseline has
    /// none.
    pub fn embed(&self, g: &Graph) -> Result<Vec<Real>> {
        match self {
            AnyModel::EndToEnd(m) => m.encoder.embed(g),
            AnyModel::Contrastive(m) => m.embed(g),
            AnyModel::Metric(m) => m.embed(g),
            AnyModel::Feature(_) => Err(Error::argument(
                "the feature baseline has no graph embedding to export",
            )),
        }
    }

    pub fn predict(&self, g: &Graph, ctx: &PredictContext) -> Result<(Authenticity, [f64; 2])> {
        match self {
            AnyModel::EndToEnd(m) => predict_end_to_end(m, g),
            AnyModel::Contrastive(m) => m.predict(g),
            AnyModel::Feature(m) => predict_feature(m, g),
            AnyModel::Metric(m) => {
                let refs = ctx.references.ok_or_else(|| {
                    Error::argument("metric prediction needs a reference corpus")
                })?;
                metric::metric_predict(m, g, refs, ctx.n_k, ctx.seed)
            }
        }
    }

    /// Predict a whole corpus. Element-parallel; for the metric model the
    /// reference embeddings are computed once up front.
    pub fn predict_corpus(
        &self,
        corpus: &Corpus,
        ctx: &PredictContext,
    ) -> Result<Vec<(Authenticity, Authenticity)>> {
        match self {
            AnyModel::Metric(m) => {
                let refs = ctx.references.ok_or_else(|| {
                    Error::argument("metric prediction needs a reference corpus")
                })?;
                let embedded = ReferenceEmbeddings::build(m, refs)?;
                corpus
                    .items()
                    .par_iter()
                    .map(|item| {
                        let (label, _) = metric::metric_predict_embedded(
                            m,
                            item.graph(),
                            &embedded,
                            ctx.n_k,
                            ctx.seed,
                        )?;
                        Ok((item.authenticity(), label))
                    })
                    .collect()
            }
            _ => corpus
                .items()
                .par_iter()
                .map(|item| {
                    let (label, _) = self.predict(item.graph(), ctx)?;
                    Ok((item.authenticity(), label))
                })
                .collect(),
        }
    }

    /// Predicted label plus posteriors for every graph, in corpus order.
    pub fn predict_corpus_full(
        &self,
        corpus: &Corpus,
        ctx: &PredictContext,
    ) -> Result<Vec<(Authenticity, [f64; 2])>> {
        match self {
            AnyModel::Metric(m) => {
                let refs = ctx.references.ok_or_else(|| {
                    Error::argument("metric prediction needs a reference corpus")
                })?;
                let embedded = ReferenceEmbeddings::build(m, refs)?;
                corpus
                    .items()
                    .par_iter()
                    .map(|item| {
                        metric::metric_predict_embedded(m, item.graph(), &embedded, ctx.n_k, ctx.seed)
                    })
                    .collect()
            }
            _ => corpus
                .items()
                .par_iter()
                .map(|item| self.predict(item.graph(), ctx))
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let (meta, tensors) = self.meta_and_tensors();
        let refs: Vec<&Tensor> = tensors.iter().collect();
        bundle::to_bytes(&meta, &refs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (meta, tensors): (ModelMeta, Vec<Tensor>) = bundle::read_bundle(path)?;
        Self::from_parts(meta, tensors)
    }

    fn meta_and_tensors(&self) -> (ModelMeta, Vec<Tensor>) {
        match self {
            AnyModel::EndToEnd(m) => {
                let mut tensors = m.encoder.params();
                tensors.push(m.classifier.w.clone());
                tensors.push(m.classifier.b.clone());
                (
                    ModelMeta::EndToEnd {
                        shape: m.encoder.shape(),
                    },
                    tensors,
                )
            }
            AnyModel::Contrastive(m) => {
                let mut tensors = m.encoder.params();
                tensors.push(m.proj1.w.clone());
                tensors.push(m.proj1.b.clone());
                tensors.push(m.proj2.w.clone());
                tensors.push(m.proj2.b.clone());
                if let Some(clf) = &m.classifier {
                    tensors.push(clf.w.clone());
                    tensors.push(Tensor::vector(vec![clf.b]));
                }
                (
                    ModelMeta::Contrastive {
                        shape: m.encoder.shape(),
                        tau: m.tau as f64,
                        aug_ratio: m.aug_ratio,
                        has_classifier: m.classifier.is_some(),
                    },
                    tensors,
                )
            }
            AnyModel::Metric(m) => {
                let mut tensors = m.encoder.params();
                tensors.push(m.head_w.clone());
                tensors.push(Tensor::vector(vec![m.head_b]));
                (
                    ModelMeta::Metric {
                        shape: m.encoder.shape(),
                        n_ps: m.n_ps,
                        n_k: m.n_k,
                    },
                    tensors,
                )
            }
            AnyModel::Feature(m) => (
                ModelMeta::Feature {
                    scaler: m.scaler.clone(),
                },
                vec![
                    m.l1.w.clone(),
                    m.l1.b.clone(),
                    m.l2.w.clone(),
                    m.l2.b.clone(),
                ],
            ),
        }
    }

    fn from_parts(meta: ModelMeta, tensors: Vec<Tensor>) -> Result<Self> {
        let take = |tensors: &[Tensor], want: usize| -> Result<()> {
            if tensors.len() != want {
                return Err(Error::Parse(format!(
                    "model file has {} tensors, expected {want}",
                    tensors.len()
                )));
            }
            Ok(())
        };
        match meta {
            ModelMeta::EndToEnd { shape } => {
                let mut m = EndToEndModel::init(&shape, 0);
                take(&tensors, m.encoder.num_param_tensors() + 2)?;
                m.set_params(&tensors);
                Ok(AnyModel::EndToEnd(m))
            }
            ModelMeta::Contrastive {
                shape,
                tau,
                aug_ratio,
                has_classifier,
            } => {
                let mut m = ContrastiveModel::init(&shape, tau as Real, aug_ratio, 0);
                let enc = m.encoder.num_param_tensors();
                let base = enc + 4;
                take(&tensors, if has_classifier { base + 2 } else { base })?;
                m.encoder.set_params(&tensors[..enc]);
                m.proj1.w = tensors[enc].clone();
                m.proj1.b = tensors[enc + 1].clone();
                m.proj2.w = tensors[enc + 2].clone();
                m.proj2.b = tensors[enc + 3].clone();
                if has_classifier {
                    m.classifier = Some(LinearClassifier {
                        w: tensors[base].clone(),
                        b: tensors[base + 1].data()[0],
                    });
                }
                Ok(AnyModel::Contrastive(m))
            }
            ModelMeta::Metric { shape, n_ps, n_k } => {
                let mut m = MetricModel::init(&shape, n_ps, n_k, 0);
                take(&tensors, m.encoder.num_param_tensors() + 2)?;
                m.set_params(&tensors);
                Ok(AnyModel::Metric(m))
            }
            ModelMeta::Feature { scaler } => {
                take(&tensors, 4)?;
                let mut m = FeatureModel {
                    scaler,
                    l1: Linear::new(
                        crate::stats::FEATURE_COUNT,
                        feature_model::HIDDEN,
                        Activation::Relu,
                        0,
                    ),
                    l2: Linear::new(feature_model::HIDDEN, 2, Activation::Identity, 0),
                };
                m.l1.w = tensors[0].clone();
                m.l1.b = tensors[1].clone();
                m.l2.w = tensors[2].clone();
                m.l2.b = tensors[3].clone();
                Ok(AnyModel::Feature(m))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelMeta {
    EndToEnd {
        shape: EncoderShape,
    },
    Contrastive {
        shape: EncoderShape,
        tau: f64,
        aug_ratio: f64,
        has_classifier: bool,
    },
    Metric {
        shape: EncoderShape,
        n_ps: usize,
        n_k: usize,
    },
    Feature {
        scaler: FeatureScaler,
    },
}

/// One exported embedding row.
pub struct EmbeddingRow {
    pub graph_id: usize,
    pub dataset: String,
    pub authenticity: Authenticity,
    pub generator: Option<String>,
    pub embedding: Vec<Real>,
}

/// Pre-classifier embeddings for a whole corpus, in corpus order.
pub fn export_embeddings(model: &AnyModel, corpus: &Corpus) -> Result<Vec<EmbeddingRow>> {
    corpus
        .items()
        .par_iter()
        .enumerate()
        .map(|(graph_id, item)| {
            Ok(EmbeddingRow {
                graph_id,
                dataset: item.dataset_id().to_string(),
                authenticity: item.authenticity(),
                generator: item.generator_id().map(str::to_string),
                embedding: model.embed(item.graph())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;

    fn fixture_corpus() -> Corpus {
        let mut items = Vec::new();
        for _ in 0..6 {
            items.push(LabeledGraph::real(Graph::complete(3), "d"));
            items.push(LabeledGraph::generated(Graph::empty(3), "d", "g"));
        }
        Corpus::new(items, 0).unwrap()
    }

    fn quick_config() -> TrainConfig {
        TrainConfig {
            epochs: 6,
            n_ps: 24,
            classifier_epochs: 30,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn every_model_kind_round_trips_through_disk() {
        let corpus = fixture_corpus();
        let config = quick_config();
        let dir = tempfile::tempdir().unwrap();

        let (e2e, _) = train_end_to_end(&corpus, &config, 1).unwrap();
        let (ctr, _) = train_contrastive(&corpus, &config, 2).unwrap();
        let pairs = sample_pairs(&corpus, config.n_ps, 3).unwrap();
        let (met, _) = train_siamese(&corpus, &pairs, &config, 3).unwrap();
        let (feat, _) = train_feature_classifier(&corpus, &config, 4).unwrap();

        for (name, model) in [
            ("e2e", AnyModel::EndToEnd(e2e)),
            ("contrastive", AnyModel::Contrastive(ctr)),
            ("metric", AnyModel::Metric(met)),
            ("feature", AnyModel::Feature(feat)),
        ] {
            let path = dir.path().join(format!("{name}.ggm"));
            model.save(&path).unwrap();
            let loaded = AnyModel::load(&path).unwrap();
            assert_eq!(loaded.kind(), model.kind());
            // Identical bytes after a round trip.
            assert_eq!(model.to_bytes().unwrap(), loaded.to_bytes().unwrap());

            let ctx = PredictContext {
                references: Some(&corpus),
                n_k: 3,
                seed: 9,
            };
            let g = Graph::complete(3);
            let a = model.predict(&g, &ctx).unwrap();
            let b = loaded.predict(&g, &ctx).unwrap();
            assert_eq!(a.0, b.0);
        }
    }

    #[test]
    fn embedding_export_has_full_width_and_row_count() {
        let corpus = fixture_corpus();
        let (e2e, _) = train_end_to_end(&corpus, &quick_config(), 5).unwrap();
        let model = AnyModel::EndToEnd(e2e);
        let rows = export_embeddings(&model, &corpus).unwrap();
        assert_eq!(rows.len(), corpus.len());
        assert!(rows.iter().all(|r| r.embedding.len() == EMBED_DIM));
        // Identical graphs embed identically.
        assert_eq!(rows[0].embedding, rows[2].embedding);
    }

    #[test]
    fn feature_model_refuses_to_export_embeddings() {
        let corpus = fixture_corpus();
        let (feat, _) = train_feature_classifier(&corpus, &quick_config(), 6).unwrap();
        let model = AnyModel::Feature(feat);
        assert!(export_embeddings(&model, &corpus).is_err());
    }
}
