//! Experiment configuration: dataset descriptors, generator specs, counts,
//! and training knobs, with built-in `desk` and `paper` profiles.
//!
//! The desk profile is fully synthetic so every command runs offline; the
//! paper profile points at TUDataset directories under `GGD_DATA_DIR`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ggd_core::detect::TrainConfig;
use ggd_core::gen::{GeneratorKind, GeneratorSpec};
use ggd_core::graph::{self, Corpus, LabeledGraph};
use ggd_core::scenario::{synth_ws_corpus, ScenarioCounts};
use ggd_core::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub id: String,
    pub source: DatasetSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Synthetic small-world family.
    SyntheticWs {
        count: usize,
        n_min: usize,
        n_max: usize,
        k: usize,
        beta: f64,
        seed: u64,
    },
    /// TUDataset directory; relative paths resolve under GGD_DATA_DIR.
    Tudataset { path: String },
    /// Corpus in the internal JSONL format.
    Jsonl { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetsConfig {
    pub seen: Vec<DatasetDescriptor>,
    pub unseen: Vec<DatasetDescriptor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub profile: String,
    pub scenarios: Vec<String>,
    pub models: Vec<String>,
    pub seeds: Vec<u64>,
    pub datasets: DatasetsConfig,
    pub seen_generators: Vec<GeneratorSpec>,
    pub unseen_generators: Vec<GeneratorSpec>,
    pub counts: ScenarioCounts,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        desk_profile()
    }
}

fn ws_dataset(id: &str, count: usize, n: (usize, usize), k: usize, beta: f64, seed: u64) -> DatasetDescriptor {
    DatasetDescriptor {
        id: id.to_string(),
        source: DatasetSource::SyntheticWs {
            count,
            n_min: n.0,
            n_max: n.1,
            k,
            beta,
            seed,
        },
    }
}

fn neural_params(epochs: usize) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    m.insert("epochs".into(), serde_json::json!(epochs));
    m
}

/// Small, self-contained profile: synthetic small-world "real" data, seen
/// generators {er, ba, vgae}, unseen {graphite, graphrnn_s}.
pub fn desk_profile() -> ExperimentConfig {
    ExperimentConfig {
        profile: "desk".into(),
        scenarios: vec![
            "closed_world".into(),
            "open_generator".into(),
            "open_set".into(),
            "open_world".into(),
        ],
        models: vec!["e2e".into(), "contrastive".into(), "metric".into(), "feature".into()],
        seeds: vec![1, 2, 3],
        datasets: DatasetsConfig {
            seen: vec![ws_dataset("ws-desk", 700, (20, 40), 4, 0.1, 11)],
            unseen: vec![ws_dataset("ws-desk-far", 500, (40, 60), 8, 0.3, 12)],
        },
        seen_generators: vec![
            GeneratorSpec::new("ba-1", GeneratorKind::Ba, 101),
            GeneratorSpec::new("er-1", GeneratorKind::Er, 102),
            GeneratorSpec {
                id: "vgae-1".into(),
                kind: GeneratorKind::Vgae,
                params: neural_params(20),
                seed: 103,
            },
        ],
        unseen_generators: vec![
            GeneratorSpec {
                id: "graphite-1".into(),
                kind: GeneratorKind::Graphite,
                params: neural_params(20),
                seed: 104,
            },
            GeneratorSpec {
                id: "graphrnn-1".into(),
                kind: GeneratorKind::GraphRnnS,
                params: neural_params(25),
                seed: 105,
            },
        ],
        counts: ScenarioCounts {
            real_per_dataset: 500,
            test_per_class: 100,
            train_fraction: 0.8,
            keep_fraction: 0.2,
        },
        train: desk_train_config(),
    }
}

pub fn desk_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 12,
        n_ps: 600,
        classifier_epochs: 60,
        ..TrainConfig::default()
    }
}

/// Full-scale profile: the seven TUDataset benchmarks, five seen and two
/// unseen, with the full training settings.
pub fn paper_profile() -> ExperimentConfig {
    let tu = |id: &str| DatasetDescriptor {
        id: id.to_string(),
        source: DatasetSource::Tudataset { path: id.to_string() },
    };
    ExperimentConfig {
        profile: "paper".into(),
        datasets: DatasetsConfig {
            seen: vec![tu("AIDS"), tu("Alchemy"), tu("Deezer"), tu("DBLP"), tu("GitHub")],
            unseen: vec![tu("COLLAB"), tu("Twitch")],
        },
        seen_generators: vec![
            GeneratorSpec::new("ba-1", GeneratorKind::Ba, 101),
            GeneratorSpec::new("er-1", GeneratorKind::Er, 102),
            GeneratorSpec {
                id: "vgae-1".into(),
                kind: GeneratorKind::Vgae,
                params: neural_params(200),
                seed: 103,
            },
        ],
        unseen_generators: vec![
            GeneratorSpec::new("ws-1", GeneratorKind::Ws, 106),
            GeneratorSpec {
                id: "graphite-1".into(),
                kind: GeneratorKind::Graphite,
                params: neural_params(200),
                seed: 104,
            },
            GeneratorSpec {
                id: "graphrnn-1".into(),
                kind: GeneratorKind::GraphRnnS,
                params: neural_params(200),
                seed: 105,
            },
        ],
        counts: ScenarioCounts::default(),
        train: TrainConfig::default(),
        ..desk_profile()
    }
}

pub fn builtin_profile(name: &str) -> Result<ExperimentConfig> {
    match name {
        "desk" => Ok(desk_profile()),
        "paper" => Ok(paper_profile()),
        other => Err(Error::Config(format!(
            "unknown profile {other:?}; expected desk or paper"
        ))),
    }
}

/// Load an experiment config: an explicit file wins, otherwise the profile
/// builtin. File configs fall back to desk defaults for missing fields.
pub fn load_experiment(path: Option<&Path>, profile: &str) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let config: ExperimentConfig = serde_json::from_str(&text)?;
            Ok(config)
        }
        None => builtin_profile(profile),
    }
}

/// Root directory for dataset paths: GGD_DATA_DIR or the working directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os("GGD_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve(path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        data_dir().join(p)
    }
}

/// Materialize one dataset. Loaded items are relabeled to the descriptor's
/// id so configs stay the single source of dataset identity.
pub fn load_dataset(descriptor: &DatasetDescriptor) -> Result<Corpus> {
    let corpus = match &descriptor.source {
        DatasetSource::SyntheticWs {
            count,
            n_min,
            n_max,
            k,
            beta,
            seed,
        } => synth_ws_corpus(&descriptor.id, *count, *n_min, *n_max, *k, *beta, *seed)?,
        DatasetSource::Tudataset { path } => graph::parse_tudataset(&resolve(path))?.corpus,
        DatasetSource::Jsonl { path } => graph::read_corpus(&resolve(path))?,
    };
    let items = corpus
        .items()
        .iter()
        .map(|it| {
            if it.is_real() {
                LabeledGraph::real(it.graph().clone(), descriptor.id.clone())
            } else {
                it.clone()
            }
        })
        .collect();
    Corpus::new(items, corpus.seed())
}

/// Load every dataset named by the config.
pub fn load_all_datasets(config: &ExperimentConfig) -> Result<BTreeMap<String, Corpus>> {
    let mut out = BTreeMap::new();
    for d in config.datasets.seen.iter().chain(&config.datasets.unseen) {
        out.insert(d.id.clone(), load_dataset(d)?);
    }
    Ok(out)
}
