//! Experiment matrix: scenario x model x seed, plus the same-generator
//! attribution task.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::detect::{
    metric, sample_pairs, train_contrastive, train_end_to_end, train_feature_classifier,
    train_siamese, AnyModel, ModelKind, PredictContext, TrainConfig,
};
use crate::error::{Error, Result};
use crate::graph::Corpus;
use crate::scenario::{
    build_scenario, evaluate, evaluate_bool, GeneratorCache, Metrics, ScenarioCounts,
    ScenarioInputs, ScenarioKind, ScenarioRun,
};
use crate::seeding;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRow {
    pub scenario: ScenarioKind,
    pub model: ModelKind,
    pub profile: String,
    pub seed: u64,
    pub accuracy: f64,
    pub f1: f64,
    pub macro_f1: f64,
    pub train_size: usize,
    pub test_size: usize,
    /// Wall-clock milliseconds; 0 unless timing was requested, so that
    /// result tables stay byte-identical across reruns.
    pub wall_ms: u64,
}

/// Train one detector on the run's training corpus and evaluate it on the
/// test corpus. The metric model draws its inference references from the
/// training set.
pub fn train_and_eval(
    run: &ScenarioRun,
    model_kind: ModelKind,
    config: &TrainConfig,
    seed: u64,
) -> Result<(Metrics, AnyModel)> {
    let train_seed = seeding::mix_str(seed, "train");
    let model = match model_kind {
        ModelKind::E2e => AnyModel::EndToEnd(train_end_to_end(&run.train, config, train_seed)?.0),
        ModelKind::Contrastive => {
            AnyModel::Contrastive(train_contrastive(&run.train, config, train_seed)?.0)
        }
        ModelKind::Metric => {
            let pairs = sample_pairs(&run.train, config.n_ps, seeding::mix_str(seed, "pairs"))?;
            AnyModel::Metric(train_siamese(&run.train, &pairs, config, train_seed)?.0)
        }
        ModelKind::Feature => {
            AnyModel::Feature(train_feature_classifier(&run.train, config, train_seed)?.0)
        }
    };
    let ctx = PredictContext {
        references: Some(&run.train),
        n_k: config.n_k,
        seed: seeding::mix_str(seed, "predict"),
    };
    let predictions = model.predict_corpus(&run.test, &ctx)?;
    Ok((evaluate(&predictions)?, model))
}

/// Cartesian run over scenarios, models, and seeds. Scenario data is built
/// once per (scenario, seed) and shared across models; each cell carries
/// its own training seed chain. Rows come back in configuration order.
#[allow(clippy::too_many_arguments)]
pub fn run_matrix(
    inputs: &ScenarioInputs,
    scenarios: &[ScenarioKind],
    models: &[ModelKind],
    seeds: &[u64],
    counts: &ScenarioCounts,
    config: &TrainConfig,
    profile: &str,
    timing: bool,
) -> Result<Vec<MatrixRow>> {
    let mut cache = GeneratorCache::new();
    let mut rows = Vec::with_capacity(scenarios.len() * models.len() * seeds.len());
    for &scenario in scenarios {
        for &model in models {
            for &seed in seeds {
                let run = build_scenario(scenario, inputs, counts, seed, &mut cache)?;
                run.check_leak()?;
                let started = std::time::Instant::now();
                let (metrics, _) = train_and_eval(&run, model, config, seed)?;
                let wall_ms = if timing {
                    started.elapsed().as_millis() as u64
                } else {
                    0
                };
                rows.push(MatrixRow {
                    scenario,
                    model,
                    profile: profile.to_string(),
                    seed,
                    accuracy: metrics.accuracy,
                    f1: metrics.f1,
                    macro_f1: metrics.macro_f1,
                    train_size: run.train.len(),
                    test_size: run.test.len(),
                    wall_ms,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub scenario: ScenarioKind,
    pub model: ModelKind,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub runs: usize,
}

/// Mean and population standard deviation across seeds, per (scenario,
/// model) cell, in first-appearance order.
pub fn summarize(rows: &[MatrixRow]) -> Vec<MatrixSummary> {
    let mut order: Vec<(ScenarioKind, ModelKind)> = Vec::new();
    for row in rows {
        if !order.contains(&(row.scenario, row.model)) {
            order.push((row.scenario, row.model));
        }
    }
    order
        .into_iter()
        .map(|(scenario, model)| {
            let cell: Vec<&MatrixRow> = rows
                .iter()
                .filter(|r| r.scenario == scenario && r.model == model)
                .collect();
            let n = cell.len() as f64;
            let mean = |f: &dyn Fn(&MatrixRow) -> f64| cell.iter().map(|r| f(r)).sum::<f64>() / n;
            let std = |f: &dyn Fn(&MatrixRow) -> f64, m: f64| {
                (cell.iter().map(|r| (f(r) - m) * (f(r) - m)).sum::<f64>() / n).sqrt()
            };
            let acc = mean(&|r| r.accuracy);
            let f1 = mean(&|r| r.f1);
            MatrixSummary {
                scenario,
                model,
                mean_accuracy: acc,
                std_accuracy: std(&|r| r.accuracy, acc),
                mean_f1: f1,
                std_f1: std(&|r| r.f1, f1),
                runs: cell.len(),
            }
        })
        .collect()
}

/// Same-generator attribution: can a pair scorer tell whether two graphs
/// from unseen generators came from the same one? Positive pairs share a
/// generator id, negatives do not; pairs split 8:2 into train/eval, the
/// pair model trains on the train share, and pair-level metrics come back
/// with "same generator" as the positive class.
pub fn run_attribution(
    unseen_fakes: &Corpus,
    n_pos: usize,
    n_neg: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<Metrics> {
    let mut groups: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for (i, item) in unseen_fakes.iter().enumerate() {
        let gen = item.generator_id().ok_or_else(|| {
            Error::Config("attribution corpus must contain generated graphs only".into())
        })?;
        groups.entry(gen.to_string()).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::Config(format!(
            "attribution needs at least 2 generators, got {}",
            groups.len()
        )));
    }
    let group_vec: Vec<Vec<usize>> = groups.into_values().collect();
    let pairs = metric::sample_paired(
        &group_vec,
        n_pos,
        n_neg,
        seeding::mix_str(seed, "attribution-pairs"),
    )?;

    // 8:2 split of the pair list.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut seeding::rng(seeding::mix_str(seed, "attribution-split")));
    let train_count = ((0.8 * pairs.len() as f64).round() as usize).clamp(1, pairs.len() - 1);
    let train_pairs: Vec<_> = order[..train_count].iter().map(|&i| pairs[i]).collect();
    let eval_pairs: Vec<_> = order[train_count..].iter().map(|&i| pairs[i]).collect();

    let (model, _) = train_siamese(
        unseen_fakes,
        &train_pairs,
        config,
        seeding::mix_str(seed, "attribution-train"),
    )?;

    let outcomes: Vec<(bool, bool)> = eval_pairs
        .iter()
        .map(|p| {
            let post = model.pair_posterior(
                unseen_fakes.items()[p.a].graph(),
                unseen_fakes.items()[p.b].graph(),
            )?;
            Ok((p.same, post >= 0.5))
        })
        .collect::<Result<_>>()?;
    evaluate_bool(&outcomes)
}
