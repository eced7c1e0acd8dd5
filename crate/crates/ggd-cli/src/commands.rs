//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;

use ggd_core::detect::{
    sample_pairs, train_contrastive, train_end_to_end, train_feature_classifier, train_siamese,
    AnyModel, ModelKind, PredictContext, TrainConfig,
};
use ggd_core::gen::{fit_generator, GeneratorKind, GeneratorSpec, TrainedGenerator};
use ggd_core::graph::{self, Corpus, Graph, LabeledGraph};
use ggd_core::scenario::{
    build_scenario, evaluate, run_attribution, run_matrix, summarize, train_and_eval,
    GeneratorCache, MatrixRow, ScenarioInputs, ScenarioKind,
};
use ggd_core::stats::{corpus_features, knn_filter, mmd};
use ggd_core::{seeding, Error, Result};

use crate::config::{self, ExperimentConfig};
use crate::output::{write_atomic, CsvBuilder};
use crate::{Cli, Command, ScenarioCommand};

/// Every run prints its fully resolved configuration first.
fn print_config(command: &str, cli: &Cli, detail: serde_json::Value) {
    let resolved = serde_json::json!({
        "command": command,
        "seed": cli.seed,
        "threads": cli.threads,
        "profile": cli.profile,
        "verbose": cli.verbose,
        "args": detail,
    });
    println!("config: {resolved}");
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate {
            spec,
            reference,
            count,
            out,
            save_model,
            load_model,
        } => cmd_generate(cli, spec, reference.as_deref(), *count, out, save_model.as_deref(), load_model.as_deref()),
        Command::Stats { input, out } => cmd_stats(cli, input, out),
        Command::Filter {
            generated,
            real,
            keep,
            out,
        } => cmd_filter(cli, generated, real, *keep, out),
        Command::Mmd { a, b, bandwidth, out } => cmd_mmd(cli, a, b, *bandwidth, out),
        Command::Train {
            model,
            train,
            config,
            out,
        } => cmd_train(cli, model, train, config.as_deref(), out),
        Command::Predict {
            model_file,
            input,
            references,
            n_k,
            out,
        } => cmd_predict(cli, model_file, input, references.as_deref(), *n_k, out),
        Command::Embed {
            model_file,
            input,
            out,
        } => cmd_embed(cli, model_file, input, out),
        Command::Scenario(ScenarioCommand::Run {
            config,
            out,
            summary,
            timing,
        }) => cmd_scenario_run(cli, config.as_deref(), out, summary.as_deref(), *timing),
        Command::Scenario(ScenarioCommand::Attribution { config, pairs, out }) => {
            cmd_attribution(cli, config.as_deref(), *pairs, out)
        }
        Command::Sweep {
            param,
            values,
            config,
            out,
        } => cmd_sweep(cli, param, values, config.as_deref(), out),
    }
}

fn read_corpus_checked(path: &Path) -> Result<Corpus> {
    let corpus = graph::read_corpus(path)?;
    if corpus.is_empty() {
        return Err(Error::argument(format!("{} holds an empty corpus", path.display())));
    }
    Ok(corpus)
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    cli: &Cli,
    spec_path: &Path,
    reference: Option<&Path>,
    count: usize,
    out: &Path,
    save_model: Option<&Path>,
    load_model: Option<&Path>,
) -> Result<()> {
    let spec: GeneratorSpec = serde_json::from_str(&std::fs::read_to_string(spec_path)?)?;
    print_config(
        "generate",
        cli,
        serde_json::json!({
            "spec": spec,
            "reference": reference.map(|p| p.display().to_string()),
            "count": count,
            "out": out.display().to_string(),
            "save_model": save_model.map(|p| p.display().to_string()),
            "load_model": load_model.map(|p| p.display().to_string()),
        }),
    );

    let fitted = match load_model {
        Some(path) => TrainedGenerator::load(path)?,
        None => {
            let reference_corpus = match reference {
                Some(path) => read_corpus_checked(path)?,
                None => pinned_reference(&spec)?,
            };
            fit_generator(&spec, &reference_corpus, seeding::mix_str(cli.seed, "generate"))?
        }
    };
    let corpus = fitted.sample(count, cli.seed)?;
    write_atomic(out, graph::corpus_to_string(&corpus).as_bytes())?;
    if let Some(path) = save_model {
        write_atomic(path, &fitted.to_bytes()?)?;
    }
    if cli.verbose {
        eprintln!("generated {} graphs from {}", corpus.len(), fitted.spec.id);
    }
    Ok(())
}

/// Without a reference corpus, a spec must pin its node count and shape
/// parameters; neural generators always need data to fit on.
fn pinned_reference(spec: &GeneratorSpec) -> Result<Corpus> {
    let n = spec
        .params
        .get("n")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Config(format!("generator {}: --reference or param n required", spec.id)))?
        as usize;
    let required: &[&str] = match spec.kind {
        GeneratorKind::Er => &[], // edge_prob or edge_count, checked below
        GeneratorKind::Ba => &["m"],
        GeneratorKind::Ws => &["k"],
        _ => {
            return Err(Error::Config(format!(
                "generator {}: neural kinds need --reference",
                spec.id
            )))
        }
    };
    if spec.kind == GeneratorKind::Er
        && !spec.params.contains_key("edge_prob")
        && !spec.params.contains_key("edge_count")
    {
        return Err(Error::Config(format!(
            "generator {}: pin edge_prob or edge_count, or pass --reference",
            spec.id
        )));
    }
    for key in required {
        if !spec.params.contains_key(*key) {
            return Err(Error::Config(format!(
                "generator {}: pin param {key} or pass --reference",
                spec.id
            )));
        }
    }
    Corpus::new(
        vec![LabeledGraph::real(Graph::empty(n.max(1)), "synthetic")],
        0,
    )
}

fn cmd_stats(cli: &Cli, input: &Path, out: &Path) -> Result<()> {
    print_config(
        "stats",
        cli,
        serde_json::json!({ "input": input.display().to_string(), "out": out.display().to_string() }),
    );
    let corpus = read_corpus_checked(input)?;
    let features = corpus_features(&corpus)?;
    let mut csv = CsvBuilder::new(&[
        "graph_id",
        "dataset",
        "authenticity",
        "generator",
        "num_nodes",
        "num_edges",
        "density",
        "diameter",
        "avg_clustering",
        "transitivity",
    ]);
    for (i, (item, f)) in corpus.iter().zip(&features).enumerate() {
        csv.row(&[
            i.to_string(),
            item.dataset_id().to_string(),
            item.authenticity().to_string(),
            item.generator_id().unwrap_or("").to_string(),
            f.num_nodes.to_string(),
            f.num_edges.to_string(),
            f.density.to_string(),
            f.diameter.to_string(),
            f.avg_clustering.to_string(),
            f.transitivity.to_string(),
        ]);
    }
    write_atomic(out, csv.finish().as_bytes())
}

fn cmd_filter(cli: &Cli, generated: &Path, real: &Path, keep: f64, out: &Path) -> Result<()> {
    print_config(
        "filter",
        cli,
        serde_json::json!({
            "generated": generated.display().to_string(),
            "real": real.display().to_string(),
            "keep": keep,
            "out": out.display().to_string(),
        }),
    );
    let generated_corpus = read_corpus_checked(generated)?;
    let real_corpus = read_corpus_checked(real)?;
    let kept = knn_filter(&generated_corpus, &real_corpus, keep)?;
    if cli.verbose {
        eprintln!("kept {}/{} generated graphs", kept.len(), generated_corpus.len());
    }
    write_atomic(out, graph::corpus_to_string(&kept).as_bytes())
}

fn cmd_mmd(cli: &Cli, a: &Path, b: &Path, bandwidth: Option<f64>, out: &Path) -> Result<()> {
    print_config(
        "mmd",
        cli,
        serde_json::json!({
            "a": a.display().to_string(),
            "b": b.display().to_string(),
            "bandwidth": bandwidth,
            "out": out.display().to_string(),
        }),
    );
    let ca = read_corpus_checked(a)?;
    let cb = read_corpus_checked(b)?;
    let result = mmd(&ca, &cb, bandwidth)?;
    let mut csv = CsvBuilder::new(&["value", "bandwidth", "bandwidth_fallback"]);
    csv.row(&[
        result.value.to_string(),
        result.bandwidth.to_string(),
        result.bandwidth_fallback.to_string(),
    ]);
    write_atomic(out, csv.finish().as_bytes())
}

fn train_config_for(cli: &Cli, path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(match cli.profile.as_str() {
            "desk" => config::desk_train_config(),
            _ => TrainConfig::default(),
        }),
    }
}

fn cmd_train(cli: &Cli, model: &str, train: &Path, config_path: Option<&Path>, out: &Path) -> Result<()> {
    let kind: ModelKind = model.parse()?;
    let train_config = train_config_for(cli, config_path)?;
    print_config(
        "train",
        cli,
        serde_json::json!({
            "model": kind.to_string(),
            "train": train.display().to_string(),
            "train_config": train_config,
            "out": out.display().to_string(),
        }),
    );
    let corpus = read_corpus_checked(train)?;
    let seed = seeding::mix_str(cli.seed, "cli-train");
    let model = match kind {
        ModelKind::E2e => AnyModel::EndToEnd(train_end_to_end(&corpus, &train_config, seed)?.0),
        ModelKind::Contrastive => {
            AnyModel::Contrastive(train_contrastive(&corpus, &train_config, seed)?.0)
        }
        ModelKind::Metric => {
            let pairs = sample_pairs(&corpus, train_config.n_ps, seeding::mix(seed, 1))?;
            AnyModel::Metric(train_siamese(&corpus, &pairs, &train_config, seed)?.0)
        }
        ModelKind::Feature => {
            AnyModel::Feature(train_feature_classifier(&corpus, &train_config, seed)?.0)
        }
    };
    write_atomic(out, &model.to_bytes()?)
}

fn cmd_predict(
    cli: &Cli,
    model_file: &Path,
    input: &Path,
    references: Option<&Path>,
    n_k: Option<usize>,
    out: &Path,
) -> Result<()> {
    let model = AnyModel::load(model_file)?;
    let default_n_k = match &model {
        AnyModel::Metric(m) => m.n_k,
        _ => 10,
    };
    let n_k = n_k.unwrap_or(default_n_k);
    print_config(
        "predict",
        cli,
        serde_json::json!({
            "model_file": model_file.display().to_string(),
            "model_kind": model.kind().to_string(),
            "input": input.display().to_string(),
            "references": references.map(|p| p.display().to_string()),
            "n_k": n_k,
            "out": out.display().to_string(),
        }),
    );
    let corpus = read_corpus_checked(input)?;
    let reference_corpus = references.map(read_corpus_checked).transpose()?;
    let ctx = PredictContext {
        references: reference_corpus.as_ref(),
        n_k,
        seed: seeding::mix_str(cli.seed, "cli-predict"),
    };
    let predictions = model.predict_corpus_full(&corpus, &ctx)?;
    let mut csv = CsvBuilder::new(&[
        "graph_id",
        "dataset",
        "authenticity",
        "generator",
        "predicted",
        "p_real",
        "p_generated",
    ]);
    for (i, (item, (label, posteriors))) in corpus.iter().zip(&predictions).enumerate() {
        csv.row(&[
            i.to_string(),
            item.dataset_id().to_string(),
            item.authenticity().to_string(),
            item.generator_id().unwrap_or("").to_string(),
            label.to_string(),
            posteriors[0].to_string(),
            posteriors[1].to_string(),
        ]);
    }
    let truths: Vec<_> = corpus
        .iter()
        .zip(&predictions)
        .map(|(item, (label, _))| (item.authenticity(), *label))
        .collect();
    let metrics = evaluate(&truths)?;
    println!(
        "accuracy: {} f1: {} macro_f1: {}",
        metrics.accuracy, metrics.f1, metrics.macro_f1
    );
    write_atomic(out, csv.finish().as_bytes())
}

fn cmd_embed(cli: &Cli, model_file: &Path, input: &Path, out: &Path) -> Result<()> {
    print_config(
        "embed",
        cli,
        serde_json::json!({
            "model_file": model_file.display().to_string(),
            "input": input.display().to_string(),
            "out": out.display().to_string(),
        }),
    );
    let model = AnyModel::load(model_file)?;
    let corpus = read_corpus_checked(input)?;
    let rows = ggd_core::detect::export_embeddings(&model, &corpus)?;
    let width = rows.first().map(|r| r.embedding.len()).unwrap_or(0);
    let mut header: Vec<String> = ["graph_id", "dataset", "authenticity", "generator"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..width).map(|i| format!("e{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvBuilder::new(&header_refs);
    for row in &rows {
        let mut cells = vec![
            row.graph_id.to_string(),
            row.dataset.clone(),
            row.authenticity.to_string(),
            row.generator.clone().unwrap_or_default(),
        ];
        cells.extend(row.embedding.iter().map(|v| v.to_string()));
        csv.row(&cells);
    }
    write_atomic(out, csv.finish().as_bytes())
}

fn parse_lists(config: &ExperimentConfig) -> Result<(Vec<ScenarioKind>, Vec<ModelKind>)> {
    let scenarios = config
        .scenarios
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<ScenarioKind>>>()?;
    let models = config
        .models
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<ModelKind>>>()?;
    Ok((scenarios, models))
}

fn scenario_inputs<'a>(
    config: &ExperimentConfig,
    datasets: &'a BTreeMap<String, Corpus>,
) -> ScenarioInputs<'a> {
    ScenarioInputs {
        real: datasets,
        seen_datasets: config.datasets.seen.iter().map(|d| d.id.clone()).collect(),
        unseen_datasets: config.datasets.unseen.iter().map(|d| d.id.clone()).collect(),
        seen_generators: config.seen_generators.clone(),
        unseen_generators: config.unseen_generators.clone(),
    }
}

fn matrix_csv(rows: &[MatrixRow]) -> String {
    let mut csv = CsvBuilder::new(&[
        "scenario",
        "model",
        "dataset_profile",
        "seed",
        "accuracy",
        "f1",
        "macro_f1",
        "train_size",
        "test_size",
        "wall_ms",
    ]);
    for row in rows {
        csv.row(&[
            row.scenario.to_string(),
            row.model.to_string(),
            row.profile.clone(),
            row.seed.to_string(),
            row.accuracy.to_string(),
            row.f1.to_string(),
            row.macro_f1.to_string(),
            row.train_size.to_string(),
            row.test_size.to_string(),
            row.wall_ms.to_string(),
        ]);
    }
    csv.finish()
}

fn cmd_scenario_run(
    cli: &Cli,
    config_path: Option<&Path>,
    out: &Path,
    summary_path: Option<&Path>,
    timing: bool,
) -> Result<()> {
    let config = config::load_experiment(config_path, &cli.profile)?;
    print_config("scenario run", cli, serde_json::to_value(&config)?);
    let datasets = config::load_all_datasets(&config)?;
    let (scenarios, models) = parse_lists(&config)?;
    let inputs = scenario_inputs(&config, &datasets);
    let rows = run_matrix(
        &inputs,
        &scenarios,
        &models,
        &config.seeds,
        &config.counts,
        &config.train,
        &config.profile,
        timing,
    )?;
    write_atomic(out, matrix_csv(&rows).as_bytes())?;

    let summaries = summarize(&rows);
    for s in &summaries {
        println!(
            "{} {}: accuracy {:.4} ± {:.4}, f1 {:.4} ± {:.4} ({} seeds)",
            s.scenario, s.model, s.mean_accuracy, s.std_accuracy, s.mean_f1, s.std_f1, s.runs
        );
    }
    if let Some(path) = summary_path {
        let mut csv = CsvBuilder::new(&[
            "scenario",
            "model",
            "mean_accuracy",
            "std_accuracy",
            "mean_f1",
            "std_f1",
            "runs",
        ]);
        for s in &summaries {
            csv.row(&[
                s.scenario.to_string(),
                s.model.to_string(),
                s.mean_accuracy.to_string(),
                s.std_accuracy.to_string(),
                s.mean_f1.to_string(),
                s.std_f1.to_string(),
                s.runs.to_string(),
            ]);
        }
        write_atomic(path, csv.finish().as_bytes())?;
    }
    Ok(())
}

fn cmd_attribution(cli: &Cli, config_path: Option<&Path>, pairs: usize, out: &Path) -> Result<()> {
    let config = config::load_experiment(config_path, &cli.profile)?;
    print_config(
        "scenario attribution",
        cli,
        serde_json::json!({ "experiment": &config, "pairs": pairs, "out": out.display().to_string() }),
    );
    if config.unseen_generators.len() < 2 {
        return Err(Error::Config(
            "attribution needs at least two unseen generators".into(),
        ));
    }
    let datasets = config::load_all_datasets(&config)?;
    let dataset_id = &config.datasets.seen[0].id;
    let reference = &datasets[dataset_id];
    let seed = *config.seeds.first().unwrap_or(&cli.seed);

    // Build the unseen-generator fake corpus: fit each unseen generator on
    // the reference data, sample, quality-filter.
    let per_gen = config.counts.test_per_class.max(50);
    let mut items = Vec::new();
    for (g_idx, spec) in config.unseen_generators.iter().enumerate() {
        let salt = seeding::mix(seeding::mix_str(seed, "attribution-fit"), g_idx as u64);
        let fitted = fit_generator(spec, reference, salt)?;
        let pool_size = (per_gen as f64 / config.counts.keep_fraction).ceil() as usize;
        let pool = fitted.sample(pool_size, seeding::mix(salt, 0x5A))?;
        let filtered = knn_filter(&pool, reference, config.counts.keep_fraction)?;
        items.extend(filtered.items().iter().take(per_gen).cloned());
    }
    let fakes = Corpus::new(items, seed)?;
    let metrics = run_attribution(&fakes, pairs, pairs, &config.train, seed)?;

    let mut csv = CsvBuilder::new(&["pairs_per_class", "accuracy", "f1", "macro_f1"]);
    csv.row(&[
        pairs.to_string(),
        metrics.accuracy.to_string(),
        metrics.f1.to_string(),
        metrics.macro_f1.to_string(),
    ]);
    println!(
        "attribution accuracy: {} f1: {}",
        metrics.accuracy, metrics.f1
    );
    write_atomic(out, csv.finish().as_bytes())
}

fn cmd_sweep(
    cli: &Cli,
    param: &str,
    values: &str,
    config_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut config = config::load_experiment(config_path, &cli.profile)?;
    let parsed_values: Vec<usize> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad sweep value {v:?}")))
        })
        .collect::<Result<_>>()?;
    if parsed_values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    print_config(
        "sweep",
        cli,
        serde_json::json!({
            "param": param,
            "values": parsed_values,
            "experiment": &config,
            "out": out.display().to_string(),
        }),
    );

    let datasets = config::load_all_datasets(&config)?;
    let inputs = scenario_inputs(&config, &datasets);
    let seed = *config.seeds.first().unwrap_or(&cli.seed);
    let mut cache = GeneratorCache::new();
    let run = build_scenario(
        ScenarioKind::ClosedWorld,
        &inputs,
        &config.counts,
        seed,
        &mut cache,
    )?;

    let mut csv = CsvBuilder::new(&["param", "value", "accuracy", "f1", "macro_f1"]);
    match param {
        "n_k" => {
            let (_, model) = train_and_eval(&run, ModelKind::Metric, &config.train, seed)?;
            for &v in &parsed_values {
                let ctx = PredictContext {
                    references: Some(&run.train),
                    n_k: v,
                    seed: seeding::mix_str(seed, "sweep-predict"),
                };
                let predictions = model.predict_corpus(&run.test, &ctx)?;
                let metrics = evaluate(&predictions)?;
                csv.row(&[
                    "n_k".into(),
                    v.to_string(),
                    metrics.accuracy.to_string(),
                    metrics.f1.to_string(),
                    metrics.macro_f1.to_string(),
                ]);
            }
        }
        "n_ps" => {
            for &v in &parsed_values {
                config.train.n_ps = v;
                let (metrics, _) =
                    train_and_eval(&run, ModelKind::Metric, &config.train, seeding::mix(seed, v as u64))?;
                csv.row(&[
                    "n_ps".into(),
                    v.to_string(),
                    metrics.accuracy.to_string(),
                    metrics.f1.to_string(),
                    metrics.macro_f1.to_string(),
                ]);
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown sweep parameter {other:?}; expected n_ps or n_k"
            )))
        }
    }
    write_atomic(out, csv.finish().as_bytes())
}
