//! CLI acceptance: byte-identical outputs under a fixed seed across the
//! whole command suite, documented exit codes, and help/README flag parity.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ggd_core::graph::{self, Corpus, Graph, LabeledGraph};
use ggd_core::seeding;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ggd")
}

fn run_ok(args: &[&str], dir: &Path) {
    let out = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn ggd");
    assert!(
        out.status.success(),
        "ggd {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Mixed-label fixture corpus: small-world reals vs denser random fakes.
fn fixture_corpus(seed: u64) -> Corpus {
    use rand::Rng;
    let mut items = Vec::new();
    for i in 0..36 {
        let item_seed = seeding::per_item(seed, i);
        let mut rng = seeding::rng(item_seed);
        let n = rng.gen_range(12..18);
        let real = ggd_core::gen::ws_generate(n, 4, 0.1, seeding::mix(item_seed, 1)).unwrap();
        items.push(LabeledGraph::real(real, "fixture"));
        let fake = {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.5) {
                        edges.push((u, v));
                    }
                }
            }
            Graph::new(n, &edges).unwrap()
        };
        items.push(LabeledGraph::generated(fake, "fixture", "dense"));
    }
    Corpus::new(items, seed).unwrap()
}

fn write_inputs(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    graph::write_corpus(&dir.join("labeled.jsonl"), &fixture_corpus(400)).unwrap();

    // Real-only and generated-only corpora for filter/mmd.
    let labeled = fixture_corpus(401);
    let reals: Vec<_> = labeled.iter().filter(|it| it.is_real()).cloned().collect();
    let fakes: Vec<_> = labeled.iter().filter(|it| !it.is_real()).cloned().collect();
    graph::write_corpus(&dir.join("real.jsonl"), &Corpus::new(reals, 0).unwrap()).unwrap();
    graph::write_corpus(&dir.join("fake.jsonl"), &Corpus::new(fakes, 0).unwrap()).unwrap();

    fs::write(
        dir.join("er-spec.json"),
        r#"{"id":"er-pin","kind":"er","params":{"n":14,"edge_prob":0.25},"seed":5}"#,
    )
    .unwrap();

    fs::write(
        dir.join("train-config.json"),
        r#"{"epochs": 4, "n_ps": 80, "classifier_epochs": 25, "batch_size": 16}"#,
    )
    .unwrap();

    fs::write(
        dir.join("experiment.json"),
        r#"{
  "profile": "cli-test",
  "scenarios": ["closed_world", "open_generator", "open_set", "open_world"],
  "models": ["e2e", "contrastive", "metric", "feature"],
  "seeds": [1],
  "datasets": {
    "seen": [{"id": "ws-a", "source": {"kind": "synthetic_ws", "count": 90, "n_min": 12, "n_max": 20, "k": 4, "beta": 0.1, "seed": 31}}],
    "unseen": [{"id": "ws-b", "source": {"kind": "synthetic_ws", "count": 90, "n_min": 20, "n_max": 30, "k": 6, "beta": 0.3, "seed": 32}}]
  },
  "seen_generators": [
    {"id": "ba-1", "kind": "ba", "params": {}, "seed": 101},
    {"id": "er-1", "kind": "er", "params": {}, "seed": 102},
    {"id": "vgae-1", "kind": "vgae", "params": {"epochs": 4}, "seed": 103}
  ],
  "unseen_generators": [
    {"id": "graphite-1", "kind": "graphite", "params": {"epochs": 4}, "seed": 104},
    {"id": "graphrnn-1", "kind": "graphrnn_s", "params": {"epochs": 5}, "seed": 105}
  ],
  "counts": {"real_per_dataset": 80, "test_per_class": 16, "train_fraction": 0.8, "keep_fraction": 0.2},
  "train": {"epochs": 4, "n_ps": 100, "classifier_epochs": 25, "batch_size": 16}
}"#,
    )
    .unwrap();
}

/// One full pass over every subcommand, writing all outputs under `out`.
fn run_suite(inputs: &Path, out: &Path) {
    fs::create_dir_all(out).unwrap();
    let p = |name: &str| out.join(name).display().to_string();
    let i = |name: &str| inputs.join(name).display().to_string();

    run_ok(
        &[
            "generate", "--spec", &i("er-spec.json"), "--count", "30",
            "--out", &p("generated.jsonl"), "--save-model", &p("er.ggm"),
            "--seed", "9",
        ],
        inputs,
    );
    run_ok(
        &[
            "generate", "--spec", &i("er-spec.json"), "--load-model", &p("er.ggm"),
            "--count", "10", "--out", &p("generated-reload.jsonl"), "--seed", "10",
        ],
        inputs,
    );
    run_ok(&["stats", "--input", &i("labeled.jsonl"), "--out", &p("stats.csv")], inputs);
    run_ok(
        &[
            "filter", "--generated", &i("fake.jsonl"), "--real", &i("real.jsonl"),
            "--keep", "0.2", "--out", &p("filtered.jsonl"),
        ],
        inputs,
    );
    run_ok(
        &["mmd", "--a", &i("fake.jsonl"), "--b", &i("real.jsonl"), "--out", &p("mmd.csv")],
        inputs,
    );
    for kind in ["e2e", "contrastive", "metric", "feature"] {
        run_ok(
            &[
                "train", "--model", kind, "--train", &i("labeled.jsonl"),
                "--config", &i("train-config.json"),
                "--out", &p(&format!("{kind}.ggm")), "--seed", "11",
            ],
            inputs,
        );
    }
    run_ok(
        &[
            "predict", "--model-file", &p("e2e.ggm"), "--input", &i("labeled.jsonl"),
            "--out", &p("preds-e2e.csv"), "--seed", "12",
        ],
        inputs,
    );
    run_ok(
        &[
            "predict", "--model-file", &p("metric.ggm"), "--input", &i("labeled.jsonl"),
            "--references", &i("labeled.jsonl"), "--n-k", "5",
            "--out", &p("preds-metric.csv"), "--seed", "12",
        ],
        inputs,
    );
    run_ok(
        &[
            "embed", "--model-file", &p("contrastive.ggm"), "--input", &i("labeled.jsonl"),
            "--out", &p("embeddings.csv"),
        ],
        inputs,
    );
    run_ok(
        &[
            "scenario", "run", "--config", &i("experiment.json"),
            "--out", &p("results.csv"), "--summary", &p("summary.csv"),
        ],
        inputs,
    );
    run_ok(
        &[
            "scenario", "attribution", "--config", &i("experiment.json"),
            "--pairs", "60", "--out", &p("attribution.csv"),
        ],
        inputs,
    );
    run_ok(
        &[
            "sweep", "--param", "n_k", "--values", "1,3,5",
            "--config", &i("experiment.json"), "--out", &p("sweep-nk.csv"),
        ],
        inputs,
    );
    run_ok(
        &[
            "sweep", "--param", "n_ps", "--values", "40,80",
            "--config", &i("experiment.json"), "--out", &p("sweep-nps.csv"),
        ],
        inputs,
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.file_name().unwrap().to_string_lossy().to_string(),
                fs::read(&path).unwrap(),
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Criterion 10: the whole suite, run twice with the same seeds, produces
// byte-identical outputs.
// ---------------------------------------------------------------------------
#[test]
fn acceptance_c10_cli_determinism() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs");
    write_inputs(&inputs);

    let (out_a, out_b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_suite(&inputs, &out_a);
    run_suite(&inputs, &out_b);

    let (snap_a, snap_b) = (snapshot(&out_a), snapshot(&out_b));
    assert!(!snap_a.is_empty());
    assert_eq!(
        snap_a.keys().collect::<Vec<_>>(),
        snap_b.keys().collect::<Vec<_>>(),
        "file sets differ"
    );
    let mut diffs = Vec::new();
    for (name, bytes) in &snap_a {
        if snap_b[name] != *bytes {
            diffs.push(name.clone());
        }
    }
    assert!(diffs.is_empty(), "outputs differ between runs: {diffs:?}");

    // Sanity on the table shapes: 4 scenarios x 4 models x 1 seed.
    let results = String::from_utf8(snap_a["results.csv"].clone()).unwrap();
    assert_eq!(results.lines().count(), 1 + 16);
    let sweep = String::from_utf8(snap_a["sweep-nk.csv"].clone()).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 3);

    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE C10 cli-determinism: PASS ({} files byte-identical; {elapsed:?})",
        snap_a.len()
    );
}

// ---------------------------------------------------------------------------
// Exit codes and the machine-parsable error line.
// ---------------------------------------------------------------------------
#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    // Unknown flag -> usage error, exit 2.
    let out = Command::new(bin())
        .args(["stats", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Missing input file -> I/O failure, exit 3.
    let out = Command::new(bin())
        .args([
            "stats",
            "--input",
            tmp.path().join("missing.jsonl").to_str().unwrap(),
            "--out",
            tmp.path().join("x.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err_line = String::from_utf8_lossy(&out.stderr);
    assert!(err_line.starts_with("error: {"), "stderr: {err_line}");
    assert_eq!(err_line.trim().lines().count(), 1, "error must be one line");

    // Validation failure -> exit 4.
    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"not\": \"a corpus\"}\n").unwrap();
    let out = Command::new(bin())
        .args([
            "stats",
            "--input",
            bad.to_str().unwrap(),
            "--out",
            tmp.path().join("y.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

// ---------------------------------------------------------------------------
// Help text and README both enumerate every flag.
// ---------------------------------------------------------------------------
#[test]
fn docs_flag_parity() {
    use clap::CommandFactory;
    let readme = include_str!("../../../README.md");
    let mut command = ggd_cli::Cli::command();
    command.build();

    fn collect(cmd: &clap::Command, prefix: String, out: &mut Vec<(String, String)>) {
        for arg in cmd.get_arguments() {
            if let Some(long) = arg.get_long() {
                if long == "help" || long == "version" {
                    continue;
                }
                out.push((prefix.clone(), format!("--{long}")));
            }
        }
        for sub in cmd.get_subcommands() {
            collect(sub, format!("{prefix} {}", sub.get_name()), out);
        }
    }
    let mut flags = Vec::new();
    collect(&command, "ggd".to_string(), &mut flags);
    assert!(flags.len() > 20, "expected a rich flag set, found {}", flags.len());

    for (path, flag) in &flags {
        assert!(
            readme.contains(flag.as_str()),
            "README does not document {flag} (from `{path}`)"
        );
    }

    // Every flag also appears in its own subcommand help.
    fn check_help(cmd: &mut clap::Command) {
        let help = cmd.render_long_help().to_string();
        let args: Vec<String> = cmd
            .get_arguments()
            .filter_map(|a| a.get_long().map(|l| format!("--{l}")))
            .collect();
        for arg in args {
            assert!(help.contains(&arg), "help for {} misses {arg}", cmd.get_name());
        }
        let names: Vec<String> = cmd
            .get_subcommands()
            .map(|s| s.get_name().to_string())
            .collect();
        for name in names {
            let sub = cmd.find_subcommand_mut(&name).unwrap();
            check_help(sub);
        }
    }
    check_help(&mut command);
}

// ---------------------------------------------------------------------------
// The resolved configuration is printed before execution.
// ---------------------------------------------------------------------------
#[test]
fn resolved_config_is_printed_first() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs");
    write_inputs(&inputs);
    let out = Command::new(bin())
        .args([
            "stats",
            "--input",
            inputs.join("labeled.jsonl").to_str().unwrap(),
            "--out",
            tmp.path().join("s.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let first = stdout.lines().next().unwrap_or_default();
    assert!(first.starts_with("config: {"), "first line: {first}");
    let json: serde_json::Value =
        serde_json::from_str(first.trim_start_matches("config: ")).unwrap();
    assert_eq!(json["command"], "stats");
    assert!(json["args"]["input"].is_string());
    // Defaults are expanded, not omitted.
    assert_eq!(json["profile"], "desk");
    assert_eq!(json["seed"], 0);
}

/// Inputs are never modified by any command.
#[test]
fn commands_do_not_mutate_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let inputs = tmp.path().join("inputs");
    write_inputs(&inputs);
    let before = snapshot(&inputs);
    let out_dir = tmp.path().join("out");
    fs::create_dir_all(&out_dir).unwrap();
    run_ok(
        &[
            "filter",
            "--generated",
            inputs.join("fake.jsonl").to_str().unwrap(),
            "--real",
            inputs.join("real.jsonl").to_str().unwrap(),
            "--out",
            out_dir.join("kept.jsonl").to_str().unwrap(),
        ],
        &inputs,
    );
    assert_eq!(before, snapshot(&inputs));
}

#[allow(dead_code)]
fn unused_path_helper() -> PathBuf {
    PathBuf::new()
}
