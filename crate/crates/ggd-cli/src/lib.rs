//! Implementation of the `ggd` command-line tool.
//!
//! Every subcommand prints its fully resolved configuration before running,
//! writes outputs atomically (temp file + rename), and is deterministic for
//! a fixed seed. Exit codes: 0 success, 2 usage, 3 I/O failure, 4
//! validation or data errors.

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, Subcommand};

use ggd_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "ggd",
    version,
    about = "Detect machine-generated graphs: build corpora, train detectors, run scenario evaluations"
)]
pub struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Cap the worker-thread count (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Built-in experiment profile: `desk` is small and self-contained,
    /// `paper` expects TUDataset directories under GGD_DATA_DIR.
    #[arg(long, global = true, default_value = "desk")]
    pub profile: String,

    /// Print progress details to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a generated-graph corpus from a generator spec.
    Generate {
        /// Generator spec JSON file ({id, kind, params, seed}).
        #[arg(long)]
        spec: std::path::PathBuf,
        /// Reference corpus (JSONL) used to fit the generator.
        #[arg(long)]
        reference: Option<std::path::PathBuf>,
        /// Number of graphs to sample.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Output corpus (JSONL).
        #[arg(long)]
        out: std::path::PathBuf,
        /// Save the fitted generator to this file.
        #[arg(long)]
        save_model: Option<std::path::PathBuf>,
        /// Reuse a previously fitted generator instead of fitting.
        #[arg(long)]
        load_model: Option<std::path::PathBuf>,
    },

    /// Compute the six statistical features of every graph in a corpus.
    Stats {
        /// Input corpus (JSONL).
        #[arg(long)]
        input: std::path::PathBuf,
        /// Output CSV (one row per graph).
        #[arg(long)]
        out: std::path::PathBuf,
    },

    /// Keep the generated graphs closest to a real corpus (1-NN distance
    /// on standardized features).
    Filter {
        /// Generated corpus (JSONL).
        #[arg(long)]
        generated: std::path::PathBuf,
        /// Real corpus (JSONL).
        #[arg(long)]
        real: std::path::PathBuf,
        /// Fraction of generated graphs to keep.
        #[arg(long, default_value_t = 0.2)]
        keep: f64,
        /// Output corpus (JSONL).
        #[arg(long)]
        out: std::path::PathBuf,
    },

    /// Maximum mean discrepancy between two corpora over the six features.
    Mmd {
        /// First corpus (JSONL).
        #[arg(long)]
        a: std::path::PathBuf,
        /// Second corpus (JSONL).
        #[arg(long)]
        b: std::path::PathBuf,
        /// Gaussian kernel bandwidth; defaults to the median heuristic.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Output CSV (a single scalar row with kernel metadata).
        #[arg(long)]
        out: std::path::PathBuf,
    },

    /// Train a detector on a labeled corpus.
    Train {
        /// Detector kind: e2e, contrastive, metric, or feature.
        #[arg(long)]
        model: String,
        /// Training corpus (JSONL) with both classes present.
        #[arg(long)]
        train: std::path::PathBuf,
        /// Training-config JSON; missing fields fall back to the profile
        /// defaults.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Output model file.
        #[arg(long)]
        out: std::path::PathBuf,
    },

    /// Classify a corpus with a trained detector.
    Predict {
        /// Trained model file.
        #[arg(long)]
        model_file: std::path::PathBuf,
        /// Corpus to classify (JSONL).
        #[arg(long)]
        input: std::path::PathBuf,
        /// Reference corpus for the metric model (JSONL).
        #[arg(long)]
        references: Option<std::path::PathBuf>,
        /// References per label for metric inference; defaults to the
        /// value stored in the model.
        #[arg(long)]
        n_k: Option<usize>,
        /// Output CSV (one row per graph).
        #[arg(long)]
        out: std::path::PathBuf,
    },

    /// Export pre-classifier 128-dimensional embeddings.
    Embed {
        /// Trained model file (e2e, contrastive, or metric).
        #[arg(long)]
        model_file: std::path::PathBuf,
        /// Corpus to embed (JSONL).
        #[arg(long)]
        input: std::path::PathBuf,
        /// Output CSV with columns graph_id, dataset, authenticity,
        /// generator, e0..e127.
        #[arg(long)]
        out: std::path::PathBuf,
    },

    /// Scenario evaluations.
    #[command(subcommand)]
    Scenario(ScenarioCommand),

    /// Sweep a metric-model hyperparameter and emit the accuracy/F1 curve.
    Sweep {
        /// Parameter to sweep: n_ps or n_k.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long)]
        values: String,
        /// Experiment config JSON; defaults to the built-in profile.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Output CSV (one row per value).
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    /// Run the scenario x model x seed matrix and write a result table.
    Run {
        /// Experiment config JSON; defaults to the built-in profile.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Output CSV (one row per scenario x model x seed cell).
        #[arg(long)]
        out: std::path::PathBuf,
        /// Also write a mean/stdev summary CSV.
        #[arg(long)]
        summary: Option<std::path::PathBuf>,
        /// Record real wall-clock times in the table (off by default so
        /// reruns stay byte-identical).
        #[arg(long)]
        timing: bool,
    },
    /// Same-generator attribution on unseen-generator fakes.
    Attribution {
        /// Experiment config JSON; defaults to the built-in profile.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Positive (same-generator) pair count.
        #[arg(long, default_value_t = 2000)]
        pairs: usize,
        /// Output CSV.
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

/// Map an error to the documented exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        _ => 4,
    }
}

/// Single-line machine-parsable error string.
pub fn error_line(err: &Error) -> String {
    let kind = match err {
        Error::Parse(_) => "parse",
        Error::Argument(_) => "argument",
        Error::Split(_) => "split",
        Error::Shape(_) => "shape",
        Error::Train { .. } => "train",
        Error::Pair(_) => "pair",
        Error::Config(_) => "config",
        Error::Leak(_) => "leak",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    let payload = serde_json::json!({ "kind": kind, "message": err.to_string() });
    format!("error: {payload}")
}

pub fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        // Ignore failure when a global pool already exists (tests call run
        // repeatedly in one process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    commands::dispatch(&cli)
}
