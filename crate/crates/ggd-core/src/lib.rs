//! Toolkit for detecting machine-generated graphs.
//!
//! The library covers the full pipeline:
//!
//! - [`graph`] — immutable undirected graphs, labeled corpora, TUDataset and
//!   JSONL ingestion, deterministic splits.
//! - [`stats`] — six statistical graph features, nearest-neighbor quality
//!   filtering of generated graphs, and MMD two-sample distances.
//! - [`gen`] — graph generators: Erdős–Rényi, Barabási–Albert,
//!   Watts–Strogatz, and three trainable neural generators (variational
//!   autoencoder, iterative-refinement decoder, recurrent edge model).
//! - [`nn`] — a small dense tensor/gradient engine: GCN layers, mean
//!   pooling, GRU cell, Adam, and the losses the detectors need.
//! - [`detect`] — the three GNN-based detectors (end-to-end, contrastive,
//!   metric) plus a statistical-feature baseline.
//! - [`scenario`] — seen/unseen dataset × generator evaluation scenarios,
//!   mixed-corpus construction, metrics, and the experiment matrix runner.
//!
//! Everything is deterministic given a seed: corpora, trained weights, and
//! result tables reproduce byte-for-byte.

pub mod detect;
pub mod error;
pub mod gen;
pub mod graph;
pub mod nn;
pub mod scenario;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};
