//! Internal corpus format: one JSON object per line, UTF-8.
//!
//! ```text
//! {"n":3,"edges":[[0,1],[1,2]],"authenticity":"real","dataset":"AIDS","generator":null}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Authenticity, Corpus, Graph, LabeledGraph};

#[derive(Serialize, Deserialize)]
struct Row {
    n: usize,
    edges: Vec<(usize, usize)>,
    authenticity: Authenticity,
    dataset: String,
    generator: Option<String>,
}

pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for item in corpus.iter() {
        let row = Row {
            n: item.graph().n(),
            edges: item.graph().edges().to_vec(),
            authenticity: item.authenticity(),
            dataset: item.dataset_id().to_string(),
            generator: item.generator_id().map(str::to_string),
        };
        out.push_str(&serde_json::to_string(&row).expect("row serialization cannot fail"));
        out.push('\n');
    }
    out
}

pub fn corpus_from_str(text: &str) -> Result<Corpus> {
    let mut items = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let graph = Graph::new(row.n, &row.edges)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let item = LabeledGraph::from_parts(graph, row.authenticity, row.dataset, row.generator)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        items.push(item);
    }
    Corpus::new(items, 0)
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    fs::write(path, corpus_to_string(corpus))?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let text = fs::read_to_string(path)?;
    corpus_from_str(&text)
}
