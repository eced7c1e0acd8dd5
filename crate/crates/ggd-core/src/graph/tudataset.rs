//! TUDataset text-format parser.
//!
//! A dataset directory `DS/` holds `DS_A.txt` (comma-separated 1-based edge
//! pairs, both directions listed) and `DS_graph_indicator.txt` (line *i* is
//! the 1-based graph id of node *i*). `DS_graph_labels.txt` and any
//! attribute files are ignored; detection works on topology only.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Corpus, Graph, LabeledGraph};

/// Parse result: the corpus plus counters for dropped lines.
#[derive(Debug)]
pub struct TuParse {
    pub corpus: Corpus,
    /// Edge lines `u,u` dropped (self-loops are not representable).
    pub self_loops_dropped: usize,
    /// Edge lines beyond the first occurrence of an unordered pair; the
    /// format lists both directions, so roughly half the lines land here.
    pub duplicates_dropped: usize,
}

/// Parse a TUDataset directory into a corpus of real graphs. The dataset id
/// is the directory name.
pub fn parse_tudataset(dir: &Path) -> Result<TuParse> {
    let dataset_id = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Parse(format!("cannot derive dataset name from {dir:?}")))?
        .to_string();

    let indicator_path = resolve(dir, &dataset_id, "graph_indicator.txt")?;
    let edges_path = resolve(dir, &dataset_id, "A.txt")?;

    // graph_of_node[i] = 0-based graph index of 0-based node i.
    let indicator_text = fs::read_to_string(&indicator_path)?;
    let mut graph_of_node = Vec::new();
    let mut num_graphs = 0usize;
    for (lineno, line) in indicator_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let gid: usize = line.parse().map_err(|_| {
            Error::Parse(format!(
                "{}: bad graph id {line:?} on line {}",
                indicator_path.display(),
                lineno + 1
            ))
        })?;
        if gid == 0 {
            return Err(Error::Parse(format!(
                "{}: graph ids are 1-based, got 0 on line {}",
                indicator_path.display(),
                lineno + 1
            )));
        }
        graph_of_node.push(gid - 1);
        num_graphs = num_graphs.max(gid);
    }

    // Per-graph node counts and the node's local 0-based index.
    let mut node_count = vec![0usize; num_graphs];
    let mut local_index = Vec::with_capacity(graph_of_node.len());
    for &g in &graph_of_node {
        local_index.push(node_count[g]);
        node_count[g] += 1;
    }

    let edges_text = fs::read_to_string(&edges_path)?;
    let mut edge_sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); num_graphs];
    let mut self_loops = 0usize;
    let mut duplicates = 0usize;
    for (lineno, line) in edges_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::Parse(format!(
                    "{}: expected 'u, v' on line {}",
                    edges_path.display(),
                    lineno + 1
                )))
            }
        };
        let u: usize = parse_node(a, &edges_path, lineno)?;
        let v: usize = parse_node(b, &edges_path, lineno)?;
        if u > graph_of_node.len() || v > graph_of_node.len() || u == 0 || v == 0 {
            return Err(Error::Parse(format!(
                "{}: node {} on line {} has no indicator entry",
                edges_path.display(),
                u.max(v),
                lineno + 1
            )));
        }
        let (u, v) = (u - 1, v - 1);
        if u == v {
            self_loops += 1;
            continue;
        }
        let g = graph_of_node[u];
        if graph_of_node[v] != g {
            return Err(Error::Parse(format!(
                "{}: edge on line {} crosses graphs",
                edges_path.display(),
                lineno + 1
            )));
        }
        let (lu, lv) = (local_index[u], local_index[v]);
        let e = (lu.min(lv), lu.max(lv));
        if !edge_sets[g].insert(e) {
            duplicates += 1;
        }
    }

    let mut items = Vec::with_capacity(num_graphs);
    for (g, set) in edge_sets.into_iter().enumerate() {
        let graph = Graph::from_canonical(node_count[g], set.into_iter().collect());
        items.push(LabeledGraph::real(graph, dataset_id.clone()));
    }
    let corpus = Corpus::new(items, 0)?;
    Ok(TuParse {
        corpus,
        self_loops_dropped: self_loops,
        duplicates_dropped: duplicates,
    })
}

fn parse_node(s: &str, path: &Path, lineno: usize) -> Result<usize> {
    s.parse().map_err(|_| {
        Error::Parse(format!(
            "{}: bad node id {s:?} on line {}",
            path.display(),
            lineno + 1
        ))
    })
}

/// Accept both `<dataset>_<suffix>` and the literal `DS_<suffix>`.
fn resolve(dir: &Path, dataset_id: &str, suffix: &str) -> Result<std::path::PathBuf> {
    let named = dir.join(format!("{dataset_id}_{suffix}"));
    if named.is_file() {
        return Ok(named);
    }
    let generic = dir.join(format!("DS_{suffix}"));
    if generic.is_file() {
        return Ok(generic);
    }
    Err(Error::Parse(format!(
        "missing {} (looked for {} and DS_{suffix})",
        suffix,
        named.display()
    )))
}
