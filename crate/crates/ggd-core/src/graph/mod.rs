//! Graph representation and corpus handling.
//!
//! [`Graph`] is an immutable undirected simple graph: no self-loops, no
//! duplicate edges, node indices in `[0, n)`. [`Corpus`] is an ordered list
//! of [`LabeledGraph`]s with real/generated provenance; corpora are what
//! the generators produce and the detectors consume.

mod jsonl;
mod tudataset;

pub use jsonl::{corpus_from_str, corpus_to_string, read_corpus, write_corpus};
pub use tudataset::{parse_tudataset, TuParse};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// Immutable undirected simple graph.
///
/// Edges are stored canonically as `(u, v)` with `u < v`, sorted; a sorted
/// adjacency list is built at construction for O(deg) neighbor access.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}
impl Eq for Graph {}

impl Graph {
    /// Build a graph, validating every edge. Self-loops, out-of-range
    /// endpoints, and duplicates (in either orientation) are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut canon = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::argument(format!("self-loop at node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::argument(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !canon.insert(e) {
                return Err(Error::argument(format!("duplicate edge ({},{})", e.0, e.1)));
            }
        }
        Ok(Self::from_canonical(n, canon.into_iter().collect()))
    }

    /// Internal constructor for edge lists already known to be canonical
    /// (u < v, sorted, unique, in range).
    pub(crate) fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v || u >= self.n || v >= self.n {
            return false;
        }
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Degree of every node; sums to `2 * num_edges()`.
    pub fn degree_sequence(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Connected components as a partition of `[0, n)`. Each component is
    /// sorted; components are ordered by their smallest node.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Map node `u` to `permutation[u]`. The permutation must be a
    /// bijection on `[0, n)`; the result is isomorphic to the input.
    pub fn relabel_nodes(&self, permutation: &[usize]) -> Result<Graph> {
        if permutation.len() != self.n {
            return Err(Error::argument(format!(
                "permutation length {} != n {}",
                permutation.len(),
                self.n
            )));
        }
        let mut hit = vec![false; self.n];
        for &p in permutation {
            if p >= self.n || hit[p] {
                return Err(Error::argument("permutation is not a bijection"));
            }
            hit[p] = true;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (permutation[u], permutation[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        let mut canon: Vec<_> = edges;
        canon.sort_unstable();
        Ok(Graph::from_canonical(self.n, canon))
    }

    // Small named graphs, used by fixtures and the synthetic profiles.

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Graph::from_canonical(n, edges)
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|u| (u, u + 1)).collect();
        Graph::from_canonical(n, edges)
    }

    /// Star with node 0 as the center and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
        Graph::from_canonical(leaves + 1, edges)
    }

    pub fn cycle(n: usize) -> Graph {
        if n < 3 {
            return Graph::path(n);
        }
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|u| (u, u + 1)).collect();
        edges.push((0, n - 1));
        edges.sort_unstable();
        Graph::from_canonical(n, edges)
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_canonical(n, Vec::new())
    }
}

/// Whether a graph came from an observed dataset or from a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Authenticity {
    Real,
    Generated,
}

impl std::fmt::Display for Authenticity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Authenticity::Real => write!(f, "real"),
            Authenticity::Generated => write!(f, "generated"),
        }
    }
}

/// A graph plus its provenance. `generator_id` is present exactly when the
/// graph is generated.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    graph: Graph,
    authenticity: Authenticity,
    dataset_id: String,
    generator_id: Option<String>,
}

impl LabeledGraph {
    pub fn real(graph: Graph, dataset_id: impl Into<String>) -> Self {
        LabeledGraph {
            graph,
            authenticity: Authenticity::Real,
            dataset_id: dataset_id.into(),
            generator_id: None,
        }
    }

    pub fn generated(
        graph: Graph,
        dataset_id: impl Into<String>,
        generator_id: impl Into<String>,
    ) -> Self {
        LabeledGraph {
            graph,
            authenticity: Authenticity::Generated,
            dataset_id: dataset_id.into(),
            generator_id: Some(generator_id.into()),
        }
    }

    pub(crate) fn from_parts(
        graph: Graph,
        authenticity: Authenticity,
        dataset_id: String,
        generator_id: Option<String>,
    ) -> Result<Self> {
        match (authenticity, &generator_id) {
            (Authenticity::Real, Some(_)) => {
                Err(Error::argument("real graph carries a generator id"))
            }
            (Authenticity::Generated, None) => {
                Err(Error::argument("generated graph is missing a generator id"))
            }
            _ => Ok(LabeledGraph {
                graph,
                authenticity,
                dataset_id,
                generator_id,
            }),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn authenticity(&self) -> Authenticity {
        self.authenticity
    }

    pub fn is_real(&self) -> bool {
        self.authenticity == Authenticity::Real
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn generator_id(&self) -> Option<&str> {
        self.generator_id.as_deref()
    }
}

/// Ordered list of labeled graphs. Item order is deterministic given the
/// seed that produced the corpus; corpora never contain empty graphs
/// (mean pooling divides by the node count).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    items: Vec<LabeledGraph>,
    seed: u64,
}

impl Corpus {
    pub fn new(items: Vec<LabeledGraph>, seed: u64) -> Result<Self> {
        if let Some(pos) = items.iter().position(|it| it.graph().n() == 0) {
            return Err(Error::argument(format!(
                "corpus item {pos} has zero nodes"
            )));
        }
        Ok(Corpus { items, seed })
    }

    pub fn items(&self) -> &[LabeledGraph] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledGraph> {
        self.items.iter()
    }

    pub fn graphs(&self) -> impl Iterator<Item = &Graph> {
        self.items.iter().map(LabeledGraph::graph)
    }

    /// Select items by index, preserving the given order.
    pub fn select(&self, indices: &[usize], seed: u64) -> Corpus {
        let items = indices.iter().map(|&i| self.items[i].clone()).collect();
        Corpus { items, seed }
    }

    /// Deterministic shuffled train/test split. The train side gets
    /// `round(train_fraction * len)` items, clamped so both sides are
    /// non-empty.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<Split> {
        if self.len() < 2 {
            return Err(Error::Split(format!(
                "need at least 2 items to split, got {}",
                self.len()
            )));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Split(format!(
                "train fraction must be in (0,1), got {train_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut seeding::rng(seed));
        let raw = (train_fraction * self.len() as f64).round() as usize;
        let train_count = raw.clamp(1, self.len() - 1);
        let train = self.select(&order[..train_count], seed);
        let test = self.select(&order[train_count..], seed);
        Ok(Split { train, test })
    }
}

/// Disjoint train/test corpora.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
}
