//! Statistical graph features, quality filtering, and MMD.
//!
//! Six features describe a graph: node count, edge count, density, diameter,
//! average clustering, and transitivity. Generated corpora are filtered by
//! keeping the fraction closest (standardized Euclidean, nearest real
//! neighbor) to a real corpus, and corpora are compared with a Gaussian-kernel
//! MMD over the same standardized features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Corpus, Graph};

pub const FEATURE_COUNT: usize = 6;

/// The six-dimensional statistical descriptor of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatFeatures {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub density: f64,
    pub diameter: usize,
    pub avg_clustering: f64,
    pub transitivity: f64,
}

impl StatFeatures {
    pub fn as_vec(&self) -> [f64; FEATURE_COUNT] {
        [
            self.num_nodes as f64,
            self.num_edges as f64,
            self.density,
            self.diameter as f64,
            self.avg_clustering,
            self.transitivity,
        ]
    }
}

/// Compute the six features.
///
/// Density is `2m / (n(n-1))` (0 for `n <= 1`). The diameter is taken on the
/// largest connected component so it stays finite for disconnected graphs.
/// Average clustering is the mean local clustering coefficient with nodes of
/// degree < 2 contributing 0; transitivity is `3*triangles / triples`, 0 when
/// the graph has no connected triple.
pub fn stat_features(g: &Graph) -> Result<StatFeatures> {
    let n = g.n();
    if n == 0 {
        return Err(Error::argument("stat_features needs at least one node"));
    }
    let m = g.num_edges();
    let density = if n >= 2 {
        2.0 * m as f64 / (n as f64 * (n - 1) as f64)
    } else {
        0.0
    };

    // Triangle counting per node; neighbor lists are sorted.
    let mut triangles_at = vec![0usize; n];
    for &(u, v) in g.edges() {
        let (mut a, mut b) = (g.neighbors(u), g.neighbors(v));
        if a.len() > b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        for &w in a {
            if w != u && w != v && b.binary_search(&w).is_ok() {
                triangles_at[u] += 1;
                triangles_at[v] += 1;
                triangles_at[w] += 1;
            }
        }
    }
    // Each triangle at a node was counted once per incident edge pair scan:
    // the edge loop visits each triangle exactly 3 times (once per edge), so
    // triangles_at[v] is 3x the per-node count... correct by dividing.
    // Verified against the exhaustive counter in the tests below.
    let local_triangles: Vec<f64> = triangles_at.iter().map(|&t| t as f64 / 3.0).collect();

    let mut clustering_sum = 0.0;
    let mut triples = 0.0;
    let mut triangle_total = 0.0;
    for u in 0..n {
        let d = g.degree(u) as f64;
        triangle_total += local_triangles[u];
        if d >= 2.0 {
            let pairs = d * (d - 1.0) / 2.0;
            triples += pairs;
            clustering_sum += local_triangles[u] / pairs;
        }
    }
    let avg_clustering = clustering_sum / n as f64;
    // triangle_total now counts each triangle 3 times (once per corner).
    let transitivity = if triples > 0.0 {
        triangle_total / triples
    } else {
        0.0
    };

    let diameter = largest_component_diameter(g);

    Ok(StatFeatures {
        num_nodes: n,
        num_edges: m,
        density,
        diameter,
        avg_clustering,
        transitivity,
    })
}

fn largest_component_diameter(g: &Graph) -> usize {
    let comps = g.connected_components();
    let max_len = match comps.iter().map(Vec::len).max() {
        Some(l) => l,
        None => return 0,
    };
    // Ties between equally large components resolve to the larger diameter,
    // which keeps the feature invariant under node relabeling.
    let mut best = 0usize;
    for comp in comps.iter().filter(|c| c.len() == max_len) {
        for &start in comp {
            best = best.max(eccentricity(g, start));
        }
    }
    best
}

fn eccentricity(g: &Graph, start: usize) -> usize {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = std::collections::VecDeque::from([start]);
    dist[start] = 0;
    let mut far = 0;
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                far = far.max(dist[v]);
                queue.push_back(v);
            }
        }
    }
    far
}

/// Per-component z-score scaler, fitted on one feature set. Standard
/// deviations are floored at 1e-8 so constant features do not divide by zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

impl FeatureScaler {
    pub fn fit(features: &[StatFeatures]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::argument("cannot fit a scaler on an empty set"));
        }
        let n = features.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f.as_vec()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; FEATURE_COUNT];
        for f in features {
            for ((v, m), x) in var.iter_mut().zip(mean).zip(f.as_vec()) {
                *v += (x - m) * (x - m);
            }
        }
        let mut std = [0.0; FEATURE_COUNT];
        for (s, v) in std.iter_mut().zip(var) {
            *s = (v / n).sqrt().max(1e-8);
        }
        Ok(FeatureScaler { mean, std })
    }

    pub fn transform(&self, f: &StatFeatures) -> [f64; FEATURE_COUNT] {
        let mut out = f.as_vec();
        for ((x, m), s) in out.iter_mut().zip(self.mean).zip(self.std) {
            *x = (*x - m) / s;
        }
        out
    }
}

/// Features for every graph of a corpus. Element-parallel; the output order
/// matches the corpus order exactly.
pub fn corpus_features(corpus: &Corpus) -> Result<Vec<StatFeatures>> {
    corpus
        .items()
        .par_iter()
        .map(|item| stat_features(item.graph()))
        .collect()
}

fn euclid(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Keep the `ceil(keep_fraction * |generated|)` generated graphs whose
/// standardized feature vectors are closest to their nearest real neighbor.
/// The scaler is fitted on the real corpus only; ties break toward earlier
/// corpus positions, and the survivors keep their original order.
pub fn knn_filter(generated: &Corpus, real: &Corpus, keep_fraction: f64) -> Result<Corpus> {
    if real.is_empty() {
        return Err(Error::argument("knn_filter needs a non-empty real corpus"));
    }
    if generated.is_empty() {
        return Err(Error::argument("knn_filter needs a non-empty generated corpus"));
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::argument(format!(
            "keep fraction must be in (0,1], got {keep_fraction}"
        )));
    }
    let real_feats = corpus_features(real)?;
    let scaler = FeatureScaler::fit(&real_feats)?;
    let real_std: Vec<_> = real_feats.iter().map(|f| scaler.transform(f)).collect();
    let gen_feats = corpus_features(generated)?;

    let distances: Vec<f64> = gen_feats
        .par_iter()
        .map(|f| {
            let x = scaler.transform(f);
            real_std
                .iter()
                .map(|r| euclid(&x, r))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let keep = (keep_fraction * generated.len() as f64).ceil() as usize;
    let keep = keep.clamp(1, generated.len());
    let mut order: Vec<usize> = (0..generated.len()).collect();
    order.sort_by(|&a, &b| {
        distances[a]
            .partial_cmp(&distances[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = order[..keep].to_vec();
    selected.sort_unstable();
    Ok(generated.select(&selected, generated.seed()))
}

/// MMD estimate plus the kernel metadata that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdResult {
    pub value: f64,
    pub bandwidth: f64,
    /// True when all pooled feature vectors were identical and the median
    /// heuristic fell back to bandwidth 1.0.
    pub bandwidth_fallback: bool,
}

/// Biased (V-statistic) squared MMD with a Gaussian kernel over standardized
/// features. The scaler and the median-heuristic bandwidth are both computed
/// on the pooled corpora, which keeps the statistic symmetric in `a` and `b`.
pub fn mmd(a: &Corpus, b: &Corpus, bandwidth: Option<f64>) -> Result<MmdResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::argument("mmd needs two non-empty corpora"));
    }
    let fa = corpus_features(a)?;
    let fb = corpus_features(b)?;
    let pooled: Vec<StatFeatures> = fa.iter().chain(fb.iter()).copied().collect();
    let scaler = FeatureScaler::fit(&pooled)?;
    let xa: Vec<_> = fa.iter().map(|f| scaler.transform(f)).collect();
    let xb: Vec<_> = fb.iter().map(|f| scaler.transform(f)).collect();
    mmd_on_vectors(&xa, &xb, bandwidth)
}

/// MMD over already-standardized vectors; exposed for the analysis path that
/// scales with an external scaler.
pub fn mmd_on_vectors(
    xa: &[[f64; FEATURE_COUNT]],
    xb: &[[f64; FEATURE_COUNT]],
    bandwidth: Option<f64>,
) -> Result<MmdResult> {
    let (bw, fallback) = match bandwidth {
        Some(b) if b > 0.0 => (b, false),
        Some(b) => {
            return Err(Error::argument(format!("bandwidth must be positive, got {b}")))
        }
        None => median_bandwidth(xa, xb),
    };

    let kern = |x: &[f64; FEATURE_COUNT], y: &[f64; FEATURE_COUNT]| {
        let d = euclid(x, y);
        (-d * d / (2.0 * bw * bw)).exp()
    };
    let mean_kernel = |xs: &[[f64; FEATURE_COUNT]], ys: &[[f64; FEATURE_COUNT]]| {
        let mut total = 0.0;
        for x in xs {
            for y in ys {
                total += kern(x, y);
            }
        }
        total / (xs.len() as f64 * ys.len() as f64)
    };

    let kaa = mean_kernel(xa, xa);
    let kbb = mean_kernel(xb, xb);
    let kab = mean_kernel(xa, xb);
    let value = (kaa + kbb - 2.0 * kab).max(0.0);
    Ok(MmdResult {
        value,
        bandwidth: bw,
        bandwidth_fallback: fallback,
    })
}

/// Median pairwise distance over the pooled vectors; 1.0 when every pairwise
/// distance is zero.
fn median_bandwidth(
    xa: &[[f64; FEATURE_COUNT]],
    xb: &[[f64; FEATURE_COUNT]],
) -> (f64, bool) {
    let pooled: Vec<&[f64; FEATURE_COUNT]> = xa.iter().chain(xb.iter()).collect();
    let mut dists = Vec::with_capacity(pooled.len() * (pooled.len() - 1) / 2);
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            dists.push(euclid(pooled[i], pooled[j]));
        }
    }
    if dists.is_empty() {
        return (1.0, true);
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        (median, false)
    } else {
        (1.0, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;
    use crate::seeding;
    use rand::Rng;

    fn feats(g: &Graph) -> StatFeatures {
        stat_features(g).unwrap()
    }

    #[test]
    fn complete_graph_features() {
        let f = feats(&Graph::complete(4));
        assert_eq!(
            (f.num_nodes, f.num_edges, f.density, f.diameter),
            (4, 6, 1.0, 1)
        );
        assert!((f.avg_clustering - 1.0).abs() < 1e-12);
        assert!((f.transitivity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_and_star_features() {
        let p = feats(&Graph::path(4));
        assert_eq!((p.num_nodes, p.num_edges, p.diameter), (4, 3, 3));
        assert!((p.density - 0.5).abs() < 1e-12);
        assert_eq!(p.avg_clustering, 0.0);
        assert_eq!(p.transitivity, 0.0);

        let s = feats(&Graph::star(3));
        assert_eq!((s.num_nodes, s.num_edges, s.diameter), (4, 3, 2));
        assert!((s.density - 0.5).abs() < 1e-12);
        assert_eq!(s.avg_clustering, 0.0);
        assert_eq!(s.transitivity, 0.0);
    }

    #[test]
    fn single_node_and_disconnected() {
        let one = feats(&Graph::empty(1));
        assert_eq!((one.density, one.diameter), (0.0, 0));
        assert!(stat_features(&Graph::empty(0)).is_err());

        // Triangle plus isolated node: diameter from the largest component.
        let mut edges = Graph::complete(3).edges().to_vec();
        edges.sort_unstable();
        let g = Graph::from_canonical(5, edges);
        assert_eq!(feats(&g).diameter, 1);
    }

    /// Exhaustive clustering/transitivity oracle: enumerate all node triples.
    fn brute_clustering(g: &Graph) -> (f64, f64) {
        let n = g.n();
        let mut tri_at = vec![0.0; n];
        let mut triangles = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    if g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c) {
                        triangles += 1.0;
                        tri_at[a] += 1.0;
                        tri_at[b] += 1.0;
                        tri_at[c] += 1.0;
                    }
                }
            }
        }
        let mut csum = 0.0;
        let mut triples = 0.0;
        for u in 0..n {
            let d = g.degree(u) as f64;
            if d >= 2.0 {
                let pairs = d * (d - 1.0) / 2.0;
                triples += pairs;
                csum += tri_at[u] / pairs;
            }
        }
        let avg = if n > 0 { csum / n as f64 } else { 0.0 };
        let trans = if triples > 0.0 {
            3.0 * triangles / triples
        } else {
            0.0
        };
        (avg, trans)
    }

    #[test]
    fn clustering_matches_exhaustive_oracle_on_small_graphs() {
        let mut rng = seeding::rng(1234);
        for trial in 0..300 {
            let n = 1 + trial % 7;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            let f = feats(&g);
            let (avg, trans) = brute_clustering(&g);
            assert!((f.avg_clustering - avg).abs() < 1e-12, "n={n} trial={trial}");
            assert!((f.transitivity - trans).abs() < 1e-12, "n={n} trial={trial}");
        }
    }

    #[test]
    fn features_are_permutation_invariant() {
        let mut rng = seeding::rng(99);
        for _ in 0..200 {
            let n = 2 + rng.gen_range(0..8);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.35) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            perm.shuffle(&mut rng);
            let h = g.relabel_nodes(&perm).unwrap();
            let (fg, fh) = (feats(&g), feats(&h));
            assert_eq!(fg.num_nodes, fh.num_nodes);
            assert_eq!(fg.num_edges, fh.num_edges);
            assert_eq!(fg.diameter, fh.diameter);
            assert!((fg.density - fh.density).abs() < 1e-12);
            assert!((fg.avg_clustering - fh.avg_clustering).abs() < 1e-10);
            assert!((fg.transitivity - fh.transitivity).abs() < 1e-10);
        }
    }

    fn real_corpus(graphs: Vec<Graph>) -> Corpus {
        let items = graphs
            .into_iter()
            .map(|g| LabeledGraph::real(g, "r"))
            .collect();
        Corpus::new(items, 0).unwrap()
    }

    fn gen_corpus(graphs: Vec<Graph>) -> Corpus {
        let items = graphs
            .into_iter()
            .map(|g| LabeledGraph::generated(g, "r", "g"))
            .collect();
        Corpus::new(items, 0).unwrap()
    }

    #[test]
    fn knn_filter_counts_and_ties() {
        let real = real_corpus((0..5).map(|_| Graph::complete(4)).collect());
        let generated = gen_corpus((0..10).map(|_| Graph::complete(4)).collect());
        let kept = knn_filter(&generated, &real, 0.2).unwrap();
        assert_eq!(kept.len(), 2);
        // All distances tie at zero, so the first two by order survive.
        assert_eq!(kept.items(), &generated.items()[..2]);
    }

    #[test]
    fn knn_filter_prefers_matching_structure() {
        let real = real_corpus(vec![Graph::complete(4)]);
        let generated = gen_corpus(vec![Graph::path(4), Graph::complete(4)]);
        let kept = knn_filter(&generated, &real, 0.5).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.items()[0].graph(), &Graph::complete(4));
    }

    #[test]
    fn knn_filter_rejects_empty_real() {
        let generated = gen_corpus(vec![Graph::path(3)]);
        let empty = Corpus::new(vec![], 0).unwrap();
        assert!(knn_filter(&generated, &empty, 0.2).is_err());
    }

    #[test]
    fn mmd_identical_sets_is_zero_and_symmetric() {
        let a = real_corpus((2..40).map(Graph::path).collect());
        let b = real_corpus((2..40).map(|n| Graph::cycle(n + 2)).collect());
        let self_mmd = mmd(&a, &a, None).unwrap();
        assert!(self_mmd.value <= 1e-9, "mmd(X,X) = {}", self_mmd.value);
        let ab = mmd(&a, &b, None).unwrap();
        let ba = mmd(&b, &a, None).unwrap();
        assert!((ab.value - ba.value).abs() <= 1e-12);
        assert!(ab.value >= 0.0);
    }

    #[test]
    fn mmd_fallback_bandwidth_on_identical_features() {
        let a = real_corpus(vec![Graph::complete(3), Graph::complete(3)]);
        let b = real_corpus(vec![Graph::complete(3)]);
        let r = mmd(&a, &b, None).unwrap();
        assert!(r.bandwidth_fallback);
        assert_eq!(r.bandwidth, 1.0);
        assert!(r.value <= 1e-12);
    }

    #[test]
    fn mmd_nonnegative_on_random_pairs() {
        let mut rng = seeding::rng(4321);
        for _ in 0..100 {
            let na = 2 + rng.gen_range(0..6);
            let nb = 2 + rng.gen_range(0..6);
            let mk = |rng: &mut rand_chacha::ChaCha8Rng, count: usize| {
                let graphs = (0..count)
                    .map(|_| {
                        let n = 2 + rng.gen_range(0..6);
                        let mut edges = Vec::new();
                        for u in 0..n {
                            for v in (u + 1)..n {
                                if rng.gen_bool(0.5) {
                                    edges.push((u, v));
                                }
                            }
                        }
                        Graph::new(n, &edges).unwrap()
                    })
                    .collect();
                real_corpus(graphs)
            };
            let a = mk(&mut rng, na);
            let b = mk(&mut rng, nb);
            assert!(mmd(&a, &b, None).unwrap().value >= 0.0);
        }
    }
}
