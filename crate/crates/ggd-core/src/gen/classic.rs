//! Random-model generators: Erdős–Rényi, Barabási–Albert, Watts–Strogatz.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seeding;

/// Edge parameterization for the Erdős–Rényi model.
#[derive(Debug, Clone, Copy)]
pub enum ErEdges {
    /// G(n, p): each pair independently with probability p.
    Prob(f64),
    /// G(n, M): a uniform M-subset of all pairs.
    Count(usize),
}

pub fn er_generate(n: usize, edges: ErEdges, seed: u64) -> Result<Graph> {
    if n < 1 {
        return Err(Error::argument("er_generate needs n >= 1"));
    }
    let possible = n * (n - 1) / 2;
    let mut rng = seeding::rng(seed);
    match edges {
        ErEdges::Prob(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::argument(format!("edge probability {p} outside [0,1]")));
            }
            let mut list = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(p) {
                        list.push((u, v));
                    }
                }
            }
            Ok(Graph::from_canonical(n, list))
        }
        ErEdges::Count(m) => {
            if m > possible {
                return Err(Error::argument(format!(
                    "edge count {m} exceeds the {possible} possible pairs"
                )));
            }
            let mut pairs = Vec::with_capacity(possible);
            for u in 0..n {
                for v in (u + 1)..n {
                    pairs.push((u, v));
                }
            }
            let (chosen, _) = pairs.partial_shuffle(&mut rng, m);
            let mut list = chosen.to_vec();
            list.sort_unstable();
            Ok(Graph::from_canonical(n, list))
        }
    }
}

/// Preferential attachment: start from `m` isolated nodes, then attach each
/// new node to `m` distinct existing nodes chosen proportionally to
/// `degree + 1` (so the initial isolated nodes are reachable). Always
/// produces exactly `m * (n - m)` edges.
pub fn ba_generate(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m < 1 || m >= n {
        return Err(Error::argument(format!(
            "ba_generate needs 1 <= m < n, got m={m}, n={n}"
        )));
    }
    let mut rng = seeding::rng(seed);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(m * (n - m));
    for t in m..n {
        // Weighted sampling without replacement over the existing nodes.
        let mut weights: Vec<f64> = (0..t).map(|u| (degree[u] + 1) as f64).collect();
        for _ in 0..m {
            let total: f64 = weights.iter().sum();
            let mut pick = rng.gen_range(0.0..total);
            let mut chosen = 0;
            for (u, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                if pick < w {
                    chosen = u;
                    break;
                }
                pick -= w;
                chosen = u;
            }
            weights[chosen] = 0.0;
            edges.push((chosen, t));
            degree[chosen] += 1;
            degree[t] += 1;
        }
    }
    edges.sort_unstable();
    Ok(Graph::from_canonical(n, edges))
}

/// Small-world rewiring: a ring lattice with `k` neighbors per node, each
/// lattice edge rewired with probability `beta` to a uniformly chosen
/// non-neighbor. Edge count stays exactly `n * k / 2`.
pub fn ws_generate(n: usize, k: usize, beta: f64, seed: u64) -> Result<Graph> {
    if k == 0 || k % 2 != 0 {
        return Err(Error::argument(format!("ws_generate needs even k >= 2, got {k}")));
    }
    if k >= n {
        return Err(Error::argument(format!("ws_generate needs k < n, got k={k}, n={n}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::argument(format!("beta {beta} outside [0,1]")));
    }
    let mut rng = seeding::rng(seed);
    let mut edge_set = std::collections::BTreeSet::new();
    for j in 1..=(k / 2) {
        for u in 0..n {
            let v = (u + j) % n;
            edge_set.insert((u.min(v), u.max(v)));
        }
    }
    // Rewire in lattice order so the pass is deterministic.
    for j in 1..=(k / 2) {
        for u in 0..n {
            let v = (u + j) % n;
            let e = (u.min(v), u.max(v));
            if !edge_set.contains(&e) {
                continue; // already rewired away by an earlier step
            }
            if !rng.gen_bool(beta) {
                continue;
            }
            let candidates: Vec<usize> = (0..n)
                .filter(|&w| {
                    w != u && !edge_set.contains(&(u.min(w), u.max(w)))
                })
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let w = candidates[rng.gen_range(0..candidates.len())];
            edge_set.remove(&e);
            edge_set.insert((u.min(w), u.max(w)));
        }
    }
    Ok(Graph::from_canonical(n, edge_set.into_iter().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::stat_features;

    #[test]
    fn er_degenerate_cases() {
        let empty = er_generate(5, ErEdges::Prob(0.0), 1).unwrap();
        assert_eq!((empty.n(), empty.num_edges()), (5, 0));

        let full = er_generate(4, ErEdges::Count(6), 1).unwrap();
        assert_eq!(full, Graph::complete(4));
    }

    #[test]
    fn er_count_is_exact_and_probability_mean_is_right() {
        for seed in 0..50 {
            let g = er_generate(20, ErEdges::Count(31), seed).unwrap();
            assert_eq!(g.num_edges(), 31);
        }
        let mean = (0..300)
            .map(|s| er_generate(100, ErEdges::Prob(0.1), s).unwrap().num_edges())
            .sum::<usize>() as f64
            / 300.0;
        assert!((mean - 495.0).abs() < 15.0, "mean edges {mean}");
    }

    #[test]
    fn er_rejects_bad_parameters() {
        assert!(er_generate(0, ErEdges::Prob(0.5), 0).is_err());
        assert!(er_generate(5, ErEdges::Prob(1.5), 0).is_err());
        assert!(er_generate(4, ErEdges::Count(7), 0).is_err());
    }

    #[test]
    fn ba_edge_counts() {
        assert_eq!(ba_generate(10, 1, 3).unwrap().num_edges(), 9);
        assert_eq!(ba_generate(10, 2, 3).unwrap().num_edges(), 16);
        assert!(ba_generate(5, 5, 0).is_err());
    }

    #[test]
    fn ba_is_connected_for_m1() {
        for seed in 0..20 {
            let g = ba_generate(30, 1, seed).unwrap();
            assert_eq!(g.connected_components().len(), 1);
        }
    }

    #[test]
    fn ba_has_heavy_degree_tail() {
        let mut exceeded = 0;
        let trials = 200;
        for seed in 0..trials {
            let g = ba_generate(200, 2, seed).unwrap();
            let max_deg = g.degree_sequence().into_iter().max().unwrap();
            if max_deg > 8 {
                exceeded += 1;
            }
        }
        assert!(
            exceeded * 2 > trials,
            "max degree exceeded 4m in only {exceeded}/{trials} samples"
        );
    }

    #[test]
    fn ws_lattice_and_counts() {
        let ring = ws_generate(6, 2, 0.0, 0).unwrap();
        assert_eq!(ring, Graph::cycle(6));
        for seed in 0..30 {
            let g = ws_generate(20, 4, 0.5, seed).unwrap();
            assert_eq!(g.num_edges(), 40);
        }
    }

    #[test]
    fn ws_full_rewiring_lowers_clustering() {
        let mut below = 0;
        let trials = 200;
        for seed in 0..trials {
            let g = ws_generate(50, 4, 1.0, seed).unwrap();
            if stat_features(&g).unwrap().avg_clustering < 0.5 {
                below += 1;
            }
        }
        assert!(below * 100 >= trials * 95, "only {below}/{trials} below lattice clustering");
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        assert_eq!(
            er_generate(30, ErEdges::Prob(0.2), 9).unwrap(),
            er_generate(30, ErEdges::Prob(0.2), 9).unwrap()
        );
        assert_eq!(ba_generate(30, 2, 9).unwrap(), ba_generate(30, 2, 9).unwrap());
        assert_eq!(
            ws_generate(30, 4, 0.3, 9).unwrap(),
            ws_generate(30, 4, 0.3, 9).unwrap()
        );
    }
}
