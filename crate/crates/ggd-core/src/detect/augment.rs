//! Graph augmentations for contrastive training: node dropping, edge
//! perturbation, and random-walk subgraphs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    NodeDrop,
    EdgePerturb,
    Subgraph,
}

pub const AUGMENT_POOL: [AugmentKind; 3] = [
    AugmentKind::NodeDrop,
    AugmentKind::EdgePerturb,
    AugmentKind::Subgraph,
];

/// Apply one augmentation. `ratio` is the perturbation strength in `[0, 1)`;
/// ratio 0 returns the graph unchanged. At least one node always survives.
pub fn augment(g: &Graph, kind: AugmentKind, ratio: f64, seed: u64) -> Result<Graph> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::argument(format!("augment ratio {ratio} outside [0,1)")));
    }
    if ratio == 0.0 {
        return Ok(g.clone());
    }
    let mut rng = seeding::rng(seed);
    match kind {
        AugmentKind::NodeDrop => {
            let drop = ((ratio * g.n() as f64).floor() as usize).min(g.n().saturating_sub(1));
            if drop == 0 {
                return Ok(g.clone());
            }
            let mut nodes: Vec<usize> = (0..g.n()).collect();
            nodes.shuffle(&mut rng);
            let mut keep: Vec<usize> = nodes[drop..].to_vec();
            keep.sort_unstable();
            Ok(induced_subgraph(g, &keep))
        }
        AugmentKind::EdgePerturb => {
            let m = g.num_edges();
            let rewire = (ratio * m as f64).floor() as usize;
            if rewire == 0 {
                return Ok(g.clone());
            }
            let mut edges: Vec<(usize, usize)> = g.edges().to_vec();
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            let removed: std::collections::BTreeSet<usize> =
                order[..rewire].iter().copied().collect();
            let mut set: std::collections::BTreeSet<(usize, usize)> = edges
                .iter()
                .enumerate()
                .filter(|(i, _)| !removed.contains(i))
                .map(|(_, &e)| e)
                .collect();
            // Replace the removed edges with uniform draws from the
            // complement; the pair count never shrinks below the original
            // edge count, so this always terminates with the count intact.
            edges.clear();
            for _ in 0..rewire {
                loop {
                    let u = rng.gen_range(0..g.n());
                    let v = rng.gen_range(0..g.n());
                    if u == v {
                        continue;
                    }
                    let e = (u.min(v), u.max(v));
                    if set.insert(e) {
                        break;
                    }
                }
            }
            Ok(Graph::from_canonical(g.n(), set.into_iter().collect()))
        }
        AugmentKind::Subgraph => {
            let target = ((1.0 - ratio) * g.n() as f64).ceil() as usize;
            let target = target.clamp(1, g.n());
            if target == g.n() {
                return Ok(g.clone());
            }
            let mut visited = std::collections::BTreeSet::new();
            let mut current = rng.gen_range(0..g.n());
            visited.insert(current);
            while visited.len() < target {
                let fresh: Vec<usize> = g
                    .neighbors(current)
                    .iter()
                    .copied()
                    .filter(|w| !visited.contains(w))
                    .collect();
                if fresh.is_empty() {
                    // Walk is boxed in (or the node is isolated): restart
                    // from a random unvisited node.
                    let unvisited: Vec<usize> =
                        (0..g.n()).filter(|u| !visited.contains(u)).collect();
                    current = unvisited[rng.gen_range(0..unvisited.len())];
                } else {
                    current = fresh[rng.gen_range(0..fresh.len())];
                }
                visited.insert(current);
            }
            let keep: Vec<usize> = visited.into_iter().collect();
            Ok(induced_subgraph(g, &keep))
        }
    }
}

/// Induced subgraph on `keep` (sorted), reindexed to `[0, keep.len())`.
fn induced_subgraph(g: &Graph, keep: &[usize]) -> Graph {
    let mut new_index = vec![usize::MAX; g.n()];
    for (i, &u) in keep.iter().enumerate() {
        new_index[u] = i;
    }
    let mut edges = Vec::new();
    for &(u, v) in g.edges() {
        let (nu, nv) = (new_index[u], new_index[v]);
        if nu != usize::MAX && nv != usize::MAX {
            edges.push((nu.min(nv), nu.max(nv)));
        }
    }
    edges.sort_unstable();
    Graph::from_canonical(keep.len(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_zero_is_identity_for_all_kinds() {
        let g = Graph::cycle(8);
        for kind in AUGMENT_POOL {
            assert_eq!(&augment(&g, kind, 0.0, 1).unwrap(), &g);
        }
    }

    #[test]
    fn node_drop_count_rule() {
        let g = Graph::cycle(10);
        let out = augment(&g, AugmentKind::NodeDrop, 0.1, 2).unwrap();
        assert_eq!(out.n(), 9);
    }

    #[test]
    fn edge_perturb_preserves_edge_count() {
        let g = Graph::cycle(12);
        for seed in 0..20 {
            let out = augment(&g, AugmentKind::EdgePerturb, 0.4, seed).unwrap();
            assert_eq!(out.num_edges(), g.num_edges());
            assert_eq!(out.n(), g.n());
        }
    }

    #[test]
    fn subgraph_keeps_requested_node_count() {
        let g = Graph::cycle(10);
        let out = augment(&g, AugmentKind::Subgraph, 0.3, 3).unwrap();
        assert_eq!(out.n(), 7);
    }

    #[test]
    fn at_least_one_node_survives() {
        let g = Graph::path(2);
        for kind in AUGMENT_POOL {
            let out = augment(&g, kind, 0.9, 4).unwrap();
            assert!(out.n() >= 1);
        }
    }

    #[test]
    fn augmentation_is_deterministic() {
        let g = Graph::cycle(15);
        for kind in AUGMENT_POOL {
            assert_eq!(
                augment(&g, kind, 0.3, 7).unwrap(),
                augment(&g, kind, 0.3, 7).unwrap()
            );
        }
    }
}
