//! Dataset-oblivious mixed corpus: equal real and generated counts per
//! dataset, fakes split as evenly as possible across the generators.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Corpus, LabeledGraph};
use crate::seeding;

/// `real_corpora` maps dataset id to its real corpus; `generated_pools`
/// maps dataset id to (generator id, quality-filtered pool) pairs. From
/// each dataset, `per_dataset` reals and `per_dataset` fakes are drawn, the
/// fake share split across generators with the remainder on the earliest
/// generator ids. The result is shuffled by the seed.
pub fn build_mixed(
    real_corpora: &[(String, Corpus)],
    generated_pools: &[(String, Vec<(String, Corpus)>)],
    per_dataset: usize,
    seed: u64,
) -> Result<Corpus> {
    let mut items: Vec<LabeledGraph> = Vec::new();
    for (d_idx, (dataset, corpus)) in real_corpora.iter().enumerate() {
        if corpus.len() < per_dataset {
            return Err(Error::Config(format!(
                "dataset {dataset} has {} reals, need {per_dataset}",
                corpus.len()
            )));
        }
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.shuffle(&mut seeding::rng(seeding::mix(
            seeding::mix_str(seed, "mixed-real"),
            d_idx as u64,
        )));
        for &i in &order[..per_dataset] {
            items.push(corpus.items()[i].clone());
        }

        let pools = generated_pools
            .iter()
            .find(|(d, _)| d == dataset)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::Config(format!("no generated pools for dataset {dataset}")))?;
        if pools.is_empty() {
            return Err(Error::Config(format!("empty generator list for {dataset}")));
        }
        let mut sorted: Vec<&(String, Corpus)> = pools.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));

        let base = per_dataset / sorted.len();
        let rem = per_dataset % sorted.len();
        for (g_idx, (gen_id, pool)) in sorted.iter().enumerate() {
            let want = base + usize::from(g_idx < rem);
            if pool.len() < want {
                return Err(Error::Config(format!(
                    "pool {gen_id} on {dataset} has {} graphs, need {want}",
                    pool.len()
                )));
            }
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.shuffle(&mut seeding::rng(seeding::mix(
                seeding::mix_str(seeding::mix_str(seed, "mixed-fake"), gen_id),
                d_idx as u64,
            )));
            for &i in &order[..want] {
                items.push(pool.items()[i].clone());
            }
        }
    }
    items.shuffle(&mut seeding::rng(seeding::mix_str(seed, "mixed-order")));
    Corpus::new(items, seed)
}
