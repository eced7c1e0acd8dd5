//! Evaluation scenarios: seen/unseen datasets crossed with seen/unseen
//! generators.
//!
//! Every scenario trains on seen-dataset reals plus quality-filtered fakes
//! from the seen generators; the test set varies:
//!
//! - `ClosedWorld` — held-out seen reals vs. seen-generator fakes.
//! - `OpenGenerator` — held-out seen reals vs. unseen-generator fakes.
//! - `OpenSet` — unseen-dataset reals vs. seen generators refit on the
//!   unseen data.
//! - `OpenWorld` — unseen-dataset reals vs. unseen generators fit on the
//!   unseen data.
//!
//! Test sets are class-balanced, and every run is checked for train/test
//! overlap by item identity.

mod matrix;
mod metrics;
mod mixed;

pub use matrix::{
    run_attribution, run_matrix, summarize, train_and_eval, MatrixRow, MatrixSummary,
};
pub use metrics::{evaluate, evaluate_bool, Confusion, Metrics};
pub use mixed::build_mixed;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{fit_generator, ws_generate, GeneratorSpec, TrainedGenerator};
use crate::graph::{Corpus, LabeledGraph};
use crate::seeding;
use crate::stats::knn_filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ClosedWorld,
    OpenGenerator,
    OpenSet,
    OpenWorld,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::ClosedWorld,
        ScenarioKind::OpenGenerator,
        ScenarioKind::OpenSet,
        ScenarioKind::OpenWorld,
    ];

    fn needs_unseen_datasets(self) -> bool {
        matches!(self, ScenarioKind::OpenSet | ScenarioKind::OpenWorld)
    }

    fn needs_unseen_generators(self) -> bool {
        matches!(self, ScenarioKind::OpenGenerator | ScenarioKind::OpenWorld)
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScenarioKind::ClosedWorld => "closed_world",
            ScenarioKind::OpenGenerator => "open_generator",
            ScenarioKind::OpenSet => "open_set",
            ScenarioKind::OpenWorld => "open_world",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_world" => Ok(ScenarioKind::ClosedWorld),
            "open_generator" => Ok(ScenarioKind::OpenGenerator),
            "open_set" => Ok(ScenarioKind::OpenSet),
            "open_world" => Ok(ScenarioKind::OpenWorld),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Datasets and generator specs available to the builder. Seen/unseen lists
/// must be disjoint.
pub struct ScenarioInputs<'a> {
    pub real: &'a BTreeMap<String, Corpus>,
    pub seen_datasets: Vec<String>,
    pub unseen_datasets: Vec<String>,
    pub seen_generators: Vec<GeneratorSpec>,
    pub unseen_generators: Vec<GeneratorSpec>,
}

impl ScenarioInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        for d in &self.seen_datasets {
            if self.unseen_datasets.contains(d) {
                return Err(Error::Config(format!("dataset {d} is both seen and unseen")));
            }
        }
        let seen_ids: Vec<&str> = self.seen_generators.iter().map(|s| s.id.as_str()).collect();
        for u in &self.unseen_generators {
            if seen_ids.contains(&u.id.as_str()) {
                return Err(Error::Config(format!(
                    "generator {} is both seen and unseen",
                    u.id
                )));
            }
        }
        if self.seen_datasets.is_empty() {
            return Err(Error::Config("no seen datasets configured".into()));
        }
        if self.seen_generators.is_empty() {
            return Err(Error::Config("no seen generators configured".into()));
        }
        for d in self.seen_datasets.iter().chain(&self.unseen_datasets) {
            if !self.real.contains_key(d) {
                return Err(Error::Config(format!("no corpus loaded for dataset {d}")));
            }
        }
        Ok(())
    }
}

/// Size knobs for scenario construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioCounts {
    /// Real-graph working budget per dataset.
    pub real_per_dataset: usize,
    /// Test size per class (total test = 2x).
    pub test_per_class: usize,
    pub train_fraction: f64,
    /// Fraction of each generated pool kept by the quality filter.
    pub keep_fraction: f64,
}

impl Default for ScenarioCounts {
    fn default() -> Self {
        ScenarioCounts {
            real_per_dataset: 1000,
            test_per_class: 2000,
            train_fraction: 0.8,
            keep_fraction: 0.2,
        }
    }
}

/// Identity of a corpus item inside one scenario run, for leak checking.
/// Reals key on (dataset, original index); fakes key on their position in
/// the per-(dataset, generator) filtered pool.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ItemId {
    pub origin: String,
    pub index: usize,
}

pub struct ScenarioRun {
    pub kind: ScenarioKind,
    pub train: Corpus,
    pub test: Corpus,
    pub train_ids: Vec<ItemId>,
    pub test_ids: Vec<ItemId>,
    pub seed: u64,
}

impl ScenarioRun {
    /// No item identity may appear on both sides.
    pub fn check_leak(&self) -> Result<()> {
        let train: std::collections::BTreeSet<&ItemId> = self.train_ids.iter().collect();
        for id in &self.test_ids {
            if train.contains(id) {
                return Err(Error::Leak(format!(
                    "item {}#{} appears in both train and test",
                    id.origin, id.index
                )));
            }
        }
        Ok(())
    }
}

/// Reusable store of fitted generators, keyed by (generator id, dataset,
/// fit salt). Fitting is deterministic, so reuse never changes results.
#[derive(Default)]
pub struct GeneratorCache {
    map: BTreeMap<(String, String, u64), TrainedGenerator>,
}

impl GeneratorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit(
        &mut self,
        spec: &GeneratorSpec,
        reference: &Corpus,
        dataset: &str,
        salt: u64,
    ) -> Result<&TrainedGenerator> {
        let key = (spec.id.clone(), dataset.to_string(), salt);
        if !self.map.contains_key(&key) {
            let fitted = fit_generator(spec, reference, salt)?;
            self.map.insert(key.clone(), fitted);
        }
        Ok(&self.map[&key])
    }
}

/// Tracked slice of a real corpus: items plus their original indices.
struct RealPart {
    dataset: String,
    items: Vec<LabeledGraph>,
    indices: Vec<usize>,
}

fn sample_real_part(
    corpus: &Corpus,
    dataset: &str,
    budget: usize,
    seed: u64,
) -> RealPart {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut seeding::rng(seed));
    order.truncate(budget.min(corpus.len()));
    RealPart {
        dataset: dataset.to_string(),
        items: order.iter().map(|&i| corpus.items()[i].clone()).collect(),
        indices: order,
    }
}

/// total split into parts, remainder going to the earliest parts.
fn even_split(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let rem = total % parts;
    (0..parts)
        .map(|i| if i < rem { base + 1 } else { base })
        .collect()
}

/// Fakes drawn from a quality-filtered generator pool, with ids.
struct FakeSlice {
    items: Vec<LabeledGraph>,
    ids: Vec<ItemId>,
}

/// Fit, sample, filter, and slice one generator pool. `train_take` items go
/// to the train side and `test_take` to the test side, disjoint by pool
/// position.
#[allow(clippy::too_many_arguments)]
fn pooled_fakes(
    cache: &mut GeneratorCache,
    spec: &GeneratorSpec,
    reference: &Corpus,
    dataset: &str,
    counts: &ScenarioCounts,
    train_take: usize,
    test_take: usize,
    salt: u64,
) -> Result<(FakeSlice, FakeSlice)> {
    let needed = train_take + test_take;
    if needed == 0 {
        return Ok((
            FakeSlice { items: vec![], ids: vec![] },
            FakeSlice { items: vec![], ids: vec![] },
        ));
    }
    let pool_size = (needed as f64 / counts.keep_fraction).ceil() as usize;
    let fitted = cache.fit(spec, reference, dataset, salt)?;
    let pool = fitted.sample(pool_size, seeding::mix(salt, 0x5A))?;
    let filtered = knn_filter(&pool, reference, counts.keep_fraction)?;
    if filtered.len() < needed {
        return Err(Error::Config(format!(
            "generator {} on {dataset}: filtered pool has {} graphs, need {needed}",
            spec.id,
            filtered.len()
        )));
    }
    let origin = format!("fake:{dataset}:{}", spec.id);
    let slice = |range: std::ops::Range<usize>| FakeSlice {
        items: filtered.items()[range.clone()].to_vec(),
        ids: range
            .map(|i| ItemId {
                origin: origin.clone(),
                index: i,
            })
            .collect(),
    };
    Ok((slice(0..train_take), slice(train_take..needed)))
}

/// Build the train/test corpora for one scenario.
pub fn build_scenario(
    kind: ScenarioKind,
    inputs: &ScenarioInputs,
    counts: &ScenarioCounts,
    seed: u64,
    cache: &mut GeneratorCache,
) -> Result<ScenarioRun> {
    inputs.validate()?;
    if kind.needs_unseen_datasets() && inputs.unseen_datasets.is_empty() {
        return Err(Error::Config(format!("{kind} needs unseen datasets")));
    }
    if kind.needs_unseen_generators() && inputs.unseen_generators.is_empty() {
        return Err(Error::Config(format!("{kind} needs unseen generators")));
    }

    let mut seen_gens = inputs.seen_generators.clone();
    seen_gens.sort_by(|a, b| a.id.cmp(&b.id));
    let mut unseen_gens = inputs.unseen_generators.clone();
    unseen_gens.sort_by(|a, b| a.id.cmp(&b.id));

    let mut train_items: Vec<LabeledGraph> = Vec::new();
    let mut train_ids: Vec<ItemId> = Vec::new();
    let mut test_real_items: Vec<LabeledGraph> = Vec::new();
    let mut test_real_ids: Vec<ItemId> = Vec::new();
    let mut test_fake_items: Vec<LabeledGraph> = Vec::new();
    let mut test_fake_ids: Vec<ItemId> = Vec::new();

    let test_real_shares = even_split(
        counts.test_per_class,
        if kind.needs_unseen_datasets() {
            inputs.unseen_datasets.len()
        } else {
            inputs.seen_datasets.len()
        },
    );

    // Seen side: per-dataset real split plus seen-generator training fakes.
    for (d_idx, dataset) in inputs.seen_datasets.iter().enumerate() {
        let corpus = &inputs.real[dataset];
        let part = sample_real_part(
            corpus,
            dataset,
            counts.real_per_dataset,
            seeding::mix(seeding::mix_str(seed, "real-budget"), d_idx as u64),
        );

        // 8:2 split of the working reals.
        let mut order: Vec<usize> = (0..part.items.len()).collect();
        order.shuffle(&mut seeding::rng(seeding::mix(
            seeding::mix_str(seed, "real-split"),
            d_idx as u64,
        )));
        let train_count = ((counts.train_fraction * part.items.len() as f64).round() as usize)
            .clamp(1, part.items.len().saturating_sub(1).max(1));
        let (train_slice, heldout_slice) = order.split_at(train_count.min(order.len()));

        let origin = format!("real:{}", part.dataset);
        let mut train_real_items = Vec::with_capacity(train_slice.len());
        for &i in train_slice {
            train_real_items.push(part.items[i].clone());
            train_ids.push(ItemId {
                origin: origin.clone(),
                index: part.indices[i],
            });
        }

        // Reference corpus for generator fitting and filtering: the train
        // share of this dataset's reals.
        let reference = Corpus::new(train_real_items.clone(), seed)?;
        train_items.extend(train_real_items);

        // Held-out reals feed the test side for seen-dataset scenarios.
        if !kind.needs_unseen_datasets() {
            let want = test_real_shares[d_idx].min(heldout_slice.len());
            for &i in &heldout_slice[..want] {
                test_real_items.push(part.items[i].clone());
                test_real_ids.push(ItemId {
                    origin: origin.clone(),
                    index: part.indices[i],
                });
            }
        }

        // Seen-generator fakes: training share always; test share only in
        // the closed world.
        let train_fake_shares = even_split(reference.len(), seen_gens.len());
        let test_fake_shares = if kind == ScenarioKind::ClosedWorld {
            even_split(test_real_shares[d_idx], seen_gens.len())
        } else {
            vec![0; seen_gens.len()]
        };
        for (g_idx, spec) in seen_gens.iter().enumerate() {
            let salt = seeding::mix(
                seeding::mix_str(seeding::mix_str(seed, "fit-seen"), dataset),
                g_idx as u64,
            );
            let (train_fakes, test_fakes) = pooled_fakes(
                cache,
                spec,
                &reference,
                dataset,
                counts,
                train_fake_shares[g_idx],
                test_fake_shares[g_idx],
                salt,
            )?;
            train_items.extend(train_fakes.items);
            train_ids.extend(train_fakes.ids);
            test_fake_items.extend(test_fakes.items);
            test_fake_ids.extend(test_fakes.ids);
        }

        // Open generator: test fakes come from unseen generators fitted on
        // the same seen data.
        if kind == ScenarioKind::OpenGenerator {
            let shares = even_split(test_real_shares[d_idx], unseen_gens.len());
            for (g_idx, spec) in unseen_gens.iter().enumerate() {
                let salt = seeding::mix(
                    seeding::mix_str(seeding::mix_str(seed, "fit-unseen-gen"), dataset),
                    g_idx as u64,
                );
                let (_, test_fakes) = pooled_fakes(
                    cache, spec, &reference, dataset, counts, 0, shares[g_idx], salt,
                )?;
                test_fake_items.extend(test_fakes.items);
                test_fake_ids.extend(test_fakes.ids);
            }
        }
    }

    // Unseen-dataset side: reals sampled fresh, generators (seen or unseen
    // by kind) refit per unseen dataset.
    if kind.needs_unseen_datasets() {
        let gens: &[GeneratorSpec] = if kind == ScenarioKind::OpenSet {
            &seen_gens
        } else {
            &unseen_gens
        };
        for (d_idx, dataset) in inputs.unseen_datasets.iter().enumerate() {
            let corpus = &inputs.real[dataset];
            let part = sample_real_part(
                corpus,
                dataset,
                counts.real_per_dataset,
                seeding::mix(seeding::mix_str(seed, "unseen-budget"), d_idx as u64),
            );
            let reference = Corpus::new(part.items.clone(), seed)?;
            let want_real = test_real_shares[d_idx].min(part.items.len());
            let origin = format!("real:{}", part.dataset);
            for i in 0..want_real {
                test_real_items.push(part.items[i].clone());
                test_real_ids.push(ItemId {
                    origin: origin.clone(),
                    index: part.indices[i],
                });
            }
            let shares = even_split(test_real_shares[d_idx], gens.len());
            for (g_idx, spec) in gens.iter().enumerate() {
                let salt = seeding::mix(
                    seeding::mix_str(seeding::mix_str(seed, "fit-unseen-data"), dataset),
                    g_idx as u64,
                );
                let (_, test_fakes) = pooled_fakes(
                    cache, spec, &reference, dataset, counts, 0, shares[g_idx], salt,
                )?;
                test_fake_items.extend(test_fakes.items);
                test_fake_ids.extend(test_fakes.ids);
            }
        }
    }

    // Class-balance the test set, then shuffle both sides.
    let per_class = test_real_items.len().min(test_fake_items.len());
    test_real_items.truncate(per_class);
    test_real_ids.truncate(per_class);
    test_fake_items.truncate(per_class);
    test_fake_ids.truncate(per_class);

    let mut test_items = test_real_items;
    let mut test_ids = test_real_ids;
    test_items.extend(test_fake_items);
    test_ids.extend(test_fake_ids);

    shuffle_with_ids(&mut train_items, &mut train_ids, seeding::mix_str(seed, "train-order"));
    shuffle_with_ids(&mut test_items, &mut test_ids, seeding::mix_str(seed, "test-order"));

    let run = ScenarioRun {
        kind,
        train: Corpus::new(train_items, seed)?,
        test: Corpus::new(test_items, seed)?,
        train_ids,
        test_ids,
        seed,
    };
    run.check_leak()?;
    Ok(run)
}

fn shuffle_with_ids(items: &mut [LabeledGraph], ids: &mut [ItemId], seed: u64) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut seeding::rng(seed));
    let orig_items: Vec<LabeledGraph> = items.to_vec();
    let orig_ids: Vec<ItemId> = ids.to_vec();
    for (slot, &src) in order.iter().enumerate() {
        items[slot] = orig_items[src].clone();
        ids[slot] = orig_ids[src].clone();
    }
}

/// Synthetic small-world corpus used by the offline profiles: `count`
/// graphs with node counts uniform in `[n_lo, n_hi]`.
pub fn synth_ws_corpus(
    id: &str,
    count: usize,
    n_lo: usize,
    n_hi: usize,
    k: usize,
    beta: f64,
    seed: u64,
) -> Result<Corpus> {
    if n_lo > n_hi || n_lo <= k {
        return Err(Error::Config(format!(
            "bad node range [{n_lo},{n_hi}] for lattice degree {k}"
        )));
    }
    let items = (0..count)
        .map(|i| {
            let item_seed = seeding::per_item(seeding::mix_str(seed, id), i as u64);
            let mut rng = seeding::rng(item_seed);
            let n = rng.gen_range(n_lo..=n_hi);
            let g = ws_generate(n, k, beta, seeding::mix(item_seed, 1))?;
            Ok(LabeledGraph::real(g, id))
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(items, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::GeneratorKind;

    fn tiny_inputs(real: &BTreeMap<String, Corpus>) -> ScenarioInputs<'_> {
        ScenarioInputs {
            real,
            seen_datasets: vec!["seen-a".into()],
            unseen_datasets: vec!["unseen-b".into()],
            seen_generators: vec![
                GeneratorSpec::new("ba-1", GeneratorKind::Ba, 3),
                GeneratorSpec::new("er-1", GeneratorKind::Er, 2),
            ],
            unseen_generators: vec![GeneratorSpec::new("ws-u", GeneratorKind::Ws, 4)],
        }
    }

    fn tiny_world() -> BTreeMap<String, Corpus> {
        let mut real = BTreeMap::new();
        real.insert(
            "seen-a".to_string(),
            synth_ws_corpus("seen-a", 60, 10, 14, 4, 0.1, 1).unwrap(),
        );
        real.insert(
            "unseen-b".to_string(),
            synth_ws_corpus("unseen-b", 60, 16, 20, 6, 0.3, 2).unwrap(),
        );
        real
    }

    fn tiny_counts() -> ScenarioCounts {
        ScenarioCounts {
            real_per_dataset: 50,
            test_per_class: 10,
            train_fraction: 0.8,
            keep_fraction: 0.2,
        }
    }

    #[test]
    fn even_split_examples() {
        assert_eq!(even_split(10, 3), vec![4, 3, 3]);
        assert_eq!(even_split(9, 3), vec![3, 3, 3]);
        assert_eq!(even_split(2, 3), vec![1, 1, 0]);
    }

    #[test]
    fn closed_world_structure() {
        let real = tiny_world();
        let inputs = tiny_inputs(&real);
        let mut cache = GeneratorCache::new();
        let run = build_scenario(
            ScenarioKind::ClosedWorld,
            &inputs,
            &tiny_counts(),
            7,
            &mut cache,
        )
        .unwrap();
        run.check_leak().unwrap();
        // Train is 40 reals + 40 fakes; test is 10 + 10.
        assert_eq!(run.train.len(), 80);
        assert_eq!(run.test.len(), 20);
        let test_reals = run.test.iter().filter(|it| it.is_real()).count();
        assert_eq!(test_reals * 2, run.test.len());
        assert!(run.train.iter().any(|it| it.is_real()));
        assert!(run.train.iter().any(|it| !it.is_real()));
        // Closed world never touches the unseen dataset.
        assert!(run
            .test
            .iter()
            .all(|it| it.dataset_id() == "seen-a"));
    }

    #[test]
    fn open_generator_test_negatives_come_from_unseen_generators() {
        let real = tiny_world();
        let inputs = tiny_inputs(&real);
        let mut cache = GeneratorCache::new();
        let run = build_scenario(
            ScenarioKind::OpenGenerator,
            &inputs,
            &tiny_counts(),
            8,
            &mut cache,
        )
        .unwrap();
        for item in run.test.iter().filter(|it| !it.is_real()) {
            assert_eq!(item.generator_id(), Some("ws-u"));
        }
        // Training fakes still come from the seen generators.
        for item in run.train.iter().filter(|it| !it.is_real()) {
            assert!(matches!(item.generator_id(), Some("ba-1") | Some("er-1")));
        }
    }

    #[test]
    fn open_world_test_avoids_seen_datasets_entirely() {
        let real = tiny_world();
        let inputs = tiny_inputs(&real);
        let mut cache = GeneratorCache::new();
        let run = build_scenario(
            ScenarioKind::OpenWorld,
            &inputs,
            &tiny_counts(),
            9,
            &mut cache,
        )
        .unwrap();
        assert!(run.test.iter().all(|it| it.dataset_id() == "unseen-b"));
        let reals = run.test.iter().filter(|it| it.is_real()).count();
        assert_eq!(reals * 2, run.test.len());
    }

    #[test]
    fn open_set_uses_seen_generators_on_unseen_data() {
        let real = tiny_world();
        let inputs = tiny_inputs(&real);
        let mut cache = GeneratorCache::new();
        let run = build_scenario(
            ScenarioKind::OpenSet,
            &inputs,
            &tiny_counts(),
            10,
            &mut cache,
        )
        .unwrap();
        for item in run.test.iter().filter(|it| !it.is_real()) {
            assert!(matches!(item.generator_id(), Some("ba-1") | Some("er-1")));
            assert_eq!(item.dataset_id(), "unseen-b");
        }
    }

    #[test]
    fn missing_unseen_lists_are_config_errors() {
        let real = tiny_world();
        let mut inputs = tiny_inputs(&real);
        inputs.unseen_generators.clear();
        let mut cache = GeneratorCache::new();
        let err = build_scenario(
            ScenarioKind::OpenGenerator,
            &inputs,
            &tiny_counts(),
            3,
            &mut cache,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn scenario_builds_are_deterministic() {
        let real = tiny_world();
        let inputs = tiny_inputs(&real);
        let mut c1 = GeneratorCache::new();
        let mut c2 = GeneratorCache::new();
        let a = build_scenario(ScenarioKind::ClosedWorld, &inputs, &tiny_counts(), 5, &mut c1)
            .unwrap();
        let b = build_scenario(ScenarioKind::ClosedWorld, &inputs, &tiny_counts(), 5, &mut c2)
            .unwrap();
        assert_eq!(a.train.items(), b.train.items());
        assert_eq!(a.test.items(), b.test.items());
        assert_eq!(a.train_ids, b.train_ids);
    }
}
