//! Metric detector: a weight-shared siamese encoder scoring whether two
//! graphs carry the same label, with reference-averaged inference.
//!
//! The pair head maps the elementwise absolute difference of the two
//! embeddings through a learned linear map and a sigmoid to a posterior
//! that the pair shares a label. Inference against a reference corpus
//! averages pair posteriors over `n_k` references per class and takes the
//! argmax class.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Authenticity, Corpus, Graph};
use crate::nn::layers::sigmoid;
use crate::nn::losses::bce_with_logits;
use crate::nn::tensor::dot;
use crate::nn::{Adam, Real, Tensor};
use crate::seeding;

use super::encoder::{EncoderShape, GcnEncoder};
use super::TrainConfig;

#[derive(Debug, Clone)]
pub struct MetricModel {
    pub encoder: GcnEncoder,
    pub head_w: Tensor,
    pub head_b: Real,
    pub n_ps: usize,
    pub n_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSample {
    pub a: usize,
    pub b: usize,
    /// 1 when both members carry the same label.
    pub same: bool,
}

impl MetricModel {
    pub fn init(shape: &EncoderShape, n_ps: usize, n_k: usize, seed: u64) -> Self {
        let encoder = GcnEncoder::init(shape, seeding::mix_str(seed, "metric-encoder"));
        let dim = encoder.embed_dim();
        let mut rng = seeding::rng(seeding::mix_str(seed, "metric-head"));
        let head_w = crate::nn::layers::glorot(1, dim, &mut rng);
        MetricModel {
            encoder,
            head_w,
            head_b: 0.0,
            n_ps,
            n_k,
        }
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut out = self.encoder.params();
        out.push(self.head_w.clone());
        out.push(Tensor::vector(vec![self.head_b]));
        out
    }

    pub fn set_params(&mut self, params: &[Tensor]) {
        let enc = self.encoder.num_param_tensors();
        self.encoder.set_params(&params[..enc]);
        self.head_w = params[enc].clone();
        self.head_b = params[enc + 1].data()[0];
    }

    pub fn embed(&self, g: &Graph) -> Result<Vec<Real>> {
        self.encoder.embed(g)
    }

    fn pair_logit(&self, ha: &[Real], hb: &[Real]) -> Real {
        let diff: Vec<Real> = ha.iter().zip(hb).map(|(a, b)| (a - b).abs()).collect();
        dot(self.head_w.data(), &diff) + self.head_b
    }

    /// Posterior that two graphs share a label; symmetric in its arguments.
    pub fn pair_posterior(&self, g1: &Graph, g2: &Graph) -> Result<Real> {
        let (h1, h2) = (self.embed(g1)?, self.embed(g2)?);
        Ok(sigmoid(self.pair_logit(&h1, &h2)))
    }

    /// Posterior from precomputed embeddings.
    pub fn pair_posterior_from(&self, ha: &[Real], hb: &[Real]) -> Real {
        sigmoid(self.pair_logit(ha, hb))
    }
}

/// Draw `n_ps` same-label pairs and `n_ps` different-label pairs. A
/// same-label pair picks the label uniformly and then a distinct pair
/// within it; no graph is ever paired with itself.
pub fn sample_pairs(train: &Corpus, n_ps: usize, seed: u64) -> Result<Vec<PairSample>> {
    let real: Vec<usize> = (0..train.len()).filter(|&i| train.items()[i].is_real()).collect();
    let generated: Vec<usize> =
        (0..train.len()).filter(|&i| !train.items()[i].is_real()).collect();
    if real.len() < 2 || generated.len() < 2 {
        return Err(Error::Pair(format!(
            "need at least 2 graphs per label, got {} real / {} generated",
            real.len(),
            generated.len()
        )));
    }
    let groups = [real, generated];
    sample_paired(&groups, n_ps, n_ps, seed)
}

/// Pair sampling over arbitrary index groups (used for both authenticity
/// and generator attribution).
pub fn sample_paired(
    groups: &[Vec<usize>],
    n_same: usize,
    n_diff: usize,
    seed: u64,
) -> Result<Vec<PairSample>> {
    if groups.len() < 2 {
        return Err(Error::Pair("pair sampling needs at least two groups".into()));
    }
    let mut rng = seeding::rng(seeding::mix_str(seed, "pair-sampling"));
    let mut out = Vec::with_capacity(n_same + n_diff);
    for _ in 0..n_same {
        // Uniform over groups, then a distinct pair within the group.
        let candidates: Vec<usize> = (0..groups.len()).filter(|&g| groups[g].len() >= 2).collect();
        if candidates.is_empty() {
            return Err(Error::Pair("no group has two members".into()));
        }
        let g = candidates[rng.gen_range(0..candidates.len())];
        let members = &groups[g];
        let a = members[rng.gen_range(0..members.len())];
        let b = loop {
            let b = members[rng.gen_range(0..members.len())];
            if b != a {
                break b;
            }
        };
        out.push(PairSample { a, b, same: true });
    }
    for _ in 0..n_diff {
        let ga = rng.gen_range(0..groups.len());
        let gb = loop {
            let gb = rng.gen_range(0..groups.len());
            if gb != ga {
                break gb;
            }
        };
        if groups[ga].is_empty() || groups[gb].is_empty() {
            return Err(Error::Pair("a group is empty".into()));
        }
        let a = groups[ga][rng.gen_range(0..groups[ga].len())];
        let b = groups[gb][rng.gen_range(0..groups[gb].len())];
        out.push(PairSample { a, b, same: false });
    }
    Ok(out)
}

/// Train the siamese pair scorer: binary cross-entropy on the pair
/// posterior, both branches through the shared encoder.
pub fn train_siamese(
    train: &Corpus,
    pairs: &[PairSample],
    config: &TrainConfig,
    seed: u64,
) -> Result<(MetricModel, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::argument("train_siamese needs at least one pair"));
    }
    let mut model = MetricModel::init(&EncoderShape::default(), config.n_ps, config.n_k, seed);
    let mut params = model.params();
    let mut adam = Adam::new(config.lr as Real, &params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_rng = seeding::rng(seeding::mix_str(seed, "siamese-epochs"));
    let dim = model.encoder.embed_dim();

    for epoch in 0..config.epochs {
        order.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            model.set_params(&params);
            let mut grads: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            let inv = 1.0 / batch.len() as Real;
            let enc_count = model.encoder.num_param_tensors();
            for &pidx in batch {
                let pair = pairs[pidx];
                let ga = train.items()[pair.a].graph();
                let gb = train.items()[pair.b].graph();
                let ca = model.encoder.forward(ga)?;
                let cb = model.encoder.forward(gb)?;
                let diff: Vec<Real> = ca
                    .embedding
                    .iter()
                    .zip(&cb.embedding)
                    .map(|(a, b)| (a - b).abs())
                    .collect();
                let logit = dot(model.head_w.data(), &diff) + model.head_b;
                let y = if pair.same { 1.0 } else { 0.0 };
                let (loss, d_logit) = bce_with_logits(logit, y);
                if !loss.is_finite() {
                    return Err(Error::train(epoch, "pair loss became non-finite"));
                }
                epoch_loss += loss as f64;
                let d_logit = d_logit * inv;

                let (enc_grads, head_grads) = grads.split_at_mut(enc_count);
                for (g, &d) in head_grads[0].data_mut().iter_mut().zip(&diff) {
                    *g += d_logit * d;
                }
                head_grads[1].data_mut()[0] += d_logit;

                // d|a-b| -> both branches with opposite signs.
                let mut d_ha = vec![0.0 as Real; dim];
                let mut d_hb = vec![0.0 as Real; dim];
                for t in 0..dim {
                    let s = (ca.embedding[t] - cb.embedding[t]).signum();
                    let s = if ca.embedding[t] == cb.embedding[t] { 0.0 } else { s };
                    let dd = d_logit * model.head_w.data()[t] * s;
                    d_ha[t] = dd;
                    d_hb[t] = -dd;
                }
                model.encoder.backward(&ca, &d_ha, enc_grads)?;
                model.encoder.backward(&cb, &d_hb, enc_grads)?;
            }
            adam.step(&mut params, &grads)?;
        }
        log.push(epoch_loss / pairs.len() as f64);
    }
    model.set_params(&params);
    Ok((model, log))
}

/// Reference embeddings grouped by label, kept in corpus order.
pub struct ReferenceEmbeddings {
    real: Vec<Vec<Real>>,
    generated: Vec<Vec<Real>>,
}

impl ReferenceEmbeddings {
    pub fn build(model: &MetricModel, references: &Corpus) -> Result<Self> {
        let mut real = Vec::new();
        let mut generated = Vec::new();
        for item in references.iter() {
            let e = model.embed(item.graph())?;
            if item.is_real() {
                real.push(e);
            } else {
                generated.push(e);
            }
        }
        Ok(ReferenceEmbeddings { real, generated })
    }

    fn group(&self, a: Authenticity) -> &[Vec<Real>] {
        match a {
            Authenticity::Real => &self.real,
            Authenticity::Generated => &self.generated,
        }
    }
}

/// Inference by posterior averaging: `n_k` references per label, mean pair
/// posterior per label, argmax label with ties going to `Real`. Reference
/// picks are a seeded shuffle; the chosen subset is walked in corpus order
/// so that `n_k = all` reproduces the full average bit for bit.
pub fn metric_predict_embedded(
    model: &MetricModel,
    g: &Graph,
    refs: &ReferenceEmbeddings,
    n_k: usize,
    seed: u64,
) -> Result<(Authenticity, [f64; 2])> {
    let h = model.embed(g)?;
    let mut means = [0.0f64; 2];
    for (slot, label) in [Authenticity::Real, Authenticity::Generated]
        .into_iter()
        .enumerate()
    {
        let group = refs.group(label);
        if group.len() < n_k || n_k == 0 {
            return Err(Error::argument(format!(
                "need at least n_k={n_k} references with label {label}, got {}",
                group.len()
            )));
        }
        let mut order: Vec<usize> = (0..group.len()).collect();
        order.shuffle(&mut seeding::rng(seeding::mix(
            seeding::mix_str(seed, "metric-refs"),
            slot as u64,
        )));
        let mut chosen: Vec<usize> = order[..n_k].to_vec();
        chosen.sort_unstable();
        let mut total = 0.0f64;
        for &idx in &chosen {
            total += model.pair_posterior_from(&h, &group[idx]) as f64;
        }
        means[slot] = total / n_k as f64;
    }
    let label = if means[0] >= means[1] {
        Authenticity::Real
    } else {
        Authenticity::Generated
    };
    Ok((label, means))
}

/// Convenience wrapper that embeds the references on the fly.
pub fn metric_predict(
    model: &MetricModel,
    g: &Graph,
    references: &Corpus,
    n_k: usize,
    seed: u64,
) -> Result<(Authenticity, [f64; 2])> {
    let refs = ReferenceEmbeddings::build(model, references)?;
    metric_predict_embedded(model, g, &refs, n_k, seed)
}

/// Posterior that two graphs come from the same generator, for a model
/// trained on same-generator pairs. 0.5 thresholds same vs. different.
pub fn attribution_predict(model: &MetricModel, g1: &Graph, g2: &Graph) -> Result<Real> {
    model.pair_posterior(g1, g2)
}
