//! Contrastive detector: a self-supervised encoder trained on augmented
//! views with NT-Xent, followed by a margin-based linear classifier on the
//! frozen embeddings.
//!
//! The encoder stage never sees labels; its interface takes bare graphs.
//! The projection head exists only for the contrastive loss and is not used
//! at inference.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Authenticity, Corpus, Graph};
use crate::nn::losses::{hinge_loss, nt_xent};
use crate::nn::tensor::dot;
use crate::nn::{Activation, Adam, Linear, Real, Tensor};
use crate::seeding;

use super::augment::{augment, AugmentKind, AUGMENT_POOL};
use super::encoder::{EncoderShape, GcnEncoder};
use super::TrainConfig;

#[derive(Debug, Clone)]
pub struct ContrastiveModel {
    pub encoder: GcnEncoder,
    pub proj1: Linear,
    pub proj2: Linear,
    pub tau: Real,
    pub aug_ratio: f64,
    pub classifier: Option<LinearClassifier>,
}

/// Margin classifier on embeddings: positive score means real.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    pub w: Tensor,
    pub b: Real,
}

impl LinearClassifier {
    pub fn score(&self, embedding: &[Real]) -> Real {
        dot(self.w.data(), embedding) + self.b
    }
}

pub struct ContrastiveReport {
    pub loss_log: Vec<f64>,
    /// Mini-batches of size 1 that were skipped (NT-Xent needs two).
    pub skipped_batches: usize,
}

impl ContrastiveModel {
    pub fn init(shape: &EncoderShape, tau: Real, aug_ratio: f64, seed: u64) -> Self {
        let encoder = GcnEncoder::init(shape, seeding::mix_str(seed, "ctr-encoder"));
        let dim = encoder.embed_dim();
        ContrastiveModel {
            encoder,
            proj1: Linear::new(dim, dim, Activation::Relu, seeding::mix_str(seed, "ctr-proj1")),
            proj2: Linear::new(dim, dim, Activation::Identity, seeding::mix_str(seed, "ctr-proj2")),
            tau,
            aug_ratio,
            classifier: None,
        }
    }

    fn encoder_params(&self) -> Vec<Tensor> {
        let mut out = self.encoder.params();
        out.push(self.proj1.w.clone());
        out.push(self.proj1.b.clone());
        out.push(self.proj2.w.clone());
        out.push(self.proj2.b.clone());
        out
    }

    fn set_encoder_params(&mut self, params: &[Tensor]) {
        let enc = self.encoder.num_param_tensors();
        self.encoder.set_params(&params[..enc]);
        self.proj1.w = params[enc].clone();
        self.proj1.b = params[enc + 1].clone();
        self.proj2.w = params[enc + 2].clone();
        self.proj2.b = params[enc + 3].clone();
    }

    pub fn embed(&self, g: &Graph) -> Result<Vec<Real>> {
        self.encoder.embed(g)
    }

    /// Classifier score -> label; exact zero goes to `Real`. The returned
    /// pseudo-posteriors are a sigmoid squash of the margin score.
    pub fn predict(&self, g: &Graph) -> Result<(Authenticity, [f64; 2])> {
        let clf = self
            .classifier
            .as_ref()
            .ok_or_else(|| Error::argument("contrastive model has no trained classifier"))?;
        let score = clf.score(&self.embed(g)?);
        let p_real = 1.0 / (1.0 + (-score as f64).exp());
        let label = if score >= 0.0 {
            Authenticity::Real
        } else {
            Authenticity::Generated
        };
        Ok((label, [p_real, 1.0 - p_real]))
    }
}

/// Self-supervised stage. View one is always node dropping; view two is a
/// uniform pick from the augmentation pool. NT-Xent is minimized with Adam
/// over mini-batches; labels are never consulted (the signature has none).
pub fn train_contrastive_encoder(
    graphs: &[&Graph],
    config: &TrainConfig,
    seed: u64,
) -> Result<(ContrastiveModel, ContrastiveReport)> {
    if graphs.len() < 2 {
        return Err(Error::train(0, "contrastive training needs at least 2 graphs"));
    }
    let mut model = ContrastiveModel::init(
        &EncoderShape::default(),
        config.tau as Real,
        config.aug_ratio,
        seed,
    );
    let mut params = model.encoder_params();
    let mut adam = Adam::new(config.lr as Real, &params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut skipped = 0usize;
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut epoch_rng = seeding::rng(seeding::mix_str(seed, "ctr-epochs"));
    let aug_seed = seeding::mix_str(seed, "ctr-augment");

    for epoch in 0..config.epochs {
        order.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size.max(2)) {
            if batch.len() < 2 {
                skipped += 1;
                continue;
            }
            model.set_encoder_params(&params);
            let dim = model.encoder.embed_dim();

            // Build both views and push them through encoder + projection.
            let mut enc_caches_i = Vec::with_capacity(batch.len());
            let mut enc_caches_j = Vec::with_capacity(batch.len());
            let mut proj_caches_i = Vec::with_capacity(batch.len());
            let mut proj_caches_j = Vec::with_capacity(batch.len());
            let mut zi = Tensor::zeros(&[batch.len(), dim]);
            let mut zj = Tensor::zeros(&[batch.len(), dim]);
            for (slot, &idx) in batch.iter().enumerate() {
                let g = graphs[idx];
                let s = seeding::mix(aug_seed, (epoch * graphs.len() + idx) as u64);
                let view_i = augment(g, AugmentKind::NodeDrop, model.aug_ratio, seeding::mix(s, 1))?;
                let mut pick_rng = seeding::rng(seeding::mix(s, 2));
                let kind_j = AUGMENT_POOL[pick_rng.gen_range(0..AUGMENT_POOL.len())];
                let view_j = augment(g, kind_j, model.aug_ratio, seeding::mix(s, 3))?;

                for (cache_store, proj_store, z, view) in [
                    (&mut enc_caches_i, &mut proj_caches_i, &mut zi, &view_i),
                    (&mut enc_caches_j, &mut proj_caches_j, &mut zj, &view_j),
                ] {
                    let cache = model.encoder.forward(view)?;
                    let row = Tensor::matrix(1, dim, cache.embedding.clone())?;
                    let p1 = model.proj1.forward(&row)?;
                    let p2 = model.proj2.forward(&p1.out)?;
                    z.row_mut(slot).copy_from_slice(p2.out.row(0));
                    cache_store.push(cache);
                    proj_store.push((p1, p2));
                }
            }

            let loss = nt_xent(&zi, &zj, model.tau)?;
            if !loss.loss.is_finite() {
                return Err(Error::train(epoch, "contrastive loss became non-finite"));
            }
            epoch_loss += loss.loss as f64;
            batches += 1;

            let mut grads: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            let enc_count = model.encoder.num_param_tensors();
            for (slot, _) in batch.iter().enumerate() {
                for (grad_rows, enc_caches, proj_caches) in [
                    (&loss.grad_i, &enc_caches_i, &proj_caches_i),
                    (&loss.grad_j, &enc_caches_j, &proj_caches_j),
                ] {
                    let d_z = Tensor::matrix(1, dim, grad_rows.row(slot).to_vec())?;
                    let (p1, p2) = &proj_caches[slot];
                    let (enc_grads, rest) = grads.split_at_mut(enc_count);
                    let (p1_grads, p2_grads) = rest.split_at_mut(2);
                    let (p1w, p1b) = p1_grads.split_at_mut(1);
                    let (p2w, p2b) = p2_grads.split_at_mut(1);
                    let d_mid = model.proj2.backward(p2, &d_z, &mut p2w[0], &mut p2b[0])?;
                    let d_row = model.proj1.backward(p1, &d_mid, &mut p1w[0], &mut p1b[0])?;
                    model
                        .encoder
                        .backward(&enc_caches[slot], d_row.row(0), enc_grads)?;
                }
            }
            adam.step(&mut params, &grads)?;
        }
        log.push(if batches > 0 {
            epoch_loss / batches as f64
        } else {
            f64::NAN
        });
    }
    model.set_encoder_params(&params);
    Ok((
        model,
        ContrastiveReport {
            loss_log: log,
            skipped_batches: skipped,
        },
    ))
}

/// Margin classifier on fixed embeddings: hinge loss with an L2 penalty,
/// minimized with Adam. Labels are +1 (real) / -1 (generated).
pub fn train_linear_classifier(
    embeddings: &[Vec<Real>],
    labels: &[i8],
    config: &TrainConfig,
    seed: u64,
) -> Result<LinearClassifier> {
    if embeddings.len() != labels.len() || embeddings.is_empty() {
        return Err(Error::argument("classifier needs aligned, non-empty inputs"));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::train(0, "classifier training needs both classes"));
    }
    let dim = embeddings[0].len();
    let mut params = vec![Tensor::zeros(&[dim]), Tensor::zeros(&[1])];
    let mut adam = Adam::new(config.classifier_lr as Real, &params);
    let mut order: Vec<usize> = (0..embeddings.len()).collect();
    let mut rng = seeding::rng(seeding::mix_str(seed, "linear-classifier"));
    let l2 = config.l2 as Real;

    for _ in 0..config.classifier_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let mut grads = vec![Tensor::zeros(&[dim]), Tensor::zeros(&[1])];
            let inv = 1.0 / batch.len() as Real;
            for &idx in batch {
                let x = &embeddings[idx];
                let score = dot(params[0].data(), x) + params[1].data()[0];
                let lv = hinge_loss(score, labels[idx]);
                let d_score = lv.grad[0] * inv;
                for (g, &xv) in grads[0].data_mut().iter_mut().zip(x) {
                    *g += d_score * xv;
                }
                grads[1].data_mut()[0] += d_score;
            }
            // L2 penalty on the weights only.
            let w_snapshot: Vec<Real> = params[0].data().to_vec();
            for (g, wv) in grads[0].data_mut().iter_mut().zip(w_snapshot) {
                *g += 2.0 * l2 * wv;
            }
            adam.step(&mut params, &grads)?;
        }
    }
    Ok(LinearClassifier {
        w: params[0].clone(),
        b: params[1].data()[0],
    })
}

/// Full pipeline: self-supervised encoder on the graphs, then the margin
/// classifier on the frozen embeddings.
pub fn train_contrastive(
    train: &Corpus,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ContrastiveModel, ContrastiveReport)> {
    let graphs: Vec<&Graph> = train.graphs().collect();
    let (mut model, report) = train_contrastive_encoder(&graphs, config, seed)?;
    let embeddings: Vec<Vec<Real>> = train
        .graphs()
        .map(|g| model.embed(g))
        .collect::<Result<_>>()?;
    let labels: Vec<i8> = train
        .iter()
        .map(|it| if it.is_real() { 1 } else { -1 })
        .collect();
    model.classifier = Some(train_linear_classifier(&embeddings, &labels, config, seed)?);
    Ok((model, report))
}
