//! End-to-end detector: the GCN stack plus a linear classification layer,
//! trained with cross-entropy on real/generated labels.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Authenticity, Corpus, Graph};
use crate::nn::losses::cross_entropy;
use crate::nn::{Activation, Adam, Linear, Real, Tensor};
use crate::seeding;

use super::encoder::{EncoderShape, GcnEncoder};
use super::TrainConfig;

/// Class indices for the two logits.
pub const CLASS_REAL: usize = 0;
pub const CLASS_GENERATED: usize = 1;

#[derive(Debug, Clone)]
pub struct EndToEndModel {
    pub encoder: GcnEncoder,
    pub classifier: Linear,
}

impl EndToEndModel {
    pub fn init(shape: &EncoderShape, seed: u64) -> Self {
        let encoder = GcnEncoder::init(shape, seeding::mix_str(seed, "e2e-encoder"));
        let classifier = Linear::new(
            encoder.embed_dim(),
            2,
            Activation::Identity,
            seeding::mix_str(seed, "e2e-classifier"),
        );
        EndToEndModel {
            encoder,
            classifier,
        }
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut out = self.encoder.params();
        out.push(self.classifier.w.clone());
        out.push(self.classifier.b.clone());
        out
    }

    pub fn set_params(&mut self, params: &[Tensor]) {
        let enc = self.encoder.num_param_tensors();
        self.encoder.set_params(&params[..enc]);
        self.classifier.w = params[enc].clone();
        self.classifier.b = params[enc + 1].clone();
    }

    pub fn logits(&self, g: &Graph) -> Result<[Real; 2]> {
        let embedding = self.encoder.embed(g)?;
        let row = Tensor::matrix(1, embedding.len(), embedding)?;
        let out = self.classifier.forward(&row)?.out;
        Ok([out.at(0, 0), out.at(0, 1)])
    }
}

pub(super) fn label_index(a: Authenticity) -> usize {
    match a {
        Authenticity::Real => CLASS_REAL,
        Authenticity::Generated => CLASS_GENERATED,
    }
}

pub(super) fn softmax2(logits: [Real; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp() as f64;
    let e1 = (logits[1] - m).exp() as f64;
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Minimize cross-entropy with Adam over shuffled mini-batches. Both labels
/// must be present. Returns the model and the per-epoch mean loss.
pub fn train_end_to_end(
    train: &Corpus,
    config: &TrainConfig,
    seed: u64,
) -> Result<(EndToEndModel, Vec<f64>)> {
    let has_real = train.iter().any(|it| it.is_real());
    let has_generated = train.iter().any(|it| !it.is_real());
    if !has_real || !has_generated {
        return Err(Error::train(0, "training corpus must contain both classes"));
    }

    let mut model = EndToEndModel::init(&EncoderShape::default(), seed);
    let mut params = model.params();
    let mut adam = Adam::new(config.lr as Real, &params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_rng = seeding::rng(seeding::mix_str(seed, "e2e-epochs"));

    for epoch in 0..config.epochs {
        order.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            model.set_params(&params);
            let mut grads: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            let inv = 1.0 / batch.len() as Real;
            for &idx in batch {
                let item = &train.items()[idx];
                let cache = model.encoder.forward(item.graph())?;
                let row = Tensor::matrix(1, cache.embedding.len(), cache.embedding.clone())?;
                let lin = model.classifier.forward(&row)?;
                let logits = [lin.out.at(0, 0), lin.out.at(0, 1)];
                let lv = cross_entropy(&logits, label_index(item.authenticity()));
                if !lv.loss.is_finite() {
                    return Err(Error::train(epoch, "loss became non-finite"));
                }
                epoch_loss += lv.loss as f64;

                let d_logits = Tensor::matrix(1, 2, lv.grad.iter().map(|&g| g * inv).collect())?;
                let enc_count = model.encoder.num_param_tensors();
                let (enc_grads, cls_grads) = grads.split_at_mut(enc_count);
                let (cls_w, cls_b) = cls_grads.split_at_mut(1);
                let d_embed_row =
                    model
                        .classifier
                        .backward(&lin, &d_logits, &mut cls_w[0], &mut cls_b[0])?;
                model
                    .encoder
                    .backward(&cache, d_embed_row.row(0), enc_grads)?;
            }
            adam.step(&mut params, &grads)?;
        }
        log.push(epoch_loss / train.len() as f64);
    }
    model.set_params(&params);
    Ok((model, log))
}

/// Softmax over the two logits; the larger posterior wins and exact ties go
/// to `Real`.
pub fn predict_end_to_end(model: &EndToEndModel, g: &Graph) -> Result<(Authenticity, [f64; 2])> {
    let posteriors = softmax2(model.logits(g)?);
    let label = if posteriors[CLASS_REAL] >= posteriors[CLASS_GENERATED] {
        Authenticity::Real
    } else {
        Authenticity::Generated
    };
    Ok((label, posteriors))
}
