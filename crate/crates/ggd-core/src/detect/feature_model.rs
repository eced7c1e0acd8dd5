//! Baseline classifier on the six statistical graph features: a small MLP
//! (6 -> 32 -> 2) over standardized feature vectors.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{Authenticity, Corpus, Graph};
use crate::nn::losses::cross_entropy;
use crate::nn::{Activation, Adam, Linear, Real, Tensor};
use crate::seeding;
use crate::stats::{stat_features, FeatureScaler, FEATURE_COUNT};

use super::end_to_end::{label_index, softmax2, CLASS_GENERATED, CLASS_REAL};
use super::TrainConfig;

pub const HIDDEN: usize = 32;

#[derive(Debug, Clone)]
pub struct FeatureModel {
    /// Fitted on the training set only; test features go through the same
    /// transform, never the other way around.
    pub scaler: FeatureScaler,
    pub l1: Linear,
    pub l2: Linear,
}

impl FeatureModel {
    fn forward_row(&self, g: &Graph) -> Result<[Real; 2]> {
        let f = stat_features(g)?;
        let x = self.scaler.transform(&f);
        let row = Tensor::matrix(1, FEATURE_COUNT, x.iter().map(|&v| v as Real).collect())?;
        let h = self.l1.forward(&row)?;
        let out = self.l2.forward(&h.out)?.out;
        Ok([out.at(0, 0), out.at(0, 1)])
    }

    fn params(&self) -> Vec<Tensor> {
        vec![
            self.l1.w.clone(),
            self.l1.b.clone(),
            self.l2.w.clone(),
            self.l2.b.clone(),
        ]
    }

    fn set_params(&mut self, params: &[Tensor]) {
        self.l1.w = params[0].clone();
        self.l1.b = params[1].clone();
        self.l2.w = params[2].clone();
        self.l2.b = params[3].clone();
    }
}

pub fn train_feature_classifier(
    train: &Corpus,
    config: &TrainConfig,
    seed: u64,
) -> Result<(FeatureModel, Vec<f64>)> {
    let has_real = train.iter().any(|it| it.is_real());
    let has_generated = train.iter().any(|it| !it.is_real());
    if !has_real || !has_generated {
        return Err(Error::train(0, "training corpus must contain both classes"));
    }

    let features: Vec<_> = train
        .graphs()
        .map(stat_features)
        .collect::<Result<Vec<_>>>()?;
    let scaler = FeatureScaler::fit(&features)?;
    let rows: Vec<Vec<Real>> = features
        .iter()
        .map(|f| scaler.transform(f).iter().map(|&v| v as Real).collect())
        .collect();
    let labels: Vec<usize> = train.iter().map(|it| label_index(it.authenticity())).collect();

    let mut model = FeatureModel {
        scaler,
        l1: Linear::new(
            FEATURE_COUNT,
            HIDDEN,
            Activation::Relu,
            seeding::mix_str(seed, "feature-l1"),
        ),
        l2: Linear::new(HIDDEN, 2, Activation::Identity, seeding::mix_str(seed, "feature-l2")),
    };
    let mut params = model.params();
    let mut adam = Adam::new(config.lr as Real, &params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_rng = seeding::rng(seeding::mix_str(seed, "feature-epochs"));

    for epoch in 0..config.epochs {
        order.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            model.set_params(&params);
            let mut grads: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            let inv = 1.0 / batch.len() as Real;
            for &idx in batch {
                let row = Tensor::matrix(1, FEATURE_COUNT, rows[idx].clone())?;
                let c1 = model.l1.forward(&row)?;
                let c2 = model.l2.forward(&c1.out)?;
                let logits = [c2.out.at(0, 0), c2.out.at(0, 1)];
                let lv = cross_entropy(&logits, labels[idx]);
                if !lv.loss.is_finite() {
                    return Err(Error::train(epoch, "loss became non-finite"));
                }
                epoch_loss += lv.loss as f64;
                let d_logits = Tensor::matrix(1, 2, lv.grad.iter().map(|&g| g * inv).collect())?;
                let (front, back) = grads.split_at_mut(2);
                let (b_w, b_b) = back.split_at_mut(1);
                let (f_w, f_b) = front.split_at_mut(1);
                let d_mid = model.l2.backward(&c2, &d_logits, &mut b_w[0], &mut b_b[0])?;
                model.l1.backward(&c1, &d_mid, &mut f_w[0], &mut f_b[0])?;
            }
            adam.step(&mut params, &grads)?;
        }
        log.push(epoch_loss / train.len() as f64);
    }
    model.set_params(&params);
    Ok((model, log))
}

pub fn predict_feature(model: &FeatureModel, g: &Graph) -> Result<(Authenticity, [f64; 2])> {
    let posteriors = softmax2(model.forward_row(g)?);
    let label = if posteriors[CLASS_REAL] >= posteriors[CLASS_GENERATED] {
        Authenticity::Real
    } else {
        Authenticity::Generated
    };
    Ok((label, posteriors))
}
