//! Autoencoder generator with an iterative decoder.
//!
//! Same encoder and loss as the plain variational autoencoder, but before
//! the final inner product the latents pass through `R` refinement rounds:
//! a message pass with the row-normalized similarity matrix
//! `S = ZhatZhat^T + (1/n)J` followed by a learned linear map. With `R = 0`
//! the decoder is exactly the inner-product decoder.

use rand::seq::SliceRandom;

use crate::detect::featurizer::NodeFeaturizer;
use crate::error::{Error, Result};
use crate::graph::Corpus;
use crate::nn::tensor::{dot, matmul, matmul_a_bt, matmul_at_b};
use crate::nn::{Adam, Real, Tensor};
use crate::seeding;

use super::vgae::{kl_standard_normal, recon_loss_and_grad, NeuralGenConfig, VgaeModel};

const TINY_NORM: Real = 1e-12;

#[derive(Debug, Clone)]
pub struct GraphiteModel {
    pub encoder: VgaeModel,
    /// One (latent x latent) weight matrix per refinement round. Rounds
    /// before the last use ReLU; the last round is linear so decoded logits
    /// can go negative.
    pub refine: Vec<Tensor>,
}

struct RoundCache {
    z_in: Tensor,
    z_hat: Tensor,
    norms: Vec<Real>,
    s: Tensor,
    p: Tensor,
    pre: Tensor,
}

impl GraphiteModel {
    pub fn init(hidden: usize, latent: usize, rounds: usize, seed: u64) -> Self {
        let encoder = VgaeModel::init(NodeFeaturizer::default(), hidden, latent, seed);
        let refine = (0..rounds)
            .map(|r| {
                let mut rng = seeding::rng(seeding::mix(seeding::mix_str(seed, "refine"), r as u64));
                crate::nn::layers::glorot(latent, latent, &mut rng)
            })
            .collect();
        GraphiteModel { encoder, refine }
    }

    pub fn params(&self) -> Vec<Tensor> {
        let mut out = self.encoder.params();
        out.extend(self.refine.iter().cloned());
        out
    }

    pub fn set_params(&mut self, params: &[Tensor]) {
        self.encoder.set_params(&params[..3]);
        for (w, p) in self.refine.iter_mut().zip(&params[3..]) {
            *w = p.clone();
        }
    }

    fn is_last(&self, round: usize) -> bool {
        round + 1 == self.refine.len()
    }

    /// Run the refinement rounds on latents `z`.
    pub fn decode_refine(&self, z: &Tensor) -> Tensor {
        let mut current = z.clone();
        for (r, w) in self.refine.iter().enumerate() {
            let (out, _) = round_forward(&current, w, self.is_last(r));
            current = out;
        }
        current
    }

    fn decode_with_caches(&self, z: &Tensor) -> (Tensor, Vec<RoundCache>) {
        let mut caches = Vec::with_capacity(self.refine.len());
        let mut current = z.clone();
        for (r, w) in self.refine.iter().enumerate() {
            let (out, cache) = round_forward(&current, w, self.is_last(r));
            caches.push(cache);
            current = out;
        }
        (current, caches)
    }

    fn decode_backward(
        &self,
        caches: &[RoundCache],
        d_out: &Tensor,
        d_refine: &mut [Tensor],
    ) -> Result<Tensor> {
        let mut grad = d_out.clone();
        for (r, cache) in caches.iter().enumerate().rev() {
            grad = round_backward(
                cache,
                &self.refine[r],
                &grad,
                self.is_last(r),
                &mut d_refine[r],
            )?;
        }
        Ok(grad)
    }
}

fn round_forward(z_in: &Tensor, w: &Tensor, last: bool) -> (Tensor, RoundCache) {
    let (n, d) = z_in.dims2().expect("latents are a matrix");
    let mut z_hat = z_in.clone();
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let norm = dot(z_in.row(i), z_in.row(i)).sqrt();
        norms[i] = norm;
        if norm > TINY_NORM {
            for v in z_hat.row_mut(i) {
                *v /= norm;
            }
        } else {
            for v in z_hat.row_mut(i) {
                *v = 0.0;
            }
        }
    }
    let mut s = matmul_a_bt(&z_hat, &z_hat).expect("similarity matrix");
    let uniform = 1.0 / n as Real;
    for v in s.data_mut() {
        *v += uniform;
    }
    let p = matmul(&s, z_in).expect("message pass");
    let pre = matmul(&p, w).expect("refine weights");
    let mut out = pre.clone();
    if !last {
        for v in out.data_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    let _ = d;
    (
        out,
        RoundCache {
            z_in: z_in.clone(),
            z_hat,
            norms,
            s,
            p,
            pre,
        },
    )
}

fn round_backward(
    cache: &RoundCache,
    w: &Tensor,
    d_out: &Tensor,
    last: bool,
    dw: &mut Tensor,
) -> Result<Tensor> {
    let (n, _) = cache.z_in.dims2()?;
    let mut d_pre = d_out.clone();
    if !last {
        for (g, &p) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
    }
    dw.add_assign(&matmul_at_b(&cache.p, &d_pre)?)?;
    let d_p = matmul_a_bt(&d_pre, w)?;

    // P = S * z_in with S symmetric.
    let mut d_z_in = matmul(&cache.s, &d_p)?;
    let d_s = matmul_a_bt(&d_p, &cache.z_in)?;

    // S = z_hat z_hat^T (+ constant): d z_hat = (dS + dS^T) z_hat.
    let mut d_s_sym = d_s.clone();
    for i in 0..n {
        for j in 0..n {
            *d_s_sym.at_mut(i, j) = d_s.at(i, j) + d_s.at(j, i);
        }
    }
    let d_z_hat = matmul(&d_s_sym, &cache.z_hat)?;

    // Row normalization: d z = (d z_hat - z_hat * <d z_hat, z_hat>) / norm.
    for i in 0..n {
        let norm = cache.norms[i];
        if norm <= TINY_NORM {
            continue;
        }
        let proj = dot(d_z_hat.row(i), cache.z_hat.row(i));
        let hat_row: Vec<Real> = cache.z_hat.row(i).to_vec();
        for (t, dz) in d_z_in.row_mut(i).iter_mut().enumerate() {
            *dz += (d_z_hat.at(i, t) - hat_row[t] * proj) / norm;
        }
    }
    Ok(d_z_in)
}

/// Train with the same per-graph loop and loss as the plain autoencoder;
/// only the decode path differs.
pub fn fit_graphite(
    real: &Corpus,
    config: &NeuralGenConfig,
    seed: u64,
) -> Result<(GraphiteModel, Vec<f64>)> {
    if real.is_empty() {
        return Err(Error::argument("fit_graphite needs a non-empty corpus"));
    }
    let mut model = GraphiteModel::init(
        config.hidden,
        config.latent_dim,
        config.rounds,
        seeding::mix_str(seed, "graphite-init"),
    );
    let mut params = model.params();
    let mut adam = Adam::new(config.lr as Real, &params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..real.len()).collect();
    let mut epoch_rng = seeding::rng(seeding::mix_str(seed, "graphite-epochs"));

    for epoch in 0..config.epochs {
        order.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        for &idx in &order {
            let g = real.items()[idx].graph();
            model.set_params(&params);
            let cache = model.encoder.encode(g)?;

            let n = g.n();
            let latent = model.encoder.latent_dim();
            let mut eps = Tensor::zeros(&[n, latent]);
            for e in eps.data_mut() {
                *e = seeding::standard_normal(&mut epoch_rng) as Real;
            }
            let mut z = Tensor::zeros(&[n, latent]);
            for i in 0..n * latent {
                z.data_mut()[i] = cache.mu.out.data()[i]
                    + cache.logsig.out.data()[i].exp() * eps.data()[i];
            }

            let (z_refined, round_caches) = model.decode_with_caches(&z);
            let (rec_loss, d_z_refined) = recon_loss_and_grad(g, &z_refined);
            let kl = kl_standard_normal(&cache.mu.out, &cache.logsig.out);
            let loss = rec_loss + kl;
            if !loss.is_finite() {
                return Err(Error::train(epoch, "loss became non-finite"));
            }
            epoch_loss += loss as f64;

            let mut grads: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
            let d_z = model.decode_backward(&round_caches, &d_z_refined, &mut grads[3..])?;

            let inv_n = 1.0 / n as Real;
            let mut d_mu = d_z.clone();
            let mut d_logsig = Tensor::zeros(&[n, latent]);
            for i in 0..n * latent {
                d_mu.data_mut()[i] += cache.mu.out.data()[i] * inv_n;
                let sig = cache.logsig.out.data()[i].exp();
                d_logsig.data_mut()[i] =
                    d_z.data()[i] * eps.data()[i] * sig + (sig * sig - 1.0) * inv_n;
            }
            model
                .encoder
                .encode_backward(g, &cache, &d_mu, &d_logsig, &mut grads[..3])?;
            adam.step(&mut params, &grads)?;
        }
        log.push(epoch_loss / real.len() as f64);
    }
    model.set_params(&params);
    Ok((model, log))
}
