//! Loss functions with analytic gradients.

use super::tensor::{dot, Tensor};
use super::Real;
use crate::error::{Error, Result};

/// Scalar loss plus the gradient with respect to the loss input.
#[derive(Debug, Clone)]
pub struct LossValue {
    pub loss: Real,
    pub grad: Vec<Real>,
}

/// Softmax + negative log-likelihood. The gradient with respect to the
/// logits is `softmax - onehot(label)`.
pub fn cross_entropy(logits: &[Real], label: usize) -> LossValue {
    assert!(label < logits.len(), "label out of range");
    let max = logits.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
    let exps: Vec<Real> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: Real = exps.iter().sum();
    let loss = total.ln() - (logits[label] - max);
    let mut grad: Vec<Real> = exps.iter().map(|e| e / total).collect();
    grad[label] -= 1.0;
    LossValue { loss, grad }
}

const BCE_EPS: Real = 1e-7;

/// Binary cross-entropy on a probability. `p` is clamped to
/// `[1e-7, 1 - 1e-7]` before both the loss and the gradient.
pub fn bce(p: Real, y: u8) -> LossValue {
    let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    let (loss, grad) = if y == 1 {
        (-pc.ln(), -1.0 / pc)
    } else {
        (-(1.0 - pc).ln(), 1.0 / (1.0 - pc))
    };
    LossValue {
        loss,
        grad: vec![grad],
    }
}

/// Numerically stable binary cross-entropy straight from a logit.
/// Returns `(loss, dloss/dlogit)`; the gradient is `sigmoid(logit) - y`.
pub fn bce_with_logits(logit: Real, y: Real) -> (Real, Real) {
    // softplus(x) = ln(1 + e^x) computed without overflow.
    let softplus = |x: Real| {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let loss = softplus(logit) - y * logit;
    let sig = 1.0 / (1.0 + (-logit).exp());
    (loss, sig - y)
}

/// Hinge loss `max(0, 1 - y*score)` with its subgradient in `score`.
pub fn hinge_loss(score: Real, y: i8) -> LossValue {
    let yf = y as Real;
    let margin = 1.0 - yf * score;
    if margin > 0.0 {
        LossValue {
            loss: margin,
            grad: vec![-yf],
        }
    } else {
        LossValue {
            loss: 0.0,
            grad: vec![0.0],
        }
    }
}

/// NT-Xent over two view batches.
#[derive(Debug, Clone)]
pub struct NtXentLoss {
    pub loss: Real,
    pub grad_i: Tensor,
    pub grad_j: Tensor,
    /// Set when a zero-norm embedding was encountered; its similarities are
    /// treated as 0 and it receives no gradient.
    pub zero_norm_flagged: bool,
}

/// Normalized temperature-scaled cross-entropy. For graph `n` in the batch,
/// with `s(n, n') = cos(z_{n,i}, z_{n',j})`:
///
/// ```text
/// loss_n = -log( exp(s(n,n)/tau) / sum_{n' != n} exp(s(n,n')/tau) )
/// ```
///
/// averaged over the batch. The denominator excludes the positive pair, so
/// the loss can go negative.
pub fn nt_xent(batch_i: &Tensor, batch_j: &Tensor, tau: Real) -> Result<NtXentLoss> {
    let (n, d) = batch_i.dims2()?;
    let (nj, dj) = batch_j.dims2()?;
    if n != nj || d != dj {
        return Err(Error::Shape(format!(
            "nt_xent: {n}x{d} vs {nj}x{dj}"
        )));
    }
    if n < 2 {
        return Err(Error::argument("nt_xent needs a batch of at least 2"));
    }
    if tau <= 0.0 {
        return Err(Error::argument("nt_xent temperature must be positive"));
    }

    let norms_i: Vec<Real> = (0..n).map(|r| dot(batch_i.row(r), batch_i.row(r)).sqrt()).collect();
    let norms_j: Vec<Real> = (0..n).map(|r| dot(batch_j.row(r), batch_j.row(r)).sqrt()).collect();
    let tiny = 1e-12;
    let mut flagged = false;

    let mut sim = Tensor::zeros(&[n, n]);
    for a in 0..n {
        for b in 0..n {
            let denom = norms_i[a] * norms_j[b];
            let s = if denom > tiny {
                dot(batch_i.row(a), batch_j.row(b)) / denom
            } else {
                flagged = true;
                0.0
            };
            *sim.at_mut(a, b) = s;
        }
    }

    let mut loss = 0.0;
    let mut d_sim = Tensor::zeros(&[n, n]);
    let inv_n = 1.0 / n as Real;
    for a in 0..n {
        // logsumexp over b != a, stabilized.
        let mut max = Real::NEG_INFINITY;
        for b in 0..n {
            if b != a {
                max = max.max(sim.at(a, b) / tau);
            }
        }
        let mut total = 0.0;
        for b in 0..n {
            if b != a {
                total += (sim.at(a, b) / tau - max).exp();
            }
        }
        loss += inv_n * (-sim.at(a, a) / tau + max + total.ln());
        *d_sim.at_mut(a, a) += -inv_n / tau;
        for b in 0..n {
            if b != a {
                let w = (sim.at(a, b) / tau - max).exp() / total;
                *d_sim.at_mut(a, b) += inv_n * w / tau;
            }
        }
    }

    // Chain through the cosine: ds/da = b/(|a||b|) - s*a/|a|^2.
    let mut grad_i = Tensor::zeros(&[n, d]);
    let mut grad_j = Tensor::zeros(&[n, d]);
    for a in 0..n {
        for b in 0..n {
            let g = d_sim.at(a, b);
            if g == 0.0 {
                continue;
            }
            let (na, nb) = (norms_i[a], norms_j[b]);
            if na <= tiny || nb <= tiny {
                continue;
            }
            let s = sim.at(a, b);
            let inv = 1.0 / (na * nb);
            for t in 0..d {
                let za = batch_i.at(a, t);
                let zb = batch_j.at(b, t);
                *grad_i.at_mut(a, t) += g * (zb * inv - s * za / (na * na));
                *grad_j.at_mut(b, t) += g * (za * inv - s * zb / (nb * nb));
            }
        }
    }

    Ok(NtXentLoss {
        loss,
        grad_i,
        grad_j,
        zero_norm_flagged: flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_balanced_logits() {
        let lv = cross_entropy(&[0.3, 0.3], 0);
        assert!((lv.loss - (2.0 as Real).ln()).abs() < 1e-12);
        assert!((lv.grad[0] + 0.5).abs() < 1e-12);
        assert!((lv.grad[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_confident_limit() {
        let lv = cross_entropy(&[60.0, -60.0], 0);
        assert!(lv.loss < 1e-12);
    }

    #[test]
    fn bce_examples() {
        assert!((bce(0.5, 1).loss - (2.0 as Real).ln()).abs() < 1e-12);
        assert!(bce(1e-12, 0).loss < 1e-6);
        assert!((bce(0.25, 1).loss - 1.3862943611198906).abs() < 1e-12);
    }

    #[test]
    fn bce_with_logits_matches_probability_form() {
        for &(logit, y) in &[(0.7, 1.0), (-1.3, 0.0), (2.5, 0.0), (-0.2, 1.0)] {
            let p = 1.0 / (1.0 + (-logit as Real).exp());
            let (loss, grad) = bce_with_logits(logit, y);
            let want = -(y as Real * p.ln() + (1.0 - y as Real) * (1.0 - p).ln());
            assert!((loss - want).abs() < 1e-12);
            assert!((grad - (p - y as Real)).abs() < 1e-12);
        }
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_loss(2.0, 1).loss, 0.0);
        assert_eq!(hinge_loss(0.0, 1).loss, 1.0);
        assert!((hinge_loss(0.5, -1).loss - 1.5).abs() < 1e-12);
    }

    #[test]
    fn nt_xent_orthogonal_two_graph_batch() {
        // Both views of graph 1 point along x, both views of graph 2 along y.
        let zi = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let zj = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = nt_xent(&zi, &zj, 1.0).unwrap();
        assert!((out.loss - (-1.0)).abs() < 1e-12, "loss {}", out.loss);
        assert!(!out.zero_norm_flagged);
    }

    #[test]
    fn nt_xent_is_scale_invariant() {
        let zi = Tensor::matrix(3, 2, vec![1.0, 0.2, -0.4, 1.0, 0.3, -0.9]).unwrap();
        let zj = Tensor::matrix(3, 2, vec![0.9, 0.1, -0.2, 1.1, 0.5, -0.7]).unwrap();
        let base = nt_xent(&zi, &zj, 0.5).unwrap().loss;
        let mut scaled = zi.clone();
        for v in scaled.row_mut(1) {
            *v *= 37.0;
        }
        let after = nt_xent(&scaled, &zj, 0.5).unwrap().loss;
        assert!((base - after).abs() < 1e-10);
    }

    #[test]
    fn nt_xent_flags_zero_norm() {
        let zi = Tensor::matrix(2, 2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let zj = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = nt_xent(&zi, &zj, 1.0).unwrap();
        assert!(out.zero_norm_flagged);
        assert!(out.loss.is_finite());
    }
}
