//! Layers: graph convolution, linear, GRU cell, mean pooling.

use rand::Rng;

use super::tensor::{add_outer, matmul, matmul_a_bt, matmul_at_b, vecmat, vecmat_t, Tensor};
use super::Real;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: Real) -> Real {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation value.
    #[inline]
    fn grad(self, pre: Real) -> Real {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Glorot-uniform initialization.
pub fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-limit..limit) as Real)
        .collect();
    Tensor::matrix(rows, cols, data).expect("glorot shape")
}

/// Symmetrically normalized adjacency with self-loops:
/// entry (u,v) is `1/sqrt((deg u + 1)(deg v + 1))` on edges and the diagonal.
pub fn normalize_adjacency(g: &Graph) -> Tensor {
    let n = g.n();
    let inv_sqrt: Vec<Real> = (0..n)
        .map(|u| 1.0 / ((g.degree(u) + 1) as f64).sqrt() as Real)
        .collect();
    let mut a = Tensor::zeros(&[n, n]);
    for u in 0..n {
        *a.at_mut(u, u) = inv_sqrt[u] * inv_sqrt[u];
    }
    for &(u, v) in g.edges() {
        let w = inv_sqrt[u] * inv_sqrt[v];
        *a.at_mut(u, v) = w;
        *a.at_mut(v, u) = w;
    }
    a
}

/// One graph-convolution layer: `out = act(Â · H · W)`.
#[derive(Debug, Clone)]
pub struct GcnLayer {
    pub w: Tensor,
    pub activation: Activation,
}

/// Forward intermediates needed by the backward pass.
pub struct GcnCache {
    /// Â · H
    pub prop: Tensor,
    /// Â · H · W (pre-activation)
    pub pre: Tensor,
    pub out: Tensor,
}

impl GcnLayer {
    pub fn new(d_in: usize, d_out: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = seeding::rng(seed);
        GcnLayer {
            w: glorot(d_in, d_out, &mut rng),
            activation,
        }
    }

    pub fn forward(&self, a_hat: &Tensor, h: &Tensor) -> Result<GcnCache> {
        let (n, _) = a_hat.dims2()?;
        let (hn, d_in) = h.dims2()?;
        let (w_in, _) = self.w.dims2()?;
        if hn != n || d_in != w_in {
            return Err(Error::Shape(format!(
                "gcn forward: adjacency {n}x{n}, features {hn}x{d_in}, weights {:?}",
                self.w.shape()
            )));
        }
        let prop = matmul(a_hat, h)?;
        let pre = matmul(&prop, &self.w)?;
        let mut out = pre.clone();
        for v in out.data_mut() {
            *v = self.activation.apply(*v);
        }
        Ok(GcnCache { prop, pre, out })
    }

    /// Backward: given dL/d(out), accumulate dL/dW into `dw` and return
    /// dL/dH. Uses Â = Âᵀ.
    pub fn backward(
        &self,
        a_hat: &Tensor,
        cache: &GcnCache,
        d_out: &Tensor,
        dw: &mut Tensor,
    ) -> Result<Tensor> {
        let mut d_pre = d_out.clone();
        for (g, &p) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
            *g *= self.activation.grad(p);
        }
        dw.add_assign(&matmul_at_b(&cache.prop, &d_pre)?)?;
        let d_prop = matmul_a_bt(&d_pre, &self.w)?;
        matmul(a_hat, &d_prop)
    }
}

/// Dense layer `y = x · W + b`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
    pub activation: Activation,
}

pub struct LinearCache {
    pub input: Tensor,
    pub pre: Tensor,
    pub out: Tensor,
}

impl Linear {
    pub fn new(d_in: usize, d_out: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = seeding::rng(seed);
        Linear {
            w: glorot(d_in, d_out, &mut rng),
            b: Tensor::zeros(&[d_out]),
            activation,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<LinearCache> {
        let (n, d_in) = x.dims2()?;
        let (w_in, d_out) = self.w.dims2()?;
        if d_in != w_in {
            return Err(Error::Shape(format!(
                "linear forward: input {n}x{d_in}, weights {w_in}x{d_out}"
            )));
        }
        let mut pre = matmul(x, &self.w)?;
        for i in 0..n {
            for (p, &bv) in pre.row_mut(i).iter_mut().zip(self.b.data()) {
                *p += bv;
            }
        }
        let mut out = pre.clone();
        for v in out.data_mut() {
            *v = self.activation.apply(*v);
        }
        Ok(LinearCache {
            input: x.clone(),
            pre,
            out,
        })
    }

    pub fn backward(
        &self,
        cache: &LinearCache,
        d_out: &Tensor,
        dw: &mut Tensor,
        db: &mut Tensor,
    ) -> Result<Tensor> {
        let mut d_pre = d_out.clone();
        for (g, &p) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
            *g *= self.activation.grad(p);
        }
        dw.add_assign(&matmul_at_b(&cache.input, &d_pre)?)?;
        let (n, d_out_dim) = d_pre.dims2()?;
        for i in 0..n {
            for (bg, &g) in db.data_mut().iter_mut().zip(d_pre.row(i)) {
                *bg += g;
            }
        }
        let _ = d_out_dim;
        matmul_a_bt(&d_pre, &self.w)
    }
}

/// Graph embedding: mean of the node embedding rows.
pub fn mean_pool(h: &Tensor) -> Result<Vec<Real>> {
    let (n, d) = h.dims2()?;
    if n == 0 {
        return Err(Error::argument("mean_pool needs at least one row"));
    }
    let mut out = vec![0.0; d];
    for i in 0..n {
        for (o, &v) in out.iter_mut().zip(h.row(i)) {
            *o += v;
        }
    }
    let inv = 1.0 / n as Real;
    out.iter_mut().for_each(|v| *v *= inv);
    Ok(out)
}

/// Backward of mean pooling: spread d_pooled/n over every row.
pub fn mean_pool_backward(n: usize, d_pooled: &[Real]) -> Tensor {
    let d = d_pooled.len();
    let inv = 1.0 / n as Real;
    let mut out = Tensor::zeros(&[n, d]);
    for i in 0..n {
        for (o, &g) in out.row_mut(i).iter_mut().zip(d_pooled) {
            *o = g * inv;
        }
    }
    out
}

#[inline]
pub fn sigmoid(x: Real) -> Real {
    1.0 / (1.0 + (-x).exp())
}

/// Gated recurrent unit cell (row-vector convention):
///
/// ```text
/// r  = sigmoid(x·Wr + h·Ur + br)
/// z  = sigmoid(x·Wz + h·Uz + bz)
/// c  = tanh(x·Wc + (r ⊙ h)·Uc + bc)
/// h' = (1 − z) ⊙ c + z ⊙ h
/// ```
#[derive(Debug, Clone)]
pub struct GruCell {
    pub w_r: Tensor,
    pub u_r: Tensor,
    pub b_r: Tensor,
    pub w_z: Tensor,
    pub u_z: Tensor,
    pub b_z: Tensor,
    pub w_c: Tensor,
    pub u_c: Tensor,
    pub b_c: Tensor,
}

pub struct GruStepCache {
    pub x: Vec<Real>,
    pub h_prev: Vec<Real>,
    pub r: Vec<Real>,
    pub z: Vec<Real>,
    pub c: Vec<Real>,
    pub h_new: Vec<Real>,
}

/// Gradient accumulator shaped like the cell.
pub struct GruGrads {
    pub w_r: Tensor,
    pub u_r: Tensor,
    pub b_r: Tensor,
    pub w_z: Tensor,
    pub u_z: Tensor,
    pub b_z: Tensor,
    pub w_c: Tensor,
    pub u_c: Tensor,
    pub b_c: Tensor,
}

impl GruCell {
    pub fn new(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seeding::rng(seed);
        GruCell {
            w_r: glorot(input, hidden, &mut rng),
            u_r: glorot(hidden, hidden, &mut rng),
            b_r: Tensor::zeros(&[hidden]),
            w_z: glorot(input, hidden, &mut rng),
            u_z: glorot(hidden, hidden, &mut rng),
            b_z: Tensor::zeros(&[hidden]),
            w_c: glorot(input, hidden, &mut rng),
            u_c: glorot(hidden, hidden, &mut rng),
            b_c: Tensor::zeros(&[hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_r.numel()
    }

    pub fn grads_like(&self) -> GruGrads {
        GruGrads {
            w_r: Tensor::zeros(self.w_r.shape()),
            u_r: Tensor::zeros(self.u_r.shape()),
            b_r: Tensor::zeros(self.b_r.shape()),
            w_z: Tensor::zeros(self.w_z.shape()),
            u_z: Tensor::zeros(self.u_z.shape()),
            b_z: Tensor::zeros(self.b_z.shape()),
            w_c: Tensor::zeros(self.w_c.shape()),
            u_c: Tensor::zeros(self.u_c.shape()),
            b_c: Tensor::zeros(self.b_c.shape()),
        }
    }

    pub fn step(&self, x: &[Real], h_prev: &[Real]) -> GruStepCache {
        let k = self.hidden();
        let gate = |w: &Tensor, u: &Tensor, b: &Tensor, hin: &[Real]| -> Vec<Real> {
            let mut a = vecmat(x, w);
            let hu = vecmat(hin, u);
            for ((av, hv), bv) in a.iter_mut().zip(hu).zip(b.data()) {
                *av += hv + bv;
            }
            a
        };
        let r: Vec<Real> = gate(&self.w_r, &self.u_r, &self.b_r, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let z: Vec<Real> = gate(&self.w_z, &self.u_z, &self.b_z, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let rh: Vec<Real> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let c: Vec<Real> = gate(&self.w_c, &self.u_c, &self.b_c, &rh)
            .into_iter()
            .map(Real::tanh)
            .collect();
        let mut h_new = vec![0.0; k];
        for i in 0..k {
            h_new[i] = (1.0 - z[i]) * c[i] + z[i] * h_prev[i];
        }
        GruStepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            r,
            z,
            c,
            h_new,
        }
    }

    /// Backward through one step. Returns (dx, dh_prev).
    pub fn backward(
        &self,
        cache: &GruStepCache,
        d_h_new: &[Real],
        grads: &mut GruGrads,
    ) -> (Vec<Real>, Vec<Real>) {
        let k = self.hidden();
        let mut dh_prev = vec![0.0; k];
        let mut da_r = vec![0.0; k];
        let mut da_z = vec![0.0; k];
        let mut da_c = vec![0.0; k];

        for i in 0..k {
            let dz = d_h_new[i] * (cache.h_prev[i] - cache.c[i]);
            let dc = d_h_new[i] * (1.0 - cache.z[i]);
            dh_prev[i] += d_h_new[i] * cache.z[i];
            da_z[i] = dz * cache.z[i] * (1.0 - cache.z[i]);
            da_c[i] = dc * (1.0 - cache.c[i] * cache.c[i]);
        }

        // Candidate gate: a_c = x·Wc + (r ⊙ h)·Uc + bc
        let rh: Vec<Real> = cache
            .r
            .iter()
            .zip(&cache.h_prev)
            .map(|(a, b)| a * b)
            .collect();
        add_outer(&mut grads.w_c, &cache.x, &da_c);
        add_outer(&mut grads.u_c, &rh, &da_c);
        for (g, &d) in grads.b_c.data_mut().iter_mut().zip(&da_c) {
            *g += d;
        }
        let d_rh = vecmat_t(&da_c, &self.u_c);
        for i in 0..k {
            let dr = d_rh[i] * cache.h_prev[i];
            dh_prev[i] += d_rh[i] * cache.r[i];
            da_r[i] = dr * cache.r[i] * (1.0 - cache.r[i]);
        }

        add_outer(&mut grads.w_r, &cache.x, &da_r);
        add_outer(&mut grads.u_r, &cache.h_prev, &da_r);
        for (g, &d) in grads.b_r.data_mut().iter_mut().zip(&da_r) {
            *g += d;
        }
        add_outer(&mut grads.w_z, &cache.x, &da_z);
        add_outer(&mut grads.u_z, &cache.h_prev, &da_z);
        for (g, &d) in grads.b_z.data_mut().iter_mut().zip(&da_z) {
            *g += d;
        }

        let dhr = vecmat_t(&da_r, &self.u_r);
        let dhz = vecmat_t(&da_z, &self.u_z);
        for i in 0..k {
            dh_prev[i] += dhr[i] + dhz[i];
        }

        let mut dx = vecmat_t(&da_r, &self.w_r);
        let dxz = vecmat_t(&da_z, &self.w_z);
        let dxc = vecmat_t(&da_c, &self.w_c);
        for i in 0..dx.len() {
            dx[i] += dxz[i] + dxc[i];
        }
        (dx, dh_prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::dot;

    #[test]
    fn adjacency_normalization_small_cases() {
        let single = normalize_adjacency(&Graph::empty(1));
        assert_eq!(single.data(), &[1.0]);

        let pair = normalize_adjacency(&Graph::path(2));
        for &v in pair.data() {
            assert!((v - 0.5).abs() < 1e-12);
        }

        let tri = normalize_adjacency(&Graph::complete(3));
        for &v in tri.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adjacency_is_symmetric_with_unit_spectral_bound() {
        // Dense power iteration as an eigenvalue oracle on small graphs.
        let mut rng = seeding::rng(5);
        for _ in 0..50 {
            let n = 2 + rng.gen_range(0..7);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            let a = normalize_adjacency(&g);
            for i in 0..n {
                for j in 0..n {
                    assert!((a.at(i, j) - a.at(j, i)).abs() < 1e-15);
                }
            }
            let mut x = vec![1.0 as Real; n];
            for _ in 0..200 {
                let y = vecmat(&x, &a);
                let norm = dot(&y, &y).sqrt();
                if norm == 0.0 {
                    break;
                }
                x = y.into_iter().map(|v| v / norm).collect();
            }
            let ax = vecmat(&x, &a);
            let lambda = dot(&ax, &x) / dot(&x, &x);
            assert!(lambda <= 1.0 + 1e-9, "spectral radius {lambda}");
        }
    }

    #[test]
    fn gcn_identity_passthrough() {
        // Â = I (edgeless graph has self-loops only), W = I, identity act.
        let g = Graph::empty(3);
        let a = normalize_adjacency(&g);
        let layer = GcnLayer {
            w: Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            activation: Activation::Identity,
        };
        let h = Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = layer.forward(&a, &h).unwrap().out;
        assert_eq!(out.data(), h.data());
    }

    #[test]
    fn gcn_two_node_averaging() {
        let g = Graph::path(2);
        let a = normalize_adjacency(&g);
        let layer = GcnLayer {
            w: Tensor::matrix(1, 1, vec![1.0]).unwrap(),
            activation: Activation::Identity,
        };
        let h = Tensor::matrix(2, 1, vec![1.0, 3.0]).unwrap();
        let out = layer.forward(&a, &h).unwrap().out;
        assert!((out.at(0, 0) - 2.0).abs() < 1e-12);
        assert!((out.at(1, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gcn_matches_dense_matmul_oracle() {
        let mut rng = seeding::rng(77);
        let g = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let a = normalize_adjacency(&g);
        let layer = GcnLayer::new(3, 4, Activation::Identity, 11);
        let h = Tensor::matrix(5, 3, (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let fast = layer.forward(&a, &h).unwrap().out;

        // Naive triple loop oracle.
        let mut prop = vec![0.0 as Real; 5 * 3];
        for i in 0..5 {
            for j in 0..3 {
                for t in 0..5 {
                    prop[i * 3 + j] += a.at(i, t) * h.at(t, j);
                }
            }
        }
        let mut want = vec![0.0 as Real; 5 * 4];
        for i in 0..5 {
            for j in 0..4 {
                for t in 0..3 {
                    want[i * 4 + j] += prop[i * 3 + t] * layer.w.at(t, j);
                }
            }
        }
        for (x, y) in fast.data().iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_pool_examples() {
        let h = Tensor::matrix(2, 2, vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        assert_eq!(mean_pool(&h).unwrap(), vec![2.0, 2.0]);
        let single = Tensor::matrix(1, 3, vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(mean_pool(&single).unwrap(), vec![4.0, 5.0, 6.0]);
        let same = Tensor::matrix(3, 2, vec![7.0, 8.0, 7.0, 8.0, 7.0, 8.0]).unwrap();
        assert_eq!(mean_pool(&same).unwrap(), vec![7.0, 8.0]);
    }

    #[test]
    fn gcn_stack_is_permutation_equivariant() {
        use rand::seq::SliceRandom;
        let mut rng = seeding::rng(2024);
        for _ in 0..100 {
            let n = 3 + rng.gen_range(0..6);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.5) {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::new(n, &edges).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let gp = g.relabel_nodes(&perm).unwrap();

            let l1 = GcnLayer::new(2, 3, Activation::Relu, 31);
            let l2 = GcnLayer::new(3, 3, Activation::Identity, 32);
            let h = Tensor::matrix(n, 2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            let mut hp = Tensor::zeros(&[n, 2]);
            for u in 0..n {
                for j in 0..2 {
                    *hp.at_mut(perm[u], j) = h.at(u, j);
                }
            }

            let run = |graph: &Graph, feats: &Tensor| {
                let a = normalize_adjacency(graph);
                let c1 = l1.forward(&a, feats).unwrap();
                let c2 = l2.forward(&a, &c1.out).unwrap();
                mean_pool(&c2.out).unwrap()
            };
            let e1 = run(&g, &h);
            let e2 = run(&gp, &hp);
            for (a, b) in e1.iter().zip(&e2) {
                assert!((a - b).abs() < 1e-10, "permutation changed the embedding");
            }
        }
    }
}
