//! Row-major dense tensor.

use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Real>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    pub fn from_data(shape: &[usize], data: Vec<Real>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} wants {numel} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<Real>) -> Result<Self> {
        Self::from_data(&[rows, cols], data)
    }

    pub fn vector(data: Vec<Real>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[Real] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Real] {
        &mut self.data
    }

    /// Rows and columns of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::Shape(format!("expected a matrix, got shape {other:?}"))),
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Real {
        self.data[i * self.shape[1] + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Real {
        &mut self.data[i * self.shape[1] + j]
    }

    pub fn row(&self, i: usize) -> &[Real] {
        let c = self.shape[1];
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Real] {
        let c = self.shape[1];
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, v: Real) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: Real) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }
}

#[inline]
pub fn dot(a: &[Real], b: &[Real]) -> Real {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// C = A · B for matrices (m×k)(k×n). The inner loop skips zero entries of
/// A, which makes propagation with the sparse normalized adjacency cheap.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Shape(format!("matmul: ({m}x{k}) times ({k2}x{n})")));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (t, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = b.row(t);
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// C = Aᵀ · B for A (k×m), B (k×n).
pub fn matmul_at_b(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Shape(format!("matmul_at_b: ({k}x{m})ᵀ times ({k2}x{n})")));
    }
    let mut out = vec![0.0; m * n];
    for t in 0..k {
        let arow = a.row(t);
        let brow = b.row(t);
        for (i, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// C = A · Bᵀ for A (m×k), B (n×k).
pub fn matmul_a_bt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (n, k2) = b.dims2()?;
    if k != k2 {
        return Err(Error::Shape(format!("matmul_a_bt: ({m}x{k}) times ({n}x{k2})ᵀ")));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = a.row(i);
        for j in 0..n {
            out[i * n + j] = dot(arow, b.row(j));
        }
    }
    Tensor::matrix(m, n, out)
}

/// y = x · W for a row vector x (len k) and W (k×n).
pub fn vecmat(x: &[Real], w: &Tensor) -> Vec<Real> {
    let (k, n) = w.dims2().expect("vecmat wants a matrix");
    assert_eq!(x.len(), k, "vecmat length mismatch");
    let mut out = vec![0.0; n];
    for (t, &xv) in x.iter().enumerate() {
        if xv == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(w.row(t)) {
            *o += xv * wv;
        }
    }
    out
}

/// y = x · Wᵀ for a row vector x (len n) and W (k×n).
pub fn vecmat_t(x: &[Real], w: &Tensor) -> Vec<Real> {
    let (k, n) = w.dims2().expect("vecmat_t wants a matrix");
    assert_eq!(x.len(), n, "vecmat_t length mismatch");
    (0..k).map(|i| dot(x, w.row(i))).collect()
}

/// grads[i][j] += x[i] * y[j]
pub fn add_outer(grads: &mut Tensor, x: &[Real], y: &[Real]) {
    let (k, n) = grads.dims2().expect("add_outer wants a matrix");
    assert_eq!((x.len(), y.len()), (k, n), "add_outer shape mismatch");
    for (i, &xv) in x.iter().enumerate() {
        if xv == 0.0 {
            continue;
        }
        for (g, &yv) in grads.row_mut(i).iter_mut().zip(y) {
            *g += xv * yv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_validation() {
        assert!(Tensor::from_data(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::from_data(&[2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn matmul_against_hand_product() {
        let a = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::matrix(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
        assert!(matmul(&a, &a).is_err());
    }

    #[test]
    fn transposed_products_agree_with_plain_matmul() {
        let a = Tensor::matrix(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.0, 4.0]).unwrap();
        let b = Tensor::matrix(3, 4, (0..12).map(|i| i as Real * 0.3 - 1.0).collect()).unwrap();
        // Aᵀ B via explicit transpose.
        let mut at_data = vec![0.0; 6];
        for i in 0..3 {
            for j in 0..2 {
                at_data[j * 3 + i] = a.at(i, j);
            }
        }
        let at = Tensor::matrix(2, 3, at_data).unwrap();
        let want = matmul(&at, &b).unwrap();
        let got = matmul_at_b(&a, &b).unwrap();
        for (x, y) in got.data().iter().zip(want.data()) {
            assert!((x - y).abs() < 1e-12);
        }

        let c = Tensor::matrix(5, 2, (0..10).map(|i| (i as Real).sin()).collect()).unwrap();
        let got2 = matmul_a_bt(&a, &c).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                assert!((got2.at(i, j) - dot(a.row(i), c.row(j))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vector_matrix_helpers() {
        let w = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(vecmat(&[1.0, 1.0], &w), vec![5.0, 7.0, 9.0]);
        assert_eq!(vecmat_t(&[1.0, 0.0, 1.0], &w), vec![4.0, 10.0]);
    }
}
