//! Row-major dense tensor with a deliberately small op surface: exactly
//! what the layers in this workspace need, no general broadcasting.

use crate::error::{NumError, NumResult};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<R: Real> {
    shape: Vec<usize>,
    data: Vec<R>,
}

impl<R: Real> Tensor<R> {
    pub fn new(shape: Vec<usize>, data: Vec<R>) -> NumResult<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(NumError::shape(
                "Tensor::new",
                format!("shape {:?} implies {} elements, got {}", shape, numel, data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![R::ZERO; numel],
        }
    }

    pub fn full(shape: &[usize], value: R) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: R) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> R) -> Self {
        let numel: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: (0..numel).map(|i| f(i)).collect(),
        }
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn data(&self) -> &[R] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<R> {
        self.data
    }

    /// Reinterpret the buffer under a new shape with the same element count.
    pub fn reshape(&self, shape: &[usize]) -> NumResult<Self> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return Err(NumError::shape(
                "reshape",
                format!("cannot view {:?} as {:?}", self.shape, shape),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn fill(&mut self, value: R) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: R) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> NumResult<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> NumResult<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> NumResult<Self> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    fn zip_with(&self, other: &Self, op: &str, f: impl Fn(R, R) -> R) -> NumResult<Self> {
        if self.shape != other.shape {
            return Err(NumError::shape(
                op,
                format!("lhs {:?} vs rhs {:?}", self.shape, other.shape),
            ));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) -> NumResult<()> {
        if self.shape != other.shape {
            return Err(NumError::shape(
                "add_assign",
                format!("lhs {:?} vs rhs {:?}", self.shape, other.shape),
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Sum of all elements, accumulated at 64-bit.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.to_f64()).sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.sum() / self.data.len() as f64
    }

    pub fn max_value(&self) -> R {
        self.data
            .iter()
            .copied()
            .fold(R::from_f64(f64::NEG_INFINITY), |m, v| m.max(v))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Matrix product of two rank-2 tensors: [m,k] x [k,n] -> [m,n].
    pub fn matmul(&self, rhs: &Self) -> NumResult<Self> {
        if self.shape.len() != 2 || rhs.shape.len() != 2 {
            return Err(NumError::shape(
                "matmul",
                format!("expected rank-2 operands, got {:?} x {:?}", self.shape, rhs.shape),
            ));
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (rhs.shape[0], rhs.shape[1]);
        if k != k2 {
            return Err(NumError::shape(
                "matmul",
                format!("inner dims differ: {:?} x {:?}", self.shape, rhs.shape),
            ));
        }
        let mut out = vec![R::ZERO; m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (l, &a) in arow.iter().enumerate() {
                let brow = &rhs.data[l * n..(l + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor {
            shape: vec![m, n],
            data: out,
        })
    }

    /// Transpose of a rank-2 tensor.
    pub fn transpose2(&self) -> NumResult<Self> {
        if self.shape.len() != 2 {
            return Err(NumError::shape("transpose2", format!("rank {:?}", self.shape)));
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut out = vec![R::ZERO; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Ok(Tensor {
            shape: vec![n, m],
            data: out,
        })
    }

    /// Cast elementwise through f64.
    pub fn cast<S: Real>(&self) -> Tensor<S> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| S::from_f64(v.to_f64())).collect(),
        }
    }
}
