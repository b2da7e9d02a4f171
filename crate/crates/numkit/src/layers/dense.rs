use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::param::Parameter;
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

/// Fully connected layer: y = x W^T + b for x of shape [N, in].
pub struct Dense<R: Real> {
    pub weight: Parameter<R>, // [out, in]
    pub bias: Parameter<R>,   // [out]
    in_features: usize,
    out_features: usize,
    cached_input: Option<Tensor<R>>,
}

impl<R: Real> Dense<R> {
    /// He-normal initialization (suits the ReLU stacks used here).
    pub fn new(name: &str, in_features: usize, out_features: usize, rng: &mut Prng) -> Self {
        let std = (2.0 / in_features as f64).sqrt();
        let weight = Tensor::from_fn(&[out_features, in_features], |_| R::from_f64(rng.normal() * std));
        Dense {
            weight: Parameter::new(format!("{name}.weight"), weight),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[out_features])),
            in_features,
            out_features,
            cached_input: None,
        }
    }

    /// Same layer with a smaller initialization scale (output heads).
    pub fn new_scaled(name: &str, in_features: usize, out_features: usize, std: f64, rng: &mut Prng) -> Self {
        let weight = Tensor::from_fn(&[out_features, in_features], |_| R::from_f64(rng.normal() * std));
        Dense {
            weight: Parameter::new(format!("{name}.weight"), weight),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[out_features])),
            in_features,
            out_features,
            cached_input: None,
        }
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }
}

impl<R: Real> Layer<R> for Dense<R> {
    fn forward(&mut self, input: &Tensor<R>, _mode: Mode, _rng: &mut Prng) -> NumResult<Tensor<R>> {
        let s = input.shape();
        if s.len() != 2 || s[1] != self.in_features {
            return Err(NumError::shape(
                "dense",
                format!("expected [N,{}], got {:?}", self.in_features, s),
            ));
        }
        let mut out = input.matmul(&self.weight.value.transpose2()?)?;
        let bd = self.bias.value.data();
        let od = out.data_mut();
        for row in 0..s[0] {
            for j in 0..self.out_features {
                od[row * self.out_features + j] += bd[j];
            }
        }
        self.cached_input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        let input = self
            .cached_input
            .as_ref()
            .ok_or_else(|| NumError::invalid("dense", "backward called before forward"))?;
        let n = input.shape()[0];
        if grad_out.shape() != [n, self.out_features] {
            return Err(NumError::shape(
                "dense backward",
                format!("grad shape {:?} vs [N={n},{}]", grad_out.shape(), self.out_features),
            ));
        }
        // dW = g^T x, db = column sums, dx = g W
        let dw = grad_out.transpose2()?.matmul(input)?;
        self.weight.accumulate(&dw);
        let mut db = Tensor::zeros(&[self.out_features]);
        {
            let dbd = db.data_mut();
            let g = grad_out.data();
            for row in 0..n {
                for j in 0..self.out_features {
                    dbd[j] += g[row * self.out_features + j];
                }
            }
        }
        self.bias.accumulate(&db);
        grad_out.matmul(&self.weight.value)
    }

    fn params(&self) -> Vec<&Parameter<R>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
