//! Inverted dropout parameterized by keep probability: surviving
//! activations are scaled by 1/p so the expected output equals the input.
//! Eval mode is the identity.

use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

pub struct Dropout<R: Real> {
    keep_prob: f64,
    mask: Option<Vec<bool>>,
    last_mode: Mode,
    _marker: std::marker::PhantomData<R>,
}

impl<R: Real> Dropout<R> {
    pub fn new(keep_prob: f64) -> NumResult<Self> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(NumError::invalid(
                "dropout",
                format!("keep probability must be in (0, 1], got {keep_prob}"),
            ));
        }
        Ok(Dropout {
            keep_prob,
            mask: None,
            last_mode: Mode::Eval,
            _marker: std::marker::PhantomData,
        })
    }

    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }
}

impl<R: Real> Layer<R> for Dropout<R> {
    fn forward(&mut self, input: &Tensor<R>, mode: Mode, rng: &mut Prng) -> NumResult<Tensor<R>> {
        self.last_mode = mode;
        if mode == Mode::Eval || self.keep_prob >= 1.0 {
            self.mask = None;
            return Ok(input.clone());
        }
        let mask: Vec<bool> = (0..input.numel()).map(|_| rng.uniform() < self.keep_prob).collect();
        let scale = R::from_f64(1.0 / self.keep_prob);
        let mut out = input.clone();
        for (v, &keep) in out.data_mut().iter_mut().zip(&mask) {
            *v = if keep { *v * scale } else { R::ZERO };
        }
        self.mask = Some(mask);
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        match &self.mask {
            None => Ok(grad_out.clone()),
            Some(mask) => {
                if mask.len() != grad_out.numel() {
                    return Err(NumError::shape("dropout backward", "gradient size mismatch"));
                }
                let scale = R::from_f64(1.0 / self.keep_prob);
                let mut out = grad_out.clone();
                for (v, &keep) in out.data_mut().iter_mut().zip(mask) {
                    *v = if keep { *v * scale } else { R::ZERO };
                }
                Ok(out)
            }
        }
    }
}
