use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

/// max(0, x) with the active-input mask cached for backward.
#[derive(Default)]
pub struct Relu<R: Real> {
    mask: Option<Vec<bool>>,
    _marker: std::marker::PhantomData<R>,
}

impl<R: Real> Relu<R> {
    pub fn new() -> Self {
        Relu {
            mask: None,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<R: Real> Layer<R> for Relu<R> {
    fn forward(&mut self, input: &Tensor<R>, _mode: Mode, _rng: &mut Prng) -> NumResult<Tensor<R>> {
        self.mask = Some(input.data().iter().map(|&v| v > R::ZERO).collect());
        Ok(input.map(|v| v.max(R::ZERO)))
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        let mask = self
            .mask
            .as_ref()
            .ok_or_else(|| NumError::invalid("relu", "backward called before forward"))?;
        if mask.len() != grad_out.numel() {
            return Err(NumError::shape("relu backward", "gradient size mismatch"));
        }
        let mut out = grad_out.clone();
        for (v, &keep) in out.data_mut().iter_mut().zip(mask) {
            if !keep {
                *v = R::ZERO;
            }
        }
        Ok(out)
    }
}
