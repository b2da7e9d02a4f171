use crate::real::Real;
use crate::tensor::Tensor;

/// A named trainable tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter<R: Real> {
    pub name: String,
    pub value: Tensor<R>,
    pub grad: Tensor<R>,
}

impl<R: Real> Parameter<R> {
    pub fn new(name: impl Into<String>, value: Tensor<R>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(R::ZERO);
    }

    pub fn accumulate(&mut self, grad: &Tensor<R>) {
        self.grad
            .add_assign(grad)
            .expect("gradient shape must match parameter shape");
    }
}
