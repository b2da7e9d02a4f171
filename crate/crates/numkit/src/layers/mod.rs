//! Layers with explicit forward/backward passes. Each layer caches what
//! its backward pass needs during forward; `backward` must be called with
//! the gradient of the loss w.r.t. the layer's most recent output.

mod attention;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod maxpool;
mod relu;

pub use attention::MultiheadAttention;
pub use batchnorm::BatchNorm;
pub use conv::Conv2d;
pub use dense::Dense;
pub use dropout::Dropout;
pub use maxpool::MaxPool2x2;
pub use relu::Relu;

use crate::error::NumResult;
use crate::param::Parameter;
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

/// Forward-pass mode. Batchnorm and dropout behave differently in each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Common layer interface. The RNG is consumed only by stochastic layers
/// (dropout) and only in train mode.
pub trait Layer<R: Real> {
    fn forward(&mut self, input: &Tensor<R>, mode: Mode, rng: &mut Prng) -> NumResult<Tensor<R>>;

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>>;

    fn params(&self) -> Vec<&Parameter<R>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        Vec::new()
    }

    /// Non-trainable state that must survive a checkpoint round trip
    /// (batchnorm running statistics).
    fn buffers(&self) -> Vec<(&str, &Tensor<R>)> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<R>)> {
        Vec::new()
    }
}

/// Declarative layer description used in checkpoint headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
    },
    Batchnorm {
        features: usize,
    },
    Relu,
    Maxpool2x2,
    Dropout {
        keep_prob: f64,
    },
    Dense {
        in_features: usize,
        out_features: usize,
    },
    Softmax,
    MultiheadAttention {
        embed_dim: usize,
        heads: usize,
    },
}

impl LayerSpec {
    /// Validate kind-specific hyperparameter constraints.
    pub fn validate(&self) -> NumResult<()> {
        use crate::error::NumError;
        match *self {
            LayerSpec::Conv2d { kernel, in_channels, out_channels } => {
                if kernel < 1 {
                    return Err(NumError::invalid("LayerSpec", "kernel size must be >= 1"));
                }
                if in_channels == 0 || out_channels == 0 {
                    return Err(NumError::invalid("LayerSpec", "channel counts must be >= 1"));
                }
            }
            LayerSpec::Dropout { keep_prob } => {
                if !(keep_prob > 0.0 && keep_prob <= 1.0) {
                    return Err(NumError::invalid(
                        "LayerSpec",
                        format!("keep probability must be in (0, 1], got {keep_prob}"),
                    ));
                }
            }
            LayerSpec::MultiheadAttention { embed_dim, heads } => {
                if heads == 0 || embed_dim % heads != 0 {
                    return Err(NumError::invalid(
                        "LayerSpec",
                        format!("embed dim {embed_dim} must be divisible by heads {heads}"),
                    ));
                }
            }
            LayerSpec::Batchnorm { features } | LayerSpec::Dense { in_features: features, .. } => {
                if features == 0 {
                    return Err(NumError::invalid("LayerSpec", "feature dim must be >= 1"));
                }
            }
            LayerSpec::Relu | LayerSpec::Maxpool2x2 | LayerSpec::Softmax => {}
        }
        Ok(())
    }
}
