//! Minimal dense-tensor numerics for training small convolutional and
//! attention networks on CPU: row-major tensors, layers with explicit
//! forward/backward passes, softmax/cross-entropy losses, an Adam
//! optimizer, and a portable checkpoint format.
//!
//! Parameters are stored in 32-bit floats during training; statistical
//! reductions (sums, means, variances, losses) accumulate in 64-bit.
//! Every layer is generic over the element type so gradient checks can
//! run fully at 64-bit.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod param;
pub mod real;
pub mod rng;
pub mod tensor;

pub use error::{NumError, NumResult};
pub use layers::{Dense, Layer, LayerSpec, Mode};
pub use optim::Adam;
pub use param::Parameter;
pub use real::Real;
pub use rng::{derive_seed, Prng, PrngState};
pub use tensor::Tensor;
