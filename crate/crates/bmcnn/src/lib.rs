//! Dual-branch convolutional classifier over MFCC and wavelet feature
//! maps: two parallel conv/BN/ReLU/pool/dropout stacks, feature fusion by
//! concatenation, dense head, softmax over three speed classes. Supports
//! prefix inference (frames beyond t zero-masked) for streaming use.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod train;

pub use data::Sample;
pub use error::{BmcnnError, BmcnnResult};
pub use eval::{evaluate, EvalReport, PrefixRow};
pub use model::{ClassProbabilities, BmcnnModel, ModelConfig, CLASS_COUNT};
pub use train::{train, TrainConfig, TrainReport, Trainer};
