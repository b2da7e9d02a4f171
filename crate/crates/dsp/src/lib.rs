//! Audio feature extraction: converts raw mono clips into the two aligned
//! T x F feature maps (MFCC and wavelet-PCA) consumed by the classifier.
//! All operations are pure functions of their inputs; identical bytes in
//! yield identical matrices out.

pub mod cache;
pub mod config;
pub mod error;
pub mod features;
pub mod frame;
pub mod mel;
pub mod mfcc;
pub mod pca;
pub mod wav;
pub mod wavelet;

pub use cache::FeatureCache;
pub use config::DspConfig;
pub use error::{DspError, DspResult};
pub use features::{FeatureKind, FeatureMap};
pub use pca::PcaModel;
pub use wav::AudioClip;
pub use wavelet::WaveletSpec;
