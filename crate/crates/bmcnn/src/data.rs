//! Training samples: one clip's pair of aligned feature maps plus label.

use crate::error::{BmcnnError, BmcnnResult};
use dsp::{FeatureKind, FeatureMap};

#[derive(Debug, Clone)]
pub struct Sample {
    pub mfcc: FeatureMap,
    pub wavelet: FeatureMap,
    pub label: usize,
    pub source_id: String,
}

impl Sample {
    pub fn new(mfcc: FeatureMap, wavelet: FeatureMap, label: usize, source_id: impl Into<String>) -> BmcnnResult<Sample> {
        if mfcc.kind != FeatureKind::Mfcc || wavelet.kind != FeatureKind::Wavelet {
            return Err(BmcnnError::Data("feature kinds swapped or wrong".into()));
        }
        if mfcc.rows != wavelet.rows || mfcc.cols != wavelet.cols {
            return Err(BmcnnError::Data(format!(
                "branch geometry mismatch: mfcc {}x{} vs wavelet {}x{}",
                mfcc.rows, mfcc.cols, wavelet.rows, wavelet.cols
            )));
        }
        Ok(Sample {
            mfcc,
            wavelet,
            label,
            source_id: source_id.into(),
        })
    }
}
