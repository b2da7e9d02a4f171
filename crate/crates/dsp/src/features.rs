//! Feature map container and the wavelet-PCA branch. The MFCC branch
//! lives in `mfcc`; both produce T x F maps with identical T for the same
//! clip because they share the framing configuration.

use crate::config::DspConfig;
use crate::error::{DspError, DspResult};
use crate::frame::frame_and_window;
use crate::pca::PcaModel;
use crate::wav::AudioClip;
use crate::wavelet::{dwt_analyze, WaveletSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Mfcc,
    Wavelet,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Wavelet => "wavelet",
        }
    }
}

/// T x F time-frequency matrix, row-major over frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
    /// Seconds between consecutive frames.
    pub frame_hop_secs: f64,
    pub config_hash: String,
}

impl FeatureMap {
    pub fn new(
        kind: FeatureKind,
        rows: usize,
        cols: usize,
        values: Vec<f32>,
        config: &DspConfig,
    ) -> DspResult<FeatureMap> {
        if values.len() != rows * cols {
            return Err(DspError::Config(format!(
                "feature map {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DspError::Config("non-finite feature value".into()));
        }
        Ok(FeatureMap {
            kind,
            rows,
            cols,
            values,
            frame_hop_secs: config.hop as f64 / config.sample_rate as f64,
            config_hash: config.config_hash(),
        })
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.values[t * self.cols..(t + 1) * self.cols]
    }

    /// Bit pattern of all values (for exact-determinism assertions).
    pub fn values_bits(&self) -> Vec<u32> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }
}

/// Raw per-frame wavelet feature vector before PCA: {log-energy,
/// log-variance} per detail level, then the final approximation
/// coefficients.
pub fn wavelet_frame_features(frame: &[f64], spec: &WaveletSpec) -> DspResult<Vec<f64>> {
    const FLOOR: f64 = 1e-10;
    let pyramid = dwt_analyze(frame, spec)?;
    let mut feats = Vec::with_capacity(2 * pyramid.levels() + pyramid.approx.len());
    for detail in &pyramid.details {
        let n = detail.len() as f64;
        let energy: f64 = detail.iter().map(|v| v * v).sum();
        let mean: f64 = detail.iter().sum::<f64>() / n;
        let var: f64 = detail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        feats.push(energy.max(FLOOR).ln());
        feats.push(var.max(FLOOR).ln());
    }
    feats.extend_from_slice(&pyramid.approx);
    Ok(feats)
}

/// All raw wavelet feature rows for a clip (the matrix PCA is fitted on).
pub fn wavelet_raw_features(clip: &AudioClip, config: &DspConfig) -> DspResult<Vec<Vec<f64>>> {
    let spec = WaveletSpec::coif1(config.wavelet_levels);
    let frames = frame_and_window(clip, config.frame_len, config.hop)?;
    frames
        .iter()
        .map(|frame| wavelet_frame_features(frame, &spec))
        .collect()
}

/// Wavelet-PCA feature map: per frame, multi-level DWT subband statistics
/// projected to F dimensions by the fitted PCA.
pub fn wavelet_featuremap(
    clip: &AudioClip,
    pca: &PcaModel,
    config: &DspConfig,
) -> DspResult<FeatureMap> {
    config.validate()?;
    let raw = wavelet_raw_features(clip, config)?;
    if pca.input_dim() != raw[0].len() {
        return Err(DspError::Config(format!(
            "PCA expects {}-dim rows, wavelet features are {}-dim",
            pca.input_dim(),
            raw[0].len()
        )));
    }
    let mut values = Vec::with_capacity(raw.len() * pca.output_dim());
    for row in &raw {
        values.extend(pca.project(row).iter().map(|&v| v as f32));
    }
    FeatureMap::new(FeatureKind::Wavelet, raw.len(), pca.output_dim(), values, config)
}
