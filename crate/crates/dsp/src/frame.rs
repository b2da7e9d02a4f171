//! Short-time framing with a periodic Hann window.

use crate::error::{DspError, DspResult};
use crate::wav::AudioClip;

/// Hann window of the given length (periodic convention).
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

/// Number of frames for a signal of `len` samples:
/// T = 1 + floor((len - frame_len) / hop).
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    1 + (len - frame_len) / hop
}

/// Split into Hann-windowed overlapping frames (f64 for downstream math).
pub fn frame_and_window(clip: &AudioClip, frame_len: usize, hop: usize) -> DspResult<Vec<Vec<f64>>> {
    if clip.samples.len() < frame_len {
        return Err(DspError::Ingestion {
            source_id: clip.source_id.clone(),
            detail: format!(
                "clip of {} samples is shorter than one frame ({frame_len})",
                clip.samples.len()
            ),
        });
    }
    let window = hann_window(frame_len);
    let t = frame_count(clip.samples.len(), frame_len, hop);
    let mut frames = Vec::with_capacity(t);
    for f in 0..t {
        let start = f * hop;
        frames.push(
            clip.samples[start..start + frame_len]
                .iter()
                .zip(&window)
                .map(|(&s, &w)| s as f64 * w)
                .collect(),
        );
    }
    Ok(frames)
}
