//! WAV ingestion: PCM16 or float32, mono or first channel of stereo,
//! linear resample to the configured rate, peak normalization into
//! [-1, 1], and pad/crop to the nominal clip length (tail zero-padding
//! for short clips, center crop for long ones).

use crate::config::DspConfig;
use crate::error::{DspError, DspResult};
use std::path::Path;

/// A mono audio clip normalized to the pipeline's nominal geometry.
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub label: Option<usize>,
    pub source_id: String,
}

impl AudioClip {
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Build a clip directly from samples (synthetic data and tests).
    pub fn from_samples(
        samples: Vec<f32>,
        sample_rate: u32,
        label: Option<usize>,
        source_id: impl Into<String>,
        config: &DspConfig,
    ) -> AudioClip {
        let mut clip = AudioClip {
            samples,
            sample_rate,
            label,
            source_id: source_id.into(),
        };
        condition(&mut clip, config);
        clip
    }

    /// Read, resample, normalize and pad/crop a WAV file.
    pub fn from_wav(
        path: impl AsRef<Path>,
        label: Option<usize>,
        config: &DspConfig,
    ) -> DspResult<AudioClip> {
        let path = path.as_ref();
        let source_id = path.to_string_lossy().into_owned();
        let reader = hound::WavReader::open(path).map_err(|e| DspError::Ingestion {
            source_id: source_id.clone(),
            detail: e.to_string(),
        })?;
        let spec = reader.spec();
        let channels = spec.channels as usize;
        let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
            (hound::SampleFormat::Int, 16) => reader
                .into_samples::<i16>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f32 / 32768.0))
                .collect::<Result<_, _>>()
                .map_err(|e| DspError::Ingestion {
                    source_id: source_id.clone(),
                    detail: e.to_string(),
                })?,
            (hound::SampleFormat::Float, 32) => reader
                .into_samples::<f32>()
                .step_by(channels)
                .collect::<Result<_, _>>()
                .map_err(|e| DspError::Ingestion {
                    source_id: source_id.clone(),
                    detail: e.to_string(),
                })?,
            (fmt, bits) => {
                return Err(DspError::Ingestion {
                    source_id,
                    detail: format!("unsupported sample format {fmt:?}/{bits}-bit"),
                })
            }
        };
        if samples.is_empty() {
            return Err(DspError::Ingestion {
                source_id,
                detail: "no samples".into(),
            });
        }
        let resampled = resample_linear(&samples, spec.sample_rate, config.sample_rate);
        Ok(AudioClip::from_samples(resampled, config.sample_rate, label, source_id, config))
    }
}

fn condition(clip: &mut AudioClip, config: &DspConfig) {
    // peak-normalize only when exceeding full scale
    let peak = clip.samples.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        let inv = 1.0 / peak;
        clip.samples.iter_mut().for_each(|v| *v *= inv);
    }
    let target = config.clip_samples;
    let n = clip.samples.len();
    if n > target {
        let start = (n - target) / 2;
        clip.samples = clip.samples[start..start + target].to_vec();
    } else if n < target {
        clip.samples.resize(target, 0.0);
    }
}

/// Linear-interpolation resampler.
pub fn resample_linear(samples: &[f32], from_rate: u32, to_rate: u32) -> Vec<f32> {
    if from_rate == to_rate || samples.is_empty() {
        return samples.to_vec();
    }
    let ratio = from_rate as f64 / to_rate as f64;
    let out_len = ((samples.len() as f64) / ratio).round() as usize;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let idx = pos as usize;
            if idx + 1 >= samples.len() {
                samples[samples.len() - 1]
            } else {
                let frac = (pos - idx as f64) as f32;
                samples[idx] * (1.0 - frac) + samples[idx + 1] * frac
            }
        })
        .collect()
}

/// Write a mono 16-bit PCM WAV (used by the synthetic-data generator).
pub fn write_wav_pcm16(path: impl AsRef<Path>, samples: &[f32], sample_rate: u32) -> DspResult<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer =
        hound::WavWriter::create(path.as_ref(), spec).map_err(|e| DspError::Wav(e.to_string()))?;
    for &s in samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q).map_err(|e| DspError::Wav(e.to_string()))?;
    }
    writer.finalize().map_err(|e| DspError::Wav(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_clip_is_tail_padded_to_nominal() {
        let cfg = DspConfig::default();
        let clip = AudioClip::from_samples(vec![0.5; 1000], 16_000, None, "s", &cfg);
        assert_eq!(clip.samples.len(), 32_000);
        assert_eq!(clip.samples[999], 0.5);
        assert_eq!(clip.samples[1000], 0.0);
        assert!((clip.duration_secs() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn long_clip_is_center_cropped() {
        let cfg = DspConfig::default();
        let samples: Vec<f32> = (0..40_000).map(|i| i as f32 / 40_000.0).collect();
        let clip = AudioClip::from_samples(samples, 16_000, None, "l", &cfg);
        assert_eq!(clip.samples.len(), 32_000);
        // crop starts at (40000-32000)/2 = 4000
        assert!((clip.samples[0] - 4000.0 / 40_000.0).abs() < 1e-6);
    }

    #[test]
    fn over_full_scale_is_peak_normalized() {
        let cfg = DspConfig::default();
        let clip = AudioClip::from_samples(vec![2.0, -4.0, 1.0], 16_000, None, "p", &cfg);
        let peak = clip.samples.iter().fold(0.0f32, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wav_round_trip_first_channel() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let samples: Vec<f32> = (0..16_000).map(|i| (i as f32 * 0.001).sin() * 0.5).collect();
        write_wav_pcm16(&path, &samples, 16_000).unwrap();
        let cfg = DspConfig::default();
        let clip = AudioClip::from_wav(&path, Some(1), &cfg).unwrap();
        assert_eq!(clip.samples.len(), 32_000);
        assert_eq!(clip.label, Some(1));
        // 16-bit quantization error bound
        assert!((clip.samples[100] - samples[100]).abs() < 1.0 / 32_000.0);
    }

    #[test]
    fn resample_halves_length() {
        let samples: Vec<f32> = (0..1000).map(|i| i as f32).collect();
        let out = resample_linear(&samples, 32_000, 16_000);
        assert_eq!(out.len(), 500);
        assert!((out[10] - 20.0).abs() < 1e-4);
    }
}
