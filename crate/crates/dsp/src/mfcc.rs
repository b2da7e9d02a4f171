//! MFCC pipeline: framing/windowing, FFT magnitude, triangular mel
//! filterbank energies, log compression (floored at 1e-10), orthonormal
//! type-II DCT keeping the first F coefficients.

use crate::config::DspConfig;
use crate::error::{DspError, DspResult};
use crate::features::{FeatureKind, FeatureMap};
use crate::frame::frame_and_window;
use crate::mel::mel_filterbank;
use crate::wav::AudioClip;
use rustfft::{num_complex::Complex, FftPlanner};

pub const LOG_FLOOR: f64 = 1e-10;

/// One-sided FFT magnitude spectrum of a windowed frame, zero-padded to
/// nfft.
pub fn magnitude_spectrum(frame: &[f64], nfft: usize) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let mut buf: Vec<Complex<f64>> = frame
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(nfft)
        .collect();
    fft.process(&mut buf);
    buf[..nfft / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Mel filterbank energies of a windowed frame.
pub fn filterbank_energies(frame: &[f64], config: &DspConfig) -> DspResult<Vec<f64>> {
    let spectrum = magnitude_spectrum(frame, config.nfft);
    let fb = mel_filterbank(config.n_mels, config.nfft, config.sample_rate)?;
    Ok(fb
        .weights
        .iter()
        .map(|row| row.iter().zip(&spectrum).map(|(w, s)| w * s).sum())
        .collect())
}

/// Orthonormal type-II DCT of `input`, keeping `keep` coefficients.
pub fn dct2_ortho(input: &[f64], keep: usize) -> Vec<f64> {
    let m = input.len() as f64;
    (0..keep)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            let sum: f64 = input
                .iter()
                .enumerate()
                .map(|(n, &x)| x * (std::f64::consts::PI * k as f64 * (2.0 * n as f64 + 1.0) / (2.0 * m)).cos())
                .sum();
            scale * sum
        })
        .collect()
}

/// Full MFCC map for one clip: T x F with T from the framing config.
pub fn mfcc(clip: &AudioClip, config: &DspConfig) -> DspResult<FeatureMap> {
    config.validate()?;
    if config.nfft < config.frame_len {
        return Err(DspError::Config(format!(
            "nfft {} < frame length {}",
            config.nfft, config.frame_len
        )));
    }
    let frames = frame_and_window(clip, config.frame_len, config.hop)?;
    let fb = mel_filterbank(config.n_mels, config.nfft, config.sample_rate)?;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(config.nfft);
    let mut values = Vec::with_capacity(frames.len() * config.n_coeffs);
    for frame in &frames {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(config.nfft)
            .collect();
        fft.process(&mut buf);
        let spectrum: Vec<f64> = buf[..config.nfft / 2 + 1].iter().map(|c| c.norm()).collect();
        let log_energies: Vec<f64> = fb
            .weights
            .iter()
            .map(|row| {
                let e: f64 = row.iter().zip(&spectrum).map(|(w, s)| w * s).sum();
                e.max(LOG_FLOOR).ln()
            })
            .collect();
        let coeffs = dct2_ortho(&log_energies, config.n_coeffs);
        values.extend(coeffs.iter().map(|&c| c as f32));
    }
    FeatureMap::new(
        FeatureKind::Mfcc,
        frames.len(),
        config.n_coeffs,
        values,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silent_clip() -> AudioClip {
        AudioClip {
            samples: vec![0.0; 32_000],
            sample_rate: 16_000,
            label: None,
            source_id: "silence".into(),
        }
    }

    #[test]
    fn silence_yields_constant_dc_coefficient_only() {
        let cfg = DspConfig::default();
        let map = mfcc(&silent_clip(), &cfg).unwrap();
        // every log-energy equals ln(floor); DCT concentrates it all in
        // coefficient 0
        let expected_c0 = LOG_FLOOR.ln() * (cfg.n_mels as f64).sqrt();
        for t in 0..map.rows {
            let row = map.row(t);
            assert!((row[0] as f64 - expected_c0).abs() < 1e-3, "frame {t} c0 {}", row[0]);
            for (k, &v) in row.iter().enumerate().skip(1) {
                assert!(v.abs() < 1e-6, "frame {t} coeff {k} = {v}");
            }
        }
    }

    #[test]
    fn identical_samples_give_bit_identical_maps() {
        let cfg = DspConfig::default();
        let mut samples = vec![0.0f32; 32_000];
        let mut state = 0x12345678u32;
        for s in samples.iter_mut() {
            // deterministic pseudo-noise
            state = state.wrapping_mul(1664525).wrapping_add(1013904223);
            *s = (state as f32 / u32::MAX as f32) - 0.5;
        }
        let clip = AudioClip {
            samples,
            sample_rate: 16_000,
            label: None,
            source_id: "noise".into(),
        };
        let a = mfcc(&clip, &cfg).unwrap();
        let b = mfcc(&clip, &cfg).unwrap();
        assert_eq!(a.values_bits(), b.values_bits());
    }

    #[test]
    fn nfft_smaller_than_frame_is_config_error() {
        let cfg = DspConfig {
            nfft: 128,
            ..DspConfig::default()
        };
        assert!(matches!(mfcc(&silent_clip(), &cfg), Err(DspError::Config(_))));
    }

    #[test]
    fn dct_of_constant_is_dc_only() {
        let x = vec![2.5f64; 40];
        let c = dct2_ortho(&x, 13);
        assert!((c[0] - 2.5 * 40f64.sqrt()).abs() < 1e-9);
        for &v in &c[1..] {
            assert!(v.abs() < 1e-9);
        }
    }
}
