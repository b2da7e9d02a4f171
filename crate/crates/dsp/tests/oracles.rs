//! Independent-oracle verification of the DSP stack: analysis/synthesis
//! round trips on random signals, a naive O(n^2) DFT cross-check of the
//! FFT path, and the mel-band concentration of a pure tone.

use dsp::frame::{frame_and_window, hann_window};
use dsp::mel::{hz_to_mel, mel_filterbank};
use dsp::mfcc::{filterbank_energies, magnitude_spectrum};
use dsp::wavelet::{dwt_analyze, dwt_synthesize, WaveletSpec};
use dsp::{AudioClip, DspConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn perfect_reconstruction_on_100_random_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let n = rng.gen_range(48..2048);
        let levels = dsp::wavelet::max_levels(n, 6).min(4).max(1);
        let spec = WaveletSpec::coif1(levels);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pyramid = dwt_analyze(&x, &spec).unwrap();
        let back = dwt_synthesize(&pyramid, &spec);
        assert_eq!(back.len(), n);
        let max_err = x
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_err < 1e-8,
            "trial {trial}: n={n} levels={levels} max abs err {max_err:.3e}"
        );
    }
}

#[test]
fn constant_signal_details_vanish() {
    let spec = WaveletSpec::coif1(4);
    let x = vec![0.731f64; 512];
    let pyramid = dwt_analyze(&x, &spec).unwrap();
    for (level, d) in pyramid.details.iter().enumerate() {
        let max = d.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(max < 1e-8, "level {}: max |detail| = {max:.3e}", level + 1);
    }
}

/// Reference DFT at 64-bit, independent of the rustfft-backed pipeline.
fn naive_dft_magnitudes(frame: &[f64], nfft: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nfft / 2 + 1);
    for k in 0..=nfft / 2 {
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        for (n, &x) in frame.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * k as f64 * n as f64 / nfft as f64;
            re += x * phase.cos();
            im += x * phase.sin();
        }
        out.push((re * re + im * im).sqrt());
    }
    out
}

#[test]
fn fft_magnitudes_match_naive_dft() {
    let window = hann_window(512);
    let frame: Vec<f64> = (0..512)
        .map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16_000.0).sin() * window[i])
        .collect();
    let fast = magnitude_spectrum(&frame, 512);
    let slow = naive_dft_magnitudes(&frame, 512);
    for (k, (a, b)) in fast.iter().zip(&slow).enumerate() {
        assert!((a - b).abs() < 1e-8, "bin {k}: fft {a} vs dft {b}");
    }
}

#[test]
fn one_khz_sine_concentrates_in_the_right_mel_band() {
    let cfg = DspConfig::default();
    let clip = AudioClip {
        samples: (0..32_000)
            .map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16_000.0).sin() as f32 * 0.8)
            .collect(),
        sample_rate: 16_000,
        label: None,
        source_id: "sine-1k".into(),
    };
    let fb = mel_filterbank(cfg.n_mels, cfg.nfft, cfg.sample_rate).unwrap();
    // filters whose Hz support contains 1 kHz (triangles overlap, so two qualify)
    let containing: Vec<usize> = fb
        .supports
        .iter()
        .enumerate()
        .filter(|(_, (lo, _, hi))| *lo <= 1000.0 && 1000.0 <= *hi)
        .map(|(i, _)| i)
        .collect();
    assert!(!containing.is_empty());

    // oracle route: energies from the naive DFT bins
    let frames = frame_and_window(&clip, cfg.frame_len, cfg.hop).unwrap();
    for (t, frame) in frames.iter().enumerate() {
        let spectrum = naive_dft_magnitudes(frame, cfg.nfft);
        let oracle_energies: Vec<f64> = fb
            .weights
            .iter()
            .map(|row| row.iter().zip(&spectrum).map(|(w, s)| w * s).sum())
            .collect();
        let oracle_argmax = argmax(&oracle_energies);
        assert!(
            containing.contains(&oracle_argmax),
            "frame {t}: oracle argmax band {oracle_argmax} does not contain 1 kHz"
        );

        // pipeline route must agree with the oracle's band
        let pipeline_energies = filterbank_energies(frame, &cfg).unwrap();
        let pipeline_argmax = argmax(&pipeline_energies);
        assert_eq!(
            pipeline_argmax, oracle_argmax,
            "frame {t}: pipeline band {pipeline_argmax} vs oracle {oracle_argmax}"
        );
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

#[test]
fn mel_warp_is_strictly_monotone() {
    // dense sweep plus random pairs
    let mut prev = hz_to_mel(0.0).unwrap();
    for step in 1..4000 {
        let f = step as f64 * 2.0;
        let m = hz_to_mel(f).unwrap();
        assert!(m > prev, "mel({f}) = {m} !> mel({}) = {prev}", f - 2.0);
        prev = m;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let f1 = rng.gen_range(0.0..7999.0);
        let f2 = f1 + rng.gen_range(0.001..1000.0);
        assert!(hz_to_mel(f1).unwrap() < hz_to_mel(f2).unwrap());
    }
}
