//! Mel-scale warp and triangular filterbank.

use crate::error::{DspError, DspResult};

/// Perceptual frequency warp: mu = 2595 * log10(1 + f/700).
pub fn hz_to_mel(f: f64) -> DspResult<f64> {
    if f < 0.0 {
        return Err(DspError::Domain(format!("negative frequency {f} Hz")));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filterbank on mel-spaced centers.
///
/// `weights[filter][bin]` over the nfft/2+1 one-sided spectrum. Triangles
/// peak at 1 and adjacent filters cross at 0.5, so every bin's column sum
/// is at most 1.
pub struct MelFilterbank {
    pub weights: Vec<Vec<f64>>,
    /// Hz support (left edge, peak, right edge) per filter.
    pub supports: Vec<(f64, f64, f64)>,
}

pub fn mel_filterbank(n_mels: usize, nfft: usize, sample_rate: u32) -> DspResult<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    let m_hi = hz_to_mel(nyquist)?;
    let n_bins = nfft / 2 + 1;
    // n_mels + 2 edge points, equally spaced in mel
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(m_hi * i as f64 / (n_mels + 1) as f64))
        .collect();
    let mut weights = vec![vec![0.0f64; n_bins]; n_mels];
    let mut supports = Vec::with_capacity(n_mels);
    for i in 0..n_mels {
        let (lo, peak, hi) = (edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]);
        supports.push((lo, peak, hi));
        for (bin, w) in weights[i].iter_mut().enumerate() {
            let f = bin as f64 * sample_rate as f64 / nfft as f64;
            *w = if f >= lo && f <= peak {
                if peak > lo {
                    (f - lo) / (peak - lo)
                } else {
                    0.0
                }
            } else if f > peak && f <= hi {
                (hi - f) / (hi - peak)
            } else {
                0.0
            };
        }
    }
    Ok(MelFilterbank { weights, supports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
    }

    #[test]
    fn seven_hundred_hz_is_2595_log10_two() {
        // direct evaluation: 2595 * log10(2) = 781.1728...
        let m = hz_to_mel(700.0).unwrap();
        assert!((m - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((m - 781.17).abs() < 0.01);
    }

    #[test]
    fn eight_khz_value() {
        let m = hz_to_mel(8000.0).unwrap();
        assert!((m - 2595.0 * (1.0f64 + 8000.0 / 700.0).log10()).abs() < 1e-12);
        assert!((m - 2840.0).abs() < 0.05);
    }

    #[test]
    fn negative_frequency_is_domain_error() {
        assert!(hz_to_mel(-1.0).is_err());
    }

    #[test]
    fn filterbank_columns_sum_to_at_most_one() {
        let fb = mel_filterbank(40, 512, 16_000).unwrap();
        let n_bins = 512 / 2 + 1;
        for bin in 0..n_bins {
            let col: f64 = fb.weights.iter().map(|row| row[bin]).sum();
            assert!(col <= 1.0 + 1e-6, "bin {bin} column sums to {col}");
            assert!(fb.weights.iter().all(|row| row[bin] >= 0.0));
        }
    }
}
