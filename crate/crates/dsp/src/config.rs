use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Extraction geometry shared by both feature branches. The defaults fix
/// 2-second clips at 16 kHz into 124 x 13 maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DspConfig {
    /// Everything is resampled to this rate on ingestion.
    pub sample_rate: u32,
    /// Nominal clip length in samples after pad/crop (2 s).
    pub clip_samples: usize,
    pub frame_len: usize,
    pub hop: usize,
    pub nfft: usize,
    pub n_mels: usize,
    /// Retained DCT coefficients; also the PCA output dim, so both
    /// branches share F.
    pub n_coeffs: usize,
    pub wavelet_levels: usize,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            sample_rate: 16_000,
            clip_samples: 32_000,
            frame_len: 512,
            hop: 256,
            nfft: 512,
            n_mels: 40,
            n_coeffs: 13,
            wavelet_levels: 4,
        }
    }
}

impl DspConfig {
    /// Frame count for a clip of nominal length.
    pub fn frames_per_clip(&self) -> usize {
        1 + (self.clip_samples - self.frame_len) / self.hop
    }

    /// Dimension of the raw per-frame wavelet feature vector before PCA:
    /// {log-energy, log-variance} per detail level plus the final
    /// approximation coefficients.
    pub fn wavelet_raw_dim(&self) -> usize {
        let mut len = self.frame_len;
        for _ in 0..self.wavelet_levels {
            len = (len + crate::wavelet::COIF1_LEN) / 2;
        }
        2 * self.wavelet_levels + len
    }

    /// Stable hash of the configuration; cache entries carry it so any
    /// parameter change invalidates them.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(16);
        for b in digest.iter().take(8) {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    pub fn validate(&self) -> crate::DspResult<()> {
        use crate::DspError;
        if self.nfft < self.frame_len {
            return Err(DspError::Config(format!(
                "nfft {} smaller than frame length {}",
                self.nfft, self.frame_len
            )));
        }
        if self.hop == 0 || self.frame_len == 0 {
            return Err(DspError::Config("frame length and hop must be positive".into()));
        }
        if self.frame_len > self.clip_samples {
            return Err(DspError::Config("frame longer than clip".into()));
        }
        if self.n_coeffs > self.n_mels {
            return Err(DspError::Config("cannot keep more DCT coefficients than mel bands".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_is_124_frames() {
        assert_eq!(DspConfig::default().frames_per_clip(), 124);
    }

    #[test]
    fn hash_changes_with_any_field() {
        let a = DspConfig::default();
        let mut b = a.clone();
        b.n_mels = 41;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), DspConfig::default().config_hash());
    }

    #[test]
    fn nfft_below_frame_len_is_config_error() {
        let cfg = DspConfig {
            nfft: 256,
            ..DspConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
