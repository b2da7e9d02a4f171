//! On-disk feature cache: one file per (clip, kind). Line 1 is a JSON
//! header {kind, shape, config_hash, source_id, format_version}; line 2
//! is the matrix as base64 little-endian 32-bit floats, row-major. A
//! config hash mismatch invalidates the entry. Writes go through a
//! temp-file rename so concurrent extractors cannot corrupt entries.

use crate::config::DspConfig;
use crate::error::{DspError, DspResult};
use crate::features::{FeatureKind, FeatureMap};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    format_version: u32,
    kind: FeatureKind,
    shape: [usize; 2],
    config_hash: String,
    source_id: String,
    frame_hop_secs: f64,
}

pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> DspResult<FeatureCache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(FeatureCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, source_id: &str, kind: FeatureKind) -> PathBuf {
        // readable stem plus a hash suffix to avoid collisions after
        // sanitization
        let stem: String = source_id
            .chars()
            .rev()
            .take(24)
            .collect::<String>()
            .chars()
            .rev()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let digest = Sha256::digest(source_id.as_bytes());
        let tag: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{stem}-{tag}.{}.feat", kind.as_str()))
    }

    pub fn contains(&self, source_id: &str, kind: FeatureKind, config: &DspConfig) -> bool {
        self.load(source_id, kind, config).is_ok()
    }

    pub fn store(&self, map: &FeatureMap, source_id: &str) -> DspResult<PathBuf> {
        let header = CacheHeader {
            format_version: CACHE_FORMAT_VERSION,
            kind: map.kind,
            shape: [map.rows, map.cols],
            config_hash: map.config_hash.clone(),
            source_id: source_id.to_string(),
            frame_hop_secs: map.frame_hop_secs,
        };
        let mut doc = serde_json::to_string(&header)
            .map_err(|e| DspError::CacheFormat(e.to_string()))?;
        doc.push('\n');
        let mut bytes = Vec::with_capacity(map.values.len() * 4);
        for v in &map.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        doc.push_str(&B64.encode(&bytes));
        doc.push('\n');

        let path = self.entry_path(source_id, map.kind);
        let tmp = path.with_extension("feat.tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(doc.as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(
        &self,
        source_id: &str,
        kind: FeatureKind,
        config: &DspConfig,
    ) -> DspResult<FeatureMap> {
        let path = self.entry_path(source_id, kind);
        let doc = std::fs::read_to_string(&path)?;
        let mut lines = doc.lines();
        let header: CacheHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| DspError::CacheFormat("empty cache file".into()))?,
        )
        .map_err(|e| DspError::CacheFormat(e.to_string()))?;
        if header.format_version != CACHE_FORMAT_VERSION {
            return Err(DspError::CacheFormat(format!(
                "unsupported cache format {}",
                header.format_version
            )));
        }
        if header.config_hash != config.config_hash() {
            return Err(DspError::StaleCache {
                source_id: source_id.to_string(),
            });
        }
        let data_line = lines
            .next()
            .ok_or_else(|| DspError::CacheFormat("missing data line".into()))?;
        let bytes = B64
            .decode(data_line.trim_end())
            .map_err(|e| DspError::CacheFormat(e.to_string()))?;
        let expect = header.shape[0] * header.shape[1] * 4;
        if bytes.len() != expect {
            return Err(DspError::CacheFormat(format!(
                "shape {:?} needs {expect} bytes, found {}",
                header.shape,
                bytes.len()
            )));
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        FeatureMap::new(header.kind, header.shape[0], header.shape[1], values, config)
    }
}
