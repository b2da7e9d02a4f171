//! Portable checkpoint container.
//!
//! On-disk layout, line oriented:
//!   line 1:   UTF-8 JSON header
//!             {"format_version":1,"kind":...,"layers":[...],
//!              "meta":{...},"entries":[{"name","shape","role"},...]}
//!   line 2..: one line per entry, in header order: standard base64 of the
//!             tensor's values as little-endian IEEE-754 32-bit floats,
//!             row-major.
//!
//! "role" distinguishes trainable parameters, non-trainable buffers
//! (batchnorm running statistics) and optimizer state.

use crate::error::{NumError, NumResult};
use crate::layers::LayerSpec;
use crate::real::Real;
use crate::tensor::Tensor;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufReader, Write};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorRole {
    Param,
    Buffer,
    Opt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub role: TensorRole,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
    layers: Vec<LayerSpec>,
    meta: BTreeMap<String, serde_json::Value>,
    entries: Vec<CheckpointEntry>,
}

/// In-memory checkpoint: named f32 arrays plus a JSON-serializable header.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub kind: String,
    pub layers: Vec<LayerSpec>,
    pub meta: BTreeMap<String, serde_json::Value>,
    entries: Vec<CheckpointEntry>,
    arrays: Vec<Vec<f32>>,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>) -> Self {
        Checkpoint {
            kind: kind.into(),
            layers: Vec::new(),
            meta: BTreeMap::new(),
            entries: Vec::new(),
            arrays: Vec::new(),
        }
    }

    pub fn push<R: Real>(&mut self, name: impl Into<String>, role: TensorRole, tensor: &Tensor<R>) {
        self.entries.push(CheckpointEntry {
            name: name.into(),
            shape: tensor.shape().to_vec(),
            role,
        });
        self.arrays
            .push(tensor.data().iter().map(|v| v.to_f64() as f32).collect());
    }

    pub fn entries(&self) -> &[CheckpointEntry] {
        &self.entries
    }

    pub fn tensor<R: Real>(&self, name: &str) -> NumResult<Tensor<R>> {
        let idx = self
            .entries
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| NumError::Checkpoint(format!("no tensor named `{name}`")))?;
        let data = self.arrays[idx]
            .iter()
            .map(|&v| R::from_f64(v as f64))
            .collect();
        Tensor::new(self.entries[idx].shape.clone(), data)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|e| e.name == name)
    }

    pub fn meta_u64(&self, key: &str) -> NumResult<u64> {
        self.meta
            .get(key)
            .and_then(|v| v.as_u64())
            .ok_or_else(|| NumError::Checkpoint(format!("missing or non-integer meta `{key}`")))
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.meta.insert(key.to_string(), value.into());
    }

    pub fn to_document(&self) -> String {
        let header = Header {
            format_version: FORMAT_VERSION,
            kind: self.kind.clone(),
            layers: self.layers.clone(),
            meta: self.meta.clone(),
            entries: self.entries.clone(),
        };
        let mut doc = serde_json::to_string(&header).expect("header serializes");
        doc.push('\n');
        for arr in &self.arrays {
            let mut bytes = Vec::with_capacity(arr.len() * 4);
            for v in arr {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            doc.push_str(&B64.encode(&bytes));
            doc.push('\n');
        }
        doc
    }

    pub fn from_document(doc: &str) -> NumResult<Self> {
        let mut lines = doc.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| NumError::Checkpoint("empty document".into()))?;
        let header: Header = serde_json::from_str(header_line)
            .map_err(|e| NumError::Checkpoint(format!("bad header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(NumError::Checkpoint(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        let mut arrays = Vec::with_capacity(header.entries.len());
        for entry in &header.entries {
            let line = lines.next().ok_or_else(|| {
                NumError::Checkpoint(format!("missing data line for `{}`", entry.name))
            })?;
            let bytes = B64
                .decode(line.trim_end())
                .map_err(|e| NumError::Checkpoint(format!("bad base64 for `{}`: {e}", entry.name)))?;
            let numel: usize = entry.shape.iter().product();
            if bytes.len() != numel * 4 {
                return Err(NumError::Checkpoint(format!(
                    "`{}` has {} bytes, shape {:?} needs {}",
                    entry.name,
                    bytes.len(),
                    entry.shape,
                    numel * 4
                )));
            }
            let arr: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            arrays.push(arr);
        }
        Ok(Checkpoint {
            kind: header.kind,
            layers: header.layers,
            meta: header.meta,
            entries: header.entries,
            arrays,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> NumResult<()> {
        // write-then-rename so concurrent readers never see a torn file
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(self.to_document().as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> NumResult<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        let mut doc = String::new();
        let mut reader = BufReader::new(f);
        std::io::Read::read_to_string(&mut reader, &mut doc)?;
        Self::from_document(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits_and_metadata() {
        let mut ck = Checkpoint::new("test-model");
        ck.layers.push(LayerSpec::Dense {
            in_features: 3,
            out_features: 2,
        });
        ck.set_meta("step", 41u64);
        let t = Tensor::new(vec![2, 3], vec![0.1f32, -2.5, 3.25, f32::MIN_POSITIVE, 7.0, -0.0]).unwrap();
        ck.push("w", TensorRole::Param, &t);

        let doc = ck.to_document();
        let back = Checkpoint::from_document(&doc).unwrap();
        assert_eq!(back.kind, "test-model");
        assert_eq!(back.layers, ck.layers);
        assert_eq!(back.meta_u64("step").unwrap(), 41);
        let got: Tensor<f32> = back.tensor("w").unwrap();
        for (a, b) in got.data().iter().zip(t.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn missing_tensor_is_an_error() {
        let ck = Checkpoint::new("x");
        assert!(ck.tensor::<f32>("nope").is_err());
    }

    #[test]
    fn save_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut ck = Checkpoint::new("file-test");
        ck.push("t", TensorRole::Buffer, &Tensor::new(vec![2], vec![1.0f32, 2.0]).unwrap());
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.tensor::<f32>("t").unwrap().data(), &[1.0, 2.0]);
    }
}
