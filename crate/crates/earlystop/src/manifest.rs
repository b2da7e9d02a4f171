//! Dataset manifests: JSON lines of {audio, label, split, source}. A
//! directory path is ingested through the IDMT-style filename adapter,
//! which maps recording-site speed limits (30/50/70 km/h) onto the
//! {low, mid, high} classes. Records without a split are assigned a
//! stratified 70/15/15 split.

use crate::error::{CliError, CliResult};
use numkit::Prng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const LABELS: [&str; 3] = ["low", "mid", "high"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub audio: PathBuf,
    /// `low`, `mid` or `high`; absent for unlabeled evaluation data.
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub source: String,
}

impl ManifestRecord {
    pub fn class_index(&self) -> CliResult<usize> {
        match self.label.as_deref() {
            Some(l) => LABELS
                .iter()
                .position(|&x| x == l)
                .ok_or_else(|| CliError::invalid(format!("unknown label `{l}`"))),
            None => Err(CliError::invalid(format!(
                "record `{}` has no label",
                self.audio.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    /// Load from a JSONL file, or scan a directory through the IDMT
    /// filename adapter.
    pub fn load(path: &Path) -> CliResult<DatasetManifest> {
        if path.is_dir() {
            return Self::from_idmt_dir(path);
        }
        let doc = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        let mut records = Vec::new();
        for (no, line) in doc.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ManifestRecord = serde_json::from_str(line)
                .map_err(|e| CliError::invalid(format!("manifest line {}: {e}", no + 1)))?;
            records.push(rec);
        }
        let manifest = DatasetManifest { records };
        manifest.validate()?;
        Ok(manifest)
    }

    /// IDMT-style ingestion: filenames carry a speed token (30/50/70 Kmh)
    /// or a recording-site name with a known speed limit.
    pub fn from_idmt_dir(dir: &Path) -> CliResult<DatasetManifest> {
        let mut records = Vec::new();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .map(|x| x.eq_ignore_ascii_case("wav"))
                    .unwrap_or(false)
            })
            .collect();
        entries.sort();
        for path in entries {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().to_lowercase())
                .unwrap_or_default();
            if let Some(label) = idmt_label_for(&name) {
                records.push(ManifestRecord {
                    audio: path,
                    label: Some(label.to_string()),
                    split: None,
                    source: "idmt".into(),
                });
            }
        }
        if records.is_empty() {
            return Err(CliError::invalid(format!(
                "no IDMT-style wav files recognized under {}",
                dir.display()
            )));
        }
        let manifest = DatasetManifest { records };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.records.is_empty() {
            return Err(CliError::invalid("empty manifest".into()));
        }
        for rec in &self.records {
            if !rec.audio.exists() {
                return Err(CliError::invalid(format!(
                    "audio file missing: {}",
                    rec.audio.display()
                )));
            }
            if let Some(l) = rec.label.as_deref() {
                if !LABELS.contains(&l) {
                    return Err(CliError::invalid(format!("unknown label `{l}`")));
                }
            }
        }
        Ok(())
    }

    /// Assign a stratified 70/15/15 split to records lacking one.
    pub fn assign_splits(&mut self, seed: u64) {
        let mut rng = Prng::new(numkit::derive_seed(seed, "split-assign"));
        for label in LABELS {
            let mut idx: Vec<usize> = self
                .records
                .iter()
                .enumerate()
                .filter(|(_, r)| r.split.is_none() && r.label.as_deref() == Some(label))
                .map(|(i, _)| i)
                .collect();
            rng.shuffle(&mut idx);
            let n = idx.len();
            let n_train = (n as f64 * 0.70).round() as usize;
            let n_val = (n as f64 * 0.15).round() as usize;
            for (k, &i) in idx.iter().enumerate() {
                self.records[i].split = Some(if k < n_train {
                    Split::Train
                } else if k < n_train + n_val {
                    Split::Val
                } else {
                    Split::Test
                });
            }
        }
    }

    pub fn split(&self, split: Split) -> Vec<&ManifestRecord> {
        self.records
            .iter()
            .filter(|r| r.split == Some(split))
            .collect()
    }

    pub fn require_nonempty_splits(&self) -> CliResult<()> {
        for s in [Split::Train, Split::Val, Split::Test] {
            if self.split(s).is_empty() {
                return Err(CliError::invalid(format!("split {s:?} is empty")));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

fn idmt_label_for(lower_name: &str) -> Option<&'static str> {
    // speed token takes precedence; site names are the fallback
    if lower_name.contains("30kmh") {
        return Some("low");
    }
    if lower_name.contains("50kmh") {
        return Some("mid");
    }
    if lower_name.contains("70kmh") {
        return Some("high");
    }
    if lower_name.contains("fraunhofer") {
        return Some("low");
    }
    if lower_name.contains("schleusinger") {
        return Some("mid");
    }
    if lower_name.contains("langewiesener") {
        return Some("high");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(path: &Path) {
        std::fs::write(path, b"RIFF").unwrap();
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let wav = dir.path().join("a.wav");
        touch(&wav);
        let manifest = DatasetManifest {
            records: vec![ManifestRecord {
                audio: wav,
                label: Some("mid".into()),
                split: Some(Split::Train),
                source: "test".into(),
            }],
        };
        let path = dir.path().join("m.jsonl");
        manifest.save(&path).unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(manifest, back);
    }

    #[test]
    fn missing_audio_is_invalid() {
        let manifest = DatasetManifest {
            records: vec![ManifestRecord {
                audio: "/nonexistent/file.wav".into(),
                label: Some("low".into()),
                split: None,
                source: "test".into(),
            }],
        };
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn idmt_adapter_maps_speed_tokens() {
        assert_eq!(idmt_label_for("2019_fraunhofer-idmt_30kmh_x.wav"), Some("low"));
        assert_eq!(idmt_label_for("x_50kmh_y.wav"), Some("mid"));
        assert_eq!(idmt_label_for("x_70kmh_y.wav"), Some("high"));
        assert_eq!(idmt_label_for("schleusinger-allee_unknown.wav"), Some("mid"));
        assert_eq!(idmt_label_for("nothing_here.wav"), None);
    }

    #[test]
    fn stratified_split_covers_all_classes() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = Vec::new();
        for i in 0..30 {
            let wav = dir.path().join(format!("{i}.wav"));
            touch(&wav);
            records.push(ManifestRecord {
                audio: wav,
                label: Some(LABELS[i % 3].to_string()),
                split: None,
                source: "test".into(),
            });
        }
        let mut manifest = DatasetManifest { records };
        manifest.assign_splits(7);
        manifest.require_nonempty_splits().unwrap();
        let train = manifest.split(Split::Train).len();
        assert!((train as f64 - 21.0).abs() <= 3.0, "train size {train}");
    }
}
