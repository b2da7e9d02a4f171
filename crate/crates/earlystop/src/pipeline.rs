//! Shared feature-pipeline orchestration: PCA fitting on the training
//! split, cache-backed extraction of both feature maps per clip, and
//! sample loading for the trainers.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{DatasetManifest, ManifestRecord, Split};
use bmcnn::Sample;
use dsp::features::{wavelet_featuremap, wavelet_raw_features};
use dsp::mfcc::mfcc;
use dsp::{AudioClip, DspConfig, FeatureCache, FeatureKind, PcaModel};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct PcaFile {
    config_hash: String,
    model: PcaModel,
}

/// Load the cached PCA if its config hash matches, else fit on the
/// training split and cache it.
pub fn fit_or_load_pca(
    cache_dir: &Path,
    manifest: &DatasetManifest,
    config: &DspConfig,
) -> CliResult<PcaModel> {
    let path = cache_dir.join("pca.json");
    let hash = config.config_hash();
    if let Ok(doc) = std::fs::read_to_string(&path) {
        if let Ok(file) = serde_json::from_str::<PcaFile>(&doc) {
            if file.config_hash == hash {
                return Ok(file.model);
            }
        }
    }
    let train = manifest.split(Split::Train);
    if train.is_empty() {
        return Err(CliError::invalid("PCA requires a nonempty train split".into()));
    }
    let mut rows = Vec::new();
    for rec in &train {
        let clip = load_clip(rec, config)?;
        rows.extend(
            wavelet_raw_features(&clip, config).map_err(CliError::from)?,
        );
    }
    let model = dsp::pca::fit_pca(&rows, config.n_coeffs).map_err(CliError::from)?;
    std::fs::create_dir_all(cache_dir)?;
    let file = PcaFile {
        config_hash: hash,
        model: model.clone(),
    };
    std::fs::write(&path, serde_json::to_string(&file).expect("pca serializes"))?;
    Ok(model)
}

fn load_clip(rec: &ManifestRecord, config: &DspConfig) -> CliResult<AudioClip> {
    let label = rec.label.as_deref().and_then(|l| {
        crate::manifest::LABELS.iter().position(|&x| x == l)
    });
    AudioClip::from_wav(&rec.audio, label, config).map_err(CliError::from)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub clips: usize,
    pub cache_hits: usize,
    pub computed: usize,
    pub feature_files: usize,
    pub config_hash: String,
    pub errors: Vec<String>,
}

/// Populate the cache with both feature maps for every manifest record.
pub fn extract_features(
    manifest: &DatasetManifest,
    config: &RunConfig,
    cache: &FeatureCache,
) -> CliResult<FeatureSummary> {
    let pca = fit_or_load_pca(cache.dir(), manifest, &config.dsp)?;
    let mut summary = FeatureSummary {
        clips: manifest.records.len(),
        cache_hits: 0,
        computed: 0,
        feature_files: 0,
        config_hash: config.dsp.config_hash(),
        errors: Vec::new(),
    };
    for rec in &manifest.records {
        let id = rec.audio.to_string_lossy().into_owned();
        let hit_mfcc = cache.contains(&id, FeatureKind::Mfcc, &config.dsp);
        let hit_wavelet = cache.contains(&id, FeatureKind::Wavelet, &config.dsp);
        if hit_mfcc && hit_wavelet {
            summary.cache_hits += 1;
            summary.feature_files += 2;
            continue;
        }
        let clip = match load_clip(rec, &config.dsp) {
            Ok(c) => c,
            Err(e) => {
                summary.errors.push(format!("{}: {e}", rec.audio.display()));
                continue;
            }
        };
        let result = (|| -> CliResult<()> {
            let m = mfcc(&clip, &config.dsp).map_err(CliError::from)?;
            let w = wavelet_featuremap(&clip, &pca, &config.dsp).map_err(CliError::from)?;
            cache.store(&m, &id).map_err(CliError::from)?;
            cache.store(&w, &id).map_err(CliError::from)?;
            Ok(())
        })();
        match result {
            Ok(()) => {
                summary.computed += 1;
                summary.feature_files += 2;
            }
            Err(e) => summary.errors.push(format!("{}: {e}", rec.audio.display())),
        }
    }
    Ok(summary)
}

/// Load one split's samples from the cache (stale or absent entries are
/// an error; run `features` first).
pub fn load_samples(
    manifest: &DatasetManifest,
    split: Split,
    config: &RunConfig,
    cache: &FeatureCache,
) -> CliResult<Vec<Sample>> {
    let records = manifest.split(split);
    if records.is_empty() {
        return Err(CliError::invalid(format!("split {split:?} is empty")));
    }
    let mut samples = Vec::with_capacity(records.len());
    for rec in records {
        let id = rec.audio.to_string_lossy().into_owned();
        let m = cache
            .load(&id, FeatureKind::Mfcc, &config.dsp)
            .map_err(|e| CliError::invalid(format!("feature cache: {e} (run `features` first)")))?;
        let w = cache
            .load(&id, FeatureKind::Wavelet, &config.dsp)
            .map_err(|e| CliError::invalid(format!("feature cache: {e} (run `features` first)")))?;
        let label = rec.class_index()?;
        samples.push(Sample::new(m, w, label, id).map_err(CliError::from)?);
    }
    Ok(samples)
}
