//! Evaluation: accuracy, per-class recall, confusion matrix, and the
//! prefix-length sweep (accuracy as a function of how much of each clip
//! the model is allowed to see).

use crate::data::Sample;
use crate::error::{BmcnnError, BmcnnResult};
use crate::model::{BmcnnModel, CLASS_COUNT};
use numkit::loss::softmax_cross_entropy;
use numkit::{Mode, Prng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrefixRow {
    pub fraction: f64,
    pub frames: usize,
    pub seconds: f64,
    pub per_class_recall: Vec<Option<f64>>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class_recall: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
    pub samples: usize,
    pub prefix_sweep: Vec<PrefixRow>,
}

const EVAL_BATCH: usize = 32;

/// Mean loss and accuracy over a split at full length (eval mode).
pub fn evaluate_loss_acc(model: &mut BmcnnModel<f32>, samples: &[Sample]) -> BmcnnResult<(f64, f64)> {
    if samples.is_empty() {
        return Err(BmcnnError::Data("empty evaluation split".into()));
    }
    let mut rng = Prng::new(0);
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for chunk in samples.chunks(EVAL_BATCH) {
        let maps_m: Vec<&dsp::FeatureMap> = chunk.iter().map(|s| &s.mfcc).collect();
        let maps_w: Vec<&dsp::FeatureMap> = chunk.iter().map(|s| &s.wavelet).collect();
        let xm = model.assemble_batch(&maps_m, None)?;
        let xw = model.assemble_batch(&maps_w, None)?;
        let labels: Vec<usize> = chunk.iter().map(|s| s.label).collect();
        let logits = model.forward_batch(&xm, &xw, Mode::Eval, &mut rng)?;
        let sce = softmax_cross_entropy(&logits, &labels)?;
        loss_sum += sce.loss * labels.len() as f64;
        for (i, &y) in labels.iter().enumerate() {
            let p = BmcnnModel::<f32>::probabilities(&logits, i);
            correct += (p.argmax == y) as usize;
        }
    }
    Ok((
        loss_sum / samples.len() as f64,
        correct as f64 / samples.len() as f64,
    ))
}

/// Confusion matrix (rows = true class, columns = predicted) at the given
/// prefix length (None = full clips).
pub fn confusion_matrix(
    model: &mut BmcnnModel<f32>,
    samples: &[Sample],
    prefix: Option<usize>,
) -> BmcnnResult<Vec<Vec<usize>>> {
    let mut confusion = vec![vec![0usize; CLASS_COUNT]; CLASS_COUNT];
    let mut rng = Prng::new(0);
    for chunk in samples.chunks(EVAL_BATCH) {
        let maps_m: Vec<&dsp::FeatureMap> = chunk.iter().map(|s| &s.mfcc).collect();
        let maps_w: Vec<&dsp::FeatureMap> = chunk.iter().map(|s| &s.wavelet).collect();
        let prefixes = prefix.map(|t| vec![t; chunk.len()]);
        let xm = model.assemble_batch(&maps_m, prefixes.as_deref())?;
        let xw = model.assemble_batch(&maps_w, prefixes.as_deref())?;
        let logits = model.forward_batch(&xm, &xw, Mode::Eval, &mut rng)?;
        for (i, s) in chunk.iter().enumerate() {
            let p = BmcnnModel::<f32>::probabilities(&logits, i);
            confusion[s.label][p.argmax] += 1;
        }
    }
    Ok(confusion)
}

/// Recall per class; `None` where the class has no samples (reported as
/// undefined rather than zero).
pub fn recall_from_confusion(confusion: &[Vec<usize>]) -> Vec<Option<f64>> {
    confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                None
            } else {
                Some(row[c] as f64 / total as f64)
            }
        })
        .collect()
}

pub fn accuracy_from_confusion(confusion: &[Vec<usize>]) -> f64 {
    let trace: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        0.0
    } else {
        trace as f64 / total as f64
    }
}

/// Full evaluation; `prefix_fracs` adds one sweep row per fraction of
/// t_max (mirroring the time-window ablation table shape).
pub fn evaluate(
    model: &mut BmcnnModel<f32>,
    samples: &[Sample],
    prefix_fracs: Option<&[f64]>,
) -> BmcnnResult<EvalReport> {
    if samples.is_empty() {
        return Err(BmcnnError::Data("empty evaluation split".into()));
    }
    let confusion = confusion_matrix(model, samples, None)?;
    let recall = recall_from_confusion(&confusion);
    let accuracy = accuracy_from_confusion(&confusion);

    let mut sweep = Vec::new();
    if let Some(fracs) = prefix_fracs {
        let t_max = model.config.t_max;
        for &frac in fracs {
            let frames = ((frac * t_max as f64).round() as usize).clamp(1, t_max);
            let cm = confusion_matrix(model, samples, Some(frames))?;
            sweep.push(PrefixRow {
                fraction: frac,
                frames,
                seconds: frac * 2.0,
                per_class_recall: recall_from_confusion(&cm),
                accuracy: accuracy_from_confusion(&cm),
            });
        }
    }
    Ok(EvalReport {
        accuracy,
        per_class_recall: recall,
        confusion,
        samples: samples.len(),
        prefix_sweep: sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_marks_absent_classes_as_undefined() {
        let confusion = vec![vec![5, 1, 0], vec![0, 0, 0], vec![2, 0, 8]];
        let recall = recall_from_confusion(&confusion);
        assert!((recall[0].unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(recall[1], None);
        assert!((recall[2].unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn accuracy_is_trace_over_total() {
        let confusion = vec![vec![5, 1, 0], vec![0, 3, 0], vec![2, 0, 8]];
        let acc = accuracy_from_confusion(&confusion);
        assert!((acc - 16.0 / 19.0).abs() < 1e-12);
    }
}
