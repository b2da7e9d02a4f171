//! Mini-batch Adam training with prefix-length augmentation: every sample
//! in every batch is truncated to a random prefix t ~ U{ceil(q*T)..T}
//! (tail zero-masked) so prefix predictions are calibrated for the
//! stopping stage. Checkpoints carry optimizer and RNG state for
//! bit-exact resumption.

use crate::data::Sample;
use crate::error::{BmcnnError, BmcnnResult};
use crate::eval::{confusion_matrix, evaluate_loss_acc, recall_from_confusion};
use crate::model::BmcnnModel;
use numkit::checkpoint::{Checkpoint, TensorRole};
use numkit::loss::softmax_cross_entropy;
use numkit::{Adam, Mode, Prng, Tensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Lower bound of the random prefix fraction.
    pub prefix_min_frac: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            prefix_min_frac: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub init_val_loss: f64,
    pub init_val_acc: f64,
    pub epochs: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    pub best_val_acc: f64,
    /// Per-class recall on the validation split at the best epoch;
    /// `None` marks classes absent from the split.
    pub per_class_recall: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
}

pub struct Trainer {
    pub model: BmcnnModel<f32>,
    pub cfg: TrainConfig,
    optimizer: Adam<f32>,
    rng: Prng,
    epoch: usize,
    history: Vec<EpochStats>,
    init_stats: Option<(f64, f64)>,
    best: Option<(usize, f64, Checkpoint)>,
}

impl Trainer {
    pub fn new(model: BmcnnModel<f32>, cfg: TrainConfig) -> Trainer {
        let rng = Prng::new(numkit::derive_seed(cfg.seed, "bmcnn-train"));
        let optimizer = Adam::new(cfg.learning_rate);
        Trainer {
            model,
            cfg,
            optimizer,
            rng,
            epoch: 0,
            history: Vec::new(),
            init_stats: None,
            best: None,
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn prefix_bounds(&self) -> (usize, usize) {
        let t_max = self.model.config.t_max;
        let lo = ((self.cfg.prefix_min_frac * t_max as f64).ceil() as usize).clamp(1, t_max);
        (lo, t_max)
    }

    /// Run `epochs` additional training epochs.
    pub fn run(&mut self, train: &[Sample], val: &[Sample], epochs: usize) -> BmcnnResult<()> {
        if train.is_empty() || val.is_empty() {
            return Err(BmcnnError::Data("empty train or validation split".into()));
        }
        if self.init_stats.is_none() {
            let (l, a) = evaluate_loss_acc(&mut self.model, val)?;
            self.init_stats = Some((l, a));
        }
        let (plo, phi) = self.prefix_bounds();
        for _ in 0..epochs {
            self.epoch += 1;
            let mut order: Vec<usize> = (0..train.len()).collect();
            self.rng.shuffle(&mut order);
            let mut loss_sum = 0.0f64;
            let mut correct = 0usize;
            for chunk in order.chunks(self.cfg.batch_size) {
                // batchnorm needs at least two samples
                if chunk.len() < 2 {
                    continue;
                }
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &train[i]).collect();
                let prefixes: Vec<usize> = batch
                    .iter()
                    .map(|_| self.rng.uniform_range(plo as u64, phi as u64) as usize)
                    .collect();
                let maps_m: Vec<&dsp::FeatureMap> = batch.iter().map(|s| &s.mfcc).collect();
                let maps_w: Vec<&dsp::FeatureMap> = batch.iter().map(|s| &s.wavelet).collect();
                let xm = self.model.assemble_batch(&maps_m, Some(&prefixes))?;
                let xw = self.model.assemble_batch(&maps_w, Some(&prefixes))?;
                let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();

                self.model.zero_grads();
                let logits = self.model.forward_batch(&xm, &xw, Mode::Train, &mut self.rng)?;
                let sce = softmax_cross_entropy(&logits, &labels)?;
                self.model.backward(&sce.grad)?;
                self.optimizer.step(&mut self.model.params_mut())?;

                loss_sum += sce.loss * labels.len() as f64;
                for (i, &y) in labels.iter().enumerate() {
                    correct += (argmax_row(&logits, i) == y) as usize;
                }
            }
            let seen = order.len() - order.len() % 1; // all samples except skipped tail < 2
            let (val_loss, val_acc) = evaluate_loss_acc(&mut self.model, val)?;
            let stats = EpochStats {
                epoch: self.epoch,
                train_loss: loss_sum / seen.max(1) as f64,
                train_acc: correct as f64 / seen.max(1) as f64,
                val_loss,
                val_acc,
            };
            if self.best.as_ref().map(|(_, acc, _)| val_acc > *acc).unwrap_or(true) {
                self.best = Some((self.epoch, val_acc, self.model.to_checkpoint()));
            }
            self.history.push(stats);
        }
        Ok(())
    }

    /// Restore the best-validation weights and build the report.
    pub fn finish(&mut self, val: &[Sample]) -> BmcnnResult<TrainReport> {
        if let Some((_, _, ck)) = &self.best {
            let ck = ck.clone();
            self.model.load_weights(&ck)?;
        }
        let confusion = confusion_matrix(&mut self.model, val, None)?;
        let recall = recall_from_confusion(&confusion);
        let (init_val_loss, init_val_acc) = self.init_stats.unwrap_or((f64::NAN, f64::NAN));
        Ok(TrainReport {
            init_val_loss,
            init_val_acc,
            epochs: self.history.clone(),
            best_epoch: self.best.as_ref().map(|(e, _, _)| *e),
            best_val_acc: self.best.as_ref().map(|(_, a, _)| *a).unwrap_or(f64::NAN),
            per_class_recall: recall,
            confusion,
        })
    }

    /// Full training state: weights, optimizer moments, RNG position,
    /// history, and the best snapshot.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = self.model.to_checkpoint();
        let (step, m, v) = self.optimizer.state();
        let names: Vec<String> = self.model.params().iter().map(|p| p.name.clone()).collect();
        for (name, t) in names.iter().zip(m) {
            ck.push(format!("adam.m.{name}"), TensorRole::Opt, t);
        }
        for (name, t) in names.iter().zip(v) {
            ck.push(format!("adam.v.{name}"), TensorRole::Opt, t);
        }
        if let Some((epoch, acc, best_ck)) = &self.best {
            for entry in best_ck.entries() {
                let t: Tensor<f32> = best_ck.tensor(&entry.name).expect("best entry");
                ck.push(format!("best.{}", entry.name), TensorRole::Opt, &t);
            }
            ck.set_meta("best_epoch", *epoch as u64);
            ck.set_meta("best_val_acc", *acc);
        }
        ck.set_meta("adam_step", step);
        ck.set_meta("epoch", self.epoch as u64);
        ck.set_meta("rng_state", serde_json::to_value(self.rng.state()).unwrap());
        ck.set_meta("train_config", serde_json::to_value(&self.cfg).unwrap());
        ck.set_meta("history", serde_json::to_value(&self.history).unwrap());
        if let Some((l, a)) = self.init_stats {
            ck.set_meta("init_val", serde_json::json!([l, a]));
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> BmcnnResult<Trainer> {
        let model = BmcnnModel::<f32>::from_checkpoint(ck)?;
        let cfg: TrainConfig = serde_json::from_value(
            ck.meta
                .get("train_config")
                .cloned()
                .ok_or_else(|| BmcnnError::Checkpoint("missing train_config".into()))?,
        )
        .map_err(|e| BmcnnError::Checkpoint(e.to_string()))?;
        let mut trainer = Trainer::new(model, cfg);
        trainer.epoch = ck.meta_u64("epoch")? as usize;
        let rng_state: numkit::PrngState = serde_json::from_value(
            ck.meta
                .get("rng_state")
                .cloned()
                .ok_or_else(|| BmcnnError::Checkpoint("missing rng_state".into()))?,
        )
        .map_err(|e| BmcnnError::Checkpoint(e.to_string()))?;
        trainer.rng = Prng::restore(rng_state);
        if let Some(h) = ck.meta.get("history") {
            trainer.history =
                serde_json::from_value(h.clone()).map_err(|e| BmcnnError::Checkpoint(e.to_string()))?;
        }
        if let Some(iv) = ck.meta.get("init_val").and_then(|v| v.as_array()) {
            trainer.init_stats = Some((
                iv[0].as_f64().unwrap_or(f64::NAN),
                iv[1].as_f64().unwrap_or(f64::NAN),
            ));
        }
        let step = ck.meta_u64("adam_step")?;
        let names: Vec<String> = trainer.model.params().iter().map(|p| p.name.clone()).collect();
        let mut m = Vec::with_capacity(names.len());
        let mut v = Vec::with_capacity(names.len());
        for name in &names {
            m.push(ck.tensor(&format!("adam.m.{name}"))?);
            v.push(ck.tensor(&format!("adam.v.{name}"))?);
        }
        trainer.optimizer.restore_state(step, m, v);
        if let (Some(be), Some(ba)) = (ck.meta.get("best_epoch"), ck.meta.get("best_val_acc")) {
            let mut best_ck = trainer.model.to_checkpoint();
            // rebuild the snapshot from the `best.` namespace
            let mut rebuilt = Checkpoint::new("bmcnn");
            rebuilt.layers = best_ck.layers.clone();
            rebuilt.meta = best_ck.meta.clone();
            for entry in best_ck.entries() {
                let t: Tensor<f32> = ck.tensor(&format!("best.{}", entry.name))?;
                rebuilt.push(entry.name.clone(), entry.role, &t);
            }
            best_ck = rebuilt;
            trainer.best = Some((
                be.as_u64().unwrap_or(0) as usize,
                ba.as_f64().unwrap_or(f64::NAN),
                best_ck,
            ));
        }
        Ok(trainer)
    }
}

fn argmax_row(logits: &Tensor<f32>, i: usize) -> usize {
    let c = crate::model::CLASS_COUNT;
    let row = &logits.data()[i * c..(i + 1) * c];
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// One-shot convenience wrapper: train for `cfg.epochs`, restore the best
/// weights, return the report.
pub fn train(
    model: BmcnnModel<f32>,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: TrainConfig,
) -> BmcnnResult<(BmcnnModel<f32>, TrainReport)> {
    let epochs = cfg.epochs;
    let mut trainer = Trainer::new(model, cfg);
    trainer.run(train_set, val_set, epochs)?;
    let report = trainer.finish(val_set)?;
    Ok((trainer.model, report))
}
