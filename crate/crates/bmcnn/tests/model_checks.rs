//! Full-model verification: end-to-end gradient check at 64-bit on a
//! small geometry, class-permutation equivariance, initialization
//! behavior, capacity smoke test, and fixed-seed reproducibility.

use bmcnn::{BmcnnModel, ModelConfig, Sample, TrainConfig, Trainer};
use dsp::{DspConfig, FeatureKind, FeatureMap};
use numkit::gradcheck::central_difference_check;
use numkit::loss::softmax_cross_entropy;
use numkit::{Mode, Prng, Tensor};

fn tiny_config() -> ModelConfig {
    ModelConfig {
        t_max: 8,
        f_dim: 4,
        channels: vec![2, 3],
        kernel: 3,
        dense_hidden: 8,
        keep_prob: 1.0, // deterministic forward for gradient checks
    }
}

fn random_map(kind: FeatureKind, rows: usize, cols: usize, rng: &mut Prng) -> FeatureMap {
    let cfg = DspConfig::default();
    let values: Vec<f32> = (0..rows * cols).map(|_| rng.normal() as f32 * 0.5).collect();
    FeatureMap::new(kind, rows, cols, values, &cfg).unwrap()
}

fn class_map(kind: FeatureKind, rows: usize, cols: usize, class: usize, rng: &mut Prng) -> FeatureMap {
    let cfg = DspConfig::default();
    // strong class-dependent column pattern plus noise
    let values: Vec<f32> = (0..rows * cols)
        .map(|i| {
            let col = i % cols;
            let signal = if col == class { 2.0 } else { 0.0 };
            signal + rng.normal() as f32 * 0.1
        })
        .collect();
    FeatureMap::new(kind, rows, cols, values, &cfg).unwrap()
}

struct LossRig {
    model: BmcnnModel<f64>,
    xm: Tensor<f64>,
    xw: Tensor<f64>,
    labels: Vec<usize>,
}

impl LossRig {
    fn loss(&mut self) -> f64 {
        let logits = self
            .model
            .forward_batch(&self.xm, &self.xw, Mode::Train, &mut Prng::new(0))
            .unwrap();
        softmax_cross_entropy(&logits, &self.labels).unwrap().loss
    }

    fn backward(&mut self) {
        let logits = self
            .model
            .forward_batch(&self.xm, &self.xw, Mode::Train, &mut Prng::new(0))
            .unwrap();
        let sce = softmax_cross_entropy(&logits, &self.labels).unwrap();
        self.model.backward(&sce.grad).unwrap();
    }
}

#[test]
fn full_model_gradients_match_finite_differences() {
    let mut rng = Prng::new(11);
    let model = BmcnnModel::<f64>::new(tiny_config(), 5).unwrap();
    let n = 2;
    let xm = Tensor::from_fn(&[n, 1, 8, 4], |_| rng.normal() * 0.7);
    let xw = Tensor::from_fn(&[n, 1, 8, 4], |_| rng.normal() * 0.7);
    let mut rig = LossRig {
        model,
        xm,
        xw,
        labels: vec![0, 2],
    };
    let result = central_difference_check(
        &mut rig,
        |r| r.model.params_mut(),
        |r| r.backward(),
        |r| r.loss(),
        1e-6,
    );
    assert!(
        result.max_rel_err < 1e-4,
        "max rel err {:.3e} over {} params, worst {}",
        result.max_rel_err,
        result.checked,
        result.worst
    );
}

#[test]
fn class_permutation_equivariance() {
    let mut rng = Prng::new(3);
    let mut model = BmcnnModel::<f32>::new(tiny_config(), 17).unwrap();
    let m = random_map(FeatureKind::Mfcc, 8, 4, &mut rng);
    let w = random_map(FeatureKind::Wavelet, 8, 4, &mut rng);
    let base = model.forward(&m, &w).unwrap();

    // cyclic permutation pi(i) = (i + 1) % 3 applied to the head rows
    let perm = [1usize, 2, 0];
    {
        let head = model.head_mut();
        let wv = head.weight.value.clone();
        let bv = head.bias.value.clone();
        let cols = wv.shape()[1];
        let mut wp = wv.clone();
        let mut bp = bv.clone();
        for (dst, &src) in perm.iter().enumerate() {
            wp.data_mut()[dst * cols..(dst + 1) * cols]
                .copy_from_slice(&wv.data()[src * cols..(src + 1) * cols]);
            bp.data_mut()[dst] = bv.data()[src];
        }
        head.weight.value = wp;
        head.bias.value = bp;
    }
    let permuted = model.forward(&m, &w).unwrap();
    for (dst, &src) in perm.iter().enumerate() {
        assert!(
            (permuted.probs[dst] - base.probs[src]).abs() < 1e-9,
            "prob[{dst}] {} vs base[{src}] {}",
            permuted.probs[dst],
            base.probs[src]
        );
    }
}

#[test]
fn fresh_model_predicts_near_uniform() {
    // full-size geometry, 100 seeds
    let cfg = ModelConfig::default();
    let mut rng = Prng::new(1234);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut model = BmcnnModel::<f32>::new(cfg.clone(), seed).unwrap();
        let m = random_map(FeatureKind::Mfcc, cfg.t_max, cfg.f_dim, &mut rng);
        let w = random_map(FeatureKind::Wavelet, cfg.t_max, cfg.f_dim, &mut rng);
        let p = model.forward(&m, &w).unwrap();
        for &v in &p.probs {
            worst = worst.max((v - 1.0 / 3.0).abs());
            assert!(
                (v - 1.0 / 3.0).abs() < 0.15,
                "seed {seed}: prob {v} strays from uniform"
            );
        }
    }
    eprintln!("fresh-init max deviation from uniform: {worst:.4}");
}

#[test]
fn init_loss_is_near_log3_and_one_batch_overfits() {
    let mut rng = Prng::new(77);
    let cfg = ModelConfig {
        dense_hidden: 32,
        channels: vec![4, 8],
        ..tiny_config()
    };
    let samples: Vec<Sample> = (0..8)
        .map(|i| {
            let class = i % 3;
            Sample::new(
                class_map(FeatureKind::Mfcc, cfg.t_max, cfg.f_dim, class, &mut rng),
                class_map(FeatureKind::Wavelet, cfg.t_max, cfg.f_dim, class, &mut rng),
                class,
                format!("s{i}"),
            )
            .unwrap()
        })
        .collect();

    let model = BmcnnModel::<f32>::new(cfg, 55).unwrap();
    let tc = TrainConfig {
        epochs: 0,
        batch_size: 8,
        learning_rate: 1e-3,
        prefix_min_frac: 1.0, // no masking: pure capacity check
        seed: 9,
    };
    let mut trainer = Trainer::new(model, tc);
    // 200 optimization steps = 200 single-batch epochs
    trainer.run(&samples, &samples, 200).unwrap();
    let report = trainer.finish(&samples).unwrap();
    assert!(
        (report.init_val_loss - 3.0f64.ln()).abs() < 0.1,
        "initial loss {} should be near ln 3",
        report.init_val_loss
    );
    assert_eq!(
        report.best_val_acc, 1.0,
        "8-sample batch failed to overfit: best acc {}",
        report.best_val_acc
    );
}

#[test]
fn fixed_seed_training_is_reproducible() {
    let run = || {
        let mut rng = Prng::new(21);
        let cfg = tiny_config();
        let samples: Vec<Sample> = (0..12)
            .map(|i| {
                let class = i % 3;
                Sample::new(
                    class_map(FeatureKind::Mfcc, cfg.t_max, cfg.f_dim, class, &mut rng),
                    class_map(FeatureKind::Wavelet, cfg.t_max, cfg.f_dim, class, &mut rng),
                    class,
                    format!("s{i}"),
                )
                .unwrap()
            })
            .collect();
        let model = BmcnnModel::<f32>::new(cfg, 4).unwrap();
        let tc = TrainConfig {
            epochs: 0,
            batch_size: 4,
            learning_rate: 1e-3,
            prefix_min_frac: 0.5,
            seed: 31,
        };
        let mut trainer = Trainer::new(model, tc);
        trainer.run(&samples[..9], &samples[9..], 3).unwrap();
        let ck = trainer.to_checkpoint().to_document();
        let report = trainer.finish(&samples[9..]).unwrap();
        (ck, format!("{:?}", report.epochs))
    };
    let (ck_a, hist_a) = run();
    let (ck_b, hist_b) = run();
    assert_eq!(hist_a, hist_b);
    assert_eq!(ck_a, ck_b, "training checkpoints differ between identical runs");
}

#[test]
fn resume_from_checkpoint_is_bit_exact() {
    let mut rng = Prng::new(100);
    let cfg = tiny_config();
    let samples: Vec<Sample> = (0..12)
        .map(|i| {
            let class = i % 3;
            Sample::new(
                class_map(FeatureKind::Mfcc, cfg.t_max, cfg.f_dim, class, &mut rng),
                class_map(FeatureKind::Wavelet, cfg.t_max, cfg.f_dim, class, &mut rng),
                class,
                format!("s{i}"),
            )
            .unwrap()
        })
        .collect();
    let (train_set, val_set) = samples.split_at(9);
    let tc = TrainConfig {
        epochs: 0,
        batch_size: 4,
        learning_rate: 1e-3,
        prefix_min_frac: 0.5,
        seed: 8,
    };

    // straight-through: 4 epochs
    let model_a = BmcnnModel::<f32>::new(cfg.clone(), 2).unwrap();
    let mut trainer_a = Trainer::new(model_a, tc.clone());
    trainer_a.run(train_set, val_set, 4).unwrap();
    let doc_a = trainer_a.to_checkpoint().to_document();

    // split: 2 epochs, checkpoint, restore, 2 more
    let model_b = BmcnnModel::<f32>::new(cfg, 2).unwrap();
    let mut trainer_b = Trainer::new(model_b, tc);
    trainer_b.run(train_set, val_set, 2).unwrap();
    let mid = trainer_b.to_checkpoint();
    let mut resumed = Trainer::from_checkpoint(&mid).unwrap();
    resumed.run(train_set, val_set, 2).unwrap();
    let doc_b = resumed.to_checkpoint().to_document();

    assert_eq!(doc_a, doc_b, "resumed training diverged from straight-through run");
}
