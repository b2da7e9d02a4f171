//! The model: per-branch blocks of conv -> batchnorm -> ReLU -> 2x2
//! maxpool -> dropout, flatten + concatenate, dense -> ReLU -> dense ->
//! softmax.

use crate::error::{BmcnnError, BmcnnResult};
use dsp::FeatureMap;
use numkit::checkpoint::{Checkpoint, TensorRole};
use numkit::layers::{BatchNorm, Conv2d, Dropout, Layer, MaxPool2x2, Relu};
use numkit::loss::softmax;
use numkit::{Dense, LayerSpec, Mode, Parameter, Prng, Real, Tensor};
use serde::{Deserialize, Serialize};

pub const CLASS_COUNT: usize = 3;

/// Simplex output of the classifier head for one clip (or prefix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    pub probs: [f64; CLASS_COUNT],
    pub logits: [f64; CLASS_COUNT],
    /// Lowest index wins exact ties.
    pub argmax: usize,
}

impl ClassProbabilities {
    pub fn from_logits_probs(logits: [f64; CLASS_COUNT], probs: [f64; CLASS_COUNT]) -> Self {
        let mut argmax = 0;
        for i in 1..CLASS_COUNT {
            if probs[i] > probs[argmax] {
                argmax = i;
            }
        }
        ClassProbabilities { probs, logits, argmax }
    }

    pub fn confidence(&self) -> f64 {
        self.probs[self.argmax]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub t_max: usize,
    pub f_dim: usize,
    /// Output channels per block; the length fixes the block count.
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub dense_hidden: usize,
    pub keep_prob: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            t_max: 124,
            f_dim: 13,
            channels: vec![16, 32, 64, 64],
            kernel: 3,
            dense_hidden: 128,
            keep_prob: 0.75,
        }
    }
}

impl ModelConfig {
    /// Spatial extent after the pooling cascade (ceil halving per block).
    fn pooled(&self, mut extent: usize) -> usize {
        for _ in &self.channels {
            extent = extent.div_ceil(2);
        }
        extent
    }

    /// Flattened per-branch feature length after the last block.
    pub fn branch_dim(&self) -> usize {
        self.channels.last().copied().unwrap_or(0) * self.pooled(self.t_max) * self.pooled(self.f_dim)
    }

    pub fn validate(&self) -> BmcnnResult<()> {
        if self.channels.is_empty() {
            return Err(BmcnnError::Shape("at least one conv block required".into()));
        }
        if self.pooled(self.f_dim) == 0 || self.pooled(self.t_max) == 0 {
            return Err(BmcnnError::Shape("pooling cascade collapses the map".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(BmcnnError::Shape("keep probability out of (0,1]".into()));
        }
        Ok(())
    }
}

struct Block<R: Real> {
    conv: Conv2d<R>,
    bn: BatchNorm<R>,
    relu: Relu<R>,
    pool: MaxPool2x2<R>,
    dropout: Dropout<R>,
}

impl<R: Real> Block<R> {
    fn new(name: &str, c_in: usize, c_out: usize, kernel: usize, keep: f64, rng: &mut Prng) -> BmcnnResult<Self> {
        Ok(Block {
            conv: Conv2d::new(&format!("{name}.conv"), c_in, c_out, kernel, rng),
            bn: BatchNorm::new(&format!("{name}.bn"), c_out),
            relu: Relu::new(),
            pool: MaxPool2x2::new(),
            dropout: Dropout::new(keep).map_err(BmcnnError::Num)?,
        })
    }

    fn forward(&mut self, x: &Tensor<R>, mode: Mode, rng: &mut Prng) -> BmcnnResult<Tensor<R>> {
        let x = self.conv.forward(x, mode, rng)?;
        let x = self.bn.forward(&x, mode, rng)?;
        let x = self.relu.forward(&x, mode, rng)?;
        let x = self.pool.forward(&x, mode, rng)?;
        Ok(self.dropout.forward(&x, mode, rng)?)
    }

    fn backward(&mut self, g: &Tensor<R>) -> BmcnnResult<Tensor<R>> {
        let g = self.dropout.backward(g)?;
        let g = self.pool.backward(&g)?;
        let g = self.relu.backward(&g)?;
        let g = self.bn.backward(&g)?;
        Ok(self.conv.backward(&g)?)
    }
}

struct Branch<R: Real> {
    blocks: Vec<Block<R>>,
}

impl<R: Real> Branch<R> {
    fn new(name: &str, cfg: &ModelConfig, rng: &mut Prng) -> BmcnnResult<Self> {
        let mut blocks = Vec::with_capacity(cfg.channels.len());
        let mut c_in = 1;
        for (i, &c_out) in cfg.channels.iter().enumerate() {
            blocks.push(Block::new(
                &format!("{name}.block{i}"),
                c_in,
                c_out,
                cfg.kernel,
                cfg.keep_prob,
                rng,
            )?);
            c_in = c_out;
        }
        Ok(Branch { blocks })
    }

    fn forward(&mut self, x: &Tensor<R>, mode: Mode, rng: &mut Prng) -> BmcnnResult<Tensor<R>> {
        let mut h = x.clone();
        for block in &mut self.blocks {
            h = block.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    fn backward(&mut self, g: &Tensor<R>) -> BmcnnResult<Tensor<R>> {
        let mut grad = g.clone();
        for block in self.blocks.iter_mut().rev() {
            grad = block.backward(&grad)?;
        }
        Ok(grad)
    }
}

pub struct BmcnnModel<R: Real> {
    pub config: ModelConfig,
    branch_mfcc: Branch<R>,
    branch_wavelet: Branch<R>,
    dense1: Dense<R>,
    relu: Relu<R>,
    dense2: Dense<R>,
    fused_shapes: Option<(Vec<usize>, Vec<usize>)>,
}

impl<R: Real> BmcnnModel<R> {
    pub fn new(config: ModelConfig, seed: u64) -> BmcnnResult<Self> {
        config.validate()?;
        let mut rng = Prng::new(numkit::derive_seed(seed, "bmcnn-init"));
        let branch_mfcc = Branch::new("mfcc", &config, &mut rng)?;
        let branch_wavelet = Branch::new("wavelet", &config, &mut rng)?;
        let fused = 2 * config.branch_dim();
        let dense1 = Dense::new("dense1", fused, config.dense_hidden, &mut rng);
        // smaller head init keeps fresh-model outputs near uniform
        let dense2 = Dense::new_scaled(
            "dense2",
            config.dense_hidden,
            CLASS_COUNT,
            0.05 / (config.dense_hidden as f64).sqrt(),
            &mut rng,
        );
        Ok(BmcnnModel {
            config,
            branch_mfcc,
            branch_wavelet,
            dense1,
            relu: Relu::new(),
            dense2,
            fused_shapes: None,
        })
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        let mut ps = Vec::new();
        for branch in [&mut self.branch_mfcc, &mut self.branch_wavelet] {
            for block in &mut branch.blocks {
                ps.extend(block.conv.params_mut());
                ps.extend(block.bn.params_mut());
            }
        }
        ps.extend(self.dense1.params_mut());
        ps.extend(self.dense2.params_mut());
        ps
    }

    pub fn params(&self) -> Vec<&Parameter<R>> {
        let mut ps = Vec::new();
        for branch in [&self.branch_mfcc, &self.branch_wavelet] {
            for block in &branch.blocks {
                ps.extend(block.conv.params());
                ps.extend(block.bn.params());
            }
        }
        ps.extend(self.dense1.params());
        ps.extend(self.dense2.params());
        ps
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Direct mutable access to the output head (class-permutation tests).
    pub fn head_mut(&mut self) -> &mut Dense<R> {
        &mut self.dense2
    }

    fn check_batch_geometry(&self, x: &Tensor<R>, which: &str) -> BmcnnResult<()> {
        let s = x.shape();
        if s.len() != 4 || s[1] != 1 || s[2] != self.config.t_max || s[3] != self.config.f_dim {
            return Err(BmcnnError::Shape(format!(
                "{which} batch must be [N,1,{},{}], got {:?}",
                self.config.t_max, self.config.f_dim, s
            )));
        }
        Ok(())
    }

    /// Batched forward over [N,1,T,F] pairs; returns logits [N,3].
    pub fn forward_batch(
        &mut self,
        x_mfcc: &Tensor<R>,
        x_wavelet: &Tensor<R>,
        mode: Mode,
        rng: &mut Prng,
    ) -> BmcnnResult<Tensor<R>> {
        self.check_batch_geometry(x_mfcc, "mfcc")?;
        self.check_batch_geometry(x_wavelet, "wavelet")?;
        if x_mfcc.shape()[0] != x_wavelet.shape()[0] {
            return Err(BmcnnError::Shape("branch batch sizes differ".into()));
        }
        let n = x_mfcc.shape()[0];
        let hm = self.branch_mfcc.forward(x_mfcc, mode, rng)?;
        let hw = self.branch_wavelet.forward(x_wavelet, mode, rng)?;
        self.fused_shapes = Some((hm.shape().to_vec(), hw.shape().to_vec()));
        let dm = hm.numel() / n;
        let dw = hw.numel() / n;
        let mut fused = Tensor::zeros(&[n, dm + dw]);
        {
            let fd = fused.data_mut();
            for i in 0..n {
                fd[i * (dm + dw)..i * (dm + dw) + dm].copy_from_slice(&hm.data()[i * dm..(i + 1) * dm]);
                fd[i * (dm + dw) + dm..(i + 1) * (dm + dw)].copy_from_slice(&hw.data()[i * dw..(i + 1) * dw]);
            }
        }
        let h = self.dense1.forward(&fused, mode, rng)?;
        let h = self.relu.forward(&h, mode, rng)?;
        Ok(self.dense2.forward(&h, mode, rng)?)
    }

    /// Backward from d(loss)/d(logits); leaves gradients in parameters.
    pub fn backward(&mut self, grad_logits: &Tensor<R>) -> BmcnnResult<()> {
        let g = self.dense2.backward(grad_logits)?;
        let g = self.relu.backward(&g)?;
        let g = self.dense1.backward(&g)?;
        let (sm, sw) = self
            .fused_shapes
            .clone()
            .ok_or_else(|| BmcnnError::Shape("backward before forward".into()))?;
        let n = sm[0];
        let dm: usize = sm.iter().skip(1).product();
        let dw: usize = sw.iter().skip(1).product();
        let mut gm = Tensor::zeros(&sm);
        let mut gw = Tensor::zeros(&sw);
        {
            let gd = g.data();
            let gmd = gm.data_mut();
            let gwd = gw.data_mut();
            for i in 0..n {
                gmd[i * dm..(i + 1) * dm].copy_from_slice(&gd[i * (dm + dw)..i * (dm + dw) + dm]);
                gwd[i * dw..(i + 1) * dw].copy_from_slice(&gd[i * (dm + dw) + dm..(i + 1) * (dm + dw)]);
            }
        }
        self.branch_mfcc.backward(&gm)?;
        self.branch_wavelet.backward(&gw)?;
        Ok(())
    }

    /// Assemble a batch tensor from feature maps with optional per-sample
    /// prefix masking: frames with index >= prefix[i] are zeroed.
    pub fn assemble_batch(&self, maps: &[&FeatureMap], prefixes: Option<&[usize]>) -> BmcnnResult<Tensor<R>> {
        let n = maps.len();
        let (t, f) = (self.config.t_max, self.config.f_dim);
        let mut out = Tensor::zeros(&[n, 1, t, f]);
        let od = out.data_mut();
        for (i, map) in maps.iter().enumerate() {
            if map.rows != t || map.cols != f {
                return Err(BmcnnError::Shape(format!(
                    "feature map {}x{} does not match model geometry {}x{}",
                    map.rows, map.cols, t, f
                )));
            }
            let keep = prefixes.map(|p| p[i]).unwrap_or(t).min(t);
            for row in 0..keep {
                for col in 0..f {
                    od[(i * t + row) * f + col] = R::from_f64(map.row(row)[col] as f64);
                }
            }
        }
        Ok(out)
    }

    /// Eval-mode forward of one clip pair; full length.
    pub fn forward(&mut self, x_mfcc: &FeatureMap, x_wavelet: &FeatureMap) -> BmcnnResult<ClassProbabilities> {
        self.forward_prefix(x_mfcc, x_wavelet, self.config.t_max)
    }

    /// Eval-mode forward of the first `t` frames (tail zero-masked).
    pub fn forward_prefix(
        &mut self,
        x_mfcc: &FeatureMap,
        x_wavelet: &FeatureMap,
        t: usize,
    ) -> BmcnnResult<ClassProbabilities> {
        if t < 1 || t > self.config.t_max {
            return Err(BmcnnError::Domain(format!(
                "prefix length {t} outside [1, {}]",
                self.config.t_max
            )));
        }
        let xm = self.assemble_batch(&[x_mfcc], Some(&[t]))?;
        let xw = self.assemble_batch(&[x_wavelet], Some(&[t]))?;
        let mut rng = Prng::new(0); // unused in eval mode
        let logits = self.forward_batch(&xm, &xw, Mode::Eval, &mut rng)?;
        Ok(Self::probabilities(&logits, 0))
    }

    /// All prefix predictions t = 1..=t_max in one batched eval pass.
    pub fn probability_trajectory(
        &mut self,
        x_mfcc: &FeatureMap,
        x_wavelet: &FeatureMap,
    ) -> BmcnnResult<Vec<ClassProbabilities>> {
        let t_max = self.config.t_max;
        let maps_m: Vec<&FeatureMap> = std::iter::repeat(x_mfcc).take(t_max).collect();
        let maps_w: Vec<&FeatureMap> = std::iter::repeat(x_wavelet).take(t_max).collect();
        let prefixes: Vec<usize> = (1..=t_max).collect();
        let xm = self.assemble_batch(&maps_m, Some(&prefixes))?;
        let xw = self.assemble_batch(&maps_w, Some(&prefixes))?;
        let mut rng = Prng::new(0);
        let logits = self.forward_batch(&xm, &xw, Mode::Eval, &mut rng)?;
        Ok((0..t_max).map(|i| Self::probabilities(&logits, i)).collect())
    }

    /// Row `i` of a logits batch as calibrated probabilities at 64-bit.
    pub fn probabilities(logits: &Tensor<R>, i: usize) -> ClassProbabilities {
        let c = CLASS_COUNT;
        let row: Vec<f64> = logits.data()[i * c..(i + 1) * c]
            .iter()
            .map(|v| v.to_f64())
            .collect();
        let row_t = Tensor::<f64>::new(vec![1, c], row.clone()).expect("logit row");
        let probs_t = softmax(&row_t).expect("softmax row");
        let mut probs = [0.0; CLASS_COUNT];
        let mut logit_arr = [0.0; CLASS_COUNT];
        for k in 0..c {
            probs[k] = probs_t.data()[k];
            logit_arr[k] = row[k];
        }
        ClassProbabilities::from_logits_probs(logit_arr, probs)
    }

    /// Serialize parameters, batchnorm buffers and architecture metadata.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new("bmcnn");
        ck.layers = self.layer_specs();
        ck.set_meta(
            "model_config",
            serde_json::to_value(&self.config).expect("config serializes"),
        );
        for p in self.params() {
            ck.push(p.name.clone(), TensorRole::Param, &p.value);
        }
        for (name, buf) in self.buffers() {
            ck.push(name, TensorRole::Buffer, buf);
        }
        ck
    }

    fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut c_in = 1;
        for &c_out in &self.config.channels {
            specs.push(LayerSpec::Conv2d {
                in_channels: c_in,
                out_channels: c_out,
                kernel: self.config.kernel,
            });
            specs.push(LayerSpec::Batchnorm { features: c_out });
            specs.push(LayerSpec::Relu);
            specs.push(LayerSpec::Maxpool2x2);
            specs.push(LayerSpec::Dropout {
                keep_prob: self.config.keep_prob,
            });
            c_in = c_out;
        }
        specs.push(LayerSpec::Dense {
            in_features: 2 * self.config.branch_dim(),
            out_features: self.config.dense_hidden,
        });
        specs.push(LayerSpec::Relu);
        specs.push(LayerSpec::Dense {
            in_features: self.config.dense_hidden,
            out_features: CLASS_COUNT,
        });
        specs.push(LayerSpec::Softmax);
        specs
    }

    fn buffers(&self) -> Vec<(String, &Tensor<R>)> {
        let mut out = Vec::new();
        for (bname, branch) in [("mfcc", &self.branch_mfcc), ("wavelet", &self.branch_wavelet)] {
            for (i, block) in branch.blocks.iter().enumerate() {
                for (n, t) in block.bn.buffers() {
                    out.push((format!("{bname}.block{i}.bn.{n}"), t));
                }
            }
        }
        out
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<R>)> {
        let mut out = Vec::new();
        for (bname, branch) in [
            ("mfcc", &mut self.branch_mfcc),
            ("wavelet", &mut self.branch_wavelet),
        ] {
            for (i, block) in branch.blocks.iter_mut().enumerate() {
                for (n, t) in block.bn.buffers_mut() {
                    out.push((format!("{bname}.block{i}.bn.{n}"), t));
                }
            }
        }
        out
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> BmcnnResult<BmcnnModel<R>> {
        if ck.kind != "bmcnn" {
            return Err(BmcnnError::Checkpoint(format!(
                "expected kind `bmcnn`, found `{}`",
                ck.kind
            )));
        }
        let config: ModelConfig = serde_json::from_value(
            ck.meta
                .get("model_config")
                .cloned()
                .ok_or_else(|| BmcnnError::Checkpoint("missing model_config".into()))?,
        )
        .map_err(|e| BmcnnError::Checkpoint(e.to_string()))?;
        let mut model = BmcnnModel::new(config, 0)?;
        model.load_weights(ck)?;
        Ok(model)
    }

    pub fn load_weights(&mut self, ck: &Checkpoint) -> BmcnnResult<()> {
        for p in self.params_mut() {
            let t: Tensor<R> = ck.tensor(&p.name)?;
            if t.shape() != p.value.shape() {
                return Err(BmcnnError::Checkpoint(format!(
                    "`{}` shape {:?} vs model {:?}",
                    p.name,
                    t.shape(),
                    p.value.shape()
                )));
            }
            p.value = t;
        }
        for (name, buf) in self.buffers_mut() {
            let t: Tensor<R> = ck.tensor(&name)?;
            *buf = t;
        }
        Ok(())
    }
}
