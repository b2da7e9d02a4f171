//! Batch normalization with scale-shift parameters. Train mode uses batch
//! statistics and updates running statistics by exponential moving
//! average; eval mode uses the running statistics. Accepts [N,C] and
//! [N,C,H,W] inputs, normalizing per channel.

use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::param::Parameter;
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

pub struct BatchNorm<R: Real> {
    pub gamma: Parameter<R>,
    pub beta: Parameter<R>,
    pub running_mean: Tensor<R>,
    pub running_var: Tensor<R>,
    features: usize,
    momentum: f64,
    eps: f64,
    cache: Option<BnCache<R>>,
}

struct BnCache<R: Real> {
    x_hat: Tensor<R>,
    inv_std: Vec<f64>, // per channel
    shape: Vec<usize>,
}

impl<R: Real> BatchNorm<R> {
    pub fn new(name: &str, features: usize) -> Self {
        BatchNorm {
            gamma: Parameter::new(format!("{name}.gamma"), Tensor::full(&[features], R::ONE)),
            beta: Parameter::new(format!("{name}.beta"), Tensor::zeros(&[features])),
            running_mean: Tensor::zeros(&[features]),
            running_var: Tensor::full(&[features], R::ONE),
            features,
            momentum: 0.1,
            eps: 1e-5,
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    /// (batch size, per-channel element count, spatial extent)
    fn geometry(&self, input: &Tensor<R>) -> NumResult<(usize, usize)> {
        let s = input.shape();
        let ok = match s.len() {
            2 => s[1] == self.features,
            4 => s[1] == self.features,
            _ => false,
        };
        if !ok {
            return Err(NumError::shape(
                "batchnorm",
                format!("expected [N,{0}] or [N,{0},H,W], got {1:?}", self.features, s),
            ));
        }
        let spatial = if s.len() == 4 { s[2] * s[3] } else { 1 };
        Ok((s[0], spatial))
    }

    #[inline]
    fn channel_of(idx: usize, c: usize, spatial: usize) -> usize {
        (idx / spatial) % c
    }
}

impl<R: Real> Layer<R> for BatchNorm<R> {
    fn forward(&mut self, input: &Tensor<R>, mode: Mode, _rng: &mut Prng) -> NumResult<Tensor<R>> {
        let (n, spatial) = self.geometry(input)?;
        let c = self.features;
        let data = input.data();

        let (mean, var): (Vec<f64>, Vec<f64>) = match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(NumError::invalid(
                        "batchnorm",
                        "train mode requires batch size >= 2 (variance undefined otherwise)",
                    ));
                }
                let m = (n * spatial) as f64;
                let mut mean = vec![0.0f64; c];
                let mut var = vec![0.0f64; c];
                for (i, v) in data.iter().enumerate() {
                    mean[Self::channel_of(i, c, spatial)] += v.to_f64();
                }
                mean.iter_mut().for_each(|v| *v /= m);
                for (i, v) in data.iter().enumerate() {
                    let ch = Self::channel_of(i, c, spatial);
                    let d = v.to_f64() - mean[ch];
                    var[ch] += d * d;
                }
                var.iter_mut().for_each(|v| *v /= m);

                // EMA update of running statistics.
                let rm = self.running_mean.data_mut();
                let rv = self.running_var.data_mut();
                for ch in 0..c {
                    rm[ch] = R::from_f64(rm[ch].to_f64() * (1.0 - self.momentum) + mean[ch] * self.momentum);
                    rv[ch] = R::from_f64(rv[ch].to_f64() * (1.0 - self.momentum) + var[ch] * self.momentum);
                }
                (mean, var)
            }
            Mode::Eval => (
                self.running_mean.data().iter().map(|v| v.to_f64()).collect(),
                self.running_var.data().iter().map(|v| v.to_f64()).collect(),
            ),
        };

        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.eps).sqrt()).collect();
        let gd = self.gamma.value.data();
        let bd = self.beta.value.data();
        let mut x_hat = Tensor::zeros(input.shape());
        let mut out = Tensor::zeros(input.shape());
        {
            let xh = x_hat.data_mut();
            let od = out.data_mut();
            for (i, v) in data.iter().enumerate() {
                let ch = Self::channel_of(i, c, spatial);
                let norm = (v.to_f64() - mean[ch]) * inv_std[ch];
                xh[i] = R::from_f64(norm);
                od[i] = R::from_f64(norm * gd[ch].to_f64() + bd[ch].to_f64());
            }
        }
        if mode == Mode::Train {
            self.cache = Some(BnCache {
                x_hat,
                inv_std,
                shape: input.shape().to_vec(),
            });
        } else {
            // Eval backward treats mean/var as constants.
            self.cache = Some(BnCache {
                x_hat,
                inv_std,
                shape: vec![],
            });
        }
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| NumError::invalid("batchnorm", "backward called before forward"))?;
        let c = self.features;
        let s = grad_out.shape();
        let spatial = if s.len() == 4 { s[2] * s[3] } else { 1 };
        let m = (s[0] * spatial) as f64;

        let gd = grad_out.data();
        let xh = cache.x_hat.data();
        let gamma: Vec<f64> = self.gamma.value.data().iter().map(|v| v.to_f64()).collect();

        // Parameter gradients.
        let mut dgamma = vec![0.0f64; c];
        let mut dbeta = vec![0.0f64; c];
        for i in 0..gd.len() {
            let ch = Self::channel_of(i, c, spatial);
            dgamma[ch] += gd[i].to_f64() * xh[i].to_f64();
            dbeta[ch] += gd[i].to_f64();
        }

        let train_stats = !cache.shape.is_empty();
        let mut dx = Tensor::zeros(grad_out.shape());
        {
            let dxd = dx.data_mut();
            if train_stats {
                // Batch statistics were functions of the input.
                for i in 0..gd.len() {
                    let ch = Self::channel_of(i, c, spatial);
                    let g = gamma[ch] * cache.inv_std[ch];
                    let term = m * gd[i].to_f64() - dbeta[ch] - xh[i].to_f64() * dgamma[ch];
                    dxd[i] = R::from_f64(g * term / m);
                }
            } else {
                for i in 0..gd.len() {
                    let ch = Self::channel_of(i, c, spatial);
                    dxd[i] = R::from_f64(gd[i].to_f64() * gamma[ch] * cache.inv_std[ch]);
                }
            }
        }
        self.gamma.accumulate(&Tensor::from_fn(&[c], |i| R::from_f64(dgamma[i])));
        self.beta.accumulate(&Tensor::from_fn(&[c], |i| R::from_f64(dbeta[i])));
        Ok(dx)
    }

    fn params(&self) -> Vec<&Parameter<R>> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers(&self) -> Vec<(&str, &Tensor<R>)> {
        vec![("running_mean", &self.running_mean), ("running_var", &self.running_var)]
    }

    fn buffers_mut(&mut self) -> Vec<(&str, &mut Tensor<R>)> {
        vec![
            ("running_mean", &mut self.running_mean),
            ("running_var", &mut self.running_var),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> Prng {
        Prng::new(3)
    }

    #[test]
    fn already_normalized_batch_is_nearly_unchanged() {
        let mut bn = BatchNorm::<f64>::new("bn", 1);
        // zero-mean, unit-variance column
        let vals = [-1.5, -0.5, 0.5, 1.5];
        let mean: f64 = vals.iter().sum::<f64>() / 4.0;
        let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
        let scaled: Vec<f64> = vals.iter().map(|v| (v - mean) / var.sqrt()).collect();
        let x = Tensor::new(vec![4, 1], scaled).unwrap();
        let y = bn.forward(&x, Mode::Train, &mut rng()).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_gamma_yields_beta() {
        let mut bn = BatchNorm::<f64>::new("bn", 2);
        bn.gamma.value.fill(0.0);
        bn.beta.value = Tensor::new(vec![2], vec![0.25, -0.75]).unwrap();
        let x = Tensor::from_fn(&[3, 2], |i| i as f64);
        let y = bn.forward(&x, Mode::Train, &mut rng()).unwrap();
        for row in 0..3 {
            assert_eq!(y.data()[row * 2], 0.25);
            assert_eq!(y.data()[row * 2 + 1], -0.75);
        }
    }

    #[test]
    fn batch_of_one_in_train_mode_errors() {
        let mut bn = BatchNorm::<f32>::new("bn", 2);
        let x = Tensor::zeros(&[1, 2]);
        assert!(bn.forward(&x, Mode::Train, &mut rng()).is_err());
        // eval mode is fine
        assert!(bn.forward(&x, Mode::Eval, &mut rng()).is_ok());
    }

    #[test]
    fn running_stats_move_toward_batch_stats() {
        let mut bn = BatchNorm::<f64>::new("bn", 1);
        let x = Tensor::new(vec![2, 1], vec![10.0, 14.0]).unwrap();
        bn.forward(&x, Mode::Train, &mut rng()).unwrap();
        // one EMA step from 0 toward batch mean 12 at momentum 0.1
        assert!((bn.running_mean.data()[0] - 1.2).abs() < 1e-12);
    }
}
