//! 2-D cross-correlation with "same" zero padding and stride 1,
//! implemented as im2col + matmul.

use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::param::Parameter;
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

pub struct Conv2d<R: Real> {
    pub weight: Parameter<R>, // [Cout, Cin, K, K]
    pub bias: Parameter<R>,   // [Cout]
    kernel: usize,
    in_channels: usize,
    out_channels: usize,
    cached_cols: Option<Tensor<R>>, // [N*H*W, Cin*K*K]
    cached_input_shape: Vec<usize>,
}

impl<R: Real> Conv2d<R> {
    /// He-normal initialization scaled by fan-in.
    pub fn new(name: &str, in_channels: usize, out_channels: usize, kernel: usize, rng: &mut Prng) -> Self {
        let fan_in = (in_channels * kernel * kernel) as f64;
        let std = (2.0 / fan_in).sqrt();
        let weight = Tensor::from_fn(&[out_channels, in_channels, kernel, kernel], |_| {
            R::from_f64(rng.normal() * std)
        });
        let bias = Tensor::zeros(&[out_channels]);
        Conv2d {
            weight: Parameter::new(format!("{name}.weight"), weight),
            bias: Parameter::new(format!("{name}.bias"), bias),
            kernel,
            in_channels,
            out_channels,
            cached_cols: None,
            cached_input_shape: Vec::new(),
        }
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    fn check_input(&self, input: &Tensor<R>) -> NumResult<(usize, usize, usize)> {
        let s = input.shape();
        if s.len() != 4 {
            return Err(NumError::shape(
                "conv2d",
                format!("expected [N,C,H,W], got {:?}", s),
            ));
        }
        if s[1] != self.in_channels {
            return Err(NumError::shape(
                "conv2d",
                format!("channel axis: input has {} channels, layer expects {}", s[1], self.in_channels),
            ));
        }
        // "same" padding keeps geometry but the window must fit somewhere.
        let pad = self.kernel / 2;
        if s[2] + 2 * pad < self.kernel || s[3] + 2 * pad < self.kernel {
            return Err(NumError::shape(
                "conv2d",
                format!("spatial axes {}x{} too small for kernel {}", s[2], s[3], self.kernel),
            ));
        }
        Ok((s[0], s[2], s[3]))
    }

    /// Gather padded input patches into a [N*H*W, Cin*K*K] matrix.
    fn im2col(&self, input: &Tensor<R>, n: usize, h: usize, w: usize) -> Tensor<R> {
        let k = self.kernel;
        let c_in = self.in_channels;
        let pad = k / 2;
        let patch = c_in * k * k;
        let mut cols = vec![R::ZERO; n * h * w * patch];
        let data = input.data();
        for ni in 0..n {
            for hi in 0..h {
                for wi in 0..w {
                    let row = ((ni * h + hi) * w + wi) * patch;
                    for ci in 0..c_in {
                        let chan = (ni * c_in + ci) * h * w;
                        for kh in 0..k {
                            let ih = hi + kh;
                            if ih < pad || ih - pad >= h {
                                continue;
                            }
                            let ih = ih - pad;
                            let src = chan + ih * w;
                            let dst = row + (ci * k + kh) * k;
                            for kw in 0..k {
                                let iw = wi + kw;
                                if iw < pad || iw - pad >= w {
                                    continue;
                                }
                                cols[dst + kw] = data[src + (iw - pad)];
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(vec![n * h * w, patch], cols).expect("im2col shape")
    }

    /// Scatter-add a [N*H*W, Cin*K*K] gradient matrix back onto the input.
    fn col2im(&self, cols: &Tensor<R>, n: usize, h: usize, w: usize) -> Tensor<R> {
        let k = self.kernel;
        let c_in = self.in_channels;
        let pad = k / 2;
        let patch = c_in * k * k;
        let mut out = Tensor::zeros(&[n, c_in, h, w]);
        let data = out.data_mut();
        let src = cols.data();
        for ni in 0..n {
            for hi in 0..h {
                for wi in 0..w {
                    let row = ((ni * h + hi) * w + wi) * patch;
                    for ci in 0..c_in {
                        let chan = (ni * c_in + ci) * h * w;
                        for kh in 0..k {
                            let ih = hi + kh;
                            if ih < pad || ih - pad >= h {
                                continue;
                            }
                            let ih = ih - pad;
                            let dst = chan + ih * w;
                            let srow = row + (ci * k + kh) * k;
                            for kw in 0..k {
                                let iw = wi + kw;
                                if iw < pad || iw - pad >= w {
                                    continue;
                                }
                                data[dst + (iw - pad)] += src[srow + kw];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl<R: Real> Layer<R> for Conv2d<R> {
    fn forward(&mut self, input: &Tensor<R>, _mode: Mode, _rng: &mut Prng) -> NumResult<Tensor<R>> {
        let (n, h, w) = self.check_input(input)?;
        let cols = self.im2col(input, n, h, w);
        let patch = self.in_channels * self.kernel * self.kernel;
        let wmat = self.weight.value.reshape(&[self.out_channels, patch])?;
        // [N*H*W, patch] x [patch, Cout]
        let prod = cols.matmul(&wmat.transpose2()?)?;
        self.cached_cols = Some(cols);
        self.cached_input_shape = input.shape().to_vec();

        // Rearrange [N*H*W, Cout] -> [N, Cout, H, W] and add bias.
        let mut out = Tensor::zeros(&[n, self.out_channels, h, w]);
        let od = out.data_mut();
        let pd = prod.data();
        let bd = self.bias.value.data();
        for ni in 0..n {
            for pos in 0..h * w {
                let src = (ni * h * w + pos) * self.out_channels;
                for co in 0..self.out_channels {
                    od[(ni * self.out_channels + co) * h * w + pos] = pd[src + co] + bd[co];
                }
            }
        }
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        let cols = self
            .cached_cols
            .as_ref()
            .ok_or_else(|| NumError::invalid("conv2d", "backward called before forward"))?;
        let ishape = self.cached_input_shape.clone();
        let (n, h, w) = (ishape[0], ishape[2], ishape[3]);
        if grad_out.shape() != [n, self.out_channels, h, w] {
            return Err(NumError::shape(
                "conv2d backward",
                format!("grad shape {:?} vs output [N={n},Cout={},H={h},W={w}]", grad_out.shape(), self.out_channels),
            ));
        }
        let patch = self.in_channels * self.kernel * self.kernel;

        // [N*H*W, Cout] layout of the upstream gradient.
        let mut gm = vec![R::ZERO; n * h * w * self.out_channels];
        let gd = grad_out.data();
        for ni in 0..n {
            for co in 0..self.out_channels {
                for pos in 0..h * w {
                    gm[(ni * h * w + pos) * self.out_channels + co] =
                        gd[(ni * self.out_channels + co) * h * w + pos];
                }
            }
        }
        let gmat = Tensor::new(vec![n * h * w, self.out_channels], gm)?;

        // dW = gmat^T x cols -> [Cout, patch]
        let dw = gmat.transpose2()?.matmul(cols)?;
        self.weight.accumulate(&dw.reshape(self.weight.value.shape())?);

        // dBias = column sums of gmat.
        let mut db = Tensor::zeros(&[self.out_channels]);
        {
            let dbd = db.data_mut();
            let g = gmat.data();
            for row in 0..n * h * w {
                for co in 0..self.out_channels {
                    dbd[co] += g[row * self.out_channels + co];
                }
            }
        }
        self.bias.accumulate(&db);

        // dX = col2im(gmat x W)
        let wmat = self.weight.value.reshape(&[self.out_channels, patch])?;
        let dcols = gmat.matmul(&wmat)?;
        Ok(self.col2im(&dcols, n, h, w))
    }

    fn params(&self) -> Vec<&Parameter<R>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
