//! 2x2 max pooling with stride 2 and ceil-mode output size, so odd axes
//! survive repeated pooling (windows are clipped at the boundary). Ties
//! resolve to the first maximal element in row-major order, which makes
//! the backward routing deterministic.

use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

#[derive(Default)]
pub struct MaxPool2x2<R: Real> {
    argmax: Option<Vec<usize>>,
    input_shape: Vec<usize>,
    _marker: std::marker::PhantomData<R>,
}

impl<R: Real> MaxPool2x2<R> {
    pub fn new() -> Self {
        MaxPool2x2 {
            argmax: None,
            input_shape: Vec::new(),
            _marker: std::marker::PhantomData,
        }
    }

    pub fn output_extent(extent: usize) -> usize {
        extent.div_ceil(2)
    }
}

impl<R: Real> Layer<R> for MaxPool2x2<R> {
    fn forward(&mut self, input: &Tensor<R>, _mode: Mode, _rng: &mut Prng) -> NumResult<Tensor<R>> {
        let s = input.shape();
        if s.len() != 4 {
            return Err(NumError::shape("maxpool2x2", format!("expected [N,C,H,W], got {:?}", s)));
        }
        let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
        let (oh, ow) = (Self::output_extent(h), Self::output_extent(w));
        let mut out = Tensor::zeros(&[n, c, oh, ow]);
        let mut argmax = vec![0usize; n * c * oh * ow];
        let id = input.data();
        let od = out.data_mut();
        for nc in 0..n * c {
            let base = nc * h * w;
            for ohi in 0..oh {
                for owi in 0..ow {
                    let mut best_idx = usize::MAX;
                    let mut best = R::from_f64(f64::NEG_INFINITY);
                    for dh in 0..2usize {
                        let ih = ohi * 2 + dh;
                        if ih >= h {
                            continue;
                        }
                        for dw in 0..2usize {
                            let iw = owi * 2 + dw;
                            if iw >= w {
                                continue;
                            }
                            let idx = base + ih * w + iw;
                            // strict comparison keeps the first max on ties
                            if best_idx == usize::MAX || id[idx] > best {
                                best = id[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o = (nc * oh + ohi) * ow + owi;
                    od[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }
        self.argmax = Some(argmax);
        self.input_shape = s.to_vec();
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        let argmax = self
            .argmax
            .as_ref()
            .ok_or_else(|| NumError::invalid("maxpool2x2", "backward called before forward"))?;
        if grad_out.numel() != argmax.len() {
            return Err(NumError::shape("maxpool2x2 backward", "gradient size mismatch"));
        }
        let mut dx = Tensor::zeros(&self.input_shape);
        let dxd = dx.data_mut();
        for (g, &src) in grad_out.data().iter().zip(argmax) {
            dxd[src] += *g;
        }
        Ok(dx)
    }
}
