//! Multi-head scaled dot-product self-attention (query = key = value).
//! Accepts [L, D] token matrices or [N, L, D] batches. Projections run as
//! single batched matmuls over [N*L, D]; only the per-head score/context
//! products iterate per sample.

use crate::error::{NumError, NumResult};
use crate::layers::{Layer, Mode};
use crate::param::Parameter;
use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::Tensor;

pub struct MultiheadAttention<R: Real> {
    pub wq: Parameter<R>, // [D, D]
    pub wk: Parameter<R>,
    pub wv: Parameter<R>,
    pub wo: Parameter<R>,
    pub bq: Parameter<R>, // [D]
    pub bk: Parameter<R>,
    pub bv: Parameter<R>,
    pub bo: Parameter<R>,
    embed_dim: usize,
    heads: usize,
    cache: Option<Cache<R>>,
}

struct Cache<R: Real> {
    x: Tensor<R>,   // [N*L, D]
    q: Tensor<R>,   // [N*L, D]
    k: Tensor<R>,
    v: Tensor<R>,
    /// softmax rows per (sample, head): [N, H, L, L]
    attn: Tensor<R>,
    ctx: Tensor<R>, // [N*L, D]
    n: usize,
    l: usize,
    batched_rank3: bool,
}

impl<R: Real> MultiheadAttention<R> {
    pub fn new(name: &str, embed_dim: usize, heads: usize, rng: &mut Prng) -> NumResult<Self> {
        if heads == 0 || embed_dim % heads != 0 {
            return Err(NumError::invalid(
                "multihead_attention",
                format!("embed dim {embed_dim} must be divisible by head count {heads}"),
            ));
        }
        let std = (1.0 / embed_dim as f64).sqrt();
        let mat = |suffix: &str, rng: &mut Prng| {
            Parameter::new(
                format!("{name}.{suffix}"),
                Tensor::from_fn(&[embed_dim, embed_dim], |_| R::from_f64(rng.normal() * std)),
            )
        };
        let wq = mat("wq", rng);
        let wk = mat("wk", rng);
        let wv = mat("wv", rng);
        let wo = mat("wo", rng);
        let vecp = |suffix: &str| Parameter::new(format!("{name}.{suffix}"), Tensor::zeros(&[embed_dim]));
        Ok(MultiheadAttention {
            wq,
            wk,
            wv,
            wo,
            bq: vecp("bq"),
            bk: vecp("bk"),
            bv: vecp("bv"),
            bo: vecp("bo"),
            embed_dim,
            heads,
            cache: None,
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    /// Attention weights from the most recent forward: per sample, per
    /// head, an [L, L] row-stochastic matrix.
    pub fn last_attention_weights(&self) -> Option<Vec<Vec<Tensor<R>>>> {
        let cache = self.cache.as_ref()?;
        let (n, l, h) = (cache.n, cache.l, self.heads);
        let mut out = Vec::with_capacity(n);
        for ni in 0..n {
            let mut per_head = Vec::with_capacity(h);
            for hi in 0..h {
                let base = (ni * h + hi) * l * l;
                per_head.push(
                    Tensor::new(vec![l, l], cache.attn.data()[base..base + l * l].to_vec())
                        .expect("attention slice"),
                );
            }
            out.push(per_head);
        }
        Some(out)
    }

    fn project(x: &Tensor<R>, w: &Tensor<R>, b: &Tensor<R>) -> NumResult<Tensor<R>> {
        let mut out = x.matmul(&w.transpose2()?)?;
        let d = b.numel();
        let bd = b.data();
        let od = out.data_mut();
        for row in 0..od.len() / d {
            for j in 0..d {
                od[row * d + j] += bd[j];
            }
        }
        Ok(out)
    }
}

fn column_sums<R: Real>(m: &Tensor<R>) -> Tensor<R> {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    let mut out = Tensor::zeros(&[cols]);
    let od = out.data_mut();
    for r in 0..rows {
        for c in 0..cols {
            od[c] += m.data()[r * cols + c];
        }
    }
    out
}

impl<R: Real> Layer<R> for MultiheadAttention<R> {
    fn forward(&mut self, input: &Tensor<R>, _mode: Mode, _rng: &mut Prng) -> NumResult<Tensor<R>> {
        let s = input.shape().to_vec();
        let (batched, n, l) = match s.len() {
            2 => (false, 1, s[0]),
            3 => (true, s[0], s[1]),
            _ => {
                return Err(NumError::shape(
                    "multihead_attention",
                    format!("expected [L,D] or [N,L,D], got {:?}", s),
                ))
            }
        };
        if l == 0 {
            return Err(NumError::invalid("multihead_attention", "empty token sequence"));
        }
        let d = *s.last().unwrap();
        if d != self.embed_dim {
            return Err(NumError::shape(
                "multihead_attention",
                format!("embed dim {} expected, got {}", self.embed_dim, d),
            ));
        }
        let h = self.heads;
        let dh = d / h;
        let scale = 1.0 / (dh as f64).sqrt();

        let x = input.reshape(&[n * l, d])?;
        let q = Self::project(&x, &self.wq.value, &self.bq.value)?;
        let k = Self::project(&x, &self.wk.value, &self.bk.value)?;
        let v = Self::project(&x, &self.wv.value, &self.bv.value)?;

        let mut attn = Tensor::zeros(&[n, h, l, l]);
        let mut ctx = Tensor::zeros(&[n * l, d]);
        {
            let qd = q.data();
            let kd = k.data();
            let vd = v.data();
            let ad = attn.data_mut();
            let cd = ctx.data_mut();
            for ni in 0..n {
                for hi in 0..h {
                    let abase = (ni * h + hi) * l * l;
                    // scores and row softmax
                    for r in 0..l {
                        let qrow = &qd[(ni * l + r) * d + hi * dh..(ni * l + r) * d + (hi + 1) * dh];
                        let mut max = f64::NEG_INFINITY;
                        for c in 0..l {
                            let krow = &kd[(ni * l + c) * d + hi * dh..(ni * l + c) * d + (hi + 1) * dh];
                            let mut dot = R::ZERO;
                            for (a, b) in qrow.iter().zip(krow) {
                                dot += *a * *b;
                            }
                            let sv = dot.to_f64() * scale;
                            ad[abase + r * l + c] = R::from_f64(sv);
                            max = max.max(sv);
                        }
                        let mut sum = 0.0f64;
                        for c in 0..l {
                            let e = (ad[abase + r * l + c].to_f64() - max).exp();
                            ad[abase + r * l + c] = R::from_f64(e);
                            sum += e;
                        }
                        for c in 0..l {
                            ad[abase + r * l + c] =
                                R::from_f64(ad[abase + r * l + c].to_f64() / sum);
                        }
                    }
                    // context = attn x V_head
                    for r in 0..l {
                        for c in 0..l {
                            let a = ad[abase + r * l + c];
                            let vrow =
                                &vd[(ni * l + c) * d + hi * dh..(ni * l + c) * d + (hi + 1) * dh];
                            let crow = &mut cd
                                [(ni * l + r) * d + hi * dh..(ni * l + r) * d + (hi + 1) * dh];
                            for (o, &vv) in crow.iter_mut().zip(vrow) {
                                *o += a * vv;
                            }
                        }
                    }
                }
            }
        }
        let out_flat = Self::project(&ctx, &self.wo.value, &self.bo.value)?;
        let out = out_flat.reshape(&s)?;
        self.cache = Some(Cache {
            x,
            q,
            k,
            v,
            attn,
            ctx,
            n,
            l,
            batched_rank3: batched,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<R>) -> NumResult<Tensor<R>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| NumError::invalid("multihead_attention", "backward called before forward"))?;
        let (n, l, d, h) = (cache.n, cache.l, self.embed_dim, self.heads);
        let dh = d / h;
        let scale = 1.0 / (dh as f64).sqrt();
        if grad_out.numel() != n * l * d {
            return Err(NumError::shape("multihead_attention backward", "gradient size mismatch"));
        }
        let g_flat = grad_out.reshape(&[n * l, d])?;

        // output projection
        let dwo = g_flat.transpose2()?.matmul(&cache.ctx)?;
        let dbo = column_sums(&g_flat);
        let dctx = g_flat.matmul(&self.wo.value)?;

        let mut dq = Tensor::zeros(&[n * l, d]);
        let mut dk = Tensor::zeros(&[n * l, d]);
        let mut dv = Tensor::zeros(&[n * l, d]);
        {
            let qd = cache.q.data();
            let kd = cache.k.data();
            let vd = cache.v.data();
            let ad = cache.attn.data();
            let dcd = dctx.data();
            let dqd = dq.data_mut();
            let dkd = dk.data_mut();
            let dvd = dv.data_mut();
            let mut da = vec![R::ZERO; l * l];
            let mut ds = vec![R::ZERO; l * l];
            for ni in 0..n {
                for hi in 0..h {
                    let abase = (ni * h + hi) * l * l;
                    let col = |row: usize| (ni * l + row) * d + hi * dh;
                    // dA = dCtx_head x V_head^T ; dV_head = A^T x dCtx_head
                    for r in 0..l {
                        for c in 0..l {
                            let mut dot = R::ZERO;
                            let drow = &dcd[col(r)..col(r) + dh];
                            let vrow = &vd[col(c)..col(c) + dh];
                            for (a, b) in drow.iter().zip(vrow) {
                                dot += *a * *b;
                            }
                            da[r * l + c] = dot;
                        }
                    }
                    for c in 0..l {
                        for r in 0..l {
                            let a = ad[abase + r * l + c];
                            let drow = &dcd[col(r)..col(r) + dh];
                            let vdst = &mut dvd[col(c)..col(c) + dh];
                            for (o, &g) in vdst.iter_mut().zip(drow) {
                                *o += a * g;
                            }
                        }
                    }
                    // softmax backward with the score scale folded in
                    for r in 0..l {
                        let mut dot = 0.0f64;
                        for c in 0..l {
                            dot += da[r * l + c].to_f64() * ad[abase + r * l + c].to_f64();
                        }
                        for c in 0..l {
                            let a = ad[abase + r * l + c].to_f64();
                            ds[r * l + c] =
                                R::from_f64(a * (da[r * l + c].to_f64() - dot) * scale);
                        }
                    }
                    // dQ_head = dS x K_head ; dK_head = dS^T x Q_head
                    for r in 0..l {
                        for c in 0..l {
                            let s = ds[r * l + c];
                            let krow = &kd[col(c)..col(c) + dh];
                            let qdst = &mut dqd[col(r)..col(r) + dh];
                            for (o, &kk) in qdst.iter_mut().zip(krow) {
                                *o += s * kk;
                            }
                        }
                    }
                    for c in 0..l {
                        for r in 0..l {
                            let s = ds[r * l + c];
                            let qrow = &qd[col(r)..col(r) + dh];
                            let kdst = &mut dkd[col(c)..col(c) + dh];
                            for (o, &qq) in kdst.iter_mut().zip(qrow) {
                                *o += s * qq;
                            }
                        }
                    }
                }
            }
        }

        // input projections
        self.wq.accumulate(&dq.transpose2()?.matmul(&cache.x)?);
        self.wk.accumulate(&dk.transpose2()?.matmul(&cache.x)?);
        self.wv.accumulate(&dv.transpose2()?.matmul(&cache.x)?);
        self.bq.accumulate(&column_sums(&dq));
        self.bk.accumulate(&column_sums(&dk));
        self.bv.accumulate(&column_sums(&dv));
        self.wo.accumulate(&dwo);
        self.bo.accumulate(&dbo);

        let mut dx = dq.matmul(&self.wq.value)?;
        dx.add_assign(&dk.matmul(&self.wk.value)?)?;
        dx.add_assign(&dv.matmul(&self.wv.value)?)?;
        let shape = if cache.batched_rank3 {
            vec![n, l, d]
        } else {
            vec![l, d]
        };
        dx.reshape(&shape)
    }

    fn params(&self) -> Vec<&Parameter<R>> {
        vec![
            &self.wq, &self.wk, &self.wv, &self.wo, &self.bq, &self.bk, &self.bv, &self.bo,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        vec![
            &mut self.wq,
            &mut self.wk,
            &mut self.wv,
            &mut self.wo,
            &mut self.bq,
            &mut self.bk,
            &mut self.bv,
            &mut self.bo,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_token_attention_is_one() {
        let mut rng = Prng::new(5);
        let mut mha = MultiheadAttention::<f64>::new("a", 8, 4, &mut rng).unwrap();
        let x = Tensor::from_fn(&[1, 8], |i| i as f64 * 0.3 - 1.0);
        mha.forward(&x, Mode::Eval, &mut rng).unwrap();
        let weights = mha.last_attention_weights().unwrap();
        for head in &weights[0] {
            assert_eq!(head.shape(), &[1, 1]);
            assert_eq!(head.data()[0], 1.0);
        }
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut rng = Prng::new(11);
        let mut mha = MultiheadAttention::<f64>::new("a", 16, 4, &mut rng).unwrap();
        let x = Tensor::from_fn(&[6, 16], |_| rng.normal());
        mha.forward(&x, Mode::Eval, &mut rng).unwrap();
        for head in &mha.last_attention_weights().unwrap()[0] {
            for r in 0..6 {
                let sum: f64 = head.data()[r * 6..(r + 1) * 6].iter().sum();
                assert!((sum - 1.0).abs() < 1e-6, "row {r} sums to {sum}");
            }
        }
    }

    #[test]
    fn batched_forward_matches_per_sample() {
        let mut rng = Prng::new(23);
        let mut mha = MultiheadAttention::<f64>::new("a", 8, 2, &mut rng).unwrap();
        let batch = Tensor::from_fn(&[3, 4, 8], |_| rng.normal());
        let out = mha.forward(&batch, Mode::Eval, &mut rng).unwrap();
        for ni in 0..3 {
            let single = Tensor::from_fn(&[4, 8], |i| batch.data()[ni * 32 + i]);
            let o = mha.forward(&single, Mode::Eval, &mut rng).unwrap();
            for i in 0..32 {
                let got = out.data()[ni * 32 + i];
                assert!(
                    (got - o.data()[i]).abs() < 1e-12,
                    "sample {ni} element {i}: {got} vs {}",
                    o.data()[i]
                );
            }
        }
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let mut rng = Prng::new(0);
        let mut mha = MultiheadAttention::<f32>::new("a", 8, 4, &mut rng).unwrap();
        let x = Tensor::zeros(&[0, 8]);
        assert!(mha.forward(&x, Mode::Eval, &mut rng).is_err());
    }

    #[test]
    fn indivisible_heads_rejected() {
        let mut rng = Prng::new(0);
        assert!(MultiheadAttention::<f32>::new("a", 10, 4, &mut rng).is_err());
    }
}
