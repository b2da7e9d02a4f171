//! Q-network: dense 12->64->64 feature extractor, reshape into 4 tokens
//! of 16 dims, shared projection to embed 64, 4-head self-attention over
//! the tokens, mean pooling, dense 64->32->2 head.

use crate::error::{DqnError, DqnResult};
use numkit::layers::{Layer, MultiheadAttention, Relu};
use numkit::{Dense, Mode, Parameter, Prng, Real, Tensor};

pub const STATE_DIM: usize = 12;
pub const EXTRACT_DIM: usize = 64;
pub const TOKENS: usize = 4;
pub const TOKEN_DIM: usize = EXTRACT_DIM / TOKENS;
pub const EMBED_DIM: usize = 64;
pub const HEADS: usize = 4;
pub const HEAD_HIDDEN: usize = 32;
pub const ACTIONS: usize = 2;

pub struct QNetwork<R: Real> {
    extract1: Dense<R>,
    relu1: Relu<R>,
    extract2: Dense<R>,
    relu2: Relu<R>,
    token_proj: Dense<R>,
    attention: MultiheadAttention<R>,
    head1: Dense<R>,
    relu3: Relu<R>,
    head2: Dense<R>,
    last_batch: usize,
}

impl<R: Real> QNetwork<R> {
    pub fn new(seed: u64) -> QNetwork<R> {
        let mut rng = Prng::new(numkit::derive_seed(seed, "qnet-init"));
        QNetwork {
            extract1: Dense::new("extract1", STATE_DIM, EXTRACT_DIM, &mut rng),
            relu1: Relu::new(),
            extract2: Dense::new("extract2", EXTRACT_DIM, EXTRACT_DIM, &mut rng),
            relu2: Relu::new(),
            token_proj: Dense::new("token_proj", TOKEN_DIM, EMBED_DIM, &mut rng),
            attention: MultiheadAttention::new("attn", EMBED_DIM, HEADS, &mut rng)
                .expect("embed divisible by heads"),
            head1: Dense::new("head1", EMBED_DIM, HEAD_HIDDEN, &mut rng),
            relu3: Relu::new(),
            head2: Dense::new_scaled("head2", HEAD_HIDDEN, ACTIONS, 0.01, &mut rng),
            last_batch: 0,
        }
    }

    /// Reshape a 64-dim feature vector into 4 tokens of 16 dims.
    pub fn tokenize(features: &[R]) -> Vec<[R; TOKEN_DIM]> {
        debug_assert_eq!(features.len(), EXTRACT_DIM);
        (0..TOKENS)
            .map(|t| {
                let mut tok = [R::ZERO; TOKEN_DIM];
                tok.copy_from_slice(&features[t * TOKEN_DIM..(t + 1) * TOKEN_DIM]);
                tok
            })
            .collect()
    }

    /// Inverse of `tokenize`.
    pub fn detokenize(tokens: &[[R; TOKEN_DIM]]) -> Vec<R> {
        debug_assert_eq!(tokens.len(), TOKENS);
        tokens.iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<R>> {
        let mut ps = Vec::new();
        ps.extend(self.extract1.params_mut());
        ps.extend(self.extract2.params_mut());
        ps.extend(self.token_proj.params_mut());
        ps.extend(self.attention.params_mut());
        ps.extend(self.head1.params_mut());
        ps.extend(self.head2.params_mut());
        ps
    }

    pub fn params(&self) -> Vec<&Parameter<R>> {
        let mut ps = Vec::new();
        ps.extend(self.extract1.params());
        ps.extend(self.extract2.params());
        ps.extend(self.token_proj.params());
        ps.extend(self.attention.params());
        ps.extend(self.head1.params());
        ps.extend(self.head2.params());
        ps
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Q-values for a batch of states: [N, 12] -> [N, 2].
    pub fn forward(&mut self, states: &Tensor<R>) -> DqnResult<Tensor<R>> {
        let s = states.shape();
        if s.len() != 2 || s[1] != STATE_DIM {
            return Err(DqnError::Input(format!(
                "expected [N,{STATE_DIM}] state batch, got {:?}",
                s
            )));
        }
        if !states.all_finite() {
            return Err(DqnError::Input("non-finite state component".into()));
        }
        let n = s[0];
        self.last_batch = n;
        let mut rng = Prng::new(0); // no stochastic layers
        let h = self.extract1.forward(states, Mode::Eval, &mut rng)?;
        let h = self.relu1.forward(&h, Mode::Eval, &mut rng)?;
        let h = self.extract2.forward(&h, Mode::Eval, &mut rng)?;
        let h = self.relu2.forward(&h, Mode::Eval, &mut rng)?;
        // tokens: [N, 64] -> [N*4, 16] -> project -> [N, 4, 64]
        let tokens = h.reshape(&[n * TOKENS, TOKEN_DIM])?;
        let proj = self.token_proj.forward(&tokens, Mode::Eval, &mut rng)?;
        let proj3 = proj.reshape(&[n, TOKENS, EMBED_DIM])?;
        let attended = self.attention.forward(&proj3, Mode::Eval, &mut rng)?;
        // mean-pool the token axis
        let mut pooled = Tensor::zeros(&[n, EMBED_DIM]);
        {
            let pd = pooled.data_mut();
            let ad = attended.data();
            for i in 0..n {
                for tk in 0..TOKENS {
                    for d in 0..EMBED_DIM {
                        pd[i * EMBED_DIM + d] += ad[(i * TOKENS + tk) * EMBED_DIM + d];
                    }
                }
            }
            let inv = R::from_f64(1.0 / TOKENS as f64);
            pd.iter_mut().for_each(|v| *v *= inv);
        }
        let h = self.head1.forward(&pooled, Mode::Eval, &mut rng)?;
        let h = self.relu3.forward(&h, Mode::Eval, &mut rng)?;
        Ok(self.head2.forward(&h, Mode::Eval, &mut rng)?)
    }

    /// Backward from d(loss)/d(q) accumulated into parameter grads.
    pub fn backward(&mut self, grad_q: &Tensor<R>) -> DqnResult<()> {
        let n = self.last_batch;
        let g = self.head2.backward(grad_q)?;
        let g = self.relu3.backward(&g)?;
        let g = self.head1.backward(&g)?;
        // mean-pool backward: spread evenly over tokens
        let mut gtok = Tensor::zeros(&[n, TOKENS, EMBED_DIM]);
        {
            let gd = gtok.data_mut();
            let src = g.data();
            let inv = R::from_f64(1.0 / TOKENS as f64);
            for i in 0..n {
                for tk in 0..TOKENS {
                    for d in 0..EMBED_DIM {
                        gd[(i * TOKENS + tk) * EMBED_DIM + d] = src[i * EMBED_DIM + d] * inv;
                    }
                }
            }
        }
        let g = self.attention.backward(&gtok)?;
        let g = g.reshape(&[n * TOKENS, EMBED_DIM])?;
        let g = self.token_proj.backward(&g)?;
        let g = g.reshape(&[n, EXTRACT_DIM])?;
        let g = self.relu2.backward(&g)?;
        let g = self.extract2.backward(&g)?;
        let g = self.relu1.backward(&g)?;
        self.extract1.backward(&g)?;
        Ok(())
    }

    /// Q-pair for a single state vector.
    pub fn q_values(&mut self, state: &[f64; STATE_DIM]) -> DqnResult<(f64, f64)> {
        let t = Tensor::from_fn(&[1, STATE_DIM], |i| R::from_f64(state[i]));
        let q = self.forward(&t)?;
        Ok((q.data()[0].to_f64(), q.data()[1].to_f64()))
    }

    /// Greedy action; exact ties resolve to continue (action 0).
    pub fn greedy_action(&mut self, state: &[f64; STATE_DIM]) -> DqnResult<u8> {
        let (q0, q1) = self.q_values(state)?;
        Ok(if q1 > q0 { 1 } else { 0 })
    }

    /// Overwrite this network's parameters with `tau*other + (1-tau)*self`.
    pub fn blend_from(&mut self, other: &QNetwork<R>, tau: f64) -> DqnResult<()> {
        let theirs = other.params();
        let mut mine = self.params_mut();
        if mine.len() != theirs.len() {
            return Err(DqnError::Structure(format!(
                "parameter count mismatch: {} vs {}",
                mine.len(),
                theirs.len()
            )));
        }
        for (m, t) in mine.iter_mut().zip(theirs) {
            if m.value.shape() != t.value.shape() {
                return Err(DqnError::Structure(format!(
                    "`{}` shape {:?} vs `{}` {:?}",
                    m.name,
                    m.value.shape(),
                    t.name,
                    t.value.shape()
                )));
            }
            let md = m.value.data_mut();
            let td = t.value.data();
            for (a, &b) in md.iter_mut().zip(td) {
                *a = R::from_f64(tau * b.to_f64() + (1.0 - tau) * a.to_f64());
            }
        }
        Ok(())
    }
}
