//! The learning agent: online and target Q-networks, epsilon-greedy
//! acting, squared-TD-error updates on uniformly replayed transitions,
//! and soft target tracking.

use crate::error::{DqnError, DqnResult};
use crate::qnet::{QNetwork, ACTIONS, STATE_DIM};
use crate::replay::{ReplayBuffer, Transition};
use crate::schedule::EpsilonSchedule;
use numkit::checkpoint::{Checkpoint, TensorRole};
use numkit::{Adam, Prng, Tensor};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentHyper {
    pub gamma: f64,
    pub tau: f64,
    pub epsilon_initial: f64,
    pub epsilon_final: f64,
    pub explore_steps: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_rate: f64,
    /// Soft-update cadence in agent steps.
    pub target_update_every: u64,
}

impl Default for AgentHyper {
    fn default() -> Self {
        AgentHyper {
            gamma: 0.99,
            tau: 0.005,
            epsilon_initial: 1.0,
            epsilon_final: 0.05,
            explore_steps: 50_000,
            batch_size: 64,
            buffer_capacity: 100_000,
            learning_rate: 1e-4,
            target_update_every: 1,
        }
    }
}

impl AgentHyper {
    pub fn validate(&self) -> DqnResult<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(DqnError::Input(format!("gamma {} outside [0,1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(DqnError::Input(format!("tau {} outside (0,1]", self.tau)));
        }
        if self.epsilon_final > self.epsilon_initial {
            return Err(DqnError::Input("epsilon_final above epsilon_initial".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(DqnError::Input("buffer must hold at least one batch".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            initial: self.epsilon_initial,
            final_value: self.epsilon_final,
            explore_steps: self.explore_steps,
        }
    }
}

pub struct Agent {
    pub hyper: AgentHyper,
    online: QNetwork<f32>,
    target: QNetwork<f32>,
    pub buffer: ReplayBuffer,
    optimizer: Adam<f32>,
    action_rng: Prng,
    sample_rng: Prng,
    step_count: u64,
}

impl Agent {
    pub fn new(hyper: AgentHyper, seed: u64) -> DqnResult<Agent> {
        hyper.validate()?;
        let online = QNetwork::new(numkit::derive_seed(seed, "agent-online"));
        // target starts as an exact copy
        let mut target = QNetwork::new(numkit::derive_seed(seed, "agent-online"));
        target.blend_from(&online, 1.0)?;
        let buffer = ReplayBuffer::new(hyper.buffer_capacity);
        let optimizer = Adam::new(hyper.learning_rate);
        Ok(Agent {
            hyper,
            online,
            target,
            buffer,
            optimizer,
            action_rng: Prng::new(numkit::derive_seed(seed, "agent-act")),
            sample_rng: Prng::new(numkit::derive_seed(seed, "agent-replay")),
            step_count: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn bump_step(&mut self) {
        self.step_count += 1;
    }

    pub fn epsilon(&self) -> f64 {
        self.hyper.schedule().value(self.step_count)
    }

    pub fn online_mut(&mut self) -> &mut QNetwork<f32> {
        &mut self.online
    }

    pub fn target_mut(&mut self) -> &mut QNetwork<f32> {
        &mut self.target
    }

    /// Epsilon-greedy action at the given step count. `explore = false`
    /// forces pure greedy (evaluation).
    pub fn act(&mut self, state: &[f64; STATE_DIM], step_count: u64, explore: bool) -> DqnResult<u8> {
        if explore {
            let eps = self.hyper.schedule().value(step_count);
            if self.action_rng.uniform() < eps {
                return Ok(if self.action_rng.uniform() < 0.5 { 0 } else { 1 });
            }
        }
        self.online.greedy_action(state)
    }

    pub fn remember(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// Sample a batch and run one TD update; `None` while the buffer is
    /// short of one batch.
    pub fn train_step(&mut self) -> DqnResult<Option<f64>> {
        if self.buffer.len() < self.hyper.batch_size {
            return Ok(None);
        }
        let batch = self.buffer.sample(&mut self.sample_rng, self.hyper.batch_size)?;
        let loss = self.td_update(&batch)?;
        Ok(Some(loss))
    }

    /// One squared-TD-error update on the online network:
    /// loss = mean (r + gamma * max_a' Q_target(s', a') - Q(s, a))^2,
    /// with terminal transitions using the bare reward as target.
    pub fn td_update(&mut self, batch: &[Transition]) -> DqnResult<f64> {
        if batch.is_empty() {
            return Err(DqnError::Input("empty TD batch".into()));
        }
        let n = batch.len();
        let states = Tensor::from_fn(&[n, STATE_DIM], |i| batch[i / STATE_DIM].state[i % STATE_DIM]);
        let next_states =
            Tensor::from_fn(&[n, STATE_DIM], |i| batch[i / STATE_DIM].next_state[i % STATE_DIM]);

        let q_next = self.target.forward(&next_states)?;
        let targets: Vec<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.done {
                    t.reward as f64
                } else {
                    let q0 = q_next.data()[i * ACTIONS] as f64;
                    let q1 = q_next.data()[i * ACTIONS + 1] as f64;
                    t.reward as f64 + self.hyper.gamma * q0.max(q1)
                }
            })
            .collect();

        self.online.zero_grads();
        let q = self.online.forward(&states)?;
        let mut loss = 0.0f64;
        let mut grad = Tensor::zeros(&[n, ACTIONS]);
        {
            let gd = grad.data_mut();
            let qd = q.data();
            let inv_n = 1.0 / n as f64;
            for (i, t) in batch.iter().enumerate() {
                let pred = qd[i * ACTIONS + t.action as usize] as f64;
                let err = pred - targets[i];
                loss += err * err * inv_n;
                gd[i * ACTIONS + t.action as usize] = (2.0 * err * inv_n) as f32;
            }
        }
        if !loss.is_finite() {
            return Err(DqnError::Diverged(format!(
                "TD loss is not finite; batch rewards {:?}",
                batch.iter().map(|t| t.reward).collect::<Vec<_>>()
            )));
        }
        self.online.backward(&grad)?;
        self.optimizer.step(&mut self.online.params_mut())?;
        Ok(loss)
    }

    /// theta_target <- tau * theta_online + (1 - tau) * theta_target.
    pub fn soft_update(&mut self) -> DqnResult<()> {
        let tau = self.hyper.tau;
        self.target.blend_from(&self.online, tau)
    }

    /// Greedy policy value for evaluation.
    pub fn greedy(&mut self, state: &[f64; STATE_DIM]) -> DqnResult<u8> {
        self.online.greedy_action(state)
    }

    /// Weights checkpoint plus a JSON sidecar describing hyperparameters,
    /// step counter, epsilon state and RNG positions. `base` gets the
    /// `.ckpt` and `.sidecar.json` suffixes.
    pub fn save(&self, base: &Path) -> DqnResult<()> {
        let (ckpt_path, sidecar_path) = Self::paths(base);
        self.to_checkpoint()
            .save(&ckpt_path)
            .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        std::fs::write(&sidecar_path, self.sidecar_json())
            .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        Ok(())
    }

    pub fn load(base: &Path) -> DqnResult<Agent> {
        let (ckpt_path, sidecar_path) = Self::paths(base);
        let ck = Checkpoint::load(&ckpt_path).map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        let sidecar: Sidecar = serde_json::from_str(
            &std::fs::read_to_string(&sidecar_path).map_err(|e| DqnError::Checkpoint(e.to_string()))?,
        )
        .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        Self::from_parts(&ck, &sidecar)
    }

    pub fn paths(base: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let mut ckpt = base.as_os_str().to_owned();
        ckpt.push(".ckpt");
        let mut sidecar = base.as_os_str().to_owned();
        sidecar.push(".sidecar.json");
        (ckpt.into(), sidecar.into())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new("dqn-agent");
        for p in self.online.params() {
            ck.push(format!("online.{}", p.name), TensorRole::Param, &p.value);
        }
        for p in self.target.params() {
            ck.push(format!("target.{}", p.name), TensorRole::Param, &p.value);
        }
        let (step, m, v) = self.optimizer.state();
        let names: Vec<String> = self.online.params().iter().map(|p| p.name.clone()).collect();
        for (name, t) in names.iter().zip(m) {
            ck.push(format!("adam.m.{name}"), TensorRole::Opt, t);
        }
        for (name, t) in names.iter().zip(v) {
            ck.push(format!("adam.v.{name}"), TensorRole::Opt, t);
        }
        ck.set_meta("adam_step", step);
        // replay buffer contents, flattened
        let items = self.buffer.items();
        let mut states = Vec::with_capacity(items.len() * STATE_DIM);
        let mut next_states = Vec::with_capacity(items.len() * STATE_DIM);
        let mut scalars = Vec::with_capacity(items.len() * 3);
        for t in items {
            states.extend_from_slice(&t.state);
            next_states.extend_from_slice(&t.next_state);
            scalars.push(t.action as f32);
            scalars.push(t.reward);
            scalars.push(if t.done { 1.0 } else { 0.0 });
        }
        ck.push(
            "buffer.states",
            TensorRole::Opt,
            &Tensor::new(vec![items.len(), STATE_DIM], states).expect("buffer states"),
        );
        ck.push(
            "buffer.next_states",
            TensorRole::Opt,
            &Tensor::new(vec![items.len(), STATE_DIM], next_states).expect("buffer next states"),
        );
        ck.push(
            "buffer.scalars",
            TensorRole::Opt,
            &Tensor::new(vec![items.len(), 3], scalars).expect("buffer scalars"),
        );
        ck.set_meta("buffer_cursor", self.buffer.cursor() as u64);
        ck
    }

    fn sidecar_json(&self) -> String {
        let sidecar = Sidecar {
            hyper: self.hyper.clone(),
            step_count: self.step_count,
            epsilon: self.epsilon(),
            action_rng: self.action_rng.state(),
            sample_rng: self.sample_rng.state(),
        };
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes")
    }

    fn from_parts(ck: &Checkpoint, sidecar: &Sidecar) -> DqnResult<Agent> {
        if ck.kind != "dqn-agent" {
            return Err(DqnError::Checkpoint(format!("expected dqn-agent, found {}", ck.kind)));
        }
        let mut agent = Agent::new(sidecar.hyper.clone(), 0)?;
        agent.step_count = sidecar.step_count;
        agent.action_rng = Prng::restore(sidecar.action_rng);
        agent.sample_rng = Prng::restore(sidecar.sample_rng);
        for p in agent.online.params_mut() {
            p.value = ck
                .tensor(&format!("online.{}", p.name))
                .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        }
        for p in agent.target.params_mut() {
            p.value = ck
                .tensor(&format!("target.{}", p.name))
                .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        }
        let step = ck.meta_u64("adam_step").map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        let names: Vec<String> = agent.online.params().iter().map(|p| p.name.clone()).collect();
        let mut m = Vec::new();
        let mut v = Vec::new();
        for name in &names {
            m.push(
                ck.tensor(&format!("adam.m.{name}"))
                    .map_err(|e| DqnError::Checkpoint(e.to_string()))?,
            );
            v.push(
                ck.tensor(&format!("adam.v.{name}"))
                    .map_err(|e| DqnError::Checkpoint(e.to_string()))?,
            );
        }
        agent.optimizer.restore_state(step, m, v);
        // replay buffer
        let states: Tensor<f32> = ck
            .tensor("buffer.states")
            .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        let next_states: Tensor<f32> = ck
            .tensor("buffer.next_states")
            .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        let scalars: Tensor<f32> = ck
            .tensor("buffer.scalars")
            .map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        let count = states.shape()[0];
        let mut items = Vec::with_capacity(count);
        for i in 0..count {
            let mut state = [0f32; STATE_DIM];
            let mut next_state = [0f32; STATE_DIM];
            state.copy_from_slice(&states.data()[i * STATE_DIM..(i + 1) * STATE_DIM]);
            next_state.copy_from_slice(&next_states.data()[i * STATE_DIM..(i + 1) * STATE_DIM]);
            items.push(Transition {
                state,
                action: scalars.data()[i * 3] as u8,
                reward: scalars.data()[i * 3 + 1],
                next_state,
                done: scalars.data()[i * 3 + 2] != 0.0,
            });
        }
        let cursor = ck
            .meta_u64("buffer_cursor")
            .map_err(|e| DqnError::Checkpoint(e.to_string()))? as usize;
        agent.buffer = ReplayBuffer::restore(sidecar.hyper.buffer_capacity, items, cursor);
        Ok(agent)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    hyper: AgentHyper,
    step_count: u64,
    epsilon: f64,
    action_rng: numkit::PrngState,
    sample_rng: numkit::PrngState,
}
