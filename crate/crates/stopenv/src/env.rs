//! Episode mechanics. For a fixed probability source (frozen classifier
//! and clip, or a synthetic trajectory) the transition is deterministic:
//! the context snapshot plus the action fully determine the successor.

use crate::error::{StopError, StopResult};
use crate::reward::{compute_reward, RewardConfig, RewardInputs};
use crate::state::{build_state, entropy_nats, StopState};
use bmcnn::ClassProbabilities;
use serde::{Deserialize, Serialize};

/// Supplies the classifier's prefix predictions for one episode's clip.
pub trait ProbabilitySource {
    fn t_max(&self) -> usize;
    /// Prediction after seeing the first `t` frames, for t in 1..=t_max.
    fn probs_at(&mut self, t: usize) -> StopResult<ClassProbabilities>;
}

/// Per-episode bookkeeping: everything `build_state` and the reward need,
/// and enough history to replay deterministically from a serialized
/// snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeContext {
    pub source_id: String,
    pub label: usize,
    pub t: usize,
    pub t_max: usize,
    /// argmax prediction at steps 1..=t.
    pub predictions: Vec<usize>,
    /// max-class confidence at steps 1..=t.
    pub confidences: Vec<f64>,
    /// Shannon entropy (nats) at steps 1..=t.
    pub entropies: Vec<f64>,
    /// Current class probabilities.
    pub probs: [f64; 3],
    pub n_consec: usize,
    pub t_first_correct: Option<usize>,
    pub done: bool,
}

impl EpisodeContext {
    fn observe(&mut self, p: &ClassProbabilities) {
        self.probs = p.probs;
        self.predictions.push(p.argmax);
        self.confidences.push(p.confidence());
        self.entropies.push(entropy_nats(&p.probs));
        if p.argmax == self.label {
            self.n_consec += 1;
            if self.t_first_correct.is_none() {
                self.t_first_correct = Some(self.t);
            }
        } else {
            self.n_consec = 0;
        }
    }

    pub fn current_prediction(&self) -> usize {
        self.predictions[self.t - 1]
    }

    pub fn reward_inputs(&self) -> RewardInputs {
        let state = build_state(self);
        RewardInputs {
            t: self.t,
            t_max: self.t_max,
            correct: self.current_prediction() == self.label,
            max_confidence: state.max_confidence,
            confidence_stability: state.confidence_stability,
            n_consec: self.n_consec,
            t_first_correct: self.t_first_correct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    /// Successor state; `None` marks the terminal transition.
    pub next_state: Option<StopState>,
    pub reward: f64,
    pub done: bool,
    pub executed_action: u8,
    /// Final classification (episode's argmax at the stop step).
    pub classification: Option<usize>,
}

pub struct StopEnv {
    pub reward: RewardConfig,
}

impl StopEnv {
    pub fn new(reward: RewardConfig) -> StopResult<StopEnv> {
        reward.validate()?;
        Ok(StopEnv { reward })
    }

    /// Start an episode: t = 1, histories cleared, state built from the
    /// first prediction.
    pub fn reset<S: ProbabilitySource>(
        &self,
        source: &mut S,
        label: usize,
        source_id: impl Into<String>,
    ) -> StopResult<(EpisodeContext, StopState)> {
        if label >= 3 {
            return Err(StopError::Data(format!("label {label} out of range")));
        }
        let t_max = source.t_max();
        if t_max < self.reward.t_min {
            return Err(StopError::Config(format!(
                "t_max {} below t_min {}",
                t_max, self.reward.t_min
            )));
        }
        let mut ctx = EpisodeContext {
            source_id: source_id.into(),
            label,
            t: 1,
            t_max,
            predictions: Vec::new(),
            confidences: Vec::new(),
            entropies: Vec::new(),
            probs: [0.0; 3],
            n_consec: 0,
            t_first_correct: None,
            done: false,
        };
        let p = source.probs_at(1)?;
        ctx.observe(&p);
        let state = build_state(&ctx);
        Ok((ctx, state))
    }

    /// Execute one action. Below t_min the executed action is forced to
    /// continue; at t_max the episode terminates regardless, earning the
    /// stop-branch reward for its final classification.
    pub fn step<S: ProbabilitySource>(
        &self,
        ctx: &mut EpisodeContext,
        source: &mut S,
        action: u8,
    ) -> StopResult<StepResult> {
        if ctx.done {
            return Err(StopError::Lifecycle("step after episode end".into()));
        }
        if action > 1 {
            return Err(StopError::Data(format!("action {action} not in {{0, 1}}")));
        }
        let executed = if ctx.t < self.reward.t_min { 0 } else { action };
        let stopping = executed == 1 || ctx.t == ctx.t_max;
        if stopping {
            let reward = compute_reward(&self.reward, &ctx.reward_inputs(), 1);
            ctx.done = true;
            return Ok(StepResult {
                next_state: None,
                reward,
                done: true,
                executed_action: executed,
                classification: Some(ctx.current_prediction()),
            });
        }
        let reward = compute_reward(&self.reward, &ctx.reward_inputs(), 0);
        ctx.t += 1;
        let p = source.probs_at(ctx.t)?;
        ctx.observe(&p);
        Ok(StepResult {
            next_state: Some(build_state(ctx)),
            reward,
            done: false,
            executed_action: executed,
            classification: None,
        })
    }
}
