//! Stopping policies: the learned agent (greedy) and fixed baselines.

use crate::error::HarnessResult;
use dqn::Agent;
use serde::{Deserialize, Serialize};
use stopenv::StopState;

pub trait Policy {
    /// Desired action for the state at frame `t`; the environment may
    /// override it (minimum-frames rule, forced stop at t_max).
    fn decide(&mut self, state: &StopState, t: usize) -> HarnessResult<u8>;
    fn name(&self) -> String;
}

/// Sanity baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselinePolicy {
    /// Stop once the max-class confidence strictly exceeds the threshold.
    FixedThreshold { threshold: f64 },
    /// Stop at a fixed frame index.
    FixedLength { length: usize },
}

impl Policy for BaselinePolicy {
    fn decide(&mut self, state: &StopState, t: usize) -> HarnessResult<u8> {
        Ok(match *self {
            BaselinePolicy::FixedThreshold { threshold } => {
                (state.max_confidence > threshold) as u8
            }
            BaselinePolicy::FixedLength { length } => (t >= length) as u8,
        })
    }

    fn name(&self) -> String {
        match *self {
            BaselinePolicy::FixedThreshold { threshold } => format!("threshold-{threshold}"),
            BaselinePolicy::FixedLength { length } => format!("fixed-{length}"),
        }
    }
}

/// Greedy wrapper over a trained agent.
pub struct AgentPolicy<'a> {
    pub agent: &'a mut Agent,
    pub label: String,
}

impl<'a> AgentPolicy<'a> {
    pub fn new(agent: &'a mut Agent) -> AgentPolicy<'a> {
        AgentPolicy {
            agent,
            label: "attention-dqn".into(),
        }
    }
}

impl Policy for AgentPolicy<'_> {
    fn decide(&mut self, state: &StopState, _t: usize) -> HarnessResult<u8> {
        Ok(self.agent.greedy(&state.to_features())?)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}
