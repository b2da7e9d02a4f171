//! Attention-augmented Deep Q-Network for the stopping policy: a dense
//! feature extractor over the 12-component state, a 4-token attention
//! block, a two-action value head, epsilon-greedy acting, uniform
//! experience replay, and squared-TD-error learning against a soft-updated
//! target network.

pub mod agent;
pub mod error;
pub mod qnet;
pub mod replay;
pub mod schedule;

pub use agent::{Agent, AgentHyper};
pub use error::{DqnError, DqnResult};
pub use qnet::QNetwork;
pub use replay::{ReplayBuffer, Transition};
pub use schedule::EpsilonSchedule;
