//! End-to-end stopping-policy training and evaluation: multi-phase RL
//! over the stop environment, a synthetic confidence-trajectory
//! environment for classifier-free testing, fixed baseline policies,
//! greedy policy evaluation, and brute-force optimal-stopping search.

pub mod compare;
pub mod error;
pub mod optimal;
pub mod policy;
pub mod rollout;
pub mod source;
pub mod synth;
pub mod train;

pub use compare::{compare_report, ComparisonRow, ComparisonTable};
pub use error::{HarnessError, HarnessResult};
pub use optimal::{optimal_stop, stop_returns, StopReturns};
pub use policy::{BaselinePolicy, Policy};
pub use rollout::{evaluate_policy, EvalSummary};
pub use source::{ClassifierSource, EnvSource, Trajectory, TrajectorySource};
pub use synth::{synth_episode, SyntheticEnvSpec};
pub use train::{train_agent, Phase, PhaseSchedule, TrainAgentOutcome, TrainLogRecord, TrainOptions};
