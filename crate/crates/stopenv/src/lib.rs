//! Sequential stopping environment over prefix classification: episodes
//! advance frame by frame, the agent chooses continue (0) or stop (1),
//! states are 12-component summaries of the classifier's predictive
//! behavior, and rewards trade classification quality against elapsed
//! frames in three configurable modes.

pub mod env;
pub mod error;
pub mod reward;
pub mod state;
pub mod trace;

pub use env::{EpisodeContext, ProbabilitySource, StepResult, StopEnv};
pub use error::{StopError, StopResult};
pub use reward::{compute_reward, RewardConfig, RewardInputs, RewardMode};
pub use state::{build_state, StopState, STATE_DIM};
pub use trace::TraceRecord;
