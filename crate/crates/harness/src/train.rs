//! Multi-phase policy training: per episode, roll the stop environment
//! with epsilon-greedy actions, store transitions, update the online
//! network once the buffer holds a batch, and soft-update the target at
//! its cadence. Phases switch the reward mode over the episode budget.

use crate::error::{HarnessError, HarnessResult};
use crate::rollout::{evaluate_policy, EvalSummary};
use crate::source::{EnvSource, TrajectorySource};
use dqn::{Agent, Transition};
use numkit::{derive_seed, Prng};
use serde::{Deserialize, Serialize};
use stopenv::{RewardConfig, RewardMode, StopEnv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub mode: RewardMode,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub phases: Vec<Phase>,
}

impl PhaseSchedule {
    /// Default split: 40% accuracy-first, then 60% balanced.
    pub fn default_for(total_episodes: usize) -> PhaseSchedule {
        let accuracy = (total_episodes as f64 * 0.4).round() as usize;
        PhaseSchedule {
            phases: vec![
                Phase {
                    mode: RewardMode::Accuracy,
                    episodes: accuracy,
                },
                Phase {
                    mode: RewardMode::Balanced,
                    episodes: total_episodes - accuracy,
                },
            ],
        }
    }

    pub fn single(mode: RewardMode, episodes: usize) -> PhaseSchedule {
        PhaseSchedule {
            phases: vec![Phase { mode, episodes }],
        }
    }

    pub fn total_episodes(&self) -> usize {
        self.phases.iter().map(|p| p.episodes).sum()
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.phases.is_empty() || self.phases.iter().any(|p| p.episodes == 0) {
            return Err(HarnessError::Config("phase budgets must be positive".into()));
        }
        Ok(())
    }
}

/// One line per episode in the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub episode: usize,
    pub phase: String,
    pub reward: f64,
    pub stop_t: usize,
    pub correct: bool,
    /// Exploration rate at the episode's first decision.
    pub epsilon: f64,
    /// Mean TD loss over the episode's updates (0 before learning starts).
    pub loss_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainAgentOutcome {
    pub log: Vec<TrainLogRecord>,
    /// (episode index, greedy evaluation) pairs.
    pub snapshots: Vec<(usize, EvalSummary)>,
    /// Populated when training stopped early (divergence); the agent
    /// retains its last good parameters.
    pub aborted: Option<String>,
}

pub struct TrainOptions {
    pub master_seed: u64,
    /// Episodes between greedy evaluation snapshots (None = no snapshots).
    pub eval_every: Option<usize>,
    pub eval_episodes: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            master_seed: 0,
            eval_every: None,
            eval_episodes: 100,
        }
    }
}

/// Algorithm-1 style training over the stop environment.
pub fn train_agent(
    agent: &mut Agent,
    source: &mut EnvSource,
    schedule: &PhaseSchedule,
    options: &TrainOptions,
) -> HarnessResult<TrainAgentOutcome> {
    schedule.validate()?;
    let mut clip_rng = Prng::new(derive_seed(options.master_seed, "episode-order"));
    let mut log = Vec::with_capacity(schedule.total_episodes());
    let mut snapshots = Vec::new();
    let mut episode_counter = 0usize;
    let mut aborted = None;

    'phases: for phase in &schedule.phases {
        let env = StopEnv::new(RewardConfig::for_mode(phase.mode))?;
        let phase_name = format!("{:?}", phase.mode).to_lowercase();
        for _ in 0..phase.episodes {
            let traj = source.training_episode(episode_counter as u64, &mut clip_rng)?;
            let label = traj.label;
            let mut src = TrajectorySource::new(traj);
            let (mut ctx, mut state) = env.reset(&mut src, label, format!("ep-{episode_counter}"))?;
            let episode_epsilon = agent.epsilon();
            let mut episode_reward = 0.0f64;
            let mut losses: Vec<f64> = Vec::new();
            let (stop_t, correct) = loop {
                let features = state.to_features();
                let action = agent.act(&features, agent.step_count(), true)?;
                let result = env.step(&mut ctx, &mut src, action)?;
                episode_reward += result.reward;
                let next_features = result
                    .next_state
                    .as_ref()
                    .map(|s| s.to_features().map(|v| v as f32))
                    .unwrap_or([0.0f32; 12]);
                agent.remember(Transition {
                    state: features.map(|v| v as f32),
                    action: result.executed_action,
                    reward: result.reward as f32,
                    next_state: next_features,
                    done: result.done,
                });
                agent.bump_step();
                match agent.train_step() {
                    Ok(Some(loss)) => losses.push(loss),
                    Ok(None) => {}
                    Err(dqn::DqnError::Diverged(msg)) => {
                        aborted = Some(msg);
                        break (ctx.t, false);
                    }
                    Err(e) => return Err(e.into()),
                }
                if agent.step_count() % agent.hyper.target_update_every == 0 {
                    agent.soft_update()?;
                }
                if result.done {
                    let predicted = result.classification.expect("terminal classifies");
                    break (ctx.t, predicted == label);
                }
                state = result.next_state.expect("non-terminal successor");
            };
            if aborted.is_some() {
                break 'phases;
            }
            let loss_mean = if losses.is_empty() {
                0.0
            } else {
                losses.iter().sum::<f64>() / losses.len() as f64
            };
            log.push(TrainLogRecord {
                episode: episode_counter,
                phase: phase_name.clone(),
                reward: episode_reward,
                stop_t,
                correct,
                epsilon: episode_epsilon,
                loss_mean,
            });
            episode_counter += 1;
            if let Some(every) = options.eval_every {
                if episode_counter % every == 0 {
                    let mut policy = crate::policy::AgentPolicy::new(agent);
                    let summary = evaluate_policy(
                        &mut policy,
                        source,
                        &RewardConfig::for_mode(phase.mode),
                        options.eval_episodes,
                        None,
                    )?;
                    snapshots.push((episode_counter, summary));
                }
            }
        }
    }
    Ok(TrainAgentOutcome {
        log,
        snapshots,
        aborted,
    })
}

pub fn log_to_jsonl(log: &[TrainLogRecord]) -> String {
    let mut out = String::new();
    for r in log {
        out.push_str(&serde_json::to_string(r).expect("log record serializes"));
        out.push('\n');
    }
    out
}
