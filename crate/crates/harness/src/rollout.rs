//! Pure-greedy policy evaluation: roll episodes to their stop decision,
//! aggregate accuracy, per-class recall, stop-time and reward statistics.

use crate::error::{HarnessError, HarnessResult};
use crate::policy::Policy;
use crate::source::{EnvSource, TrajectorySource};
use serde::{Deserialize, Serialize};
use stopenv::{RewardConfig, StopEnv, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub policy: String,
    pub episodes: usize,
    pub accuracy: f64,
    pub per_class_recall: Vec<Option<f64>>,
    pub confusion: Vec<Vec<usize>>,
    /// Mean executed stop frame t*.
    pub mean_stop: f64,
    /// t_max / mean_stop.
    pub speedup: f64,
    pub t_max: usize,
    pub mean_reward: f64,
    pub reward_std: f64,
}

/// Roll `episodes` greedy episodes of `policy` against `source`.
/// `traces` collects one record per step when provided.
pub fn evaluate_policy(
    policy: &mut dyn Policy,
    source: &mut EnvSource,
    reward: &RewardConfig,
    episodes: usize,
    mut traces: Option<&mut Vec<TraceRecord>>,
) -> HarnessResult<EvalSummary> {
    if episodes == 0 {
        return Err(HarnessError::Config("evaluation needs at least one episode".into()));
    }
    let env = StopEnv::new(reward.clone())?;
    let t_max = source.t_max();
    let mut confusion = vec![vec![0usize; 3]; 3];
    let mut stop_sum = 0usize;
    let mut rewards = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let traj = source.eval_episode(ep as u64)?;
        let label = traj.label;
        let mut src = TrajectorySource::new(traj);
        let (mut ctx, mut state) = env.reset(&mut src, label, format!("eval-{ep}"))?;
        let mut episode_reward = 0.0f64;
        loop {
            let action = policy.decide(&state, ctx.t)?;
            let t_before = ctx.t;
            let result = env.step(&mut ctx, &mut src, action)?;
            episode_reward += result.reward;
            if let Some(ts) = traces.as_deref_mut() {
                ts.push(TraceRecord {
                    episode: ep,
                    t: t_before,
                    state: state.to_features(),
                    action: result.executed_action,
                    reward: result.reward,
                    done: result.done,
                });
            }
            if result.done {
                let predicted = result.classification.expect("terminal step classifies");
                confusion[label][predicted] += 1;
                stop_sum += ctx.t;
                break;
            }
            state = result.next_state.expect("non-terminal step has a successor");
        }
        rewards.push(episode_reward);
    }

    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / episodes as f64;
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    let mean_stop = stop_sum as f64 / episodes as f64;
    let mean_reward = rewards.iter().sum::<f64>() / episodes as f64;
    let var = rewards
        .iter()
        .map(|r| (r - mean_reward) * (r - mean_reward))
        .sum::<f64>()
        / episodes as f64;
    Ok(EvalSummary {
        policy: policy.name(),
        episodes,
        accuracy,
        per_class_recall,
        confusion,
        mean_stop,
        speedup: t_max as f64 / mean_stop,
        t_max,
        mean_reward,
        reward_std: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::BaselinePolicy;
    use crate::synth::SyntheticEnvSpec;

    #[test]
    fn fixed_length_at_t_max_has_speedup_exactly_one() {
        let mut source = EnvSource::synthetic(SyntheticEnvSpec::easy(), 7).unwrap();
        let mut policy = BaselinePolicy::FixedLength { length: 124 };
        let summary =
            evaluate_policy(&mut policy, &mut source, &RewardConfig::accuracy(), 20, None).unwrap();
        assert_eq!(summary.mean_stop, 124.0);
        assert_eq!(summary.speedup, 1.0);
        // speedup identity
        assert_eq!(summary.speedup * summary.mean_stop, summary.t_max as f64);
    }

    #[test]
    fn unreachable_threshold_never_stops_early() {
        // noiseless ramp reaching exactly 1.0: strict comparison keeps
        // the tau = 1.0 baseline running to t_max
        let spec = SyntheticEnvSpec {
            peak_confidence: 1.0,
            noise: 0.0,
            distractor_prob: 0.0,
            ..SyntheticEnvSpec::easy()
        };
        let mut source = EnvSource::synthetic(spec, 3).unwrap();
        let mut policy = BaselinePolicy::FixedThreshold { threshold: 1.0 };
        let summary =
            evaluate_policy(&mut policy, &mut source, &RewardConfig::accuracy(), 10, None).unwrap();
        assert_eq!(summary.mean_stop, 124.0);
    }

    #[test]
    fn zero_episodes_is_config_error() {
        let mut source = EnvSource::synthetic(SyntheticEnvSpec::easy(), 7).unwrap();
        let mut policy = BaselinePolicy::FixedLength { length: 20 };
        assert!(matches!(
            evaluate_policy(&mut policy, &mut source, &RewardConfig::accuracy(), 0, None),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn confusion_row_sums_equal_episode_label_counts() {
        let mut source = EnvSource::synthetic(SyntheticEnvSpec::moderate(), 11).unwrap();
        let mut policy = BaselinePolicy::FixedLength { length: 124 };
        let episodes = 30;
        let summary = evaluate_policy(
            &mut policy,
            &mut source,
            &RewardConfig::accuracy(),
            episodes,
            None,
        )
        .unwrap();
        let total: usize = summary.confusion.iter().flatten().sum();
        assert_eq!(total, episodes);
        // trace/total = accuracy by construction
        let trace: usize = (0..3).map(|i| summary.confusion[i][i]).sum();
        assert!((summary.accuracy - trace as f64 / episodes as f64).abs() < 1e-12);
    }
}
