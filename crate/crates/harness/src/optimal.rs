//! Exhaustive-search optimal stopping for a known trajectory. Because
//! the environment is deterministic given the trajectory, a single
//! continue-to-the-end rollout yields every stop/continue reward, and the
//! discounted return of each feasible stop time follows in closed form.

use crate::error::HarnessResult;
use crate::source::{Trajectory, TrajectorySource};
use std::sync::Arc;
use stopenv::{compute_reward, RewardConfig, StopEnv};

#[derive(Debug, Clone)]
pub struct StopReturns {
    pub t_min: usize,
    pub t_max: usize,
    /// Reward for continuing from frame t (index t-1).
    pub continue_rewards: Vec<f64>,
    /// Reward for stopping at frame t (index t-1).
    pub stop_rewards: Vec<f64>,
    /// Discounted return G(s) for each feasible stop s in t_min..=t_max.
    pub returns: Vec<f64>,
}

impl StopReturns {
    pub fn return_at(&self, stop_t: usize) -> f64 {
        self.returns[stop_t - self.t_min]
    }
}

/// Tabulate every stop/continue reward along the trajectory and the
/// discounted return of each feasible stop time.
pub fn stop_returns(
    traj: &Arc<Trajectory>,
    cfg: &RewardConfig,
    gamma: f64,
) -> HarnessResult<StopReturns> {
    let env = StopEnv::new(cfg.clone())?;
    let t_max = traj.t_max();
    let mut src = TrajectorySource::new(Arc::clone(traj));
    let (mut ctx, _) = env.reset(&mut src, traj.label, traj.source_id.clone())?;
    let mut continue_rewards = Vec::with_capacity(t_max);
    let mut stop_rewards = Vec::with_capacity(t_max);
    loop {
        let inputs = ctx.reward_inputs();
        stop_rewards.push(compute_reward(cfg, &inputs, 1));
        continue_rewards.push(compute_reward(cfg, &inputs, 0));
        if ctx.t == t_max {
            break;
        }
        env.step(&mut ctx, &mut src, 0)?;
    }

    let t_min = cfg.t_min;
    let mut returns = Vec::with_capacity(t_max - t_min + 1);
    for s in t_min..=t_max {
        let mut g = 0.0f64;
        let mut disc = 1.0f64;
        for u in 1..s {
            g += disc * continue_rewards[u - 1];
            disc *= gamma;
        }
        g += disc * stop_rewards[s - 1];
        returns.push(g);
    }
    Ok(StopReturns {
        t_min,
        t_max,
        continue_rewards,
        stop_rewards,
        returns,
    })
}

/// Brute-force optimum: the earliest feasible stop time maximizing the
/// discounted return.
pub fn optimal_stop(
    traj: &Arc<Trajectory>,
    cfg: &RewardConfig,
    gamma: f64,
) -> HarnessResult<(usize, f64)> {
    let table = stop_returns(traj, cfg, gamma)?;
    let mut best_t = table.t_min;
    let mut best = table.returns[0];
    for (i, &g) in table.returns.iter().enumerate() {
        if g > best {
            best = g;
            best_t = table.t_min + i;
        }
    }
    Ok((best_t, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_episode, SyntheticEnvSpec};

    /// Backward-induction oracle, independent of the forward scan.
    fn dp_optimal_stop(table: &StopReturns, gamma: f64) -> usize {
        let (t_min, t_max) = (table.t_min, table.t_max);
        let mut value = vec![0.0f64; t_max + 2];
        value[t_max] = table.stop_rewards[t_max - 1];
        for t in (1..t_max).rev() {
            let cont = table.continue_rewards[t - 1] + gamma * value[t + 1];
            value[t] = if t >= t_min {
                table.stop_rewards[t - 1].max(cont)
            } else {
                cont
            };
        }
        for t in t_min..=t_max {
            let cont = if t == t_max {
                f64::NEG_INFINITY
            } else {
                table.continue_rewards[t - 1] + gamma * value[t + 1]
            };
            if table.stop_rewards[t - 1] >= cont {
                return t;
            }
        }
        t_max
    }

    #[test]
    fn brute_force_matches_dynamic_programming_oracle() {
        let spec = SyntheticEnvSpec::noiseless();
        let cfg = RewardConfig::accuracy();
        for gamma in [0.9, 0.99] {
            for seed in 0..40 {
                let traj = Arc::new(synth_episode(&spec, seed));
                let table = stop_returns(&traj, &cfg, gamma).unwrap();
                let (bf, _) = optimal_stop(&traj, &cfg, gamma).unwrap();
                let dp = dp_optimal_stop(&table, gamma);
                assert_eq!(bf, dp, "gamma {gamma} seed {seed}");
            }
        }
    }

    #[test]
    fn optimal_stop_is_feasible() {
        let spec = SyntheticEnvSpec::moderate();
        let cfg = RewardConfig::accuracy();
        for seed in 0..20 {
            let traj = Arc::new(synth_episode(&spec, seed));
            let (t, _) = optimal_stop(&traj, &cfg, 0.99).unwrap();
            assert!(t >= cfg.t_min && t <= spec.t_max);
        }
    }

    #[test]
    fn noiseless_optimum_tracks_the_takeover_time() {
        // with strong discounting the optimum hugs the first correct,
        // confident frame, which is label-dependent by construction
        let spec = SyntheticEnvSpec::noiseless();
        let cfg = RewardConfig::accuracy();
        let mut seen = [false; 3];
        for seed in 0..60 {
            let traj = Arc::new(synth_episode(&spec, seed));
            let (t, _) = optimal_stop(&traj, &cfg, 0.9).unwrap();
            let lead = spec.lead_frames[traj.label];
            let takeover = lead + 1;
            assert!(
                t >= takeover.max(cfg.t_min) && t <= (takeover + spec.ramp_frames[traj.label]).max(cfg.t_min) + 1,
                "label {} lead {}: optimum {t}",
                traj.label,
                lead
            );
            seen[traj.label] = true;
        }
        assert!(seen.iter().all(|&s| s), "all labels sampled");
    }
}
