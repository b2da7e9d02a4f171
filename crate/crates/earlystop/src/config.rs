//! Run configuration: one JSON document drives every command. A copy is
//! written into each run directory so outputs are reproducible from the
//! directory alone.

use crate::error::{CliError, CliResult};
use bmcnn::{ModelConfig, TrainConfig};
use dqn::AgentHyper;
use dsp::DspConfig;
use harness::{Phase, PhaseSchedule, SyntheticEnvSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use stopenv::RewardMode;

/// Phase as a fraction of the total episode budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFraction {
    pub mode: RewardMode,
    pub fraction: f64,
}

/// Synthetic tone-dataset generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneDataSpec {
    /// Class fundamentals in Hz; resolvable by the default mel filterbank.
    pub fundamentals: [f64; 3],
    pub harmonics: usize,
    pub harmonic_decay: f64,
    pub amplitude: f64,
    pub noise: f64,
    /// Per-clip random detune as a fraction of the fundamental.
    pub detune: f64,
}

impl Default for ToneDataSpec {
    fn default() -> Self {
        ToneDataSpec {
            fundamentals: [120.0, 240.0, 480.0],
            harmonics: 3,
            harmonic_decay: 0.5,
            amplitude: 0.5,
            noise: 0.05,
            detune: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub dsp: DspConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub agent: AgentHyper,
    /// Reward-mode phases over the agent episode budget.
    pub phases: Vec<PhaseFraction>,
    /// Total agent training episodes (overridable with --episodes).
    pub episodes: usize,
    pub eval_episodes: usize,
    /// Reward mode used when reporting evaluation reward statistics.
    pub eval_reward_mode: RewardMode,
    /// Prefix sweep fractions for --prefix-sweep.
    pub prefix_fracs: Vec<f64>,
    pub synth_env: SyntheticEnvSpec,
    pub tone_data: ToneDataSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            dsp: DspConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            agent: AgentHyper::default(),
            phases: vec![
                PhaseFraction {
                    mode: RewardMode::Accuracy,
                    fraction: 0.4,
                },
                PhaseFraction {
                    mode: RewardMode::Balanced,
                    fraction: 0.6,
                },
            ],
            episodes: 30_000,
            eval_episodes: 300,
            eval_reward_mode: RewardMode::Balanced,
            prefix_fracs: vec![0.25, 0.5, 0.75, 1.0],
            synth_env: SyntheticEnvSpec::moderate(),
            tone_data: ToneDataSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let doc = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&doc)
            .map_err(|e| CliError::invalid(format!("bad config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.dsp.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        self.model.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        if self.model.t_max != self.dsp.frames_per_clip() {
            return Err(CliError::invalid(format!(
                "model t_max {} must equal the dsp frame count {}",
                self.model.t_max,
                self.dsp.frames_per_clip()
            )));
        }
        if self.model.f_dim != self.dsp.n_coeffs {
            return Err(CliError::invalid(format!(
                "model f_dim {} must equal dsp n_coeffs {} (both branches share F)",
                self.model.f_dim, self.dsp.n_coeffs
            )));
        }
        self.agent.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        let frac_sum: f64 = self.phases.iter().map(|p| p.fraction).sum();
        if self.phases.is_empty() || (frac_sum - 1.0).abs() > 1e-6 {
            return Err(CliError::invalid(format!(
                "phase fractions must sum to 1, got {frac_sum}"
            )));
        }
        if (stopenv::RewardConfig::accuracy().t_min) >= self.model.t_max {
            return Err(CliError::invalid("t_min must be below t_max".into()));
        }
        if self.prefix_fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(CliError::invalid("prefix fractions must lie in (0, 1]".into()));
        }
        self.synth_env.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        Ok(())
    }

    /// Episode schedule for a given total budget.
    pub fn schedule(&self, total_episodes: usize) -> CliResult<PhaseSchedule> {
        let mut phases = Vec::with_capacity(self.phases.len());
        let mut assigned = 0usize;
        for (i, p) in self.phases.iter().enumerate() {
            let episodes = if i + 1 == self.phases.len() {
                total_episodes - assigned
            } else {
                (p.fraction * total_episodes as f64).round() as usize
            };
            assigned += episodes;
            phases.push(Phase {
                mode: p.mode,
                episodes,
            });
        }
        let schedule = PhaseSchedule { phases };
        schedule.validate().map_err(|e| CliError::invalid(e.to_string()))?;
        Ok(schedule)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fingerprint used in run metadata.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_string(self).expect("config serializes"));
        digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_hash_stable() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.hash(), RunConfig::default().hash());
    }

    #[test]
    fn schedule_respects_fractions_and_total() {
        let cfg = RunConfig::default();
        let sched = cfg.schedule(1000).unwrap();
        assert_eq!(sched.total_episodes(), 1000);
        assert_eq!(sched.phases[0].episodes, 400);
        assert_eq!(sched.phases[1].episodes, 600);
    }

    #[test]
    fn mismatched_geometry_is_invalid() {
        let mut cfg = RunConfig::default();
        cfg.model.t_max = 100;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn round_trip_via_json() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }
}
