//! Piecewise reward. Stop: alpha*1_correct + beta*mu_conf + B_early +
//! B_consec - sigma_pen*(1 - 1_correct). Continue: -lambda_time, plus the
//! stability incentive in accuracy mode only.

use crate::error::{StopError, StopResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Accuracy,
    Balanced,
    Speed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub mode: RewardMode,
    pub alpha_acc: f64,
    pub beta_conf: f64,
    pub sigma_pen: f64,
    pub lambda_time: f64,
    pub zeta_bonus: f64,
    pub xi_consec: f64,
    pub omega_stable: f64,
    pub tau_threshold: f64,
    pub t_min: usize,
}

impl RewardConfig {
    pub fn for_mode(mode: RewardMode) -> RewardConfig {
        let (alpha_acc, beta_conf, sigma_pen, lambda_time) = match mode {
            RewardMode::Accuracy => (5.0, 0.5, 5.0, 0.0005),
            RewardMode::Balanced => (3.0, 0.3, 3.0, 0.001),
            RewardMode::Speed => (2.0, 0.5, 2.0, 0.005),
        };
        RewardConfig {
            mode,
            alpha_acc,
            beta_conf,
            sigma_pen,
            lambda_time,
            zeta_bonus: 0.2,
            xi_consec: 0.1,
            omega_stable: 0.01,
            tau_threshold: 0.85,
            t_min: 15,
        }
    }

    pub fn accuracy() -> RewardConfig {
        Self::for_mode(RewardMode::Accuracy)
    }

    pub fn balanced() -> RewardConfig {
        Self::for_mode(RewardMode::Balanced)
    }

    pub fn speed() -> RewardConfig {
        Self::for_mode(RewardMode::Speed)
    }

    pub fn validate(&self) -> StopResult<()> {
        let weights = [
            self.alpha_acc,
            self.beta_conf,
            self.sigma_pen,
            self.lambda_time,
            self.zeta_bonus,
            self.xi_consec,
            self.omega_stable,
        ];
        if weights.iter().any(|w| *w < 0.0) {
            return Err(StopError::Config("reward weights must be nonnegative".into()));
        }
        if !(self.tau_threshold > 1.0 / 3.0 && self.tau_threshold < 1.0) {
            return Err(StopError::Config(format!(
                "tau_threshold {} outside (1/3, 1)",
                self.tau_threshold
            )));
        }
        if self.t_min < 1 {
            return Err(StopError::Config("t_min must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything the reward needs from the episode at decision time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardInputs {
    pub t: usize,
    pub t_max: usize,
    pub correct: bool,
    pub max_confidence: f64,
    /// sigma_conf at the current step (stability incentive guard).
    pub confidence_stability: f64,
    pub n_consec: usize,
    pub t_first_correct: Option<usize>,
}

/// Early-stop bonus: full weight within 5 steps of the first correct
/// prediction (confidence above threshold), half weight for confident
/// stops outside that window, nothing otherwise.
fn early_bonus(cfg: &RewardConfig, inp: &RewardInputs) -> f64 {
    if inp.max_confidence <= cfg.tau_threshold {
        return 0.0;
    }
    let remaining = 1.0 - inp.t as f64 / inp.t_max as f64;
    match inp.t_first_correct {
        Some(tfc) if inp.t >= tfc && inp.t < tfc + 5 => cfg.zeta_bonus * remaining,
        _ => cfg.zeta_bonus * 0.5 * remaining,
    }
}

fn consec_bonus(cfg: &RewardConfig, inp: &RewardInputs) -> f64 {
    if inp.n_consec > 2 {
        cfg.xi_consec * inp.n_consec as f64
    } else {
        0.0
    }
}

fn stability_incentive(cfg: &RewardConfig, inp: &RewardInputs) -> f64 {
    if inp.max_confidence > cfg.tau_threshold && inp.confidence_stability < 0.02 {
        -cfg.omega_stable
    } else {
        0.0
    }
}

/// Reward for executing `action` (0 = continue, 1 = stop) from the
/// current state.
pub fn compute_reward(cfg: &RewardConfig, inp: &RewardInputs, action: u8) -> f64 {
    if action == 1 {
        let hit = if inp.correct { 1.0 } else { 0.0 };
        cfg.alpha_acc * hit + cfg.beta_conf * inp.max_confidence + early_bonus(cfg, inp)
            + consec_bonus(cfg, inp)
            - cfg.sigma_pen * (1.0 - hit)
    } else {
        let stab = match cfg.mode {
            RewardMode::Accuracy => stability_incentive(cfg, inp),
            RewardMode::Balanced | RewardMode::Speed => 0.0,
        };
        -cfg.lambda_time + stab
    }
}
