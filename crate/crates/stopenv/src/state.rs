//! The 12-component stopping state. Conventions at t = 1: both deltas and
//! the confidence-stability term are 0, prediction stability is 1. The
//! moving average and stability statistics use a trailing window of 5
//! timesteps (fewer while t < 5).

use crate::env::EpisodeContext;
use serde::{Deserialize, Serialize};

pub const STATE_DIM: usize = 12;

/// Trailing window length for the confidence statistics.
pub const STAT_WINDOW: usize = 5;

/// Normalizer for the consecutive-correct count.
pub const CONSEC_NORM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopState {
    /// t / T_max, in (0, 1].
    pub progress: f64,
    /// Highest class probability, in [1/3, 1] for three classes.
    pub max_confidence: f64,
    /// Shannon entropy of the class probabilities divided by log C.
    pub normalized_entropy: f64,
    pub probs: [f64; 3],
    /// Confidence change from the previous step (0 at t = 1).
    pub delta_confidence: f64,
    /// Entropy change from the previous step, in nats (0 at t = 1).
    pub delta_entropy: f64,
    /// Trailing-window mean of the confidence.
    pub moving_avg_confidence: f64,
    /// Trailing-window standard deviation of the confidence (0 at t = 1).
    pub confidence_stability: f64,
    /// min(n_consec, 10) / 10.
    pub consecutive_correct_norm: f64,
    /// Fraction of recent steps whose prediction matched the one before.
    pub prediction_stability: f64,
}

impl StopState {
    pub fn to_features(&self) -> [f64; STATE_DIM] {
        [
            self.progress,
            self.max_confidence,
            self.normalized_entropy,
            self.probs[0],
            self.probs[1],
            self.probs[2],
            self.delta_confidence,
            self.delta_entropy,
            self.moving_avg_confidence,
            self.confidence_stability,
            self.consecutive_correct_norm,
            self.prediction_stability,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.to_features().iter().all(|v| v.is_finite())
    }
}

/// Shannon entropy in nats.
pub fn entropy_nats(probs: &[f64; 3]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Assemble the state for the context's current timestep.
pub fn build_state(ctx: &EpisodeContext) -> StopState {
    let t = ctx.t;
    debug_assert!(t >= 1 && ctx.confidences.len() == t);
    let log_c = 3f64.ln();
    let conf = ctx.confidences[t - 1];
    let entropy = ctx.entropies[t - 1];

    let (delta_confidence, delta_entropy) = if t >= 2 {
        (conf - ctx.confidences[t - 2], entropy - ctx.entropies[t - 2])
    } else {
        (0.0, 0.0)
    };

    let w = t.min(STAT_WINDOW);
    let window = &ctx.confidences[t - w..t];
    let mean: f64 = window.iter().sum::<f64>() / w as f64;
    let var: f64 = window.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / w as f64;

    // fraction of the last min(t-1, 5) transitions that kept the argmax
    let n_trans = (t - 1).min(STAT_WINDOW);
    let prediction_stability = if n_trans == 0 {
        1.0
    } else {
        let mut stable = 0usize;
        for j in (t - n_trans + 1)..=t {
            if ctx.predictions[j - 1] == ctx.predictions[j - 2] {
                stable += 1;
            }
        }
        stable as f64 / n_trans as f64
    };

    StopState {
        progress: t as f64 / ctx.t_max as f64,
        max_confidence: conf,
        normalized_entropy: entropy / log_c,
        probs: ctx.probs,
        delta_confidence,
        delta_entropy,
        moving_avg_confidence: mean,
        confidence_stability: var.sqrt(),
        consecutive_correct_norm: (ctx.n_consec as f64).min(CONSEC_NORM) / CONSEC_NORM,
        prediction_stability,
    }
}
