//! Synthetic confidence trajectories: a classifier-free test double for
//! the stop environment. Each episode ramps the true class's confidence
//! from a starting level toward a peak, optionally led by a distractor
//! class for a label-dependent number of frames, with clamped Gaussian
//! noise on the dominant confidence. Every emitted vector is exactly on
//! the simplex by construction.

use crate::source::Trajectory;
use bmcnn::ClassProbabilities;
use numkit::Prng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEnvSpec {
    pub t_max: usize,
    /// Frames for the true class to ramp from start to peak confidence,
    /// per label.
    pub ramp_frames: [usize; 3],
    pub start_confidence: f64,
    pub peak_confidence: f64,
    /// Gaussian noise on the dominant confidence (0 = deterministic).
    pub noise: f64,
    /// Probability an episode opens with a distractor class leading.
    pub distractor_prob: f64,
    /// Frames the distractor leads before the true class takes over,
    /// per label.
    pub lead_frames: [usize; 3],
    pub label_weights: [f64; 3],
}

impl SyntheticEnvSpec {
    /// Fast ramps, low noise: the easiest configuration.
    pub fn easy() -> SyntheticEnvSpec {
        SyntheticEnvSpec {
            t_max: 124,
            ramp_frames: [10, 14, 18],
            start_confidence: 1.0 / 3.0,
            peak_confidence: 0.97,
            noise: 0.01,
            distractor_prob: 0.0,
            lead_frames: [0, 0, 0],
            label_weights: [1.0, 1.0, 1.0],
        }
    }

    /// Varied ramps, mild noise, occasional distractor openings. All
    /// episodes stabilize on the true class well before t_max.
    pub fn moderate() -> SyntheticEnvSpec {
        SyntheticEnvSpec {
            t_max: 124,
            ramp_frames: [18, 28, 40],
            start_confidence: 1.0 / 3.0,
            peak_confidence: 0.95,
            noise: 0.02,
            distractor_prob: 0.3,
            lead_frames: [8, 14, 20],
            label_weights: [1.0, 1.0, 1.0],
        }
    }

    /// Deterministic trajectories with label-dependent takeover times;
    /// the optimal stop time is computable exactly.
    pub fn noiseless() -> SyntheticEnvSpec {
        SyntheticEnvSpec {
            t_max: 124,
            ramp_frames: [20, 20, 20],
            start_confidence: 0.4,
            peak_confidence: 1.0,
            noise: 0.0,
            distractor_prob: 1.0,
            lead_frames: [10, 30, 50],
            label_weights: [1.0, 1.0, 1.0],
        }
    }

    pub fn validate(&self) -> crate::HarnessResult<()> {
        use crate::HarnessError;
        if self.t_max < 2 {
            return Err(HarnessError::Config("t_max must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.distractor_prob) {
            return Err(HarnessError::Config("distractor probability outside [0,1]".into()));
        }
        if self.peak_confidence > 1.0 || self.start_confidence < 1.0 / 3.0 - 1e-9 {
            return Err(HarnessError::Config(
                "confidence levels must satisfy 1/3 <= start <= peak <= 1".into(),
            ));
        }
        if self.label_weights.iter().sum::<f64>() <= 0.0 {
            return Err(HarnessError::Config("label weights must sum to > 0".into()));
        }
        Ok(())
    }
}

fn pick_label(weights: &[f64; 3], rng: &mut Prng) -> usize {
    let total: f64 = weights.iter().sum();
    let draw = rng.uniform() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            return i;
        }
    }
    2
}

/// Generate one episode's probability trajectory, deterministic per seed.
pub fn synth_episode(spec: &SyntheticEnvSpec, seed: u64) -> Trajectory {
    let mut rng = Prng::new(seed);
    let label = pick_label(&spec.label_weights, &mut rng);
    let distracting = rng.uniform() < spec.distractor_prob;
    let distractor = if distracting {
        // uniform over the two wrong classes
        let offset = if rng.uniform() < 0.5 { 1 } else { 2 };
        Some((label + offset) % 3)
    } else {
        None
    };
    let lead = if distracting { spec.lead_frames[label] } else { 0 };
    let ramp = spec.ramp_frames[label].max(1);

    let probs = (1..=spec.t_max)
        .map(|t| {
            let (dominant, base) = if t <= lead {
                (distractor.unwrap(), 0.6)
            } else {
                let tt = (t - lead) as f64;
                let frac = (tt / ramp as f64).min(1.0);
                (
                    label,
                    spec.start_confidence + (spec.peak_confidence - spec.start_confidence) * frac,
                )
            };
            let mut q = base + spec.noise * rng.normal();
            // dominant stays dominant: the two others split (1-q)/2 each
            q = q.clamp(0.34, spec.peak_confidence);
            let rest = (1.0 - q) / 2.0;
            let mut p = [rest; 3];
            p[dominant] = q;
            let logits = p.map(|v| v.max(1e-12).ln());
            ClassProbabilities::from_logits_probs(logits, p)
        })
        .collect();

    Trajectory {
        probs,
        label,
        source_id: format!("synth-{seed}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_ramp_saturates_at_peak() {
        let spec = SyntheticEnvSpec {
            ramp_frames: [10, 10, 10],
            peak_confidence: 1.0,
            noise: 0.0,
            distractor_prob: 0.0,
            start_confidence: 1.0 / 3.0,
            ..SyntheticEnvSpec::easy()
        };
        // find a seed labeled 0 for a clean read
        let traj = (0..100)
            .map(|s| synth_episode(&spec, s))
            .find(|t| t.label == 0)
            .unwrap();
        for t in 10..=spec.t_max {
            let mu = traj.probs[t - 1].confidence();
            assert_eq!(mu, 1.0, "t = {t} confidence {mu}");
        }
    }

    #[test]
    fn every_vector_is_on_the_simplex() {
        let spec = SyntheticEnvSpec::moderate();
        for seed in 0..50 {
            let traj = synth_episode(&spec, seed);
            assert_eq!(traj.probs.len(), spec.t_max);
            for p in &traj.probs {
                let sum: f64 = p.probs.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
                assert!(p.probs.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn identical_seed_gives_identical_trajectory() {
        let spec = SyntheticEnvSpec::moderate();
        let a = synth_episode(&spec, 99);
        let b = synth_episode(&spec, 99);
        assert_eq!(a.label, b.label);
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn distractor_leads_then_truth_takes_over() {
        let spec = SyntheticEnvSpec {
            distractor_prob: 1.0,
            lead_frames: [10, 10, 10],
            noise: 0.0,
            ..SyntheticEnvSpec::moderate()
        };
        let traj = synth_episode(&spec, 3);
        let early = traj.probs[4].argmax;
        assert_ne!(early, traj.label, "distractor should lead at t=5");
        let late = traj.probs[spec.t_max - 1].argmax;
        assert_eq!(late, traj.label, "truth should dominate by t_max");
    }
}
