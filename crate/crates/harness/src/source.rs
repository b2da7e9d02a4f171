//! Episode sources. An episode is a precomputed probability trajectory
//! plus its label: synthetic episodes are generated per seed; classifier
//! episodes materialize all prefix predictions of one clip in a single
//! batched forward pass (cached per clip, since the classifier is frozen
//! during policy training).

use crate::error::{HarnessError, HarnessResult};
use crate::synth::{synth_episode, SyntheticEnvSpec};
use bmcnn::{BmcnnModel, ClassProbabilities, Sample};
use numkit::{derive_seed, Prng};
use std::sync::Arc;
use stopenv::{ProbabilitySource, StopResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub probs: Vec<ClassProbabilities>,
    pub label: usize,
    pub source_id: String,
}

impl Trajectory {
    pub fn t_max(&self) -> usize {
        self.probs.len()
    }
}

/// `ProbabilitySource` view over a shared trajectory.
pub struct TrajectorySource {
    traj: Arc<Trajectory>,
}

impl TrajectorySource {
    pub fn new(traj: Arc<Trajectory>) -> TrajectorySource {
        TrajectorySource { traj }
    }
}

impl ProbabilitySource for TrajectorySource {
    fn t_max(&self) -> usize {
        self.traj.probs.len()
    }

    fn probs_at(&mut self, t: usize) -> StopResult<ClassProbabilities> {
        self.traj
            .probs
            .get(t - 1)
            .cloned()
            .ok_or_else(|| stopenv::StopError::Source(format!("t {t} beyond trajectory")))
    }
}

/// Frozen classifier over a feature dataset, with per-clip trajectory
/// memoization.
pub struct ClassifierSource {
    model: BmcnnModel<f32>,
    samples: Vec<Sample>,
    cache: Vec<Option<Arc<Trajectory>>>,
}

impl ClassifierSource {
    pub fn new(model: BmcnnModel<f32>, samples: Vec<Sample>) -> HarnessResult<ClassifierSource> {
        if samples.is_empty() {
            return Err(HarnessError::Config("classifier source needs at least one clip".into()));
        }
        let cache = vec![None; samples.len()];
        Ok(ClassifierSource {
            model,
            samples,
            cache,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn trajectory(&mut self, index: usize) -> HarnessResult<Arc<Trajectory>> {
        let index = index % self.samples.len();
        if let Some(t) = &self.cache[index] {
            return Ok(Arc::clone(t));
        }
        let sample = &self.samples[index];
        let probs = self
            .model
            .probability_trajectory(&sample.mfcc, &sample.wavelet)?;
        let traj = Arc::new(Trajectory {
            probs,
            label: sample.label,
            source_id: sample.source_id.clone(),
        });
        self.cache[index] = Some(Arc::clone(&traj));
        Ok(traj)
    }
}

/// Unified episode supply for training and evaluation.
pub enum EnvSource {
    Synthetic {
        spec: SyntheticEnvSpec,
        master_seed: u64,
    },
    Classifier(Box<ClassifierSource>),
}

impl EnvSource {
    pub fn synthetic(spec: SyntheticEnvSpec, master_seed: u64) -> HarnessResult<EnvSource> {
        spec.validate()?;
        Ok(EnvSource::Synthetic { spec, master_seed })
    }

    pub fn classifier(model: BmcnnModel<f32>, samples: Vec<Sample>) -> HarnessResult<EnvSource> {
        Ok(EnvSource::Classifier(Box::new(ClassifierSource::new(model, samples)?)))
    }

    pub fn t_max(&self) -> usize {
        match self {
            EnvSource::Synthetic { spec, .. } => spec.t_max,
            EnvSource::Classifier(src) => src.samples[0].mfcc.rows,
        }
    }

    /// Training stream: synthetic episodes are fresh per counter;
    /// classifier episodes sample a clip uniformly.
    pub fn training_episode(&mut self, counter: u64, rng: &mut Prng) -> HarnessResult<Arc<Trajectory>> {
        match self {
            EnvSource::Synthetic { spec, master_seed } => {
                let seed = derive_seed(*master_seed, "synth-train")
                    .wrapping_add(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                Ok(Arc::new(synth_episode(spec, seed)))
            }
            EnvSource::Classifier(src) => {
                let idx = rng.uniform_range(0, (src.len() - 1) as u64) as usize;
                src.trajectory(idx)
            }
        }
    }

    /// Evaluation stream: deterministic by index and disjoint from the
    /// training stream for synthetic sources; dataset order for
    /// classifier sources.
    pub fn eval_episode(&mut self, index: u64) -> HarnessResult<Arc<Trajectory>> {
        match self {
            EnvSource::Synthetic { spec, master_seed } => {
                let seed = derive_seed(*master_seed, "synth-eval")
                    .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                Ok(Arc::new(synth_episode(spec, seed)))
            }
            EnvSource::Classifier(src) => src.trajectory(index as usize),
        }
    }
}
