//! Linear epsilon decay:
//! eps(t) = eps_final + (eps_initial - eps_final) * max(0, 1 - t/T_explore).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub final_value: f64,
    pub explore_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        let frac = (1.0 - step as f64 / self.explore_steps as f64).max(0.0);
        self.final_value + (self.initial - self.final_value) * frac
    }
}
