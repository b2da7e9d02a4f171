//! Policy comparison table: accuracy and speedup per policy, ordered by
//! descending accuracy with ties broken by descending speedup.

use crate::error::{HarnessError, HarnessResult};
use crate::rollout::EvalSummary;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub accuracy: f64,
    pub mean_stop: f64,
    pub speedup: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub t_max: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,accuracy,mean_stop,speedup,episodes\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.policy, r.accuracy, r.mean_stop, r.speedup, r.episodes
            ));
        }
        out
    }
}

pub fn compare_report(summaries: &[EvalSummary]) -> HarnessResult<ComparisonTable> {
    if summaries.len() < 2 {
        return Err(HarnessError::Config("comparison needs at least two summaries".into()));
    }
    let t_max = summaries[0].t_max;
    if let Some(bad) = summaries.iter().find(|s| s.t_max != t_max) {
        return Err(HarnessError::Comparability(format!(
            "summary `{}` has t_max {} but the table uses {}",
            bad.policy, bad.t_max, t_max
        )));
    }
    let mut rows: Vec<ComparisonRow> = summaries
        .iter()
        .map(|s| ComparisonRow {
            policy: s.policy.clone(),
            accuracy: s.accuracy,
            mean_stop: s.mean_stop,
            speedup: s.speedup,
            episodes: s.episodes,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.accuracy
            .partial_cmp(&a.accuracy)
            .unwrap()
            .then(b.speedup.partial_cmp(&a.speedup).unwrap())
    });
    Ok(ComparisonTable { t_max, rows })
}
