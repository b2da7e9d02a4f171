//! Episode traces as JSON lines: one record per step with the full
//! 12-component state, action, reward and done flag.

use crate::error::{StopError, StopResult};
use crate::state::STATE_DIM;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: usize,
    pub t: usize,
    pub state: [f64; STATE_DIM],
    pub action: u8,
    pub reward: f64,
    pub done: bool,
}

pub fn write_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace serializes"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl(doc: &str) -> StopResult<Vec<TraceRecord>> {
    doc.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| StopError::Data(format!("bad trace line: {e}"))))
        .collect()
}
