//! Uniform experience replay over a fixed-capacity ring.

use crate::error::{DqnError, DqnResult};
use crate::qnet::STATE_DIM;
use numkit::Prng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: [f32; STATE_DIM],
    pub action: u8,
    pub reward: f32,
    /// Zeroed for terminal transitions (the TD target ignores it).
    pub next_state: [f32; STATE_DIM],
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Next write position once at capacity (FIFO overwrite).
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer {
            capacity,
            items: Vec::new(),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Transition] {
        &self.items
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Uniform sample without replacement within the batch.
    pub fn sample(&self, rng: &mut Prng, batch: usize) -> DqnResult<Vec<Transition>> {
        if self.items.len() < batch {
            return Err(DqnError::BufferUnderfull {
                len: self.items.len(),
                need: batch,
            });
        }
        Ok(rng
            .sample_indices(self.items.len(), batch)
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect())
    }

    /// Restore from checkpointed parts.
    pub fn restore(capacity: usize, items: Vec<Transition>, cursor: usize) -> ReplayBuffer {
        ReplayBuffer {
            capacity,
            items,
            cursor,
        }
    }
}
