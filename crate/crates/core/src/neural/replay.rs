//! Fixed-capacity FIFO experience store with uniform sampling.

use crate::rng::RngStream;

/// Sampling was requested before enough transitions were stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("replay buffer holds {stored} transitions, {needed} needed")]
pub struct NotReady {
    pub stored: usize,
    pub needed: usize,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores an item, evicting the oldest once full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// `batch` items drawn uniformly with replacement.
    pub fn sample(&self, batch: usize, rng: &mut RngStream) -> Result<Vec<&T>, NotReady> {
        if self.items.len() < batch || self.items.is_empty() {
            return Err(NotReady { stored: self.items.len(), needed: batch.max(1) });
        }
        Ok((0..batch).map(|_| &self.items[rng.below(self.items.len())]).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}
