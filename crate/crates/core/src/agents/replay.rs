use std::collections::VecDeque;

use rand::Rng;

/// One stored `(context, action, reward)` tuple; the context is kept in its
/// encoded network-input form.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub input: Vec<f64>,
    pub action: usize,
    pub reward: f64,
}

/// Bounded FIFO memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    entries: VecDeque<Experience>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Appends, evicting the oldest entry when full. Returns the evicted one.
    pub fn push(&mut self, exp: Experience) -> Option<Experience> {
        let evicted = if self.is_full() { self.entries.pop_front() } else { None };
        self.entries.push_back(exp);
        evicted
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.entries.iter()
    }

    /// `n` distinct entries chosen uniformly, or `None` when fewer are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Experience>> {
        if n > self.len() {
            return None;
        }
        Some(
            rand::seq::index::sample(rng, self.len(), n)
                .into_iter()
                .map(|i| &self.entries[i])
                .collect(),
        )
    }
}
