use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Bounded FIFO replay memory. When full, pushing discards the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { items: VecDeque::with_capacity(capacity.min(1 << 16)), capacity }
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

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// `n` distinct entries drawn uniformly.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&T>> {
        if n > self.items.len() {
            return Err(Error::Insufficient(alloc::format!(
                "cannot sample {n} transitions from a buffer of {}",
                self.items.len()
            )));
        }
        Ok(rand::seq::index::sample(rng, self.items.len(), n).into_iter().map(|i| &self.items[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn evicts_oldest_first() {
        let mut b = ReplayBuffer::new(2);
        for i in 0..3 {
            b.push(i);
        }
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), [1, 2]);
    }

    #[test]
    fn full_sample_is_a_permutation() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..7 {
            b.push(i);
        }
        let mut s: Vec<i32> = b.sample(7, &mut stream(1, 5)).unwrap().into_iter().copied().collect();
        s.sort();
        assert_eq!(s, (0..7).collect::<Vec<_>>());
        assert!(b.sample(8, &mut stream(1, 5)).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let mut b = ReplayBuffer::new(100);
        (0..100).for_each(|i| b.push(i));
        let a: Vec<i32> = b.sample(10, &mut stream(3, 5)).unwrap().into_iter().copied().collect();
        let c: Vec<i32> = b.sample(10, &mut stream(3, 5)).unwrap().into_iter().copied().collect();
        assert_eq!(a, c);
    }
}
