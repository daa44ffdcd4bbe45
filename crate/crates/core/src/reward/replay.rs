use std::collections::VecDeque;

use rand::Rng;

use super::credit::CreditedSample;

/// Fixed-capacity memory of credited feedback; the oldest sample is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<CreditedSample>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self { capacity, entries: VecDeque::with_capacity(capacity) }
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

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &CreditedSample> {
        self.entries.iter()
    }

    pub fn store<I: IntoIterator<Item = CreditedSample>>(&mut self, samples: I) {
        for sample in samples {
            if self.entries.len() == self.capacity {
                self.entries.pop_front();
            }
            self.entries.push_back(sample);
        }
    }

    /// `size` uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<&CreditedSample> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..size).map(|_| &self.entries[rng.gen_range(0..self.entries.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ActionId, SpaceConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(tag: f64) -> CreditedSample {
        let cfg = SpaceConfig::unit(1, 0.01).unwrap();
        CreditedSample::new(cfg.center(), ActionId::from_index(0), tag, 1.0)
    }

    #[test]
    fn evicts_oldest_beyond_capacity() {
        let mut buf = ReplayBuffer::new(700);
        buf.store((0..700).map(|i| sample(i as f64 / 1000.0)));
        assert_eq!(buf.len(), 700);
        buf.store([sample(0.9)]);
        assert_eq!(buf.len(), 700);
        assert_eq!(buf.iter().next().unwrap().target, 0.001);
        assert_eq!(buf.iter().last().unwrap().target, 0.9);
    }

    #[test]
    fn empty_store_is_a_no_op() {
        let mut buf = ReplayBuffer::new(4);
        buf.store(Vec::new());
        assert!(buf.is_empty());
    }

    #[test]
    fn interleaved_stores_keep_order() {
        let mut buf = ReplayBuffer::new(4);
        buf.store([sample(0.1), sample(0.2)]);
        buf.store([sample(0.3)]);
        buf.store([sample(0.4), sample(0.5)]);
        let targets: Vec<f64> = buf.iter().map(|s| s.target).collect();
        assert_eq!(targets, vec![0.2, 0.3, 0.4, 0.5]);
    }

    #[test]
    fn seeded_draws_repeat() {
        let mut buf = ReplayBuffer::new(100);
        buf.store((0..65).map(|i| sample(i as f64 / 100.0)));
        let a: Vec<f64> = buf.sample(32, &mut ChaCha8Rng::seed_from_u64(9)).iter().map(|s| s.target).collect();
        let b: Vec<f64> = buf.sample(32, &mut ChaCha8Rng::seed_from_u64(9)).iter().map(|s| s.target).collect();
        assert_eq!(a.len(), 32);
        assert_eq!(a, b);
    }
}
