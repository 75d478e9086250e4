use rand::Rng;

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest item.
#[derive(Clone, Debug)]
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

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
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

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `n` uniform draws with replacement.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<&T> {
        assert!(!self.items.is_empty(), "cannot sample an empty buffer");
        (0..n)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    #[test]
    fn matches_naive_queue_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for cap in [1usize, 7, 64] {
            let mut ring = ReplayBuffer::new(cap);
            let mut model = VecDeque::new();
            for _ in 0..1000 {
                let v: u32 = rng.random();
                ring.push(v);
                model.push_back(v);
                if model.len() > cap {
                    model.pop_front();
                }
                assert_eq!(ring.len(), model.len());
                assert!(ring.iter().eq(model.iter()));
            }
            assert_eq!(ring.len(), cap);
        }
    }

    #[test]
    fn sampling_covers_contents() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ring = ReplayBuffer::new(4);
        for v in 0..10 {
            ring.push(v);
        }
        let drawn = ring.sample(400, &mut rng);
        assert!(drawn.iter().all(|&&v| (6..10).contains(&v)));
        for v in 6..10 {
            assert!(drawn.iter().any(|&&d| d == v));
        }
    }
}
