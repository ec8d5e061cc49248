use rand::Rng;

/// One environment interaction with normalized states and raw signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; 5],
    pub action: usize,
    /// Negative cooling power, kW.
    pub reward: f64,
    pub cost_t: f64,
    pub cost_phi: f64,
    pub next_state: [f64; 5],
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.state.iter().chain(&self.next_state).all(|v| v.is_finite())
            && self.reward.is_finite()
            && self.cost_t.is_finite()
            && self.cost_phi.is_finite()
    }
}

/// Fixed-capacity ring; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            data: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.data[i]
    }

    /// `batch` distinct indices drawn uniformly from the current contents.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        rand::seq::index::sample(rng, self.data.len(), batch.min(self.data.len())).into_vec()
    }
}
