use std::collections::VecDeque;

use rand::Rng;

use crate::env::{SystemState, Thresholds};
use crate::nn::{Mlp, NnError};

/// Linear decay from `start` to `end` over `horizon` steps, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.horizon == 0 || step >= self.horizon {
            return self.end;
        }
        let frac = step as f64 / self.horizon as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice over `q`.
pub fn select_action<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    select_action_with(q.len(), epsilon, rng, || argmax(q))
}

/// ε-greedy with a lazily computed greedy action. The coin is always drawn
/// first, so the random stream does not depend on whether Q was evaluated.
pub fn select_action_with<R: Rng + ?Sized>(
    n: usize,
    epsilon: f64,
    rng: &mut R,
    greedy: impl FnOnce() -> usize,
) -> usize {
    let coin: f64 = rng.random();
    if coin < epsilon {
        rng.random_range(0..n)
    } else {
        greedy()
    }
}

/// Projected dual ascent on the two constraint multipliers, driven by trailing
/// means of supply temperature and RH.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeState {
    pub lambda: [f64; 2],
    pub lambda_max: [f64; 2],
    pub eta: f64,
    pub window: usize,
    t_hist: VecDeque<f64>,
    phi_hist: VecDeque<f64>,
}

impl LagrangeState {
    pub fn new(lambda_max: [f64; 2], eta: f64, window: usize) -> Self {
        Self {
            lambda: [0.0; 2],
            lambda_max,
            eta,
            window: window.max(1),
            t_hist: VecDeque::with_capacity(window + 1),
            phi_hist: VecDeque::with_capacity(window + 1),
        }
    }

    /// Trailing means over at most `window` observations.
    pub fn means(&self) -> (f64, f64) {
        let mean = |d: &VecDeque<f64>| d.iter().sum::<f64>() / d.len().max(1) as f64;
        (mean(&self.t_hist), mean(&self.phi_hist))
    }

    pub fn update(&mut self, t_s: f64, phi_s: f64, th: &Thresholds) -> [f64; 2] {
        for (d, v) in [(&mut self.t_hist, t_s), (&mut self.phi_hist, phi_s)] {
            d.push_back(v);
            if d.len() > self.window {
                d.pop_front();
            }
        }
        let (t_bar, phi_bar) = self.means();
        let step = [t_bar - th.t_th, phi_bar - th.phi_th];
        for i in 0..2 {
            self.lambda[i] = (self.lambda[i] + self.eta * step[i]).clamp(0.0, self.lambda_max[i]);
        }
        self.lambda
    }
}

/// Deterministic controller acting greedily on a trained Q-network.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub net: Mlp<f64>,
}

impl GreedyPolicy {
    pub fn new(net: Mlp<f64>) -> Self {
        Self { net }
    }

    pub fn act(&self, x: &SystemState) -> Result<usize, NnError> {
        Ok(argmax(&self.net.forward(&x.normalized())?))
    }
}
