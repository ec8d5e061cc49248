//! Offline DQN training: an unconstrained agent with fixed penalty weights
//! and a constrained agent whose penalty weights are Lagrange multipliers
//! adapted by projected dual ascent.

mod policy;
mod replay;
mod train;

use thiserror::Error;

pub use policy::{argmax, select_action, select_action_with, EpsilonSchedule, GreedyPolicy, LagrangeState};
pub use replay::{ReplayBuffer, Transition};
pub use train::{train, train_cdrl, train_udrl, EpisodeLog, TrainOutcome, LOG_HEADER};

use crate::env::{EnvError, Thresholds, N_ACTIONS};
use crate::nn::{NnError, OptimizerKind};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at step {step} (config {config_hash})")]
    NonFiniteLoss { step: u64, config_hash: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Udrl,
    Cdrl,
}

impl Agent {
    pub fn name(self) -> &'static str {
        match self {
            Agent::Udrl => "udrl",
            Agent::Cdrl => "cdrl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "udrl" => Some(Agent::Udrl),
            "cdrl" => Some(Agent::Cdrl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub agent: Agent,
    pub episodes: usize,
    pub steps: usize,
    pub gamma: f64,
    /// Q-network step size η1.
    pub lr: f64,
    /// Multiplier step size η2.
    pub dual_lr: f64,
    /// Soft target weight β.
    pub beta: f64,
    /// Fixed penalty weights (ζ1, ζ2) of the unconstrained agent.
    pub zeta: [f64; 2],
    pub lambda_max: [f64; 2],
    pub window: usize,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Share of all training steps over which ε decays.
    pub eps_decay_frac: f64,
    /// Global gradient-norm cap; `f64::INFINITY` disables clipping.
    pub grad_clip: f64,
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
}

impl TrainConfig {
    /// Full-length defaults: 3000 episodes of 1000 steps.
    pub fn paper(agent: Agent) -> Self {
        Self {
            agent,
            episodes: 3000,
            steps: 1000,
            gamma: match agent {
                Agent::Udrl => 0.99,
                Agent::Cdrl => 0.5,
            },
            lr: 0.01,
            dual_lr: 0.001,
            beta: 0.01,
            zeta: [2.0, 2.0],
            lambda_max: [100.0, 100.0],
            window: 50,
            thresholds: Thresholds::default(),
            seed: 0,
            buffer_capacity: 50_000,
            batch_size: 64,
            warmup: 1000,
            eps_start: 1.0,
            eps_end: 0.1,
            eps_decay_frac: 0.5,
            grad_clip: 10.0,
            hidden: vec![128, 64, 32],
            optimizer: OptimizerKind::Sgd,
        }
    }

    /// Desk-scale run: 200 episodes of 200 steps.
    pub fn desk(agent: Agent) -> Self {
        Self {
            episodes: 200,
            steps: 200,
            ..Self::paper(agent)
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.episodes as u64 * self.steps as u64
    }

    pub fn epsilon(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.eps_start,
            end: self.eps_end,
            horizon: (self.total_steps() as f64 * self.eps_decay_frac).round() as u64,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![5];
        s.extend(&self.hidden);
        s.push(N_ACTIONS);
        s
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::InvalidConfig(m));
        if self.episodes == 0 || self.steps == 0 {
            return fail("episodes and steps must be positive".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.lr >= 0.0 && self.dual_lr >= 0.0) {
            return fail("step sizes must be non-negative".into());
        }
        if self.agent == Agent::Cdrl && !(self.lr > self.dual_lr) {
            return fail(format!(
                "two-timescale updates need lr > dual_lr, got {} <= {}",
                self.lr, self.dual_lr
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return fail(format!("beta {} outside (0, 1]", self.beta));
        }
        if self.zeta.iter().chain(&self.lambda_max).any(|v| !(*v >= 0.0)) {
            return fail("penalty weights and multiplier bounds must be non-negative".into());
        }
        if self.window == 0 {
            return fail("window must be positive".into());
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return fail(format!(
                "batch size {} must be in [1, buffer capacity {}]",
                self.batch_size, self.buffer_capacity
            ));
        }
        if self.warmup < self.batch_size {
            return fail(format!("warmup {} smaller than batch size {}", self.warmup, self.batch_size));
        }
        let unit = 0.0..=1.0;
        if !(unit.contains(&self.eps_start) && unit.contains(&self.eps_end) && unit.contains(&self.eps_decay_frac)) {
            return fail("epsilon settings must lie in [0, 1]".into());
        }
        if !(self.grad_clip > 0.0) {
            return fail("grad_clip must be positive".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail(format!("bad hidden layer sizes {:?}", self.hidden));
        }
        Ok(())
    }
}
