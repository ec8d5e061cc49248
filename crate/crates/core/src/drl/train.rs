use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{select_action_with, Agent, LagrangeState, ReplayBuffer, TrainConfig, TrainError, Transition};
use crate::config::sha256_hex;
use crate::env::{Environment, N_ACTIONS};
use crate::nn::{Gradients, Mlp, Optimizer, Tape};

pub const LOG_HEADER: [&str; 11] = [
    "episode",
    "mean_cooling_power_kW",
    "mean_temp_penalty_C",
    "mean_rh_penalty_pct",
    "epsilon",
    "lambda1",
    "lambda2",
    "loss",
    "updates",
    "clipped_updates",
    "masked_actions",
];

/// Per-episode averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub mean_cooling_power: f64,
    pub mean_temp_penalty: f64,
    pub mean_rh_penalty: f64,
    /// ε at the end of the episode.
    pub epsilon: f64,
    pub lambda: [f64; 2],
    /// Mean minibatch loss over the episode's updates, 0 before the first update.
    pub loss: f64,
    pub updates: usize,
    pub clipped_updates: usize,
    pub masked_actions: usize,
}

impl EpisodeLog {
    pub fn combined_penalty(&self) -> f64 {
        self.mean_temp_penalty + self.mean_rh_penalty
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Mlp<f64>,
    pub target: Mlp<f64>,
    pub log: Vec<EpisodeLog>,
    /// Multipliers after every step; empty for the unconstrained agent.
    pub lambdas: Vec<[f64; 2]>,
    pub config_hash: String,
}

impl TrainOutcome {
    pub fn write_log<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", LOG_HEADER.join(","))?;
        for e in &self.log {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                e.episode,
                e.mean_cooling_power,
                e.mean_temp_penalty,
                e.mean_rh_penalty,
                e.epsilon,
                e.lambda[0],
                e.lambda[1],
                e.loss,
                e.updates,
                e.clipped_updates,
                e.masked_actions
            )?;
        }
        Ok(())
    }
}

pub fn train_udrl(env: &mut Environment, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if cfg.agent != Agent::Udrl {
        return Err(TrainError::InvalidConfig("train_udrl needs agent = udrl".into()));
    }
    train(env, cfg)
}

pub fn train_cdrl(env: &mut Environment, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if cfg.agent != Agent::Cdrl {
        return Err(TrainError::InvalidConfig("train_cdrl needs agent = cdrl".into()));
    }
    train(env, cfg)
}

/// Scratch space for minibatch updates.
struct Learner {
    net: Mlp<f64>,
    target: Mlp<f64>,
    opt: Optimizer<f64>,
    tape: Tape<f64>,
    target_tape: Tape<f64>,
    grads: Gradients<f64>,
    d_out: Vec<f64>,
}

impl Learner {
    /// One gradient step on `y = r − w1·c_t − w2·c_φ + γ·max Q'(x', ·)`,
    /// followed by the soft target update. Returns (loss, clipped).
    fn update(
        &mut self,
        buffer: &ReplayBuffer,
        batch: &[usize],
        weights: [f64; 2],
        cfg: &TrainConfig,
    ) -> Result<(f64, bool), TrainError> {
        self.grads.clear();
        let m = batch.len() as f64;
        let mut loss = 0.0;
        for &i in batch {
            let tr = buffer.get(i);
            self.target.forward_tape(&tr.next_state, &mut self.target_tape, None)?;
            let q_next = self.target_tape.output().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let y = tr.reward - weights[0] * tr.cost_t - weights[1] * tr.cost_phi + cfg.gamma * q_next;

            self.net.forward_tape(&tr.state, &mut self.tape, Some(tr.action))?;
            let residual = self.tape.output()[tr.action] - y;
            loss += residual * residual;
            self.d_out[tr.action] = 2.0 * residual / m;
            self.net.backward(&mut self.tape, &self.d_out, &mut self.grads)?;
            self.d_out[tr.action] = 0.0;
        }
        let clipped = self.grads.clip_norm(cfg.grad_clip);
        self.opt.apply_update(&mut self.net, &self.grads);
        self.target.soft_blend(&self.net, cfg.beta)?;
        Ok((loss / m, clipped))
    }
}

/// Runs the episode/step loop for either agent. The unconstrained agent
/// weights costs by the fixed ζ; the constrained one by the current
/// multipliers, which then take one projected dual step per control period.
pub fn train(env: &mut Environment, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let config_hash = sha256_hex(&format!("{cfg:?}"));
    env.thresholds = cfg.thresholds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Mlp::new(&cfg.layer_sizes(), &mut rng)?;
    let mut learner = Learner {
        target: net.clone(),
        opt: Optimizer::with_kind(cfg.optimizer, cfg.lr),
        tape: Tape::new(&net),
        target_tape: Tape::new(&net),
        grads: Gradients::zeros_like(&net),
        d_out: vec![0.0; N_ACTIONS],
        net,
    };
    let mut act_tape = Tape::new(&learner.net);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let schedule = cfg.epsilon();
    let mut lagrange = LagrangeState::new(cfg.lambda_max, cfg.dual_lr, cfg.window);
    let mut lambdas = Vec::new();
    if cfg.agent == Agent::Cdrl {
        lambdas.reserve(cfg.total_steps() as usize);
    }
    let mut log = Vec::with_capacity(cfg.episodes);
    let mut global: u64 = 0;

    for episode in 0..cfg.episodes {
        env.reset();
        let (mut power, mut pen_t, mut pen_phi, mut loss_sum) = (0.0, 0.0, 0.0, 0.0);
        let (mut updates, mut clipped, mut masked) = (0, 0, 0);
        for _ in 0..cfg.steps {
            let state = env.state().normalized();
            let eps = schedule.value(global);
            let mut greedy_err = None;
            let action = select_action_with(N_ACTIONS, eps, &mut rng, || {
                match learner.net.forward_tape(&state, &mut act_tape, None) {
                    Ok(()) => super::argmax(act_tape.output()),
                    Err(e) => {
                        greedy_err = Some(e);
                        0
                    }
                }
            });
            if let Some(e) = greedy_err {
                return Err(e.into());
            }
            let out = env.step_index(action)?;
            power += out.p_f + out.p_c;
            pen_t += out.cost_t;
            pen_phi += out.cost_phi;
            masked += out.flags.masked as usize;
            buffer.push(Transition {
                state,
                action,
                reward: out.reward,
                cost_t: out.cost_t,
                cost_phi: out.cost_phi,
                next_state: out.next_state.normalized(),
            });

            if buffer.len() >= cfg.warmup {
                let weights = match cfg.agent {
                    Agent::Udrl => cfg.zeta,
                    Agent::Cdrl => lagrange.lambda,
                };
                let batch = buffer.sample(cfg.batch_size, &mut rng);
                let (loss, was_clipped) = learner.update(&buffer, &batch, weights, cfg)?;
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        step: global,
                        config_hash,
                    });
                }
                loss_sum += loss;
                updates += 1;
                clipped += was_clipped as usize;
            }
            if cfg.agent == Agent::Cdrl {
                lambdas.push(lagrange.update(out.next_state.t_s, out.next_state.phi_s, &cfg.thresholds));
            }
            global += 1;
        }
        let n = cfg.steps as f64;
        log.push(EpisodeLog {
            episode,
            mean_cooling_power: power / n,
            mean_temp_penalty: pen_t / n,
            mean_rh_penalty: pen_phi / n,
            epsilon: schedule.value(global.saturating_sub(1)),
            lambda: lagrange.lambda,
            loss: if updates > 0 { loss_sum / updates as f64 } else { 0.0 },
            updates,
            clipped_updates: clipped,
            masked_actions: masked,
        });
    }
    Ok(TrainOutcome {
        net: learner.net,
        target: learner.target,
        log,
        lambdas,
        config_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Models, Thresholds};
    use crate::traces::synth_weather;
    use std::sync::Arc;

    fn tiny(agent: Agent) -> (Environment, TrainConfig) {
        let trace = Arc::new(synth_weather(1, 4).unwrap());
        let env = Environment::new(Models::default(), trace, Thresholds::default(), 50, 9).unwrap();
        let cfg = TrainConfig {
            episodes: 4,
            steps: 50,
            warmup: 64,
            hidden: vec![8, 8],
            ..TrainConfig::paper(agent)
        };
        (env, cfg)
    }

    #[test]
    fn frozen_learner_keeps_parameters() {
        let (mut env, mut cfg) = tiny(Agent::Udrl);
        cfg.eps_start = 1.0;
        cfg.eps_end = 1.0;
        cfg.lr = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let init = Mlp::<f64>::new(&cfg.layer_sizes(), &mut rng).unwrap();
        let out = train(&mut env, &cfg).unwrap();
        assert_eq!(out.net, init);
        for (t, s) in out.target.params().zip(out.net.params()) {
            assert!((t - s).abs() <= 4.0 * f64::EPSILON * s.abs());
        }
        assert!(out.log.iter().all(|e| e.epsilon == 1.0));
    }

    #[test]
    fn training_is_reproducible() {
        let (mut a, cfg) = tiny(Agent::Cdrl);
        let (mut b, _) = tiny(Agent::Cdrl);
        let (ra, rb) = (train(&mut a, &cfg).unwrap(), train(&mut b, &cfg).unwrap());
        assert_eq!(ra.log, rb.log);
        assert_eq!(ra.net, rb.net);
        assert_eq!(ra.lambdas.len(), 200);
        assert!(ra.lambdas.iter().flatten().all(|&l| (0.0..=100.0).contains(&l)));
        assert!(ra.log.iter().any(|e| e.updates > 0));
    }

    #[test]
    fn agent_mismatch_and_bad_config() {
        let (mut env, cfg) = tiny(Agent::Udrl);
        assert!(train_cdrl(&mut env, &cfg).is_err());
        let bad = TrainConfig { lr: 0.0001, ..TrainConfig::desk(Agent::Cdrl) };
        assert!(matches!(bad.validate(), Err(TrainError::InvalidConfig(_))));
    }
}
