//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Later assignments win,
//! so command-line overrides are applied after the file. Every command writes
//! the resolved configuration back out as a snapshot; its SHA-256 identifies
//! the run.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::drl::{Agent, TrainConfig};
use crate::env::{Models, Thresholds};
use crate::nn::OptimizerKind;
use crate::power::{CoilModel, FanModel, ItMode, ItModel, SyntheticIt};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {msg}")]
    BadValue { key: String, value: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses `key = value` lines into ordered pairs.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: i + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Parse { line: i + 1, msg: "empty key".into() });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Paper,
    Desk,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Profile::Paper),
            "desk" => Some(Profile::Desk),
            _ => None,
        }
    }
}

/// Everything needed to reproduce a training or evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub models: Models,
    pub synthetic_it: SyntheticIt,
}

impl RunConfig {
    pub fn new(agent: Agent, profile: Profile) -> Self {
        let train = match profile {
            Profile::Paper => TrainConfig::paper(agent),
            Profile::Desk => TrainConfig::desk(agent),
        };
        let synthetic_it = SyntheticIt::default();
        Self {
            train,
            models: Models::default(),
            synthetic_it,
        }
    }

    /// Models with the configured synthetic workload.
    pub fn build_models(&self) -> Models {
        let mut m = self.models.clone();
        let k_hist = m.it.k_hist;
        m.it = ItModel {
            k_hist,
            base: self.synthetic_it.base,
            mode: ItMode::Synthetic(self.synthetic_it),
        };
        m
    }

    pub fn load_overrides(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        for (k, v) in parse_kv(&text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let t = &mut self.train;
        let m = &mut self.models;
        let it = &mut self.synthetic_it;
        match key {
            "agent" => {
                t.agent = Agent::parse(value).ok_or_else(|| bad(key, value, "expected udrl or cdrl"))?;
            }
            "episodes" => t.episodes = num(key, value)?,
            "steps" => t.steps = num(key, value)?,
            "gamma" => t.gamma = num(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "dual_lr" => t.dual_lr = num(key, value)?,
            "beta" => t.beta = num(key, value)?,
            "zeta1" => t.zeta[0] = num(key, value)?,
            "zeta2" => t.zeta[1] = num(key, value)?,
            "lambda1_max" => t.lambda_max[0] = num(key, value)?,
            "lambda2_max" => t.lambda_max[1] = num(key, value)?,
            "window" => t.window = num(key, value)?,
            "t_th" => t.thresholds.t_th = num(key, value)?,
            "phi_th" => t.thresholds.phi_th = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "buffer_capacity" => t.buffer_capacity = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "warmup" => t.warmup = num(key, value)?,
            "eps_start" => t.eps_start = num(key, value)?,
            "eps_end" => t.eps_end = num(key, value)?,
            "eps_decay_frac" => t.eps_decay_frac = num(key, value)?,
            "grad_clip" => t.grad_clip = num(key, value)?,
            "hidden" => {
                t.hidden = value
                    .split(',')
                    .map(|s| num::<usize>(key, s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "optimizer" => {
                t.optimizer = match value {
                    "sgd" => OptimizerKind::Sgd,
                    "adam" => OptimizerKind::Adam,
                    _ => return Err(bad(key, value, "expected sgd or adam")),
                }
            }
            "eta" => m.eta = num(key, value)?,
            "cp" => m.air.cp = num(key, value)?,
            "cpw" => m.air.cpw = num(key, value)?,
            "latent" => m.air.latent = num(key, value)?,
            "rho" => m.air.rho = num(key, value)?,
            "p_atm" => m.air.p_atm = num(key, value)?,
            "eps_h" => m.tol.eps_h = num(key, value)?,
            "eps_w" => m.tol.eps_w = num(key, value)?,
            "max_iter" => m.tol.max_iter = num(key, value)?,
            "coil_xi" => {
                m.coil = CoilModel::new(num(key, value)?).map_err(|e| bad(key, value, &e.to_string()))?;
            }
            "fan_p_max" => m.fan.p_max = num(key, value)?,
            "fan_vdot_max" => m.fan.vdot_max = num(key, value)?,
            "fan_exponent" => m.fan.exponent = num(key, value)?,
            "k_hist" => m.it.k_hist = num(key, value)?,
            "it_base" => it.base = num(key, value)?,
            "it_amplitude" => it.amplitude = num(key, value)?,
            "it_ar" => it.ar = num(key, value)?,
            "it_fan_coupling" => it.fan_coupling = num(key, value)?,
            "it_noise_sd" => it.noise_sd = num(key, value)?,
            "it_period" => it.period = num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        let m = &self.models;
        let it = &self.synthetic_it;
        let hidden: Vec<String> = t.hidden.iter().map(usize::to_string).collect();
        vec![
            ("agent", t.agent.name().into()),
            ("episodes", t.episodes.to_string()),
            ("steps", t.steps.to_string()),
            ("gamma", t.gamma.to_string()),
            ("lr", t.lr.to_string()),
            ("dual_lr", t.dual_lr.to_string()),
            ("beta", t.beta.to_string()),
            ("zeta1", t.zeta[0].to_string()),
            ("zeta2", t.zeta[1].to_string()),
            ("lambda1_max", t.lambda_max[0].to_string()),
            ("lambda2_max", t.lambda_max[1].to_string()),
            ("window", t.window.to_string()),
            ("t_th", t.thresholds.t_th.to_string()),
            ("phi_th", t.thresholds.phi_th.to_string()),
            ("seed", t.seed.to_string()),
            ("buffer_capacity", t.buffer_capacity.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("warmup", t.warmup.to_string()),
            ("eps_start", t.eps_start.to_string()),
            ("eps_end", t.eps_end.to_string()),
            ("eps_decay_frac", t.eps_decay_frac.to_string()),
            ("grad_clip", t.grad_clip.to_string()),
            ("hidden", hidden.join(",")),
            (
                "optimizer",
                match t.optimizer {
                    OptimizerKind::Sgd => "sgd".into(),
                    OptimizerKind::Adam => "adam".into(),
                },
            ),
            ("eta", m.eta.to_string()),
            ("cp", m.air.cp.to_string()),
            ("cpw", m.air.cpw.to_string()),
            ("latent", m.air.latent.to_string()),
            ("rho", m.air.rho.to_string()),
            ("p_atm", m.air.p_atm.to_string()),
            ("eps_h", m.tol.eps_h.to_string()),
            ("eps_w", m.tol.eps_w.to_string()),
            ("max_iter", m.tol.max_iter.to_string()),
            ("coil_xi", m.coil.xi.to_string()),
            ("fan_p_max", m.fan.p_max.to_string()),
            ("fan_vdot_max", m.fan.vdot_max.to_string()),
            ("fan_exponent", m.fan.exponent.to_string()),
            ("k_hist", m.it.k_hist.to_string()),
            ("it_base", it.base.to_string()),
            ("it_amplitude", it.amplitude.to_string()),
            ("it_ar", it.ar.to_string()),
            ("it_fan_coupling", it.fan_coupling.to_string()),
            ("it_noise_sd", it.noise_sd.to_string()),
            ("it_period", it.period.to_string()),
        ]
    }

    pub fn thresholds(&self) -> Thresholds {
        self.train.thresholds
    }

    pub fn validate_models(&self) -> Result<(), ConfigError> {
        FanModel::new(self.models.fan.p_max, self.models.fan.vdot_max, self.models.fan.exponent)
            .map_err(|e| bad("fan", "", &e.to_string()))?;
        if !(self.models.eta > 0.0 && self.models.eta <= 1.0) {
            return Err(bad("eta", &self.models.eta.to_string(), "must lie in (0, 1]"));
        }
        if self.models.it.k_hist == 0 {
            return Err(bad("k_hist", "0", "must be positive"));
        }
        Ok(())
    }
}

/// Ordered `key = value` record written next to every output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub entries: Vec<(String, String)>,
}

impl Snapshot {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn extend_run(&mut self, run: &RunConfig) {
        for (k, v) in run.pairs() {
            self.push(k, v);
        }
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.to_text())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn bad(key: &str, value: &str, msg: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        msg: msg.to_string(),
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, &e.to_string()))
}
