//! Trace-driven execution of a fixed controller.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::baselines::{Hysteresis, OneStepOracle};
use crate::drl::GreedyPolicy;
use crate::env::{ControlAction, EnvError, Environment, Models, SystemState, Thresholds};
use crate::nn::NnError;
use crate::traces::WeatherTrace;

pub const STEP_HEADER: [&str; 12] = [
    "minute", "vdot_s", "delta_t", "alpha", "t_s", "phi_s", "p_f", "p_c", "p_it", "c_t", "c_phi", "masked",
];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub trait Controller {
    fn name(&self) -> &str;
    fn decide(&mut self, x: &SystemState, th: &Thresholds) -> Result<ControlAction, EvalError>;
}

pub struct DqnController {
    pub label: String,
    pub policy: GreedyPolicy,
}

impl Controller for DqnController {
    fn name(&self) -> &str {
        &self.label
    }

    fn decide(&mut self, x: &SystemState, _th: &Thresholds) -> Result<ControlAction, EvalError> {
        Ok(ControlAction::from_index(self.policy.act(x)?)?)
    }
}

impl Controller for Hysteresis {
    fn name(&self) -> &str {
        "hysteresis"
    }

    fn decide(&mut self, x: &SystemState, th: &Thresholds) -> Result<ControlAction, EvalError> {
        Ok(self.act(x, th))
    }
}

impl Controller for OneStepOracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn decide(&mut self, x: &SystemState, th: &Thresholds) -> Result<ControlAction, EvalError> {
        Ok(ControlAction::from_index(OneStepOracle::decide(self, x, th)?)?)
    }
}

/// One executed control period. Supply conditions and IT power are those
/// reached at the end of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub minute: u64,
    pub action: ControlAction,
    pub t_s: f64,
    pub phi_s: f64,
    pub p_f: f64,
    pub p_c: f64,
    pub p_it: f64,
    pub c_t: f64,
    pub c_phi: f64,
    pub masked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub mean_t_s: f64,
    pub std_t_s: f64,
    pub mean_phi_s: f64,
    pub std_phi_s: f64,
    /// Mean of `p_f + p_c`, kW.
    pub mean_cooling_power: f64,
    pub mean_p_f: f64,
    pub mean_p_c: f64,
    pub mean_c_t: f64,
    pub mean_c_phi: f64,
    /// Share of periods with any threshold exceeded.
    pub violation_rate: f64,
}

fn mean_std(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count().max(1) as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

impl Summary {
    pub fn from_records(r: &[StepRecord]) -> Self {
        let mean = |f: fn(&StepRecord) -> f64| mean_std(r.iter().map(f)).0;
        let (mean_t_s, std_t_s) = mean_std(r.iter().map(|s| s.t_s));
        let (mean_phi_s, std_phi_s) = mean_std(r.iter().map(|s| s.phi_s));
        Self {
            steps: r.len(),
            mean_t_s,
            std_t_s,
            mean_phi_s,
            std_phi_s,
            mean_cooling_power: mean(|s| s.p_f + s.p_c),
            mean_p_f: mean(|s| s.p_f),
            mean_p_c: mean(|s| s.p_c),
            mean_c_t: mean(|s| s.c_t),
            mean_c_phi: mean(|s| s.c_phi),
            violation_rate: mean(|s| (s.c_t > 0.0 || s.c_phi > 0.0) as u8 as f64),
        }
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("steps", self.steps.to_string()),
            ("mean_t_s", self.mean_t_s.to_string()),
            ("std_t_s", self.std_t_s.to_string()),
            ("mean_phi_s", self.mean_phi_s.to_string()),
            ("std_phi_s", self.std_phi_s.to_string()),
            ("mean_cooling_power_kW", self.mean_cooling_power.to_string()),
            ("mean_p_f", self.mean_p_f.to_string()),
            ("mean_p_c", self.mean_p_c.to_string()),
            ("mean_c_t", self.mean_c_t.to_string()),
            ("mean_c_phi", self.mean_c_phi.to_string()),
            ("violation_rate", self.violation_rate.to_string()),
        ]
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (k, v) in self.pairs() {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub records: Vec<StepRecord>,
    pub summary: Summary,
}

impl EvalRun {
    pub fn write_steps<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", STEP_HEADER.join(","))?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.minute,
                r.action.vdot_s,
                r.action.delta_t,
                r.action.alpha,
                r.t_s,
                r.phi_s,
                r.p_f,
                r.p_c,
                r.p_it,
                r.c_t,
                r.c_phi,
                r.masked as u8
            )?;
        }
        Ok(())
    }
}

/// Runs `controller` from the first trace row for `steps` periods (capped at
/// the trace length). `seed` drives the IT workload noise.
pub fn evaluate(
    controller: &mut dyn Controller,
    models: &Models,
    trace: Arc<WeatherTrace>,
    thresholds: Thresholds,
    steps: usize,
    seed: u64,
) -> Result<EvalRun, EvalError> {
    let steps = steps.min(trace.len());
    let mut env = Environment::new(models.clone(), trace, thresholds, steps, seed)?;
    env.reset_at(0);
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let minute = env.trace().rows()[env.cursor()].minute;
        let x = *env.state();
        let a = controller.decide(&x, &thresholds)?;
        let out = env.step(&a)?;
        records.push(StepRecord {
            minute,
            action: a,
            t_s: out.next_state.t_s,
            phi_s: out.next_state.phi_s,
            p_f: out.p_f,
            p_c: out.p_c,
            p_it: out.next_state.p_it,
            c_t: out.cost_t,
            c_phi: out.cost_phi,
            masked: out.flags.masked,
        });
    }
    let summary = Summary::from_records(&records);
    Ok(EvalRun { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::synth_weather;

    #[test]
    fn summary_matches_columns() {
        let trace = Arc::new(synth_weather(1, 8).unwrap());
        let th = Thresholds { t_th: 32.0, phi_th: 80.0 };
        let run = evaluate(&mut Hysteresis::default(), &Models::default(), trace, th, 300, 1).unwrap();
        assert_eq!(run.records.len(), 300);
        let s = &run.summary;
        let n = 300.0;
        let p: f64 = run.records.iter().map(|r| r.p_f + r.p_c).sum::<f64>() / n;
        assert!((s.mean_cooling_power - p).abs() < 1e-12);
        assert!(run.records.iter().all(|r| r.action.vdot_s == 10000.0));
        let mut buf = Vec::new();
        run.write_steps(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 301);
    }
}
