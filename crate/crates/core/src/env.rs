//! One-minute control-period MDP over the air path model.
//!
//! The state is `[t_s, φ_s, p_IT, t_o, φ_o]`; an action picks supply flow,
//! coil temperature reduction and recirculation fraction from an 880-point
//! grid. The reward is the negative fan plus coil power and the two costs are
//! the supply temperature and RH excesses over their thresholds.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::power::{CoilModel, FanModel, ItModel, PowerError};
use crate::psychro::{
    steady_state_iterative, MoistAirState, PsychroConstants, PsychroError, SteadyStateInput, Tolerance, T_MAX,
    T_MIN,
};
use crate::traces::WeatherTrace;

pub const VDOT_LEVELS: [f64; 5] = [2000.0, 4000.0, 6000.0, 8000.0, 10000.0];
pub const N_DELTA_T: usize = 16;
pub const N_ALPHA: usize = 11;
pub const N_ACTIONS: usize = VDOT_LEVELS.len() * N_DELTA_T * N_ALPHA;
/// Recirculation fraction applied when full recirculation cannot reach a steady state.
pub const MASKED_ALPHA: f64 = 0.9;

/// Normalization bounds for agent inputs.
pub const NORM_T: (f64, f64) = (15.0, 45.0);
pub const NORM_RH: (f64, f64) = (0.0, 100.0);
pub const NORM_P_IT: (f64, f64) = (0.0, 90.0);

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Psychro(#[from] PsychroError),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("action index {0} outside [0, {N_ACTIONS})")]
    BadAction(usize),
    #[error("trace too short: {len} rows for episodes of {episode_len} steps")]
    TraceTooShort { len: usize, episode_len: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    pub t_s: f64,
    pub phi_s: f64,
    pub p_it: f64,
    pub t_o: f64,
    pub phi_o: f64,
}

fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo) / (hi - lo)
}

impl SystemState {
    pub fn supply(&self) -> MoistAirState<f64> {
        MoistAirState { t: self.t_s, rh: self.phi_s }
    }

    pub fn outside(&self) -> MoistAirState<f64> {
        MoistAirState { t: self.t_o, rh: self.phi_o }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let ok_rh = |v: f64| (0.0..=100.0).contains(&v);
        if !(ok_rh(self.phi_s) && ok_rh(self.phi_o)) {
            return Err(EnvError::InvalidState(format!(
                "relative humidities {} / {} outside [0, 100]",
                self.phi_s, self.phi_o
            )));
        }
        if !(self.p_it >= 0.0 && self.t_s.is_finite() && self.t_o.is_finite()) {
            return Err(EnvError::InvalidState(format!("{self:?}")));
        }
        Ok(())
    }

    /// Affine map of each feature by the fixed bounds; values inside the
    /// bounds land in [0, 1]. Out-of-range values are not clipped.
    pub fn normalized(&self) -> [f64; 5] {
        [
            scale(self.t_s, NORM_T),
            scale(self.phi_s, NORM_RH),
            scale(self.p_it, NORM_P_IT),
            scale(self.t_o, NORM_T),
            scale(self.phi_o, NORM_RH),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlAction {
    pub vdot_s: f64,
    pub delta_t: f64,
    pub alpha: f64,
}

impl ControlAction {
    /// Grid coordinates `(flow level, Δt, alpha tenths)`.
    pub fn from_grid(vi: usize, di: usize, ai: usize) -> Self {
        Self {
            vdot_s: VDOT_LEVELS[vi],
            delta_t: di as f64,
            alpha: ai as f64 / 10.0,
        }
    }

    pub fn from_index(index: usize) -> Result<Self, EnvError> {
        if index >= N_ACTIONS {
            return Err(EnvError::BadAction(index));
        }
        let ai = index % N_ALPHA;
        let di = (index / N_ALPHA) % N_DELTA_T;
        let vi = index / (N_ALPHA * N_DELTA_T);
        Ok(Self::from_grid(vi, di, ai))
    }

    pub fn grid(&self) -> Option<(usize, usize, usize)> {
        let vi = VDOT_LEVELS.iter().position(|&v| v == self.vdot_s)?;
        let di = self.delta_t.round();
        let ai = (self.alpha * 10.0).round();
        let on_grid = (self.delta_t - di).abs() < 1e-9
            && (self.alpha * 10.0 - ai).abs() < 1e-9
            && (0.0..N_DELTA_T as f64).contains(&di)
            && (0.0..N_ALPHA as f64).contains(&ai);
        on_grid.then_some((vi, di as usize, ai as usize))
    }

    /// Position in [`action_space`], if the action lies on the grid.
    pub fn index(&self) -> Option<usize> {
        let (vi, di, ai) = self.grid()?;
        Some((vi * N_DELTA_T + di) * N_ALPHA + ai)
    }
}

/// All actions, flow ascending, then Δt, then alpha.
pub fn action_space() -> Vec<ControlAction> {
    (0..N_ACTIONS).map(|i| ControlAction::from_index(i).unwrap()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub t_th: f64,
    pub phi_th: f64,
}

impl Thresholds {
    pub const T_GRID: [f64; 3] = [32.0, 35.0, 40.0];
    pub const PHI_GRID: [f64; 2] = [65.0, 80.0];

    pub fn is_standard(&self) -> bool {
        Self::T_GRID.contains(&self.t_th) && Self::PHI_GRID.contains(&self.phi_th)
    }

    pub fn cost_t(&self, t_s: f64) -> f64 {
        (t_s - self.t_th).max(0.0)
    }

    pub fn cost_phi(&self, phi_s: f64) -> f64 {
        (phi_s - self.phi_th).max(0.0)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { t_th: 32.0, phi_th: 80.0 }
    }
}

/// Physics and power models driving a step.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub air: PsychroConstants<f64>,
    pub eta: f64,
    pub tol: Tolerance<f64>,
    pub coil: CoilModel<f64>,
    pub fan: FanModel<f64>,
    pub it: ItModel,
}

impl Default for Models {
    fn default() -> Self {
        Self {
            air: PsychroConstants::default(),
            eta: 1.0,
            tol: Tolerance::default(),
            coil: CoilModel::default(),
            fan: FanModel::default(),
            it: ItModel::default(),
        }
    }
}

impl Models {
    pub fn cooling_power(&self, a: &ControlAction) -> Result<(f64, f64), EnvError> {
        let p_f = self.fan.power(a.vdot_s)?;
        let p_c = self.coil.power(&self.air, a.vdot_s, a.delta_t);
        Ok((p_f, p_c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepFlags {
    pub supersaturated: bool,
    /// Full recirculation was replaced by [`MASKED_ALPHA`].
    pub masked: bool,
    /// Supply temperature hit the simulator bound and was clamped.
    pub clamped: bool,
}

/// Supply condition at the end of a control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyOutcome {
    pub supply: MoistAirState<f64>,
    pub w: f64,
    pub alpha_applied: f64,
    pub iterations: usize,
    pub flags: StepFlags,
}

/// Clamps a supply temperature to the simulator bound, recomputing RH at the
/// same moisture content.
pub fn bound_supply(air: &PsychroConstants<f64>, t: f64, w: f64) -> Result<(MoistAirState<f64>, bool, bool), PsychroError> {
    let tc = t.clamp(T_MIN, T_MAX);
    let cond = air.state_at(tc, w)?;
    Ok((cond.state, cond.supersaturated, tc != t))
}

/// Steady supply air for one action. Shared by the environment and by the
/// surrogate data generator so both see the same transition.
pub fn supply_transition(
    models: &Models,
    supply: &MoistAirState<f64>,
    outside: &MoistAirState<f64>,
    action: &ControlAction,
    p_it: f64,
) -> Result<SupplyOutcome, EnvError> {
    let mut input = SteadyStateInput {
        supply_init: *supply,
        outside: *outside,
        vdot_s: action.vdot_s,
        delta_t: action.delta_t,
        alpha: action.alpha,
        p_it,
        eta: models.eta,
    };
    let mut masked = false;
    let solved = match steady_state_iterative(&models.air, &input, &models.tol) {
        Err(PsychroError::NonConvergent { .. }) if action.alpha >= 1.0 => {
            masked = true;
            input.alpha = MASKED_ALPHA;
            steady_state_iterative(&models.air, &input, &models.tol)?
        }
        other => other?,
    };
    let raw = solved.condition.state;
    let (state, supersat, clamped) = bound_supply(&models.air, raw.t, solved.props.w)?;
    Ok(SupplyOutcome {
        supply: state,
        w: solved.props.w,
        alpha_applied: input.alpha,
        iterations: solved.iterations,
        flags: StepFlags {
            supersaturated: solved.condition.supersaturated || supersat,
            masked,
            clamped,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: SystemState,
    /// `−(p_f + p_c)`, kW.
    pub reward: f64,
    pub cost_t: f64,
    pub cost_phi: f64,
    pub p_f: f64,
    pub p_c: f64,
    pub flags: StepFlags,
}

/// `r − ζ1·c_t − ζ2·c_φ`.
pub fn weighted_reward(outcome: &StepOutcome, zeta1: f64, zeta2: f64) -> f64 {
    outcome.reward - zeta1 * outcome.cost_t - zeta2 * outcome.cost_phi
}

/// One control period. `it_history` holds the last `k_hist` IT powers, newest
/// last, and `period_index` feeds the diurnal workload term.
#[allow(clippy::too_many_arguments)]
pub fn step<R: Rng + ?Sized>(
    models: &Models,
    x: &SystemState,
    a: &ControlAction,
    ambient_next: &MoistAirState<f64>,
    thresholds: &Thresholds,
    it_history: &[f64],
    period_index: u64,
    rng: &mut R,
) -> Result<StepOutcome, EnvError> {
    x.validate()?;
    let s = supply_transition(models, &x.supply(), &x.outside(), a, x.p_it)?;
    let p_it_next = models.it.next(it_history, a.vdot_s, period_index, rng)?;
    let (p_f, p_c) = models.cooling_power(a)?;
    Ok(StepOutcome {
        next_state: SystemState {
            t_s: s.supply.t,
            phi_s: s.supply.rh,
            p_it: p_it_next,
            t_o: ambient_next.t,
            phi_o: ambient_next.rh,
        },
        reward: -(p_f + p_c),
        cost_t: thresholds.cost_t(s.supply.t),
        cost_phi: thresholds.cost_phi(s.supply.rh),
        p_f,
        p_c,
        flags: s.flags,
    })
}

/// Trace-driven environment holding the episode cursor, IT history and RNG.
#[derive(Debug, Clone)]
pub struct Environment {
    pub models: Models,
    pub thresholds: Thresholds,
    trace: Arc<WeatherTrace>,
    episode_len: usize,
    cursor: usize,
    state: SystemState,
    history: VecDeque<f64>,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(
        models: Models,
        trace: Arc<WeatherTrace>,
        thresholds: Thresholds,
        episode_len: usize,
        seed: u64,
    ) -> Result<Self, EnvError> {
        if trace.len() < episode_len || episode_len == 0 {
            return Err(EnvError::TraceTooShort {
                len: trace.len(),
                episode_len,
            });
        }
        let row = trace.rows()[0];
        let k = models.it.k_hist;
        let base = models.it.base;
        Ok(Self {
            models,
            thresholds,
            trace,
            episode_len,
            cursor: 0,
            state: SystemState {
                t_s: row.t_o,
                phi_s: row.rh_o,
                p_it: base,
                t_o: row.t_o,
                phi_o: row.rh_o,
            },
            history: std::iter::repeat_n(base, k).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn trace(&self) -> &WeatherTrace {
        &self.trace
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn episode_len(&self) -> usize {
        self.episode_len
    }

    /// Starts an episode at a uniformly drawn trace row.
    pub fn reset(&mut self) -> SystemState {
        let start = self.rng.random_range(0..=self.trace.len() - self.episode_len);
        self.reset_at(start)
    }

    /// Starts an episode at a given row: supply air equals the ambient and IT
    /// power sits at the model base.
    pub fn reset_at(&mut self, start: usize) -> SystemState {
        let start = start.min(self.trace.len() - 1);
        let row = self.trace.rows()[start];
        let base = self.models.it.base;
        self.cursor = start;
        self.history.iter_mut().for_each(|p| *p = base);
        self.state = SystemState {
            t_s: row.t_o,
            phi_s: row.rh_o,
            p_it: base,
            t_o: row.t_o,
            phi_o: row.rh_o,
        };
        self.state
    }

    pub fn step_index(&mut self, index: usize) -> Result<StepOutcome, EnvError> {
        let a = ControlAction::from_index(index)?;
        self.step(&a)
    }

    /// Advances one period. Past the end of the trace the last row is reused.
    pub fn step(&mut self, a: &ControlAction) -> Result<StepOutcome, EnvError> {
        let rows = self.trace.rows();
        let next_row = rows[(self.cursor + 1).min(rows.len() - 1)];
        let minute = rows[self.cursor].minute;
        let ambient_next = MoistAirState { t: next_row.t_o, rh: next_row.rh_o };
        let history = self.history.make_contiguous();
        let out = step(
            &self.models,
            &self.state,
            a,
            &ambient_next,
            &self.thresholds,
            history,
            minute,
            &mut self.rng,
        )?;
        self.history.pop_front();
        self.history.push_back(out.next_state.p_it);
        self.state = out.next_state;
        self.cursor = (self.cursor + 1).min(rows.len() - 1);
        Ok(out)
    }
}
