//! Reference controllers: rule-based hysteresis and a one-step exhaustive
//! lookahead over the full action grid.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::env::{
    bound_supply, supply_transition, ControlAction, EnvError, Models, SystemState, Thresholds, MASKED_ALPHA,
    N_ACTIONS, N_ALPHA, N_DELTA_T, VDOT_LEVELS,
};
use crate::psychro::{closed_form_props, MoistAirState, SteadyStateInput};

/// Setpoints carried between hysteresis decisions, as grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HysteresisState {
    /// Recirculation in tenths, 0..=10.
    pub alpha_tenths: usize,
    /// Coil temperature reduction, 0..=15 °C.
    pub delta_t: usize,
}

impl Default for HysteresisState {
    fn default() -> Self {
        Self {
            alpha_tenths: N_ALPHA - 1,
            delta_t: N_DELTA_T - 1,
        }
    }
}

impl HysteresisState {
    pub fn action(&self) -> ControlAction {
        ControlAction::from_grid(VDOT_LEVELS.len() - 1, self.delta_t, self.alpha_tenths)
    }
}

/// One rule update from the observed supply air. Fans stay at maximum flow.
///
/// RH below the threshold opens the dampers to outside air (α − 0.1), otherwise
/// recirculation rises (α + 0.1); equality counts as not below. A supply
/// temperature below the threshold relaxes the coil by 1 °C, above it the coil
/// works 1 °C harder, and exactly at the threshold Δt is held.
pub fn hysteresis_step(state: HysteresisState, t_s: f64, phi_s: f64, th: &Thresholds) -> (ControlAction, HysteresisState) {
    let mut next = state;
    next.alpha_tenths = if phi_s < th.phi_th {
        state.alpha_tenths.saturating_sub(1)
    } else {
        (state.alpha_tenths + 1).min(N_ALPHA - 1)
    };
    if t_s < th.t_th {
        next.delta_t = state.delta_t.saturating_sub(1);
    } else if t_s > th.t_th {
        next.delta_t = (state.delta_t + 1).min(N_DELTA_T - 1);
    }
    (next.action(), next)
}

/// Stateful wrapper: the first decision applies the initial setpoints
/// (Δt = 15 °C, α = 1), later ones follow [`hysteresis_step`].
#[derive(Debug, Clone, Default)]
pub struct Hysteresis {
    pub state: HysteresisState,
    started: bool,
}

impl Hysteresis {
    pub fn act(&mut self, x: &SystemState, th: &Thresholds) -> ControlAction {
        if !self.started {
            self.started = true;
            return self.state.action();
        }
        let (a, s) = hysteresis_step(self.state, x.t_s, x.phi_s, th);
        self.state = s;
        a
    }
}

/// Predicted result of one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub supply: MoistAirState<f64>,
    pub power: f64,
    pub feasible: bool,
}

/// Sweeps all 880 actions with the closed-form steady state and returns the
/// cheapest one that meets both thresholds. When none does, minimizes
/// `ζ1·c_t + ζ2·c_φ + power` instead.
#[derive(Debug)]
pub struct OneStepOracle {
    pub models: Models,
    pub zeta: [f64; 2],
    /// Every `check_every`-th decision is re-solved iteratively.
    pub check_every: usize,
    /// Agreement bounds for the spot check: (°C, % RH).
    pub check_tol: (f64, f64),
    decisions: AtomicUsize,
    checks: AtomicUsize,
    mismatches: AtomicUsize,
}

impl Clone for OneStepOracle {
    fn clone(&self) -> Self {
        Self::new(self.models.clone())
    }
}

impl OneStepOracle {
    pub fn new(models: Models) -> Self {
        Self {
            models,
            zeta: [2.0, 2.0],
            check_every: 100,
            check_tol: (0.01, 0.1),
            decisions: AtomicUsize::new(0),
            checks: AtomicUsize::new(0),
            mismatches: AtomicUsize::new(0),
        }
    }

    /// Supply state predicted for an action. Full recirculation is read as
    /// [`MASKED_ALPHA`] under load, matching the environment; without load
    /// the supply air simply stays as it is.
    pub fn predict(&self, x: &SystemState, index: usize, th: &Thresholds) -> Result<Prediction, EnvError> {
        let a = ControlAction::from_index(index)?;
        let supply = if a.alpha >= 1.0 && x.p_it == 0.0 {
            x.supply()
        } else {
            let input = SteadyStateInput {
                supply_init: x.supply(),
                outside: x.outside(),
                vdot_s: a.vdot_s,
                delta_t: a.delta_t,
                alpha: a.alpha.min(MASKED_ALPHA),
                p_it: x.p_it,
                eta: self.models.eta,
            };
            let props = closed_form_props(&self.models.air, &input)?;
            let t = self.models.air.state_from_props(props.h, props.w)?.state.t;
            bound_supply(&self.models.air, t, props.w)?.0
        };
        let (p_f, p_c) = self.models.cooling_power(&a)?;
        Ok(Prediction {
            index,
            supply,
            power: p_f + p_c,
            feasible: th.cost_t(supply.t) == 0.0 && th.cost_phi(supply.rh) == 0.0,
        })
    }

    pub fn sweep(&self, x: &SystemState, th: &Thresholds) -> Result<Vec<Prediction>, EnvError> {
        (0..N_ACTIONS).map(|i| self.predict(x, i, th)).collect()
    }

    /// Picks from a finished sweep; ties go to the lowest index.
    pub fn choose(&self, sweep: &[Prediction], th: &Thresholds) -> usize {
        let any_feasible = sweep.iter().any(|p| p.feasible);
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for p in sweep {
            let score = match (any_feasible, p.feasible) {
                (true, true) => p.power,
                (true, false) => continue,
                _ => self.zeta[0] * th.cost_t(p.supply.t) + self.zeta[1] * th.cost_phi(p.supply.rh) + p.power,
            };
            if score < best_score {
                best_score = score;
                best = p.index;
            }
        }
        best
    }

    pub fn decide(&self, x: &SystemState, th: &Thresholds) -> Result<usize, EnvError> {
        let sweep = self.sweep(x, th)?;
        let best = self.choose(&sweep, th);
        let n = self.decisions.fetch_add(1, Ordering::Relaxed);
        if self.check_every > 0 && n % self.check_every == 0 {
            self.spot_check(x, &sweep[best])?;
        }
        Ok(best)
    }

    fn spot_check(&self, x: &SystemState, p: &Prediction) -> Result<(), EnvError> {
        let a = ControlAction::from_index(p.index)?;
        let s = supply_transition(&self.models, &x.supply(), &x.outside(), &a, x.p_it)?;
        self.checks.fetch_add(1, Ordering::Relaxed);
        if (s.supply.t - p.supply.t).abs() > self.check_tol.0 || (s.supply.rh - p.supply.rh).abs() > self.check_tol.1 {
            self.mismatches.fetch_add(1, Ordering::Relaxed);
        }
        Ok(())
    }

    /// (decisions, iterative spot checks, disagreements).
    pub fn check_stats(&self) -> (usize, usize, usize) {
        (
            self.decisions.load(Ordering::Relaxed),
            self.checks.load(Ordering::Relaxed),
            self.mismatches.load(Ordering::Relaxed),
        )
    }
}
