//! Moist-air property arithmetic and the four-stage air path model.
//!
//! Air leaving the cold aisle is heated by the servers, split in the buffer
//! chamber, and the recirculated part is mixed with outside air that has passed
//! the cooling coil. The supply condition at the end of a control period is the
//! fixed point of that loop. [`steady_state_iterative`] finds it by repeated
//! substitution; [`steady_state_closed_form`] solves the same fixed point
//! algebraically and serves as a cross-check.
//!
//! Conversions between (temperature, RH) and (enthalpy, humidity ratio) use the
//! Magnus saturation-pressure fit at constant barometric pressure.

use thiserror::Error;

use crate::scalar::Real;

const MAGNUS_A: f64 = 0.61094;
const MAGNUS_B: f64 = 17.625;
const MAGNUS_C: f64 = 243.04;
/// Ratio of molar masses of water vapor and dry air.
const MOLAR_RATIO: f64 = 0.622;

/// Sanity range for temperatures handled by the simulator, °C.
pub const T_MIN: f64 = -20.0;
pub const T_MAX: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsychroError {
    #[error("temperature {0} °C is outside the saturation-pressure domain")]
    TemperatureDomain(f64),
    #[error("vapor pressure {p_v} kPa reaches barometric pressure {p_atm} kPa")]
    VaporPressure { p_v: f64, p_atm: f64 },
    #[error("mass flow must be positive, got {0} kg/s")]
    ZeroMassFlow(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("steady state did not converge in {iterations} iterations (|dh| = {dh:e}, |dw| = {dw:e})")]
    NonConvergent { iterations: usize, dh: f64, dw: f64 },
    #[error("closed-form steady state is undefined for full recirculation (alpha = 1)")]
    FullRecirculation,
}

/// Physical constants of moist air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsychroConstants<T> {
    /// Specific heat of dry air, kJ/(kg·°C).
    pub cp: T,
    /// Specific heat of water vapor, kJ/(kg·°C).
    pub cpw: T,
    /// Evaporation heat of water, kJ/kg.
    pub latent: T,
    /// Air density, kg/m³.
    pub rho: T,
    /// Barometric pressure, kPa.
    pub p_atm: T,
}

impl<T: Real> Default for PsychroConstants<T> {
    fn default() -> Self {
        Self {
            cp: T::lit(1.006),
            cpw: T::lit(1.86),
            latent: T::lit(2501.0),
            rho: T::lit(1.202),
            p_atm: T::lit(101.325),
        }
    }
}

/// Dry-bulb temperature (°C) and relative humidity (%).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistAirState<T> {
    pub t: T,
    pub rh: T,
}

impl<T: Real> MoistAirState<T> {
    /// Builds a state, checking `rh ∈ [0, 100]` and the simulator temperature range.
    pub fn new(t: T, rh: T) -> Result<Self, PsychroError> {
        let s = Self { t, rh };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), PsychroError> {
        if !(self.rh >= T::zero() && self.rh <= T::lit(100.0)) {
            return Err(PsychroError::InvalidInput(format!(
                "relative humidity {} outside [0, 100]",
                self.rh
            )));
        }
        if !(self.t >= T::lit(T_MIN) && self.t <= T::lit(T_MAX)) {
            return Err(PsychroError::InvalidInput(format!(
                "temperature {} outside [{T_MIN}, {T_MAX}]",
                self.t
            )));
        }
        Ok(())
    }
}

/// Enthalpy (kJ/kg dry air), humidity ratio (kg/kg) and dry-air mass flow (kg/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirProps<T> {
    pub h: T,
    pub w: T,
    pub mdot: T,
}

/// A state recovered from (h, w), with the supersaturation flag raised when the
/// computed RH exceeded 100 % and was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirCondition<T> {
    pub state: MoistAirState<T>,
    pub supersaturated: bool,
}

/// Saturation vapor pressure over water, kPa.
pub fn saturation_pressure<T: Real>(t: T) -> Result<T, PsychroError> {
    let c = T::lit(MAGNUS_C);
    if !(t + c > T::zero()) {
        return Err(PsychroError::TemperatureDomain(t.as_f64()));
    }
    Ok(T::lit(MAGNUS_A) * (T::lit(MAGNUS_B) * t / (t + c)).exp())
}

impl<T: Real> PsychroConstants<T> {
    /// Humidity ratio of a state, kg water per kg dry air.
    pub fn humidity_ratio(&self, state: &MoistAirState<T>) -> Result<T, PsychroError> {
        if !(state.rh >= T::zero() && state.rh <= T::lit(100.0)) {
            return Err(PsychroError::InvalidInput(format!(
                "relative humidity {} outside [0, 100]",
                state.rh
            )));
        }
        let p_v = state.rh / T::lit(100.0) * saturation_pressure(state.t)?;
        if p_v >= self.p_atm {
            return Err(PsychroError::VaporPressure {
                p_v: p_v.as_f64(),
                p_atm: self.p_atm.as_f64(),
            });
        }
        Ok(T::lit(MOLAR_RATIO) * p_v / (self.p_atm - p_v))
    }

    /// Specific enthalpy of moist air, kJ/kg dry air.
    #[inline]
    pub fn enthalpy(&self, t: T, w: T) -> T {
        self.cp * t + w * (self.cpw * t + self.latent)
    }

    /// Inverts [`Self::enthalpy`] and converts the humidity ratio back to RH.
    pub fn state_from_props(&self, h: T, w: T) -> Result<AirCondition<T>, PsychroError> {
        if w < T::zero() {
            return Err(PsychroError::InvalidInput(format!("negative humidity ratio {w}")));
        }
        let denom = self.cp + w * self.cpw;
        if denom <= T::zero() {
            return Err(PsychroError::InvalidInput(format!(
                "non-positive heat capacity {denom}"
            )));
        }
        let t = (h - w * self.latent) / denom;
        self.state_at(t, w)
    }

    /// RH of air with humidity ratio `w` at temperature `t`, clamped at saturation.
    pub fn state_at(&self, t: T, w: T) -> Result<AirCondition<T>, PsychroError> {
        let p_v = w * self.p_atm / (T::lit(MOLAR_RATIO) + w);
        let rh = T::lit(100.0) * p_v / saturation_pressure(t)?;
        let supersaturated = rh > T::lit(100.0);
        Ok(AirCondition {
            state: MoistAirState {
                t,
                rh: if supersaturated { T::lit(100.0) } else { rh },
            },
            supersaturated,
        })
    }

    /// Dry-air mass flow for a volume flow given in m³/h.
    #[inline]
    pub fn mass_flow(&self, vdot_m3h: T) -> T {
        self.rho * vdot_m3h / T::lit(3600.0)
    }

    /// Props of a state at the given mass flow.
    pub fn props(&self, state: &MoistAirState<T>, mdot: T) -> Result<AirProps<T>, PsychroError> {
        let w = self.humidity_ratio(state)?;
        Ok(AirProps {
            h: self.enthalpy(state.t, w),
            w,
            mdot,
        })
    }
}

/// Outside air after the cooling coil lowers its temperature by `delta_t`.
/// Moisture content and mass flow pass through unchanged.
pub fn cool<T: Real>(
    c: &PsychroConstants<T>,
    outside: &MoistAirState<T>,
    delta_t: T,
    mdot: T,
) -> Result<AirProps<T>, PsychroError> {
    let w = c.humidity_ratio(outside)?;
    Ok(AirProps {
        h: c.enthalpy(outside.t - delta_t, w),
        w,
        mdot,
    })
}

/// Cold-aisle air after absorbing `eta · p_it` kW of server heat.
pub fn heat<T: Real>(props: &AirProps<T>, p_it: T, eta: T) -> Result<AirProps<T>, PsychroError> {
    if !(props.mdot > T::zero()) {
        return Err(PsychroError::ZeroMassFlow(props.mdot.as_f64()));
    }
    Ok(AirProps {
        h: props.h + eta * p_it / props.mdot,
        ..*props
    })
}

/// Share of the hot-aisle air routed back to the mixing chamber.
#[inline]
pub fn buffer<T: Real>(hot: &AirProps<T>, alpha: T) -> AirProps<T> {
    AirProps {
        mdot: alpha * hot.mdot,
        ..*hot
    }
}

/// Adiabatic mixing of processed outside air with recirculated air.
#[inline]
pub fn mix<T: Real>(processed: &AirProps<T>, recirculated: &AirProps<T>, alpha: T) -> AirProps<T> {
    let keep = T::one() - alpha;
    AirProps {
        h: keep * processed.h + alpha * recirculated.h,
        w: keep * processed.w + alpha * recirculated.w,
        mdot: processed.mdot + recirculated.mdot,
    }
}

/// Inputs of one steady-state solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateInput<T> {
    /// Supply condition at the start of the period; seeds the iteration.
    pub supply_init: MoistAirState<T>,
    pub outside: MoistAirState<T>,
    /// Supply air volume flow, m³/h.
    pub vdot_s: T,
    /// Coil temperature reduction, °C.
    pub delta_t: T,
    /// Recirculated fraction of the supply air.
    pub alpha: T,
    /// IT power, kW.
    pub p_it: T,
    /// Share of IT power transferred to the air stream.
    pub eta: T,
}

impl<T: Real> SteadyStateInput<T> {
    pub fn validate(&self) -> Result<(), PsychroError> {
        let bad = |msg: String| Err(PsychroError::InvalidInput(msg));
        if !(self.vdot_s > T::zero()) {
            return bad(format!("vdot_s must be positive, got {}", self.vdot_s));
        }
        if !(self.delta_t >= T::zero() && self.delta_t <= T::lit(15.0)) {
            return bad(format!("delta_t {} outside [0, 15]", self.delta_t));
        }
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.p_it >= T::zero()) {
            return bad(format!("p_it must be non-negative, got {}", self.p_it));
        }
        if !(self.eta > T::zero() && self.eta <= T::one()) {
            return bad(format!("eta {} outside (0, 1]", self.eta));
        }
        Ok(())
    }
}

/// Stopping rule for the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    /// Enthalpy change between iterations, kJ/kg.
    pub eps_h: T,
    /// Humidity-ratio change between iterations, kg/kg.
    pub eps_w: T,
    pub max_iter: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            eps_h: T::lit(1e-6),
            eps_w: T::lit(1e-9),
            max_iter: 1000,
        }
    }
}

/// Converged supply condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    pub condition: AirCondition<T>,
    pub props: AirProps<T>,
    pub iterations: usize,
}

/// Solves for the supply condition by cycling heat → buffer → cool → mix until
/// enthalpy and humidity ratio stop moving.
///
/// Full recirculation with a heat load has no fixed point; the enthalpy grows
/// every pass and the solve ends in [`PsychroError::NonConvergent`].
pub fn steady_state_iterative<T: Real>(
    c: &PsychroConstants<T>,
    input: &SteadyStateInput<T>,
    tol: &Tolerance<T>,
) -> Result<SteadyState<T>, PsychroError> {
    input.validate()?;
    let mdot_s = c.mass_flow(input.vdot_s);
    let mut supply = c.props(&input.supply_init, mdot_s)?;
    // The coil stage does not depend on the loop state.
    let processed = cool(
        c,
        &input.outside,
        input.delta_t,
        (T::one() - input.alpha) * mdot_s,
    )?;

    // Each pass contracts the loop error by α, so the distance left after a
    // step of size d is at most d·α/(1−α). Stop once that bound is in tolerance.
    let bound = if input.alpha < T::one() {
        (input.alpha / (T::one() - input.alpha)).max(T::one())
    } else {
        T::one()
    };
    let (mut dh, mut dw) = (T::infinity(), T::infinity());
    for iteration in 1..=tol.max_iter {
        let hot = heat(&supply, input.p_it, input.eta)?;
        let recirculated = buffer(&hot, input.alpha);
        let next = mix(&processed, &recirculated, input.alpha);
        dh = (next.h - supply.h).abs();
        dw = (next.w - supply.w).abs();
        supply = next;
        if !(dh.is_finite() && dw.is_finite()) {
            break;
        }
        if dh * bound < tol.eps_h && dw * bound < tol.eps_w {
            return Ok(SteadyState {
                condition: c.state_from_props(supply.h, supply.w)?,
                props: supply,
                iterations: iteration,
            });
        }
    }
    Err(PsychroError::NonConvergent {
        iterations: tol.max_iter,
        dh: dh.as_f64(),
        dw: dw.as_f64(),
    })
}

/// Algebraic fixed point of the air loop:
/// `w_s = w_o`, `h_s = h_p + α/(1−α) · η·p_IT / ṁ_s`.
pub fn steady_state_closed_form<T: Real>(
    c: &PsychroConstants<T>,
    input: &SteadyStateInput<T>,
) -> Result<AirCondition<T>, PsychroError> {
    let props = closed_form_props(c, input)?;
    c.state_from_props(props.h, props.w)
}

/// Supply props at the algebraic fixed point.
pub fn closed_form_props<T: Real>(
    c: &PsychroConstants<T>,
    input: &SteadyStateInput<T>,
) -> Result<AirProps<T>, PsychroError> {
    input.validate()?;
    if input.alpha >= T::one() {
        return Err(PsychroError::FullRecirculation);
    }
    let mdot_s = c.mass_flow(input.vdot_s);
    let processed = cool(c, &input.outside, input.delta_t, mdot_s)?;
    let gain = input.alpha / (T::one() - input.alpha) * input.eta * input.p_it / mdot_s;
    Ok(AirProps {
        h: processed.h + gain,
        w: processed.w,
        mdot: mdot_s,
    })
}
