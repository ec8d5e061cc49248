//! Electrical power of the cooling coil, the fans and the IT load. All powers in kW.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::nn::{FitSpec, NnError, Regressor};
use crate::psychro::PsychroConstants;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("air flow {vdot} m³/h exceeds fan maximum {max} m³/h")]
    FlowAboveMax { vdot: f64, max: f64 },
    #[error("IT power history has {got} entries, model needs {expected}")]
    HistoryLength { expected: usize, got: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Cooling coil: electrical power is the removed sensible heat divided by the CoP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilModel<T> {
    pub xi: T,
}

impl<T: Real> Default for CoilModel<T> {
    fn default() -> Self {
        Self { xi: T::lit(2.0) }
    }
}

impl<T: Real> CoilModel<T> {
    pub fn new(xi: T) -> Result<Self, PowerError> {
        if !(xi >= T::one()) {
            return Err(PowerError::InvalidParameter(format!("coil CoP must be >= 1, got {xi}")));
        }
        Ok(Self { xi })
    }

    /// `c_p · ρ · (v̇/3600) · Δt / ξ` for `v̇` in m³/h.
    pub fn power(&self, c: &PsychroConstants<T>, vdot_s: T, delta_t: T) -> T {
        c.cp * c.rho * (vdot_s / T::lit(3600.0)) * delta_t / self.xi
    }
}

/// Supply and exhaust fans following a power law in air flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanModel<T> {
    pub p_max: T,
    pub vdot_max: T,
    pub exponent: T,
}

impl<T: Real> Default for FanModel<T> {
    fn default() -> Self {
        Self {
            p_max: T::lit(3.0),
            vdot_max: T::lit(10000.0),
            exponent: T::lit(3.0),
        }
    }
}

impl<T: Real> FanModel<T> {
    pub fn new(p_max: T, vdot_max: T, exponent: T) -> Result<Self, PowerError> {
        if !(p_max > T::zero() && vdot_max > T::zero() && exponent >= T::zero()) {
            return Err(PowerError::InvalidParameter(format!(
                "fan needs p_max > 0, vdot_max > 0, exponent >= 0; got {p_max}, {vdot_max}, {exponent}"
            )));
        }
        Ok(Self { p_max, vdot_max, exponent })
    }

    pub fn power(&self, vdot_s: T) -> Result<T, PowerError> {
        if vdot_s > self.vdot_max {
            return Err(PowerError::FlowAboveMax {
                vdot: vdot_s.as_f64(),
                max: self.vdot_max.as_f64(),
            });
        }
        if !(vdot_s >= T::zero()) {
            return Err(PowerError::InvalidParameter(format!("negative air flow {vdot_s}")));
        }
        Ok(self.p_max * (vdot_s / self.vdot_max).powf(self.exponent))
    }
}

/// Parameters of the autoregressive synthetic workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticIt {
    pub base: f64,
    pub amplitude: f64,
    pub ar: f64,
    /// kW per m³/h below the maximum flow; slower server fans draw more power.
    pub fan_coupling: f64,
    pub noise_sd: f64,
    /// Diurnal period in control periods.
    pub period: f64,
    pub vdot_max: f64,
}

impl Default for SyntheticIt {
    fn default() -> Self {
        Self {
            base: 30.0,
            amplitude: 0.5,
            ar: 0.9,
            fan_coupling: 2e-5,
            noise_sd: 0.3,
            period: 1440.0,
            vdot_max: 10000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItMode {
    Synthetic(SyntheticIt),
    /// Regressor over `[history..., vdot_s]`, oldest sample first.
    Learned(Regressor<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItModel {
    pub k_hist: usize,
    /// Power used to seed the history at episode start.
    pub base: f64,
    pub mode: ItMode,
}

impl Default for ItModel {
    fn default() -> Self {
        Self::synthetic(SyntheticIt::default())
    }
}

/// Lower bound for learned predictions so IT power stays positive.
const MIN_LEARNED_POWER: f64 = 1e-3;

impl ItModel {
    pub fn synthetic(params: SyntheticIt) -> Self {
        Self {
            k_hist: 10,
            base: params.base,
            mode: ItMode::Synthetic(params),
        }
    }

    /// Next-period IT power. `history` holds the last `k_hist` powers, newest
    /// last; `period_index` drives the diurnal term.
    pub fn next<R: Rng + ?Sized>(
        &self,
        history: &[f64],
        vdot_s: f64,
        period_index: u64,
        rng: &mut R,
    ) -> Result<f64, PowerError> {
        if history.len() != self.k_hist {
            return Err(PowerError::HistoryLength {
                expected: self.k_hist,
                got: history.len(),
            });
        }
        match &self.mode {
            ItMode::Synthetic(s) => {
                let last = history[history.len() - 1];
                let phase = std::f64::consts::TAU * period_index as f64 / s.period;
                let noise = if s.noise_sd > 0.0 {
                    Normal::new(0.0, s.noise_sd)
                        .map_err(|e| PowerError::InvalidParameter(e.to_string()))?
                        .sample(rng)
                } else {
                    0.0
                };
                let p = s.base
                    + s.ar * (last - s.base)
                    + s.amplitude * phase.sin()
                    + s.fan_coupling * (s.vdot_max - vdot_s)
                    + noise;
                Ok(p.clamp(0.2 * s.base, 3.0 * s.base))
            }
            ItMode::Learned(reg) => {
                let mut x = Vec::with_capacity(self.k_hist + 1);
                x.extend_from_slice(history);
                x.push(vdot_s);
                Ok(reg.predict(&x)?.max(MIN_LEARNED_POWER))
            }
        }
    }

    /// Fits a learned model on a recorded series. `powers[k]` is the IT power
    /// in period `k` and `vdots[k]` the flow applied during it.
    pub fn fit_learned<R: Rng + ?Sized>(
        powers: &[f64],
        vdots: &[f64],
        k_hist: usize,
        spec: &FitSpec<f64>,
        rng: &mut R,
    ) -> Result<Self, PowerError> {
        let (x, y) = it_dataset(powers, vdots, k_hist)?;
        let reg = Regressor::fit(&x, &y, spec, rng)?;
        let base = powers.iter().sum::<f64>() / powers.len() as f64;
        Ok(Self {
            k_hist,
            base,
            mode: ItMode::Learned(reg),
        })
    }
}

/// Sliding-window rows `([p[k-K+1..=k], vdot[k]], p[k+1])`.
pub fn it_dataset(powers: &[f64], vdots: &[f64], k_hist: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), PowerError> {
    if powers.len() != vdots.len() || powers.len() <= k_hist || k_hist == 0 {
        return Err(PowerError::InvalidParameter(format!(
            "need matching series longer than k_hist = {k_hist}, got {} powers and {} flows",
            powers.len(),
            vdots.len()
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for k in (k_hist - 1)..powers.len() - 1 {
        let mut row = powers[k + 1 - k_hist..=k].to_vec();
        row.push(vdots[k]);
        x.push(row);
        y.push(powers[k + 1]);
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coil_examples() {
        let c = PsychroConstants::<f64>::default();
        let coil = CoilModel::default();
        assert_eq!(coil.power(&c, 10000.0, 0.0), 0.0);
        let p = coil.power(&c, 10000.0, 15.0);
        assert!((p - 25.19).abs() < 0.01, "{p}");
        assert_eq!(coil.power(&c, 10000.0, 10.0), 2.0 * coil.power(&c, 10000.0, 5.0));
        assert!(CoilModel::new(0.5).is_err());
    }

    #[test]
    fn fan_examples() {
        let fan = FanModel::<f64>::default();
        assert_eq!(fan.power(0.0).unwrap(), 0.0);
        assert_eq!(fan.power(10000.0).unwrap(), 3.0);
        assert!((fan.power(5000.0).unwrap() - 3.0 / 8.0).abs() < 1e-15);
        assert!(matches!(fan.power(10001.0), Err(PowerError::FlowAboveMax { .. })));
    }

    #[test]
    fn degenerate_synthetic_is_constant() {
        let it = ItModel::synthetic(SyntheticIt {
            ar: 0.0,
            amplitude: 0.0,
            noise_sd: 0.0,
            fan_coupling: 0.0,
            ..SyntheticIt::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let hist = [12.0; 10];
        for k in 0..50 {
            assert_eq!(it.next(&hist, 4000.0, k, &mut rng).unwrap(), 30.0);
        }
    }

    #[test]
    fn history_length_is_checked() {
        let it = ItModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            it.next(&[30.0; 3], 2000.0, 0, &mut rng),
            Err(PowerError::HistoryLength { expected: 10, got: 3 })
        );
    }

    #[test]
    fn dataset_windows() {
        let p = [1.0, 2.0, 3.0, 4.0];
        let v = [10.0, 20.0, 30.0, 40.0];
        let (x, y) = it_dataset(&p, &v, 2).unwrap();
        assert_eq!(x, vec![vec![1.0, 2.0, 20.0], vec![2.0, 3.0, 30.0]]);
        assert_eq!(y, vec![3.0, 4.0]);
        assert!(it_dataset(&p, &v, 4).is_err());
    }
}
