//! Learned stand-ins for the supply-air transition, trained on rows labeled by
//! the psychrometric model. They are evaluated here only; training and
//! control always step the physical model.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::env::{supply_transition, ControlAction, EnvError, Models, N_ALPHA, N_DELTA_T, VDOT_LEVELS};
use crate::nn::{FitSpec, NnError, Regressor};
use crate::psychro::MoistAirState;
use crate::traces::WeatherTrace;

pub const FEATURES: [&str; 8] = ["t_s", "phi_s", "t_o", "phi_o", "vdot_s", "p_it", "delta_t", "alpha"];
pub const REPORT_HEADER: [&str; 7] = ["model", "n_train", "n_test", "rmse", "epochs", "seed", "architecture"];
/// IT load range sampled for dataset rows, kW.
pub const P_IT_RANGE: (f64, f64) = (15.0, 45.0);

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("dataset problem: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateRow {
    pub x: [f64; 8],
    pub t_next: f64,
    pub phi_next: f64,
    /// Humidity ratio of the outside air and of the next supply air.
    pub w_o: f64,
    pub w_next: f64,
}

/// Uniform action from the grid without full recirculation.
fn sample_action<R: Rng + ?Sized>(rng: &mut R) -> ControlAction {
    ControlAction::from_grid(
        rng.random_range(0..VDOT_LEVELS.len()),
        rng.random_range(0..N_DELTA_T),
        rng.random_range(0..N_ALPHA - 1),
    )
}

/// Rows labeled by the iterative steady state. Each row draws an ambient
/// minute from the trace, a preceding supply state produced by a random
/// earlier action, an IT load and the action itself. Row `i` uses its own
/// random stream, so the result does not depend on thread count.
pub fn generate_dataset(
    models: &Models,
    trace: &WeatherTrace,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SurrogateRow>, SurrogateError> {
    if n_samples > 0 && trace.is_empty() {
        return Err(SurrogateError::Data("empty trace".into()));
    }
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let row = trace.rows()[rng.random_range(0..trace.len())];
            let outside = MoistAirState { t: row.t_o, rh: row.rh_o };
            let p_prev = rng.random_range(P_IT_RANGE.0..=P_IT_RANGE.1);
            let prev = supply_transition(models, &outside, &outside, &sample_action(&mut rng), p_prev)?;
            let supply = prev.supply;
            let p_it = rng.random_range(P_IT_RANGE.0..=P_IT_RANGE.1);
            let a = sample_action(&mut rng);
            let next = supply_transition(models, &supply, &outside, &a, p_it)?;
            Ok(SurrogateRow {
                x: [supply.t, supply.rh, outside.t, outside.rh, a.vdot_s, p_it, a.delta_t, a.alpha],
                t_next: next.supply.t,
                phi_next: next.supply.rh,
                w_o: models.air.humidity_ratio(&outside).map_err(EnvError::from)?,
                w_next: next.w,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSpec {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for SurrogateSpec {
    /// Twenty hidden layers of five units, batch 128, 1000 epochs, Adam at 1e-3.
    fn default() -> Self {
        Self {
            hidden: vec![5; 20],
            epochs: 1000,
            batch_size: 128,
            lr: 1e-3,
        }
    }
}

impl SurrogateSpec {
    pub fn architecture(&self) -> String {
        self.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRecord {
    pub model: String,
    pub n_train: usize,
    pub n_test: usize,
    pub rmse: f64,
    pub epochs: usize,
    pub seed: u64,
    pub architecture: String,
}

#[derive(Debug, Clone)]
pub struct Surrogates {
    pub t_s: Regressor<f64>,
    pub phi_s: Regressor<f64>,
    pub report: Vec<RmseRecord>,
}

/// Fits one regressor per output on the first `n_train` rows and scores both
/// on the remainder.
pub fn train_surrogates(
    data: &[SurrogateRow],
    n_train: usize,
    spec: &SurrogateSpec,
    seed: u64,
) -> Result<Surrogates, SurrogateError> {
    if data.is_empty() || n_train == 0 || n_train >= data.len() {
        return Err(SurrogateError::Data(format!(
            "need a non-empty training set and test set, got {n_train} of {} rows",
            data.len()
        )));
    }
    let (train, test) = data.split_at(n_train);
    let xs = |rows: &[SurrogateRow]| rows.iter().map(|r| r.x.to_vec()).collect::<Vec<_>>();
    let (x_train, x_test) = (xs(train), xs(test));
    let fit = FitSpec {
        hidden: spec.hidden.clone(),
        epochs: spec.epochs,
        batch_size: spec.batch_size,
        lr: spec.lr,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Vec::new();
    let mut fit_one = |name: &str, label: fn(&SurrogateRow) -> f64| -> Result<Regressor<f64>, SurrogateError> {
        let y_train: Vec<f64> = train.iter().map(label).collect();
        let y_test: Vec<f64> = test.iter().map(label).collect();
        let reg = Regressor::fit(&x_train, &y_train, &fit, &mut rng)?;
        report.push(RmseRecord {
            model: name.to_string(),
            n_train: train.len(),
            n_test: test.len(),
            rmse: reg.rmse(&x_test, &y_test)?,
            epochs: spec.epochs,
            seed,
            architecture: spec.architecture(),
        });
        Ok(reg)
    };
    let t_s = fit_one("mlp_ts", |r| r.t_next)?;
    let phi_s = fit_one("mlp_phis", |r| r.phi_next)?;
    Ok(Surrogates { t_s, phi_s, report })
}

pub fn write_report<W: Write>(records: &[RmseRecord], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{}", REPORT_HEADER.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.model, r.n_train, r.n_test, r.rmse, r.epochs, r.seed, r.architecture
        )?;
    }
    Ok(())
}
