//! Simulator and controllers for an air free-cooled data center.

pub mod baselines;
pub mod commands;
pub mod config;
pub mod drl;
pub mod env;
pub mod eval;
pub mod nn;
pub mod power;
pub mod psychro;
pub mod scalar;
pub mod surrogate;
pub mod traces;
pub mod validate;

pub use scalar::Real;

pub type MoistAir = psychro::MoistAirState<f64>;
pub type Props = psychro::AirProps<f64>;
pub type Constants = psychro::PsychroConstants<f64>;
pub type Coil = power::CoilModel<f64>;
pub type Fan = power::FanModel<f64>;
pub type Net = nn::Mlp<f64>;
pub type Net32 = nn::Mlp<f32>;
