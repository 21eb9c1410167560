//! Simulation and verification library for a buck-converter-fed DC motor under
//! error-domain ADRC with a resonant extended state observer.

pub mod config;
pub mod controller;
pub mod disturbance;
pub mod error;
pub mod exact;
pub mod flatness;
pub mod metrics;
pub mod observer;
pub mod plant;
pub mod presets;
pub mod reference;
pub mod simulator;
pub mod stability;
pub mod sweep;
pub mod trace;
pub mod tuning;

pub use error::{Error, Result};
