//! One-parameter sweeps, run concurrently with results kept in input order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::with_value;
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::simulator::{run, Scenario};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path of the swept key, e.g. `controller.omega_r_hat`.
    pub key: String,
    pub values: Vec<f64>,
}

/// Run a scenario and measure it against its own onset and metric settings.
pub fn run_and_measure(sc: &Scenario) -> Result<(Trace, MetricsReport)> {
    let tr = run(sc)?;
    let m = compute_metrics(&tr, sc.onset(), &sc.metrics)?;
    Ok((tr, m))
}

/// Scenario copies with `key` set to each value. Fails up front on a bad key or value.
pub fn sweep_scenarios(base: &Scenario, key: &str, values: &[f64]) -> Result<Vec<Scenario>> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidScenario(format!("sweep value {v} is not finite")));
    }
    values.iter().map(|&v| with_value(base, key, v)).collect()
}

/// Apply `f` to every scenario in parallel; output order follows input order.
pub fn run_many<T, F>(scenarios: &[Scenario], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Scenario, Result<(Trace, MetricsReport)>) -> T + Sync,
{
    scenarios.par_iter().map(|sc| f(sc, run_and_measure(sc))).collect()
}

/// One run per value; a diverging run yields its error without stopping the rest.
pub fn sweep(base: &Scenario, key: &str, values: &[f64]) -> Result<Vec<(f64, Result<MetricsReport>)>> {
    let scenarios = sweep_scenarios(base, key, values)?;
    let reports = run_many(&scenarios, |_, r| r.map(|(_, m)| m));
    Ok(values.iter().copied().zip(reports).collect())
}
