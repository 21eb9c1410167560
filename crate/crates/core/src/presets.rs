//! Ready-made experiment scenarios.

use std::f64::consts::PI;

use crate::controller::{ControllerConfig, NOMINAL_B0_HAT};
use crate::disturbance::{Component, DisturbanceSpec};
use crate::error::{Error, Result};
use crate::metrics::MetricsSettings;
use crate::plant::PlantParams;
use crate::reference::ReferenceSpec;
use crate::simulator::{Mode, Noise, PlantInit, Scenario};
use crate::sweep::SweepSpec;

/// Nominal bandwidths; too slow for the default plant, kept for tuning checks.
pub const NOMINAL_OMEGA_C: f64 = 0.35;
pub const NOMINAL_OMEGA_O: f64 = 140.0;
/// Bandwidths used by the simulation presets.
pub const PRESET_OMEGA_C: f64 = 500.0;
pub const PRESET_OMEGA_O: f64 = 12000.0;
pub const PI_KP: f64 = 0.01;
pub const PI_KI: f64 = 0.25;
/// Load-torque harmonic frequency [rad/s].
pub const HARMONIC: f64 = 6.0 * PI;
pub const HARMONIC_AMPLITUDE: f64 = 1.35;
pub const STEP_AMPLITUDE: f64 = 1.0;
pub const ONSET: f64 = 1.0;
/// Speed held during the load experiments [rad/s].
pub const LOAD_TEST_LEVEL: f64 = 100.0;
/// Relative errors of the internal-model frequency in the robustness sweep.
pub const MISMATCH_GRID: [f64; 7] = [-0.25, -0.10, -0.05, 0.0, 0.05, 0.10, 0.25];

pub const PRESET_NAMES: [&str; 4] = ["e1", "e2a", "e2b", "e3"];
pub const CONTROLLER_LABELS: [&str; 4] = ["pi", "adrc-gpio", "adrc-reso", "adrc-oracle"];

/// Default controller for a label. The RESO is tuned to the load harmonic.
pub fn controller(label: &str) -> Result<ControllerConfig> {
    Ok(match label {
        "pi" => ControllerConfig::pi(PI_KP, PI_KI),
        "adrc-gpio" => ControllerConfig::gpio(PRESET_OMEGA_C, PRESET_OMEGA_O, NOMINAL_B0_HAT),
        "adrc-reso" => ControllerConfig::reso(PRESET_OMEGA_C, PRESET_OMEGA_O, HARMONIC, NOMINAL_B0_HAT),
        "adrc-oracle" => ControllerConfig::oracle(PRESET_OMEGA_C, NOMINAL_B0_HAT),
        other => {
            return Err(Error::InvalidScenario(format!(
                "unknown controller `{other}` (expected {})",
                CONTROLLER_LABELS.join(", ")
            )))
        }
    })
}

fn scenario(name: &str, reference: ReferenceSpec, disturbance: DisturbanceSpec, horizon: f64) -> Scenario {
    Scenario {
        name: name.into(),
        plant: PlantParams::default(),
        controller: controller("adrc-reso").expect("known label"),
        reference,
        disturbance,
        horizon,
        step_size: 1e-5,
        mode: Mode::default(),
        noise: Noise::default(),
        record_every: 10,
        initial: PlantInit::Zero,
        warm_start: false,
        metrics: MetricsSettings::default(),
        sweep: None,
    }
}

/// Load tests start settled at the test speed so the onset transient is the
/// only one in the trace.
fn load_test(name: &str, component: Component) -> Scenario {
    let mut sc = scenario(name, ReferenceSpec::settled(LOAD_TEST_LEVEL), DisturbanceSpec::single(component), 4.0);
    sc.initial = PlantInit::Equilibrium { omega: LOAD_TEST_LEVEL };
    sc.warm_start = true;
    sc
}

/// Scenario for `name` (`e1`, `e2a`, `e2b`, `e3`) with the RESO controller.
pub fn preset(name: &str) -> Result<Scenario> {
    let harmonic = Component::Sinusoid { onset: ONSET, a1: HARMONIC_AMPLITUDE, a2: 0.0, omega: HARMONIC };
    Ok(match name.to_ascii_lowercase().as_str() {
        "e1" => scenario(
            "e1",
            ReferenceSpec::staircase(&[(0.0, 100.0), (1.0, 200.0), (2.0, 300.0), (3.0, 400.0)]),
            DisturbanceSpec::none(),
            4.0,
        ),
        "e2a" => load_test("e2a", Component::Step { onset: ONSET, amplitude: STEP_AMPLITUDE }),
        "e2b" => load_test("e2b", harmonic),
        "e3" => {
            let mut sc = load_test("e3", harmonic);
            sc.sweep = Some(SweepSpec { key: "controller.omega_r_hat".into(), values: mismatch_frequencies() });
            sc
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    })
}

/// `preset(name)` with the controller replaced by the default for `label`.
pub fn preset_with(name: &str, label: &str) -> Result<Scenario> {
    let mut sc = preset(name)?;
    sc.controller = controller(label)?;
    sc.name = format!("{}-{label}", sc.name);
    Ok(sc)
}

/// Internal-model frequencies of the robustness sweep, in [`MISMATCH_GRID`] order.
pub fn mismatch_frequencies() -> Vec<f64> {
    MISMATCH_GRID.iter().map(|m| HARMONIC * (1.0 + m)).collect()
}
