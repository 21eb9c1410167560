//! Fixed-step closed-loop simulation of plant, observer and controller.
//!
//! The plant, the observer and the PI integral share one classical RK4 step.
//! In zero-order-hold mode the controller and observer instead update once
//! per sample period (explicit Euler) and the duty cycle is held in between.

use nalgebra::{SVector, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::{
    adrc_control, conventional_adrc_oracle, pi_control, pi_integrator_rate, saturate, ControllerConfig,
};
use crate::disturbance::DisturbanceSpec;
use crate::error::{Error, Result};
use crate::flatness::OutputChain;
use crate::metrics::MetricsSettings;
use crate::observer::{reso_derivative, ObserverMatrices, Vector7};
use crate::plant::{build_state_space, equilibrium, PlantParams, PlantState, StateSpace};
use crate::reference::{Reference, ReferenceSpec};
use crate::sweep::SweepSpec;
use crate::trace::{Sample, Trace};

/// Plant states beyond this magnitude count as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Continuous,
    Zoh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub kind: ModeKind,
    /// Controller sample period, used only in ZOH mode.
    pub sample_time: f64,
}

impl Default for Mode {
    fn default() -> Self {
        Self { kind: ModeKind::Continuous, sample_time: 1e-4 }
    }
}

/// Additive Gaussian noise on the measured speed. `std = 0` turns it off.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    pub std: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantInit {
    #[default]
    Zero,
    /// Steady state at `omega` with no load.
    Equilibrium {
        omega: f64,
    },
    State {
        x: [f64; 4],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub plant: PlantParams,
    pub controller: ControllerConfig,
    #[serde(default = "ReferenceSpec::zero")]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step_size: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub noise: Noise,
    /// Keep every n-th integration step in the trace.
    #[serde(default = "default_record")]
    pub record_every: usize,
    #[serde(default)]
    pub initial: PlantInit,
    /// Start the PI integral or the ADRC disturbance estimate at the value that
    /// holds the initial equilibrium. Requires `initial = equilibrium`.
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default)]
    pub metrics: MetricsSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_name() -> String {
    "custom".into()
}

fn default_step() -> f64 {
    1e-5
}

fn default_record() -> usize {
    1
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidScenario(msg.into())
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.horizon / self.step_size).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.step_size;
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("step_size must be > 0, got {h}")));
        }
        if !(self.horizon.is_finite() && self.horizon >= h) {
            return Err(invalid(format!("horizon must be >= step_size, got {}", self.horizon)));
        }
        let n = self.horizon / h;
        if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
            return Err(invalid("horizon must be an integer number of steps"));
        }
        if self.steps() > 200_000_000 {
            return Err(invalid("more than 2e8 integration steps"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be >= 1"));
        }
        if self.mode.kind == ModeKind::Zoh {
            let ts = self.mode.sample_time;
            let ratio = ts / h;
            if !(ts.is_finite() && ts >= h && (ratio - ratio.round()).abs() < 1e-9 * ratio) {
                return Err(invalid(format!("ZOH sample_time {ts} must be an integer multiple of step_size {h}")));
            }
        }
        if !(self.noise.std.is_finite() && self.noise.std >= 0.0) {
            return Err(invalid("noise std must be finite and >= 0"));
        }
        match self.initial {
            PlantInit::Equilibrium { omega } if !omega.is_finite() => {
                return Err(invalid("initial omega must be finite"))
            }
            PlantInit::State { x } if x.iter().any(|v| !v.is_finite()) => {
                return Err(invalid("initial state must be finite"))
            }
            _ => {}
        }
        if self.warm_start && !matches!(self.initial, PlantInit::Equilibrium { .. }) {
            return Err(invalid("warm_start needs an equilibrium initial state"));
        }
        self.plant.validate()?;
        self.controller.validate()?;
        self.reference.validate()?;
        self.disturbance.validate()?;
        self.metrics.validate()?;
        Ok(())
    }

    /// Disturbance onset used for recovery metrics.
    pub fn onset(&self) -> Option<f64> {
        self.metrics.onset.or_else(|| self.disturbance.snapped(self.step_size).first_onset())
    }
}

type State = SVector<f64, 12>;

struct Eval {
    ds: State,
    sample: Sample,
}

/// Everything the right-hand side needs, resolved once per run.
struct Loop {
    ss: StateSpace,
    chain: OutputChain,
    reference: Reference,
    disturbance: DisturbanceSpec,
    law: Law,
    /// Gains used for the `F_true` channel.
    k: [f64; 4],
    b0_hat: f64,
}

#[allow(clippy::large_enum_variant)] // one instance per run
enum Law {
    Pi { kp: f64, ki: f64 },
    Adrc { m: ObserverMatrices },
    Oracle { k: [f64; 4], b0_hat: f64 },
}

/// Controller output together with what the observer and integral need.
struct Command {
    u_raw: f64,
    u_sat: f64,
    u0: f64,
    e_meas: f64,
    f_hat: f64,
}

fn split(s: &State) -> (PlantState, Vector7, f64) {
    (PlantState(Vector4::new(s[0], s[1], s[2], s[3])), Vector7::from_fn(|i, _| s[4 + i]), s[11])
}

impl Loop {
    fn new(sc: &Scenario) -> Result<Self> {
        let ss = build_state_space(&sc.plant)?;
        let chain = OutputChain::new(&ss);
        let law = match sc.controller {
            ControllerConfig::Pi { kp, ki } => Law::Pi { kp, ki },
            ControllerConfig::Adrc { b0_hat, .. } => {
                let g = sc.controller.gains()?.expect("adrc has gains");
                Law::Adrc { m: g.observer_matrices(b0_hat)? }
            }
            ControllerConfig::Oracle { omega_c, b0_hat } => {
                Law::Oracle { k: crate::tuning::controller_gains(omega_c)?, b0_hat }
            }
        };
        let (k, b0_hat) = match &law {
            Law::Pi { .. } => ([0.0; 4], chain.b0),
            Law::Adrc { m } => (m.k, m.b0_hat),
            Law::Oracle { k, b0_hat } => (*k, *b0_hat),
        };
        Ok(Self {
            ss,
            chain,
            reference: Reference::new(&sc.reference)?,
            disturbance: sc.disturbance.snapped(sc.step_size),
            law,
            k,
            b0_hat,
        })
    }

    fn command(&self, t: f64, x: &PlantState, z: &Vector7, integral: f64, noise: f64) -> Command {
        let r = self.reference.state(t);
        let e_meas = r.wd - (x.speed() + noise);
        match self.law {
            Law::Pi { kp, ki } => {
                let u_raw = pi_control(e_meas, integral, kp, ki);
                Command { u_raw, u_sat: saturate(u_raw), u0: 0.0, e_meas, f_hat: 0.0 }
            }
            Law::Adrc { ref m } => {
                let (u_raw, u0) = adrc_control(e_meas, z[4], m.k[0], m.b0_hat);
                Command { u_raw, u_sat: saturate(u_raw), u0, e_meas, f_hat: z[4] }
            }
            Law::Oracle { k, b0_hat } => {
                let tau = self.disturbance.derivatives(t);
                let w = self.chain.speed_derivatives(x, &tau);
                let wd = [r.wd, r.wd_dot, r.wd_ddot, r.wd_3];
                let e: [f64; 4] = std::array::from_fn(|i| wd[i] - w[i]);
                let f0 = self.chain.unforced_disturbance(x, &tau);
                // The true F~ contains (b0 - b0_hat) u, so the loop is solved for u first.
                let feedback: f64 = k.iter().zip(&e).map(|(a, b)| a * b).sum();
                let u_star = (r.wd_4 + feedback - f0) / self.chain.b0;
                let u_sat = saturate(u_star);
                let f_tilde = f0 + (self.chain.b0 - b0_hat) * u_sat;
                let u_raw =
                    if u_sat == u_star { u_star } else { conventional_adrc_oracle(&e, r.wd_4, f_tilde, &k, b0_hat) };
                Command { u_raw, u_sat, u0: k[0] * e[0], e_meas: e[0], f_hat: 0.0 }
            }
        }
    }

    /// Observer and integral rates for a given command.
    fn controller_rates(&self, z: &Vector7, cmd: &Command) -> (Vector7, f64) {
        match self.law {
            Law::Pi { .. } => (Vector7::zeros(), pi_integrator_rate(cmd.e_meas, cmd.u_raw)),
            Law::Adrc { ref m } => (reso_derivative(m, z, cmd.u_sat, cmd.u0, cmd.e_meas), 0.0),
            Law::Oracle { .. } => (Vector7::zeros(), 0.0),
        }
    }

    fn record(&self, t: f64, x: &PlantState, z: &Vector7, cmd: &Command) -> Sample {
        let r = self.reference.state(t);
        let tau = self.disturbance.derivatives(t);
        let w = self.chain.speed_derivatives(x, &tau);
        let e = [r.wd - w[0], r.wd_dot - w[1], r.wd_ddot - w[2], r.wd_3 - w[3]];
        let f_tilde = self.chain.unforced_disturbance(x, &tau) + (self.chain.b0 - self.b0_hat) * cmd.u_sat;
        let f_true = self.k[1] * e[1] + self.k[2] * e[2] + self.k[3] * e[3] + r.wd_4 - f_tilde;
        Sample {
            t,
            x: x.0.into(),
            z: (*z).into(),
            wd: r.wd,
            e: e[0],
            u_raw: cmd.u_raw,
            u_sat: cmd.u_sat,
            tau: tau[0],
            f_true,
            f_hat: cmd.f_hat,
        }
    }

    /// Full co-integrated right-hand side.
    fn eval(&self, t: f64, s: &State, noise: f64) -> Eval {
        let (x, z, integral) = split(s);
        let cmd = self.command(t, &x, &z, integral, noise);
        let tau = self.disturbance.evaluate(t, 0);
        let dx = self.ss.derivative(&x.0, cmd.u_sat, tau);
        let (dz, di) = self.controller_rates(&z, &cmd);
        let mut ds = State::zeros();
        ds.fixed_rows_mut::<4>(0).copy_from(&dx);
        ds.fixed_rows_mut::<7>(4).copy_from(&dz);
        ds[11] = di;
        Eval { ds, sample: self.record(t, &x, &z, &cmd) }
    }

    /// Plant-only right-hand side with a held duty cycle.
    fn plant_rate(&self, t: f64, s: &State, u: f64) -> State {
        let x = Vector4::new(s[0], s[1], s[2], s[3]);
        let dx = self.ss.derivative(&x, u, self.disturbance.evaluate(t, 0));
        let mut ds = State::zeros();
        ds.fixed_rows_mut::<4>(0).copy_from(&dx);
        ds
    }
}

fn check(t: f64, s: &State) -> Result<()> {
    let ok = s.iter().all(|v| v.is_finite()) && s.fixed_rows::<4>(0).iter().all(|v| v.abs() < DIVERGENCE_BOUND);
    if ok {
        Ok(())
    } else {
        Err(Error::Diverged { time: t, last_state: s.iter().copied().collect() })
    }
}

fn initial_state(sc: &Scenario, lp: &Loop) -> Result<State> {
    let (x, u_eq) = match sc.initial {
        PlantInit::Zero => (Vector4::zeros(), 0.0),
        PlantInit::Equilibrium { omega } => {
            let (x, u) = equilibrium(&lp.ss, omega, 0.0)?;
            (x.0, u)
        }
        PlantInit::State { x } => (Vector4::from(x), 0.0),
    };
    let mut s = State::zeros();
    s.fixed_rows_mut::<4>(0).copy_from(&x);
    if sc.warm_start {
        let e0 = lp.reference.state(0.0).wd - x[3];
        match lp.law {
            Law::Pi { kp, ki } if ki != 0.0 => s[11] = (u_eq - kp * e0) / ki,
            Law::Adrc { ref m } => s[8] = m.b0_hat * u_eq - m.k[0] * e0,
            _ => {}
        }
    }
    Ok(s)
}

pub fn run(sc: &Scenario) -> Result<Trace> {
    sc.validate()?;
    let lp = Loop::new(sc)?;
    let h = sc.step_size;
    let n_steps = sc.steps();
    let every = sc.record_every;
    let mut s = initial_state(sc, &lp)?;
    let mut samples = Vec::with_capacity(n_steps / every + 1);

    let mut rng = ChaCha8Rng::seed_from_u64(sc.noise.seed);
    let normal = Normal::new(0.0, sc.noise.std.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut draw = || if sc.noise.std > 0.0 { normal.sample(&mut rng) } else { 0.0 };

    match sc.mode.kind {
        ModeKind::Continuous => {
            for n in 0..=n_steps {
                let t = n as f64 * h;
                let w = draw();
                let k1 = lp.eval(t, &s, w);
                if n % every == 0 {
                    samples.push(k1.sample);
                }
                if n == n_steps {
                    break;
                }
                let k2 = lp.eval(t + 0.5 * h, &(s + k1.ds * (0.5 * h)), w).ds;
                let k3 = lp.eval(t + 0.5 * h, &(s + k2 * (0.5 * h)), w).ds;
                let k4 = lp.eval(t + h, &(s + k3 * h), w).ds;
                s += (k1.ds + (k2 + k3) * 2.0 + k4) * (h / 6.0);
                check(t + h, &s)?;
            }
        }
        ModeKind::Zoh => {
            let ts = sc.mode.sample_time;
            let per = (ts / h).round() as usize;
            let mut held = None;
            for n in 0..=n_steps {
                let t = n as f64 * h;
                let w = draw();
                let (x, z, integral) = split(&s);
                if n % per == 0 {
                    let cmd = lp.command(t, &x, &z, integral, w);
                    let (dz, di) = lp.controller_rates(&z, &cmd);
                    held = Some((cmd, dz, di));
                }
                let (cmd, dz, di) = held.as_ref().expect("first step is a sample instant");
                if n % every == 0 {
                    samples.push(lp.record(t, &x, &z, cmd));
                }
                if n == n_steps {
                    break;
                }
                let u = cmd.u_sat;
                let k1 = lp.plant_rate(t, &s, u);
                let k2 = lp.plant_rate(t + 0.5 * h, &(s + k1 * (0.5 * h)), u);
                let k3 = lp.plant_rate(t + 0.5 * h, &(s + k2 * (0.5 * h)), u);
                let k4 = lp.plant_rate(t + h, &(s + k3 * h), u);
                s += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
                if (n + 1) % per == 0 {
                    for i in 0..7 {
                        s[4 + i] += ts * dz[i];
                    }
                    s[11] += ts * di;
                }
                check(t + h, &s)?;
            }
        }
    }
    Ok(Trace { samples, dt: h * every as f64 })
}
