//! Filtered staircase speed reference `omega_d`.
//!
//! A piecewise-constant setpoint `r(t)` drives `a2 y'' + a1 y' + y = r`. The
//! filter is solved in closed form on each constant segment, so every query is
//! exact up to rounding and independent of any integrator step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub time: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filter {
    pub a2: f64,
    pub a1: f64,
}

impl Default for Filter {
    fn default() -> Self {
        Self { a2: 0.025, a1: 0.6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub filter: Filter,
    /// Filter output at t = 0.
    #[serde(default)]
    pub initial_value: f64,
    /// Filter output rate at t = 0.
    #[serde(default)]
    pub initial_rate: f64,
}

impl ReferenceSpec {
    pub fn staircase(steps: &[(f64, f64)]) -> Self {
        Self {
            steps: steps.iter().map(|&(time, level)| Step { time, level }).collect(),
            filter: Filter::default(),
            initial_value: 0.0,
            initial_rate: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::staircase(&[])
    }

    /// Constant level with the filter already settled on it.
    pub fn settled(level: f64) -> Self {
        let mut s = Self::staircase(&[(0.0, level)]);
        s.initial_value = level;
        s
    }

    pub fn validate(&self) -> Result<()> {
        let Filter { a2, a1 } = self.filter;
        if !(a2.is_finite() && a1.is_finite() && a2 > 0.0 && a1 > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "reference filter needs a2 > 0 and a1 > 0, got a2 = {a2}, a1 = {a1}"
            )));
        }
        if !(self.initial_value.is_finite() && self.initial_rate.is_finite()) {
            return Err(Error::InvalidScenario("reference initial state must be finite".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for s in &self.steps {
            if !(s.time.is_finite() && s.time >= 0.0 && s.level.is_finite() && s.level >= 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "reference step ({}, {}) needs finite time >= 0 and level >= 0",
                    s.time, s.level
                )));
            }
            if s.time <= prev {
                return Err(Error::InvalidScenario("reference step times must be strictly increasing".into()));
            }
            prev = s.time;
        }
        Ok(())
    }

    /// Setpoint `r(t)`: the level of the latest step at or before `t`, else 0.
    pub fn setpoint(&self, t: f64) -> f64 {
        self.steps.iter().take_while(|s| s.time <= t).last().map_or(0.0, |s| s.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceState {
    pub wd: f64,
    pub wd_dot: f64,
    pub wd_ddot: f64,
    pub wd_3: f64,
    pub wd_4: f64,
}

/// Precomputed segment boundaries for repeated queries.
#[derive(Debug, Clone)]
pub struct Reference {
    spec: ReferenceSpec,
    /// `(start time, setpoint, y, y')` for each constant segment.
    segments: Vec<(f64, f64, f64, f64)>,
}

impl Reference {
    pub fn new(spec: &ReferenceSpec) -> Result<Self> {
        spec.validate()?;
        let mut segments = Vec::with_capacity(spec.steps.len() + 1);
        let mut start = 0.0;
        let mut y = spec.initial_value;
        let mut yd = spec.initial_rate;
        let mut r = spec.setpoint(0.0);
        for s in spec.steps.iter().filter(|s| s.time > 0.0) {
            segments.push((start, r, y, yd));
            (y, yd) = propagate(&spec.filter, r, y, yd, s.time - start);
            start = s.time;
            r = s.level;
        }
        segments.push((start, r, y, yd));
        Ok(Self { spec: spec.clone(), segments })
    }

    pub fn spec(&self) -> &ReferenceSpec {
        &self.spec
    }

    pub fn state(&self, t: f64) -> ReferenceState {
        let idx = self.segments.partition_point(|seg| seg.0 <= t).saturating_sub(1);
        let (start, r, y0, yd0) = self.segments[idx];
        let (wd, wd_dot) = propagate(&self.spec.filter, r, y0, yd0, (t - start).max(0.0));
        let Filter { a2, a1 } = self.spec.filter;
        let wd_ddot = (r - a1 * wd_dot - wd) / a2;
        let wd_3 = -(a1 * wd_ddot + wd_dot) / a2;
        let wd_4 = -(a1 * wd_3 + wd_ddot) / a2;
        ReferenceState { wd, wd_dot, wd_ddot, wd_3, wd_4 }
    }
}

pub fn reference_state(spec: &ReferenceSpec, t: f64) -> Result<ReferenceState> {
    Ok(Reference::new(spec)?.state(t))
}

/// Coefficients `(c0, c1)` with `exp(M t) = c0 I + c1 M` for the filter companion `M`.
fn exp_coeffs(f: &Filter, t: f64) -> (f64, f64) {
    // Roots sigma +- delta (delta real) or sigma +- j nu.
    let sigma = -f.a1 / (2.0 * f.a2);
    let disc = f.a1 * f.a1 - 4.0 * f.a2;
    let half = disc.abs().sqrt() / (2.0 * f.a2);
    let es = (sigma * t).exp();
    if disc > 0.0 {
        let (l1, l2) = (sigma + half, sigma - half);
        if half * t > 1.0 {
            let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
            ((l1 * e2 - l2 * e1) / (l1 - l2), (e1 - e2) / (l1 - l2))
        } else {
            let sh = if half == 0.0 { t } else { (half * t).sinh() / half };
            (es * ((half * t).cosh() - sigma * sh), es * sh)
        }
    } else if disc < 0.0 {
        let sn = (half * t).sin() / half;
        (es * ((half * t).cos() - sigma * sn), es * sn)
    } else {
        (es * (1.0 - sigma * t), es * t)
    }
}

fn propagate(f: &Filter, r: f64, y: f64, yd: f64, dt: f64) -> (f64, f64) {
    let (c0, c1) = exp_coeffs(f, dt);
    // Deviation from the segment's equilibrium (r, 0) evolves under M.
    let (p, q) = (y - r, yd);
    let mq = -(p + f.a1 * q) / f.a2;
    (r + c0 * p + c1 * q, c0 * q + c1 * mq)
}
