//! Scalar performance figures derived from a trace.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSettings {
    /// Overrides the disturbance onset used for recovery and drop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<f64>,
    /// Recovery band as a fraction of the reference level.
    pub band_fraction: f64,
    /// Length of the final window for residual and steady-state figures [s].
    pub window: f64,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self { onset: None, band_fraction: 0.02, window: 1.0 }
    }
}

impl MetricsSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.band_fraction.is_finite()
            && self.band_fraction > 0.0
            && self.window.is_finite()
            && self.window > 0.0
            && self.onset.is_none_or(|o| o.is_finite() && o >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("invalid metrics settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iae: f64,
    pub ise: f64,
    pub max_abs_error: f64,
    /// Time from onset until `|e|` last re-enters the band; `None` if still outside at the end.
    pub recovery_time: Option<f64>,
    /// Half the peak-to-peak error over the final window.
    pub residual_amplitude: f64,
    /// `max |e|` over the final window.
    pub steady_state_error: f64,
    pub control_energy: f64,
    /// Largest `e` after onset (speed below reference counts positive).
    pub velocity_drop: f64,
    /// Reference value at onset, the base of the recovery band.
    pub reference_level: f64,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rec = match self.recovery_time {
            Some(t) => format!("{t:.6}"),
            None => "not recovered".into(),
        };
        write!(
            f,
            "iae={:.6e} ise={:.6e} max|e|={:.6e} recovery={} residual={:.6e} ss|e|={:.6e} energy={:.6e} drop={:.6e}",
            self.iae,
            self.ise,
            self.max_abs_error,
            rec,
            self.residual_amplitude,
            self.steady_state_error,
            self.control_energy,
            self.velocity_drop
        )
    }
}

fn trapezoid(dt: f64, v: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for x in v {
        if let Some(p) = prev {
            acc += 0.5 * dt * (p + x);
        }
        prev = Some(x);
    }
    acc
}

/// Figures of merit for one run. Without an onset, recovery and drop are taken from t = 0.
pub fn compute_metrics(trace: &Trace, onset: Option<f64>, settings: &MetricsSettings) -> Result<MetricsReport> {
    settings.validate()?;
    let s = &trace.samples;
    if s.is_empty() {
        return Err(Error::InvalidScenario("empty trace".into()));
    }
    let t0 = s[0].t;
    let t_end = s[s.len() - 1].t;
    let start = onset.unwrap_or(t0);
    let available = t_end - start;
    // Small slack so a window landing exactly on the grid is accepted.
    let slack = 1e-9 * t_end.abs().max(1.0);
    if available + slack < settings.window || t_end - t0 + slack < settings.window {
        return Err(Error::WindowTooShort { available, required: settings.window });
    }
    let dt = trace.dt;
    let iae = trapezoid(dt, s.iter().map(|x| x.e.abs()));
    let ise = trapezoid(dt, s.iter().map(|x| x.e * x.e));
    let control_energy = trapezoid(dt, s.iter().map(|x| x.u_sat * x.u_sat));
    let max_abs_error = s.iter().map(|x| x.e.abs()).fold(0.0, f64::max);

    let tail_start = t_end - settings.window - slack;
    let tail = s.iter().filter(|x| x.t >= tail_start);
    let (lo, hi) = tail.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.e), hi.max(x.e)));
    let residual_amplitude = 0.5 * (hi - lo);
    let steady_state_error = tail.map(|x| x.e.abs()).fold(0.0, f64::max);

    let first = s.partition_point(|x| x.t < start - slack);
    let after = &s[first..];
    let reference_level = after.first().map_or(0.0, |x| x.wd);
    let band = settings.band_fraction * reference_level.abs();
    let velocity_drop = after.iter().map(|x| x.e).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let recovery_time = match after.iter().rposition(|x| x.e.abs() > band) {
        None => Some(0.0),
        Some(i) if i + 1 < after.len() => Some(after[i + 1].t - start),
        Some(_) => None,
    };

    Ok(MetricsReport {
        iae,
        ise,
        max_abs_error,
        recovery_time,
        residual_amplitude,
        steady_state_error,
        control_energy,
        velocity_drop,
        reference_level,
    })
}

/// Fixed-format table, one row per labelled report.
pub fn summary_table(rows: &[(String, std::result::Result<MetricsReport, String>)]) -> String {
    let mut out = String::from(
        "label,iae,ise,max_abs_error,recovery_time,residual_amplitude,steady_state_error,control_energy,velocity_drop\n",
    );
    for (label, r) in rows {
        match r {
            Ok(m) => {
                let rec = m.recovery_time.map_or("not recovered".to_string(), |t| format!("{t:.6e}"));
                out.push_str(&format!(
                    "{label},{:.6e},{:.6e},{:.6e},{rec},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                    m.iae,
                    m.ise,
                    m.max_abs_error,
                    m.residual_amplitude,
                    m.steady_state_error,
                    m.control_energy,
                    m.velocity_drop
                ));
            }
            Err(e) => out.push_str(&format!("{label},error: {}\n", e.replace(',', ";"))),
        }
    }
    out
}
