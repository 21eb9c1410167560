//! Control laws: error-domain ADRC, PI with anti-windup, and the idealised
//! conventional ADRC that reads true plant derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observer::ObserverKind;
use crate::tuning::{controller_gains, GainSet};

/// Nominal flat-gain estimate.
pub const NOMINAL_B0_HAT: f64 = 4.3015e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    Pi {
        kp: f64,
        ki: f64,
    },
    /// Observer-based ADRC. A GPIO always runs with `omega_r_hat = 0`.
    Adrc {
        observer: ObserverKind,
        omega_c: f64,
        omega_o: f64,
        #[serde(default)]
        omega_r_hat: f64,
        b0_hat: f64,
    },
    /// Conventional ADRC fed with exact error derivatives and the exact
    /// lumped disturbance. Only a simulator can provide those.
    Oracle {
        omega_c: f64,
        b0_hat: f64,
    },
}

impl ControllerConfig {
    pub fn pi(kp: f64, ki: f64) -> Self {
        Self::Pi { kp, ki }
    }

    pub fn reso(omega_c: f64, omega_o: f64, omega_r_hat: f64, b0_hat: f64) -> Self {
        Self::Adrc { observer: ObserverKind::Reso, omega_c, omega_o, omega_r_hat, b0_hat }
    }

    pub fn gpio(omega_c: f64, omega_o: f64, b0_hat: f64) -> Self {
        Self::Adrc { observer: ObserverKind::Gpio, omega_c, omega_o, omega_r_hat: 0.0, b0_hat }
    }

    pub fn oracle(omega_c: f64, b0_hat: f64) -> Self {
        Self::Oracle { omega_c, b0_hat }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Pi { .. } => "pi",
            Self::Adrc { observer: ObserverKind::Gpio, .. } => "adrc-gpio",
            Self::Adrc { observer: ObserverKind::Reso, .. } => "adrc-reso",
            Self::Oracle { .. } => "adrc-oracle",
        }
    }

    /// Resonant frequency actually used by the observer.
    pub fn effective_omega_r_hat(&self) -> f64 {
        match *self {
            Self::Adrc { observer: ObserverKind::Reso, omega_r_hat, .. } => omega_r_hat,
            _ => 0.0,
        }
    }

    /// Controller gains `k0..k3`, when the law has them.
    pub fn k(&self) -> Option<[f64; 4]> {
        match *self {
            Self::Adrc { omega_c, .. } | Self::Oracle { omega_c, .. } => controller_gains(omega_c).ok(),
            Self::Pi { .. } => None,
        }
    }

    pub fn gains(&self) -> Result<Option<GainSet>> {
        match *self {
            Self::Adrc { omega_c, omega_o, .. } => {
                Ok(Some(GainSet::from_bandwidths(omega_c, omega_o, self.effective_omega_r_hat())?))
            }
            _ => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("{v} is not finite") })
            }
        };
        let nonzero_b0 = |b: f64| {
            if b.is_finite() && b != 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name: "b0_hat", reason: format!("{b} must be finite and nonzero") })
            }
        };
        match *self {
            Self::Pi { kp, ki } => {
                finite("kp", kp)?;
                finite("ki", ki)
            }
            Self::Adrc { b0_hat, .. } => {
                nonzero_b0(b0_hat)?;
                self.gains().map(|_| ())
            }
            Self::Oracle { omega_c, b0_hat } => {
                nonzero_b0(b0_hat)?;
                controller_gains(omega_c).map(|_| ())
            }
        }
    }
}

/// Clamp a raw command to the physical duty-cycle range.
pub fn saturate(u: f64) -> f64 {
    u.clamp(0.0, 1.0)
}

/// Returns `(u_raw, u0)` with `u0 = k0 e` and `u_raw = (u0 + F_hat) / b0_hat`.
pub fn adrc_control(e: f64, f_hat: f64, k0: f64, b0_hat: f64) -> (f64, f64) {
    let u0 = k0 * e;
    ((u0 + f_hat) / b0_hat, u0)
}

pub fn pi_control(e: f64, integral: f64, kp: f64, ki: f64) -> f64 {
    kp * e + ki * integral
}

/// Integrator input for the PI state: `e`, or zero while the command is
/// saturated and `e` would push it further out.
pub fn pi_integrator_rate(e: f64, u_raw: f64) -> f64 {
    if (u_raw > 1.0 && e > 0.0) || (u_raw < 0.0 && e < 0.0) {
        0.0
    } else {
        e
    }
}

/// `u = (wd'''' + sum k_i e^(i) - F~_hat) / b0_hat` with `k` weighting `e'..e'''` and `k0 e`.
pub fn conventional_adrc_oracle(e_derivs: &[f64; 4], wd4: f64, f_tilde_hat: f64, k: &[f64; 4], b0_hat: f64) -> f64 {
    let feedback: f64 = k.iter().zip(e_derivs).map(|(ki, ei)| ki * ei).sum();
    (wd4 + feedback - f_tilde_hat) / b0_hat
}
