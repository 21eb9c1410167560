//! Load-torque signals: steps, polynomials in time, and single-frequency sinusoids.
//!
//! Every component is expressed in its local time `s = t - onset` and contributes
//! nothing before its onset. Derivatives at the onset instant are one-sided
//! (post-onset), so a step has zero derivative everywhere it is defined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    Step {
        onset: f64,
        amplitude: f64,
    },
    /// `sum_k coefficients[k] * s^k`.
    Polynomial {
        onset: f64,
        coefficients: Vec<f64>,
    },
    /// `a1 sin(omega s) + a2 cos(omega s)`.
    Sinusoid {
        onset: f64,
        a1: f64,
        a2: f64,
        omega: f64,
    },
}

impl Component {
    pub fn onset(&self) -> f64 {
        match *self {
            Component::Step { onset, .. } | Component::Polynomial { onset, .. } | Component::Sinusoid { onset, .. } => {
                onset
            }
        }
    }

    fn with_onset(&self, new: f64) -> Self {
        let mut c = self.clone();
        match &mut c {
            Component::Step { onset, .. } | Component::Polynomial { onset, .. } | Component::Sinusoid { onset, .. } => {
                *onset = new
            }
        }
        c
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidScenario(format!("disturbance {what} must be finite")));
        let onset = self.onset();
        if !onset.is_finite() || onset < 0.0 {
            return Err(Error::InvalidScenario(format!("disturbance onset must be finite and >= 0, got {onset}")));
        }
        match self {
            Component::Step { amplitude, .. } if !amplitude.is_finite() => bad("amplitude"),
            Component::Polynomial { coefficients, .. } if coefficients.iter().any(|c| !c.is_finite()) => {
                bad("coefficients")
            }
            Component::Sinusoid { a1, a2, omega, .. } if !(a1.is_finite() && a2.is_finite() && omega.is_finite()) => {
                bad("sinusoid parameters")
            }
            _ => Ok(()),
        }
    }

    /// `order`-th derivative at local time `s >= 0`.
    fn local(&self, s: f64, order: usize) -> f64 {
        match self {
            Component::Step { amplitude, .. } => {
                if order == 0 {
                    *amplitude
                } else {
                    0.0
                }
            }
            Component::Polynomial { coefficients, .. } => {
                // Horner on the differentiated coefficient list.
                let mut acc = 0.0;
                for (k, &c) in coefficients.iter().enumerate().skip(order).rev() {
                    let falling: f64 = ((k - order + 1)..=k).map(|v| v as f64).product();
                    acc = acc * s + c * falling;
                }
                acc
            }
            Component::Sinusoid { a1, a2, omega, .. } => {
                let (sn, cs) = (omega * s).sin_cos();
                let w = omega.powi(order as i32);
                // d/ds rotates (sin, cos) by a quarter turn each time.
                let v = match order % 4 {
                    0 => a1 * sn + a2 * cs,
                    1 => a1 * cs - a2 * sn,
                    2 => -(a1 * sn + a2 * cs),
                    _ => -(a1 * cs - a2 * sn),
                };
                w * v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    #[serde(default)]
    pub components: Vec<Component>,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(c: Component) -> Self {
        Self { components: vec![c] }
    }

    pub fn validate(&self) -> Result<()> {
        self.components.iter().try_for_each(Component::validate)
    }

    /// Sum of active components' `order`-th derivatives. Orders above 3 are allowed.
    pub fn evaluate(&self, t: f64, order: usize) -> f64 {
        self.components.iter().filter(|c| t >= c.onset()).map(|c| c.local(t - c.onset(), order)).sum()
    }

    /// `[tau, tau', tau'', tau''']` at `t`.
    pub fn derivatives(&self, t: f64) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.evaluate(t, k))
    }

    /// Earliest onset, if any component exists.
    pub fn first_onset(&self) -> Option<f64> {
        self.components.iter().map(Component::onset).reduce(f64::min)
    }

    /// Copy with every onset moved to the nearest multiple of `h`.
    pub fn snapped(&self, h: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.with_onset((c.onset() / h).round() * h)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn step_examples() {
        let d = DisturbanceSpec::single(Component::Step { onset: 1.0, amplitude: 1.0 });
        assert_eq!(d.evaluate(2.0, 0), 1.0);
        assert_eq!(d.evaluate(0.999, 0), 0.0);
        assert_eq!(d.evaluate(1.0, 0), 1.0);
        assert_eq!(d.evaluate(1.0, 1), 0.0);
    }

    #[test]
    fn sinusoid_examples() {
        let d = DisturbanceSpec::single(Component::Sinusoid { onset: 0.0, a1: 1.35, a2: 0.0, omega: 6.0 * PI });
        assert_eq!(d.evaluate(0.0, 0), 0.0);
        assert!((d.evaluate(0.0, 1) - 1.35 * 6.0 * PI).abs() < 1e-12);
        let t = 0.4321;
        let w2 = 36.0 * PI * PI;
        assert!((d.evaluate(t, 2) + w2 * d.evaluate(t, 0)).abs() < 1e-10 * w2);
    }

    #[test]
    fn polynomial_derivatives() {
        // 1 + 2 s + 3 s^2 + 4 s^3 at onset 0.5
        let d = DisturbanceSpec::single(Component::Polynomial { onset: 0.5, coefficients: vec![1.0, 2.0, 3.0, 4.0] });
        let s: f64 = 1.5;
        assert!((d.evaluate(2.0, 0) - (1.0 + 2.0 * s + 3.0 * s * s + 4.0 * s.powi(3))).abs() < 1e-12);
        assert!((d.evaluate(2.0, 1) - (2.0 + 6.0 * s + 12.0 * s * s)).abs() < 1e-12);
        assert!((d.evaluate(2.0, 2) - (6.0 + 24.0 * s)).abs() < 1e-12);
        assert_eq!(d.evaluate(2.0, 3), 24.0);
        assert_eq!(d.evaluate(2.0, 4), 0.0);
    }

    #[test]
    fn snapping_moves_to_grid() {
        let d = DisturbanceSpec::single(Component::Step { onset: 1.000_004, amplitude: 1.0 });
        assert_eq!(d.snapped(1e-5).first_onset(), Some(100_000.0 * 1e-5));
    }

    #[test]
    fn validation() {
        assert!(DisturbanceSpec::single(Component::Step { onset: -1.0, amplitude: 1.0 }).validate().is_err());
        assert!(DisturbanceSpec::single(Component::Sinusoid { onset: 0.0, a1: f64::NAN, a2: 0.0, omega: 1.0 })
            .validate()
            .is_err());
    }

    proptest! {
        #[test]
        fn oscillator_identity(a1 in -5.0f64..5.0, a2 in -5.0f64..5.0, w in 0.1f64..100.0, t in 0.0f64..10.0) {
            let d = DisturbanceSpec::single(Component::Sinusoid { onset: 0.0, a1, a2, omega: w });
            let lhs = d.evaluate(t, 2) + w * w * d.evaluate(t, 0);
            let scale = w * w * (a1.abs() + a2.abs()).max(1e-12);
            prop_assert!(lhs.abs() <= 1e-10 * scale);
        }

        #[test]
        fn finite_differences_match(a1 in -2.0f64..2.0, a2 in -2.0f64..2.0, w in 0.5f64..20.0,
                                    c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, t in 1.2f64..5.0, k in 0usize..3) {
            let d = DisturbanceSpec { components: vec![
                Component::Sinusoid { onset: 1.0, a1, a2, omega: w },
                Component::Polynomial { onset: 1.0, coefficients: vec![0.3, c1, c2, 0.1] },
            ]};
            let h = 1e-4;
            let fd = (d.evaluate(t + h, k) - d.evaluate(t - h, k)) / (2.0 * h);
            let exact = d.evaluate(t, k + 1);
            // Central difference error is h^2/6 * |f'''|; bound that with the next orders.
            let bound = h * h * (w.powi(k as i32 + 3) * (a1.abs() + a2.abs()) + 10.0) + 1e-7 * w.powi(k as i32 + 1);
            prop_assert!((fd - exact).abs() <= bound, "{fd} vs {exact}");
        }
    }
}
