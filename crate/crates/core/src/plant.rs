//! Averaged model of a DC-DC buck converter driving a permanent-magnet DC motor.
//!
//! State ordering is `x = [i, v, i_a, omega]`: inductor current, capacitor
//! voltage, armature current and shaft speed. The single input is the duty
//! cycle `u` and the load torque `tau` enters the mechanical equation.

use nalgebra::{Matrix4, RowVector4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the converter-fed motor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Converter inductance L [H].
    pub inductance: f64,
    /// Output filter capacitance C [F].
    pub capacitance: f64,
    /// Converter load resistance R [ohm].
    pub load_resistance: f64,
    /// Source voltage E [V].
    pub source_voltage: f64,
    /// Armature inductance L_a [H].
    pub armature_inductance: f64,
    /// Armature resistance R_a [ohm].
    pub armature_resistance: f64,
    /// Back-EMF constant k_e [V s/rad].
    pub back_emf_constant: f64,
    /// Torque constant k_m [N m/A].
    pub torque_constant: f64,
    /// Rotor plus load inertia J [kg m^2].
    pub inertia: f64,
    /// Viscous friction b_m [N m s/rad].
    pub friction: f64,
}

impl Default for PlantParams {
    /// Desk-scale parameter set whose flat input gain is 4.3015e12 to within 0.01 %.
    ///
    /// Everything except the inertia is fixed at a catalogue-style value; the
    /// inertia is then solved from `E k_m / (C J L L_a) = 4.3015e12`.
    fn default() -> Self {
        Self {
            inductance: 1.0e-3,
            capacitance: 1.0e-3,
            load_resistance: 20.0,
            source_voltage: 48.0,
            armature_inductance: 1.0e-3,
            armature_resistance: 0.2,
            back_emf_constant: 0.1,
            torque_constant: 0.1,
            inertia: 1.1159e-3,
            friction: 1.0e-4,
        }
    }
}

impl PlantParams {
    /// Every parameter set to one, handy for hand-checkable matrices.
    pub fn unit() -> Self {
        Self {
            inductance: 1.0,
            capacitance: 1.0,
            load_resistance: 1.0,
            source_voltage: 1.0,
            armature_inductance: 1.0,
            armature_resistance: 1.0,
            back_emf_constant: 1.0,
            torque_constant: 1.0,
            inertia: 1.0,
            friction: 1.0,
        }
    }

    fn fields(&self) -> [(&'static str, f64); 10] {
        [
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
            ("load_resistance", self.load_resistance),
            ("source_voltage", self.source_voltage),
            ("armature_inductance", self.armature_inductance),
            ("armature_resistance", self.armature_resistance),
            ("back_emf_constant", self.back_emf_constant),
            ("torque_constant", self.torque_constant),
            ("inertia", self.inertia),
            ("friction", self.friction),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite and > 0, got {value}") });
            }
        }
        let b0 = self.flat_gain();
        if !b0.is_finite() || b0 == 0.0 {
            return Err(Error::InvalidParameter {
                name: "flat_gain",
                reason: format!("E k_m / (C J L L_a) = {b0} is not finite and nonzero"),
            });
        }
        Ok(())
    }

    /// Closed-form flat input gain `b0 = E k_m / (C J L L_a)`.
    pub fn flat_gain(&self) -> f64 {
        self.source_voltage * self.torque_constant
            / (self.capacitance * self.inertia * self.inductance * self.armature_inductance)
    }
}

/// Plant state `[i, v, i_a, omega]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState(pub Vector4<f64>);

impl PlantState {
    pub fn new(i: f64, v: f64, i_a: f64, omega: f64) -> Self {
        Self(Vector4::new(i, v, i_a, omega))
    }

    pub fn zeros() -> Self {
        Self(Vector4::zeros())
    }

    pub fn inductor_current(&self) -> f64 {
        self.0[0]
    }

    pub fn capacitor_voltage(&self) -> f64 {
        self.0[1]
    }

    pub fn armature_current(&self) -> f64 {
        self.0[2]
    }

    pub fn speed(&self) -> f64 {
        self.0[3]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Linear state-space form `x' = A x + B_u u + B_d tau`, `omega = C x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub a: Matrix4<f64>,
    pub b_u: Vector4<f64>,
    pub b_d: Vector4<f64>,
    pub c: RowVector4<f64>,
}

impl StateSpace {
    pub fn derivative(&self, x: &Vector4<f64>, u: f64, tau: f64) -> Vector4<f64> {
        self.a * x + self.b_u * u + self.b_d * tau
    }

    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

pub fn build_state_space(p: &PlantParams) -> Result<StateSpace> {
    p.validate()?;
    let PlantParams {
        inductance: l,
        capacitance: c,
        load_resistance: r,
        source_voltage: e,
        armature_inductance: la,
        armature_resistance: ra,
        back_emf_constant: ke,
        torque_constant: km,
        inertia: j,
        friction: bm,
    } = *p;

    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0,     -1.0 / l,        0.0,        0.0,
        1.0 / c, -1.0 / (c * r), -1.0 / c,    0.0,
        0.0,      1.0 / la,      -ra / la,   -ke / la,
        0.0,      0.0,            km / j,    -bm / j,
    );
    Ok(StateSpace {
        a,
        b_u: Vector4::new(e / l, 0.0, 0.0, 0.0),
        b_d: Vector4::new(0.0, 0.0, 0.0, -1.0 / j),
        c: RowVector4::new(0.0, 0.0, 0.0, 1.0),
    })
}

/// Time derivative of the plant state. The duty cycle must already lie in `[0, 1]`.
pub fn plant_derivative(ss: &StateSpace, x: &PlantState, u: f64, tau: f64) -> Result<PlantState> {
    if !x.is_finite() {
        return Err(Error::NonFinite("plant state"));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("duty cycle"));
    }
    if !tau.is_finite() {
        return Err(Error::NonFinite("load torque"));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParameter { name: "duty cycle", reason: format!("{u} outside [0, 1]") });
    }
    Ok(PlantState(ss.derivative(&x.0, u, tau)))
}

/// Steady state holding speed `omega` against a constant load `tau`, with its duty cycle.
pub fn equilibrium(ss: &StateSpace, omega: f64, tau: f64) -> Result<(PlantState, f64)> {
    let a_inv = ss.a.try_inverse().ok_or(Error::Singular { rank: 3 })?;
    // x = -A^-1 (B_u u + B_d tau); pick u so that C x = omega.
    let per_duty = -(ss.c * a_inv * ss.b_u)[0];
    let per_torque = -(ss.c * a_inv * ss.b_d)[0];
    let u = (omega - per_torque * tau) / per_duty;
    let x = -(a_inv * (ss.b_u * u + ss.b_d * tau));
    Ok((PlantState(x), u))
}
