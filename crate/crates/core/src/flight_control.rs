//! Decoupled position (feedback linearization + PD) and geometric attitude
//! control, closed through allocation.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rigid_body::{skew, unskew, InertiaParams, RigidBodyState};
use crate::wrench::{ActuationMatrix, ActuationVector, SaturationPolicy, Wrench};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGains {
    pub k_x: f64,
    pub k_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeGains {
    pub k_r: f64,
    pub k_omega: f64,
}

/// Both gain sets, in the scenario file layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    #[serde(rename = "kx")]
    pub k_x: f64,
    #[serde(rename = "kv")]
    pub k_v: f64,
    #[serde(rename = "kr")]
    pub k_r: f64,
    #[serde(rename = "kw")]
    pub k_omega: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k_x: 4.0,
            k_v: 4.0,
            k_r: 8.0,
            k_omega: 2.5,
        }
    }
}

impl Gains {
    pub fn position(&self) -> PositionGains {
        PositionGains {
            k_x: self.k_x,
            k_v: self.k_v,
        }
    }

    pub fn attitude(&self) -> AttitudeGains {
        AttitudeGains {
            k_r: self.k_r,
            k_omega: self.k_omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.k_x, self.k_v, self.k_r, self.k_omega];
        if all.iter().all(|g| *g > 0.0 && g.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("gains must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Setpoint {
    pub x_d: Vector3<f64>,
    pub v_d: Vector3<f64>,
    pub r_d: Matrix3<f64>,
    pub omega_d: Vector3<f64>,
    pub omega_dot_d: Vector3<f64>,
}

impl Setpoint {
    /// Pose hold: zero desired velocities.
    pub fn hold(x_d: Vector3<f64>, r_d: Matrix3<f64>) -> Self {
        Self {
            x_d,
            v_d: Vector3::zeros(),
            r_d,
            omega_d: Vector3::zeros(),
            omega_dot_d: Vector3::zeros(),
        }
    }
}

/// Body-frame force `m Rᵀ(-k_x e_x - k_v e_v)`.
pub fn position_control(
    s: &RigidBodyState,
    sp: &Setpoint,
    g: &PositionGains,
    m: f64,
) -> Vector3<f64> {
    let e_x = s.x - sp.x_d;
    let e_v = s.v - sp.v_d;
    m * s.r.transpose() * (-g.k_x * e_x - g.k_v * e_v)
}

/// `unskew(R_dᵀR - RᵀR_d) / (2√(1 + tr R_dᵀR))`; its norm is `sin(θ/2)` for a
/// relative rotation by `θ`.
pub fn attitude_error(r: &Matrix3<f64>, r_d: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let rel = r_d.transpose() * r;
    let trace = rel.trace();
    if trace <= -1.0 + 1e-9 {
        return Err(Error::AttitudeSingularity { trace });
    }
    let v = unskew(&(rel - rel.transpose()))?;
    Ok(v / (2.0 * (1.0 + trace).sqrt()))
}

/// Body-frame torque of the geometric SO(3) controller with rate and
/// acceleration feedforward.
pub fn attitude_control(
    s: &RigidBodyState,
    sp: &Setpoint,
    g: &AttitudeGains,
    j: &Matrix3<f64>,
) -> Result<Vector3<f64>> {
    let e_r = attitude_error(&s.r, &sp.r_d)?;
    let transport = s.r.transpose() * sp.r_d;
    let omega_d_body = transport * sp.omega_d;
    let e_omega = s.omega - omega_d_body;
    Ok(-g.k_r * e_r - g.k_omega * e_omega
        + skew(&omega_d_body) * j * omega_d_body
        + j * transport * sp.omega_dot_d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrenchCommand {
    pub commanded: Wrench,
    pub u: ActuationVector,
    /// What the propellers actually produce after saturation.
    pub applied: Wrench,
    pub saturated: bool,
}

/// Control laws → allocation → saturation → forward map.
pub fn wrench_command(
    s: &RigidBodyState,
    sp: &Setpoint,
    gains: &Gains,
    ip: &InertiaParams,
    am: &ActuationMatrix,
    policy: SaturationPolicy,
) -> Result<WrenchCommand> {
    let force = position_control(s, sp, &gains.position(), ip.m);
    let torque = attitude_control(s, sp, &gains.attitude(), &ip.j)?;
    let commanded = Wrench::new(force, torque);
    let (u, saturated) = am.allocate(&commanded)?.saturate(policy);
    let applied = am.forward(&u);
    Ok(WrenchCommand {
        commanded,
        u,
        applied,
        saturated,
    })
}
