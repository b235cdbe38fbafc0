//! Newton–Euler dynamics in microgravity and a Lie-group RK4 integrator.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wrench::Wrench;

/// Hat map: `skew(ω) a = ω × a`.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Inverse of [`skew`].
pub fn unskew(s: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let asymmetry = (s + s.transpose()).norm();
    if asymmetry > 1e-6 * s.norm() {
        return Err(Error::NotSkew { asymmetry });
    }
    Ok(Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

/// Rodrigues formula for the rotation by `|φ|` about `φ/|φ|`.
pub fn so3_exp(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-6 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(phi);
    Matrix3::identity() + a * k + b * k * k
}

/// Axis-angle vector of a rotation matrix, angle in `[0, π]`.
pub fn so3_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let rot = nalgebra::Rotation3::from_matrix_unchecked(*r);
    rot.scaled_axis()
}

/// Geodesic distance between two rotations (rad).
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let cos = ((a.transpose() * b).trace() - 1.0) / 2.0;
    cos.clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidBodyState {
    /// Inertial position (m).
    pub x: Vector3<f64>,
    /// Inertial velocity (m/s).
    pub v: Vector3<f64>,
    /// Body-to-inertial rotation.
    pub r: Matrix3<f64>,
    /// Body angular velocity (rad/s).
    pub omega: Vector3<f64>,
}

impl RigidBodyState {
    pub fn at_rest(x: Vector3<f64>, r: Matrix3<f64>) -> Self {
        Self {
            x,
            v: Vector3::zeros(),
            r,
            omega: Vector3::zeros(),
        }
    }

    /// `‖RᵀR - I‖` (Frobenius).
    pub fn orthogonality_error(&self) -> f64 {
        (self.r.transpose() * self.r - Matrix3::identity()).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertiaParams {
    /// Mass (kg).
    pub m: f64,
    /// Inertia about the CoM in body axes (kg·m²).
    pub j: Matrix3<f64>,
}

/// Nominal vehicle mass (kg).
pub const VEHICLE_MASS: f64 = 6.05;

impl Default for InertiaParams {
    /// Solid cylinder of radius 0.16 m and height 0.2 m with the vehicle mass.
    fn default() -> Self {
        Self::cylinder(VEHICLE_MASS, 0.16, 0.2)
    }
}

impl InertiaParams {
    pub fn new(m: f64, j: Matrix3<f64>) -> Result<Self> {
        let p = Self { m, j };
        p.validate()?;
        Ok(p)
    }

    /// Solid cylinder with its axis along body z.
    pub fn cylinder(m: f64, radius: f64, height: f64) -> Self {
        let transverse = m * (3.0 * radius * radius + height * height) / 12.0;
        let axial = 0.5 * m * radius * radius;
        Self {
            m,
            j: Matrix3::from_diagonal(&Vector3::new(transverse, transverse, axial)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mass {} must be positive",
                self.m
            )));
        }
        if (self.j - self.j.transpose()).norm() > 1e-9 * self.j.norm() {
            return Err(Error::InvalidParameter(
                "inertia tensor is not symmetric".into(),
            ));
        }
        if self.j.cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "inertia tensor is not positive definite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadSpec {
    /// kg
    pub mass: f64,
    /// Payload CoM relative to the vehicle CoM, body axes (m).
    pub offset: Vector3<f64>,
    /// Own inertia about the payload CoM.
    pub shape_inertia: Matrix3<f64>,
}

impl PayloadSpec {
    /// Solid sphere.
    pub fn sphere(mass: f64, radius: f64, offset: Vector3<f64>) -> Self {
        Self {
            mass,
            offset,
            shape_inertia: Matrix3::identity() * (0.4 * mass * radius * radius),
        }
    }

    /// Offset of the composite CoM from the vehicle CoM (body axes).
    pub fn com_shift(&self, base_mass: f64) -> Vector3<f64> {
        self.offset * (self.mass / (self.mass + base_mass))
    }
}

/// Inertia of a point mass at `r` about the origin.
fn parallel_axis(m: f64, r: &Vector3<f64>) -> Matrix3<f64> {
    m * (Matrix3::identity() * r.norm_squared() - r * r.transpose())
}

/// Vehicle plus rigidly attached payload, about the composite CoM
/// (located at [`PayloadSpec::com_shift`] from the vehicle CoM).
pub fn composite_inertia(base: &InertiaParams, payload: &PayloadSpec) -> InertiaParams {
    let m = base.m + payload.mass;
    let c = payload.com_shift(base.m);
    let j = base.j
        + parallel_axis(base.m, &(-c))
        + payload.shape_inertia
        + parallel_axis(payload.mass, &(payload.offset - c));
    InertiaParams { m, j }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub x_dot: Vector3<f64>,
    pub v_dot: Vector3<f64>,
    pub r_dot: Matrix3<f64>,
    pub omega_dot: Vector3<f64>,
}

/// Body-frame wrench `w` acting on the body; no gravity.
pub fn dynamics_derivative(s: &RigidBodyState, w: &Wrench, ip: &InertiaParams) -> StateDerivative {
    StateDerivative {
        x_dot: s.v,
        v_dot: s.r * w.force / ip.m,
        r_dot: s.r * skew(&s.omega),
        omega_dot: angular_acceleration(&s.omega, &w.torque, ip),
    }
}

fn angular_acceleration(
    omega: &Vector3<f64>,
    torque: &Vector3<f64>,
    ip: &InertiaParams,
) -> Vector3<f64> {
    let rhs = torque - omega.cross(&(ip.j * omega));
    ip.j.cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| ip.j.try_inverse().unwrap_or_else(Matrix3::zeros) * rhs)
}

/// `dexp⁻¹` of the rotation increment, truncated after the fourth-order terms.
fn dexp_inv(theta: &Vector3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    let c = theta.cross(omega);
    omega + 0.5 * c + theta.cross(&c) / 12.0
}

/// One Runge–Kutta–Munthe-Kaas step of order four with the wrench held constant.
///
/// Translation and angular velocity use the classical RK4 tableau; the
/// rotation is carried as `R₀ exp(θ)` so it stays on SO(3).
pub fn integrate_step(
    s: &RigidBodyState,
    w: &Wrench,
    ip: &InertiaParams,
    dt: f64,
) -> RigidBodyState {
    let accel = |r: &Matrix3<f64>| r * w.force / ip.m;
    let stage = |theta: &Vector3<f64>, v: &Vector3<f64>, omega: &Vector3<f64>| {
        let r = s.r * so3_exp(theta);
        (
            *v,
            accel(&r),
            dexp_inv(theta, omega),
            angular_acceleration(omega, &w.torque, ip),
        )
    };

    let zero = Vector3::zeros();
    let k1 = stage(&zero, &s.v, &s.omega);
    let h = 0.5 * dt;
    let k2 = stage(&(h * k1.2), &(s.v + h * k1.1), &(s.omega + h * k1.3));
    let k3 = stage(&(h * k2.2), &(s.v + h * k2.1), &(s.omega + h * k2.3));
    let k4 = stage(&(dt * k3.2), &(s.v + dt * k3.1), &(s.omega + dt * k3.3));

    let sixth = dt / 6.0;
    let combine = |a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>, d: Vector3<f64>| {
        sixth * (a + 2.0 * b + 2.0 * c + d)
    };
    let theta = combine(k1.2, k2.2, k3.2, k4.2);
    RigidBodyState {
        x: s.x + combine(k1.0, k2.0, k3.0, k4.0),
        v: s.v + combine(k1.1, k2.1, k3.1, k4.1),
        r: s.r * so3_exp(&theta),
        omega: s.omega + combine(k1.3, k2.3, k3.3, k4.3),
    }
}
