//! Per-propeller force/torque model and the 6x6 actuation matrix.
//!
//! Each propeller `i` sits at `r_i = d (cos θ_i, sin θ_i, 0)` and pushes along
//! `u_i = (sin θ_i sin φ_i, -cos θ_i sin φ_i, cos φ_i)`. For an actuation
//! `u_i` (normalized squared rotor speed) it produces the force `K1 u_i û_i`
//! and the torque `K1 r_i × û_i u_i - w_i K2 û_i u_i`. Stacking the six
//! columns gives the actuation matrix `A`, so that `(F, M) = A u`.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this condition number the actuation matrix is treated as rank deficient.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Tolerance on `‖ê‖ - 1` accepted by [`ActuationMatrix::limit_along`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Aerodynamic description of one propeller blade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BladeCoefficients {
    /// Air density (kg/m³).
    pub rho: f64,
    /// Propeller diameter (m).
    pub diameter: f64,
    pub thrust_coeff: f64,
    pub power_coeff: f64,
}

impl BladeCoefficients {
    pub fn new(rho: f64, diameter: f64, thrust_coeff: f64, power_coeff: f64) -> Result<Self> {
        let bc = Self {
            rho,
            diameter,
            thrust_coeff,
            power_coeff,
        };
        for (name, v) in [
            ("rho", rho),
            ("diameter", diameter),
            ("thrust_coeff", thrust_coeff),
            ("power_coeff", power_coeff),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(bc)
    }
}

/// Thrust and reaction-torque constants `(K1, K2)` of a blade.
pub fn blade_constants(bc: &BladeCoefficients) -> (f64, f64) {
    let d4 = bc.diameter.powi(4);
    let k1 = bc.rho * d4 * bc.thrust_coeff;
    let k2 = bc.rho * d4 * bc.diameter * bc.power_coeff / (2.0 * PI);
    (k1, k2)
}

/// Rotation sense of a propeller for positive thrust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Negative,
    Positive,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Negative => -1.0,
            Spin::Positive => 1.0,
        }
    }

    pub fn from_sign(w: i64) -> Result<Self> {
        match w {
            -1 => Ok(Spin::Negative),
            1 => Ok(Spin::Positive),
            other => Err(Error::InvalidParameter(format!(
                "spin must be -1 or 1, got {other}"
            ))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Negative => Spin::Positive,
            Spin::Positive => Spin::Negative,
        }
    }
}

/// Placement of one propeller on the chassis (angles in radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropellerGeometry {
    /// Radial placement angle around the body z axis.
    pub theta: f64,
    /// Tilt of the thrust axis from the body z axis.
    pub phi: f64,
    pub spin: Spin,
    /// Distance from the center of mass, `‖r_i‖`.
    pub arm_length: f64,
}

impl PropellerGeometry {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(
            self.arm_length * self.theta.cos(),
            self.arm_length * self.theta.sin(),
            0.0,
        )
    }

    /// Unit thrust axis.
    pub fn axis(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * sp, -ct * sp, cp)
    }
}

/// Geometric and aerodynamic parameters of a six-propeller vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignFile", into = "DesignFile")]
pub struct DesignConfig {
    pub propellers: [PropellerGeometry; 6],
    /// Thrust per actuation unit (N).
    pub k1: f64,
    /// Reaction torque per actuation unit (N·m).
    pub k2: f64,
}

impl DesignConfig {
    /// Propellers at `θ_i = (i-1)π/3` sharing one arm length.
    pub fn equally_spaced(
        phi: [f64; 6],
        spin: [Spin; 6],
        arm_length: f64,
        k1: f64,
        k2: f64,
    ) -> Result<Self> {
        let propellers = std::array::from_fn(|i| PropellerGeometry {
            theta: i as f64 * PI / 3.0,
            phi: phi[i],
            spin: spin[i],
            arm_length,
        });
        let cfg = Self { propellers, k1, k2 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The rounded design adopted for the simulations: φ = ±55°, alternating spin.
    pub fn selected(k1: f64, k2: f64) -> Self {
        let a = 55f64.to_radians();
        Self::equally_spaced([a, -a, a, -a, a, -a], ALTERNATING_SPIN, 0.16, k1, k2)
            .expect("selected design parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k1 must be positive, got {}",
                self.k1
            )));
        }
        if !(self.k2 >= 0.0 && self.k2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k2 must be non-negative, got {}",
                self.k2
            )));
        }
        for (i, p) in self.propellers.iter().enumerate() {
            if !(p.arm_length > 0.0 && p.arm_length.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "propeller {i}: arm length must be positive"
                )));
            }
            if !(p.phi.abs() <= PI / 2.0) || !p.theta.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "propeller {i}: tilt out of range"
                )));
            }
        }
        Ok(())
    }

    pub fn phi(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.propellers[i].phi)
    }

    pub fn spin(&self) -> [Spin; 6] {
        std::array::from_fn(|i| self.propellers[i].spin)
    }
}

/// Spin pattern `(-1, 1, -1, 1, -1, 1)`.
pub const ALTERNATING_SPIN: [Spin; 6] = [
    Spin::Negative,
    Spin::Positive,
    Spin::Negative,
    Spin::Positive,
    Spin::Negative,
    Spin::Positive,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PropellerFile {
    theta_deg: f64,
    phi_deg: f64,
    w: i64,
}

/// On-disk layout: one shared arm length, angles in degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DesignFile {
    d: f64,
    k1: f64,
    k2: f64,
    propellers: Vec<PropellerFile>,
}

impl TryFrom<DesignFile> for DesignConfig {
    type Error = Error;

    fn try_from(f: DesignFile) -> Result<Self> {
        if f.propellers.len() != 6 {
            return Err(Error::InvalidParameter(format!(
                "expected 6 propellers, got {}",
                f.propellers.len()
            )));
        }
        let mut propellers = [PropellerGeometry {
            theta: 0.0,
            phi: 0.0,
            spin: Spin::Positive,
            arm_length: f.d,
        }; 6];
        for (slot, p) in propellers.iter_mut().zip(&f.propellers) {
            slot.theta = p.theta_deg.to_radians();
            slot.phi = p.phi_deg.to_radians();
            slot.spin = Spin::from_sign(p.w)?;
        }
        let cfg = DesignConfig {
            propellers,
            k1: f.k1,
            k2: f.k2,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Drops sub-nano-degree conversion noise and negative zero for readable files.
pub fn tidy_degrees(deg: f64) -> f64 {
    (deg * 1e9).round() / 1e9 + 0.0
}

impl From<DesignConfig> for DesignFile {
    fn from(cfg: DesignConfig) -> Self {
        DesignFile {
            d: cfg.propellers[0].arm_length,
            k1: cfg.k1,
            k2: cfg.k2,
            propellers: cfg
                .propellers
                .iter()
                .map(|p| PropellerFile {
                    theta_deg: tidy_degrees(p.theta.to_degrees()),
                    phi_deg: tidy_degrees(p.phi.to_degrees()),
                    w: p.spin.sign() as i64,
                })
                .collect(),
        }
    }
}

/// Column `ā_i` of the actuation matrix: force on top, torque below.
pub fn actuation_column(p: &PropellerGeometry, k1: f64, k2: f64) -> Vector6<f64> {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    let w = p.spin.sign();
    let lever = k1 * p.arm_length * cp - w * k2 * sp;
    Vector6::new(
        k1 * st * sp,
        -k1 * ct * sp,
        k1 * cp,
        lever * st,
        -lever * ct,
        -k1 * p.arm_length * sp - w * k2 * cp,
    )
}

/// Body-frame force and torque.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            force: v.fixed_rows::<3>(0).into_owned(),
            torque: v.fixed_rows::<3>(3).into_owned(),
        }
    }
}

/// How out-of-range actuations are brought back into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaturationPolicy {
    /// Per-channel clamp.
    Clamp,
    /// Uniform rescaling by the largest channel; keeps the wrench direction.
    #[default]
    Scale,
}

/// Normalized actuation of the six propellers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuationVector(pub Vector6<f64>);

impl ActuationVector {
    pub fn zeros() -> Self {
        Self(Vector6::zeros())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// Inside the actuation hypercube `-1 ≤ u_i ≤ 1`.
    pub fn is_feasible(&self) -> bool {
        self.0.iter().all(|u| u.abs() <= 1.0)
    }

    /// Returns the saturated actuation and whether any channel changed.
    pub fn saturate(&self, policy: SaturationPolicy) -> (ActuationVector, bool) {
        match policy {
            SaturationPolicy::Clamp => {
                let clamped = self.0.map(|u| u.clamp(-1.0, 1.0));
                (ActuationVector(clamped), clamped != self.0)
            }
            SaturationPolicy::Scale => {
                let peak = self.max_abs();
                if peak > 1.0 {
                    (ActuationVector(self.0 / peak), true)
                } else {
                    (*self, false)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrenchKind {
    Force,
    Torque,
}

/// Largest force and torque available in every direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchLimits {
    pub force: f64,
    pub torque: f64,
}

/// The map from actuations to body wrench, with its inverse when it exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuationMatrix {
    matrix: Matrix6<f64>,
    inverse: Option<Matrix6<f64>>,
    condition: f64,
}

impl ActuationMatrix {
    /// Assembles `A` from a design. Never fails; rank-deficient designs carry no inverse.
    pub fn new(cfg: &DesignConfig) -> Self {
        let mut matrix = Matrix6::zeros();
        for (i, p) in cfg.propellers.iter().enumerate() {
            matrix.set_column(i, &actuation_column(p, cfg.k1, cfg.k2));
        }
        Self::from_matrix(matrix)
    }

    pub fn from_matrix(matrix: Matrix6<f64>) -> Self {
        let sv = matrix.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        let inverse = if condition.is_finite() && condition <= CONDITION_LIMIT {
            matrix.try_inverse()
        } else {
            None
        };
        Self {
            matrix,
            inverse,
            condition,
        }
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    /// Numerical rank from the singular values, relative to the largest one.
    pub fn rank(&self) -> usize {
        let sv = self.matrix.singular_values();
        let cutoff = sv.max() / CONDITION_LIMIT;
        sv.iter().filter(|&&s| s > cutoff).count()
    }

    pub fn inverse(&self) -> Result<&Matrix6<f64>> {
        self.inverse.as_ref().ok_or(Error::SingularDesign {
            condition: self.condition,
        })
    }

    /// Force block `b_i` (row `i`, first three columns of `A⁻¹`).
    pub fn force_block(&self, i: usize) -> Result<Vector3<f64>> {
        let inv = self.inverse()?;
        Ok(Vector3::new(inv[(i, 0)], inv[(i, 1)], inv[(i, 2)]))
    }

    /// Torque block `c_i` (row `i`, last three columns of `A⁻¹`).
    pub fn torque_block(&self, i: usize) -> Result<Vector3<f64>> {
        let inv = self.inverse()?;
        Ok(Vector3::new(inv[(i, 3)], inv[(i, 4)], inv[(i, 5)]))
    }

    fn block(&self, kind: WrenchKind, i: usize) -> Result<Vector3<f64>> {
        match kind {
            WrenchKind::Force => self.force_block(i),
            WrenchKind::Torque => self.torque_block(i),
        }
    }

    pub fn forward(&self, u: &ActuationVector) -> Wrench {
        Wrench::from_vector(&(self.matrix * u.0))
    }

    /// Solves `A u = (F, M)`; check [`ActuationVector::is_feasible`] for the bounds.
    pub fn allocate(&self, w: &Wrench) -> Result<ActuationVector> {
        Ok(ActuationVector(self.inverse()? * w.to_vector()))
    }

    /// Largest pure force (or pure torque) along `direction` inside the hypercube.
    ///
    /// Returns `f64::INFINITY` when no propeller is loaded by that direction.
    pub fn limit_along(&self, kind: WrenchKind, direction: &Vector3<f64>) -> Result<f64> {
        let norm = direction.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit { norm });
        }
        let mut limit = f64::INFINITY;
        for i in 0..6 {
            let load = self.block(kind, i)?.dot(direction).abs();
            if load > 0.0 {
                limit = limit.min(1.0 / load);
            }
        }
        Ok(limit)
    }

    /// Worst-direction limits `min_i 1/‖b_i‖` and `min_i 1/‖c_i‖`.
    pub fn limits(&self) -> Result<WrenchLimits> {
        let mut force = f64::INFINITY;
        let mut torque = f64::INFINITY;
        for i in 0..6 {
            force = force.min(1.0 / self.force_block(i)?.norm());
            torque = torque.min(1.0 / self.torque_block(i)?.norm());
        }
        Ok(WrenchLimits { force, torque })
    }
}

/// Builds the actuation matrix, rejecting rank-deficient designs.
pub fn build_actuation_matrix(cfg: &DesignConfig) -> Result<ActuationMatrix> {
    let am = ActuationMatrix::new(cfg);
    am.inverse()?;
    Ok(am)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normalized(phi_deg: f64) -> DesignConfig {
        let a = phi_deg.to_radians();
        DesignConfig::equally_spaced([a, -a, a, -a, a, -a], ALTERNATING_SPIN, 0.16, 1.0, 0.01)
            .unwrap()
    }

    fn random_design(rng: &mut ChaCha8Rng) -> DesignConfig {
        let phi = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let spin = std::array::from_fn(|_| {
            if rng.random_bool(0.5) {
                Spin::Positive
            } else {
                Spin::Negative
            }
        });
        DesignConfig::equally_spaced(phi, spin, 0.16, 1.0, 0.01).unwrap()
    }

    #[test]
    fn blade_constants_unit_values() {
        let bc = BladeCoefficients::new(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
        let (k1, k2) = blade_constants(&bc);
        assert_abs_diff_eq!(k1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn blade_constants_scaling_and_ratio() {
        let bc = BladeCoefficients::new(1.225, 0.1016, 0.11, 0.07).unwrap();
        let (k1, k2) = blade_constants(&bc);
        let big = BladeCoefficients {
            diameter: 2.0 * bc.diameter,
            ..bc
        };
        let (k1b, k2b) = blade_constants(&big);
        assert_abs_diff_eq!(k1b / k1, 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k2b / k2, 32.0, epsilon = 1e-12);
        let ratio = bc.diameter / (2.0 * PI) * bc.power_coeff / bc.thrust_coeff;
        assert_abs_diff_eq!(k2 / k1, ratio, epsilon = 1e-15);
        // Small 4" blades land near 0.01.
        assert!((k2 / k1 - 0.01).abs() < 0.005);
    }

    #[test]
    fn blade_coefficients_reject_non_positive() {
        assert!(BladeCoefficients::new(0.0, 0.1, 0.1, 0.1).is_err());
        assert!(BladeCoefficients::new(1.0, -0.1, 0.1, 0.1).is_err());
    }

    #[test]
    fn column_at_zero_angles() {
        let p = PropellerGeometry {
            theta: 0.0,
            phi: 0.0,
            spin: Spin::Positive,
            arm_length: 0.16,
        };
        let a = actuation_column(&p, 1.0, 0.01);
        let expected = Vector6::new(0.0, 0.0, 1.0, 0.0, -0.16, -0.01);
        assert_abs_diff_eq!(a, expected, epsilon = 1e-15);
    }

    #[test]
    fn column_matches_cross_product_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = PropellerGeometry {
                theta: rng.random_range(-PI..PI),
                phi: rng.random_range(-PI / 2.0..PI / 2.0),
                spin: if rng.random_bool(0.5) {
                    Spin::Positive
                } else {
                    Spin::Negative
                },
                arm_length: rng.random_range(0.05..0.5),
            };
            let (k1, k2) = (rng.random_range(0.5..3.0), rng.random_range(0.0..0.1));
            let a = actuation_column(&p, k1, k2);
            let u = p.axis();
            let force = k1 * u;
            let torque = k1 * p.position().cross(&u) - p.spin.sign() * k2 * u;
            let expected = Wrench::new(force, torque).to_vector();
            assert_abs_diff_eq!(a, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(a.fixed_rows::<3>(0).norm(), k1, epsilon = 1e-12);
        }
    }

    #[test]
    fn spin_flip_only_touches_k2_terms() {
        let p = PropellerGeometry {
            theta: 0.7,
            phi: 0.4,
            spin: Spin::Positive,
            arm_length: 0.16,
        };
        let q = PropellerGeometry {
            spin: Spin::Negative,
            ..p
        };
        let a = actuation_column(&p, 1.0, 0.01);
        let b = actuation_column(&q, 1.0, 0.01);
        let no_drag = actuation_column(&p, 1.0, 0.0);
        // a = base + k2 part, b = base - k2 part
        assert_abs_diff_eq!((a + b) / 2.0, no_drag, epsilon = 1e-15);
    }

    #[test]
    fn selected_design_is_full_rank() {
        let am = build_actuation_matrix(&DesignConfig::selected(1.0, 0.01)).unwrap();
        assert_eq!(am.rank(), 6);
        let id = am.matrix() * am.inverse().unwrap();
        assert_abs_diff_eq!(id, Matrix6::identity(), epsilon = 1e-9);
    }

    #[test]
    fn vertical_propellers_are_singular() {
        let cfg =
            DesignConfig::equally_spaced([0.0; 6], ALTERNATING_SPIN, 0.16, 1.0, 0.01).unwrap();
        let err = build_actuation_matrix(&cfg).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
        let am = ActuationMatrix::new(&cfg);
        assert!(!am.is_invertible());
        assert!(am.rank() < 6);
        assert!(am.allocate(&Wrench::zero()).is_err());
    }

    #[test]
    fn random_designs_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..200 {
            let am = ActuationMatrix::new(&random_design(&mut rng));
            if let Ok(inv) = am.inverse() {
                assert_abs_diff_eq!(am.matrix() * inv, Matrix6::identity(), epsilon = 1e-9);
                checked += 1;
            }
        }
        assert!(checked > 150);
    }

    #[test]
    fn uniform_actuation_gives_pure_vertical_force() {
        let cfg = DesignConfig::selected(1.0, 0.01);
        let am = ActuationMatrix::new(&cfg);
        let w = am.forward(&ActuationVector(Vector6::repeat(1.0)));
        let fz = 6.0 * 55f64.to_radians().cos();
        assert_abs_diff_eq!(w.force, Vector3::new(0.0, 0.0, fz), epsilon = 1e-12);
        assert_abs_diff_eq!(w.torque, Vector3::zeros(), epsilon = 1e-12);
        assert_eq!(am.forward(&ActuationVector::zeros()), Wrench::zero());
    }

    #[test]
    fn vertical_limit_of_selected_design() {
        let am = ActuationMatrix::new(&DesignConfig::selected(1.0, 0.01));
        let lim = am.limit_along(WrenchKind::Force, &Vector3::z()).unwrap();
        assert_abs_diff_eq!(lim, 6.0 * 55f64.to_radians().cos(), epsilon = 1e-9);
    }

    #[test]
    fn allocation_of_worst_direction_hits_a_bound() {
        let am = ActuationMatrix::new(&DesignConfig::selected(1.0, 0.01));
        let limits = am.limits().unwrap();
        let (worst, _) = (0..6)
            .map(|i| am.force_block(i).unwrap())
            .map(|b| (b, b.norm()))
            .fold((Vector3::zeros(), 0.0), |acc, (b, n)| {
                if n > acc.1 {
                    (b, n)
                } else {
                    acc
                }
            });
        let e = worst.normalize();
        let u = am
            .allocate(&Wrench::new(limits.force * e, Vector3::zeros()))
            .unwrap();
        assert_abs_diff_eq!(u.max_abs(), 1.0, epsilon = 1e-12);
        assert!(u.is_feasible() || u.max_abs() - 1.0 < 1e-12);
    }

    #[test]
    fn configuration_table_limits() {
        let opt = normalized(54.74);
        let l = ActuationMatrix::new(&opt).limits().unwrap();
        assert!((l.force - 2.000).abs() < 2e-3);
        assert!((l.torque - 0.2798).abs() < 3e-4);
        let l1 = ActuationMatrix::new(&normalized(38.84)).limits().unwrap();
        assert!((l1.force - 1.745).abs() < 2e-3);
        assert!((l1.torque - 0.3206).abs() < 3e-4);
    }

    #[test]
    fn limit_along_rejects_non_unit() {
        let am = ActuationMatrix::new(&DesignConfig::selected(1.0, 0.01));
        let err = am
            .limit_along(WrenchKind::Force, &Vector3::new(0.0, 0.0, 1.1))
            .unwrap_err();
        assert!(matches!(err, Error::NotUnit { .. }));
    }

    #[test]
    fn saturation_policies() {
        let mut v = Vector6::repeat(0.5);
        let (u, sat) = ActuationVector(v).saturate(SaturationPolicy::Clamp);
        assert!(!sat);
        assert_eq!(u.0, v);
        let (_, sat) = ActuationVector(v).saturate(SaturationPolicy::Scale);
        assert!(!sat);

        v = Vector6::new(2.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let (u, sat) = ActuationVector(v).saturate(SaturationPolicy::Clamp);
        assert!(sat);
        assert_eq!(u.0, Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));

        v = Vector6::new(2.0, 1.0, 0.0, -0.4, 0.0, 0.0);
        let (u, sat) = ActuationVector(v).saturate(SaturationPolicy::Scale);
        assert!(sat);
        assert_eq!(u.0, Vector6::new(1.0, 0.5, 0.0, -0.2, 0.0, 0.0));
    }

    #[test]
    fn design_json_uses_degrees() {
        let cfg = DesignConfig::selected(1.0, 0.01);
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["d"], 0.16);
        assert_abs_diff_eq!(
            json["propellers"][1]["phi_deg"].as_f64().unwrap(),
            -55.0,
            epsilon = 1e-12
        );
        assert_eq!(json["propellers"][0]["w"], -1);
        let back: DesignConfig = serde_json::from_value(json).unwrap();
        for (a, b) in back.propellers.iter().zip(&cfg.propellers) {
            assert_abs_diff_eq!(a.phi, b.phi, epsilon = 1e-15);
            assert_eq!(a.spin, b.spin);
        }
    }

    #[test]
    fn design_json_rejects_bad_spin_and_count() {
        let bad_spin = r#"{"d":0.16,"k1":1,"k2":0.01,"propellers":[
            {"theta_deg":0,"phi_deg":10,"w":2},{"theta_deg":60,"phi_deg":10,"w":1},
            {"theta_deg":120,"phi_deg":10,"w":1},{"theta_deg":180,"phi_deg":10,"w":1},
            {"theta_deg":240,"phi_deg":10,"w":1},{"theta_deg":300,"phi_deg":10,"w":1}]}"#;
        assert!(serde_json::from_str::<DesignConfig>(bad_spin).is_err());
        let short = r#"{"d":0.16,"k1":1,"k2":0.01,"propellers":[]}"#;
        assert!(serde_json::from_str::<DesignConfig>(short).is_err());
    }

    proptest! {
        #[test]
        fn forward_is_linear(
            u in proptest::array::uniform6(-2.0f64..2.0),
            v in proptest::array::uniform6(-2.0f64..2.0),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let am = ActuationMatrix::new(&DesignConfig::selected(1.0, 0.01));
            let (u, v) = (Vector6::from(u), Vector6::from(v));
            let lhs = am.forward(&ActuationVector(a * u + b * v)).to_vector();
            let rhs = a * am.forward(&ActuationVector(u)).to_vector()
                + b * am.forward(&ActuationVector(v)).to_vector();
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
        }

        #[test]
        fn allocation_round_trip(
            f in proptest::array::uniform3(-5.0f64..5.0),
            m in proptest::array::uniform3(-0.5f64..0.5),
        ) {
            let am = ActuationMatrix::new(&DesignConfig::selected(1.0, 0.01));
            let w = Wrench::new(Vector3::from(f), Vector3::from(m));
            let u = am.allocate(&w).unwrap();
            let back = am.forward(&u);
            prop_assert!((back.to_vector() - w.to_vector()).norm() <= 1e-9);
            let u2 = am.allocate(&Wrench::new(2.0 * w.force, 2.0 * w.torque)).unwrap();
            prop_assert!((u2.0 - 2.0 * u.0).norm() <= 1e-9);
        }

        #[test]
        fn limit_is_symmetric_and_tight(
            theta in 0.0f64..PI,
            psi in 0.0f64..(2.0 * PI),
        ) {
            let am = ActuationMatrix::new(&DesignConfig::selected(1.0, 0.01));
            let e = Vector3::new(theta.sin() * psi.cos(), theta.sin() * psi.sin(), theta.cos());
            let lim = am.limit_along(WrenchKind::Force, &e).unwrap();
            let neg = am.limit_along(WrenchKind::Force, &-e).unwrap();
            prop_assert!((lim - neg).abs() <= 1e-12 * lim);
            let worst = am.limits().unwrap().force;
            prop_assert!(worst <= lim * (1.0 + 1e-12));
            let u = am.allocate(&Wrench::new(lim * e, Vector3::zeros())).unwrap();
            prop_assert!((u.max_abs() - 1.0).abs() <= 1e-9);
            let w = am.forward(&u);
            prop_assert!(w.torque.norm() <= 1e-9 * 0.16);
        }
    }
}
