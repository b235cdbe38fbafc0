//! Closed-loop simulation campaigns: steps, waypoint missions, measurement
//! noise and unmodeled payloads, with CSV logs and summary metrics.

use std::io::Write;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flight_control::{attitude_error, wrench_command, Gains, Setpoint};
use crate::rigid_body::{
    composite_inertia, integrate_step, rotation_angle_between, so3_exp, so3_log, InertiaParams,
    PayloadSpec, RigidBodyState,
};
use crate::wrench::{
    build_actuation_matrix, tidy_degrees, ActuationVector, DesignConfig, SaturationPolicy, Wrench,
};

/// Per-propeller thrust constant used by the bundled scenarios (N).
pub const SCENARIO_K1: f64 = 60.0;
/// Drag-to-thrust ratio `K2 / K1` of the bundled scenarios.
pub const SCENARIO_K_RATIO: f64 = 0.01;

/// Rotation from XYZ intrinsic Euler angles: `Rx(a) Ry(b) Rz(c)`.
pub fn euler_xyz(angles: [f64; 3]) -> Matrix3<f64> {
    so3_exp(&(Vector3::x() * angles[0]))
        * so3_exp(&(Vector3::y() * angles[1]))
        * so3_exp(&(Vector3::z() * angles[2]))
}

pub fn euler_xyz_deg(deg: [f64; 3]) -> Matrix3<f64> {
    euler_xyz(deg.map(f64::to_radians))
}

/// Standard deviations of the measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// m
    pub sigma_x: f64,
    /// m/s
    pub sigma_v: f64,
    /// rad
    pub sigma_att: f64,
    /// rad/s
    pub sigma_omega: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_x: 0.02,
            sigma_v: 0.02,
            sigma_att: 5f64.to_radians(),
            sigma_omega: 1f64.to_radians(),
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma_x, self.sigma_v, self.sigma_att, self.sigma_omega];
        if all.iter().all(|s| *s >= 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "noise sigmas must be non-negative".into(),
            ))
        }
    }
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vector3<f64> {
    if sigma == 0.0 {
        return Vector3::zeros();
    }
    let n = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

/// Noisy copy of `s`; the attitude is perturbed on the left by `exp(η)`.
pub fn perturb_measurement<R: Rng + ?Sized>(
    s: &RigidBodyState,
    nm: &NoiseModel,
    rng: &mut R,
) -> RigidBodyState {
    let dx = gaussian3(rng, nm.sigma_x);
    let dv = gaussian3(rng, nm.sigma_v);
    let eta = gaussian3(rng, nm.sigma_att);
    let dw = gaussian3(rng, nm.sigma_omega);
    RigidBodyState {
        x: s.x + dx,
        v: s.v + dv,
        r: if nm.sigma_att == 0.0 {
            s.r
        } else {
            so3_exp(&eta) * s.r
        },
        omega: s.omega + dw,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub x_d: Vector3<f64>,
    pub attitude_d: Matrix3<f64>,
    /// m
    pub pos_tol: f64,
    /// rad
    pub att_tol: f64,
    /// Time the pose must stay within tolerance (s).
    pub hold: f64,
}

impl Waypoint {
    pub fn new(x_d: Vector3<f64>, attitude_deg: [f64; 3]) -> Self {
        Self {
            x_d,
            attitude_d: euler_xyz_deg(attitude_deg),
            pos_tol: 0.05,
            att_tol: 3f64.to_radians(),
            hold: 0.5,
        }
    }

    /// Position and geodesic attitude errors of `s` (m, rad).
    pub fn errors(&self, s: &RigidBodyState) -> (f64, f64) {
        (
            (s.x - self.x_d).norm(),
            rotation_angle_between(&s.r, &self.attitude_d),
        )
    }

    pub fn within(&self, position_error: f64, attitude_error: f64) -> bool {
        position_error <= self.pos_tol && attitude_error <= self.att_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub design: DesignConfig,
    /// Model used by the controller; the plant adds the payload if present.
    pub inertia: InertiaParams,
    pub gains: Gains,
    pub initial: RigidBodyState,
    pub waypoints: Vec<Waypoint>,
    pub noise: Option<NoiseModel>,
    pub payload: Option<PayloadSpec>,
    pub dt: f64,
    pub t_max: f64,
    pub saturation: SaturationPolicy,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        self.design.validate()?;
        self.inertia.validate()?;
        self.gains.validate()?;
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if let Some(p) = &self.payload {
            if !(p.mass >= 0.0) {
                return bad("payload mass must be non-negative");
            }
        }
        if !(self.dt > 0.0) || !(self.t_max > self.dt) {
            return bad("need dt > 0 and t_max > dt");
        }
        if self.waypoints.is_empty() {
            return bad("scenario needs at least one waypoint");
        }
        for w in &self.waypoints {
            if !(w.pos_tol > 0.0 && w.att_tol > 0.0 && w.hold >= 0.0) {
                return bad("waypoint tolerances must be positive");
            }
        }
        if self.initial.orthogonality_error() > 1e-9 {
            return bad("initial attitude is not a rotation");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let sc = Scenario::try_from(file)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("plain data serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    TimedOut,
    AttitudeSingularity,
}

/// One control step. Errors are the controller's (measured) errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub waypoint: usize,
    pub state: RigidBodyState,
    pub measured: RigidBodyState,
    pub setpoint: Setpoint,
    pub e_x: Vector3<f64>,
    pub e_v: Vector3<f64>,
    pub e_r: Vector3<f64>,
    pub e_omega: Vector3<f64>,
    pub u: ActuationVector,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLog {
    pub rows: Vec<LogRow>,
    pub waypoints: Vec<Waypoint>,
    pub outcome: Outcome,
    /// Waypoints achieved before the run ended.
    pub achieved: usize,
}

pub const LOG_HEADER: [&str; 27] = [
    "t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz", "ex", "ey",
    "ez", "er_x", "er_y", "er_z", "u1", "u2", "u3", "u4", "u5", "u6", "sat",
];

impl ScenarioLog {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(LOG_HEADER).map_err(io)?;
        for row in &self.rows {
            let s = &row.state;
            let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(s.r));
            let q = if q.w < 0.0 {
                -q.into_inner()
            } else {
                q.into_inner()
            };
            let mut rec: Vec<String> = Vec::with_capacity(LOG_HEADER.len());
            rec.push(format!("{}", row.t));
            let vectors = [s.x, s.v];
            rec.extend(
                vectors
                    .iter()
                    .flat_map(|v| v.iter().map(|x| format!("{x}"))),
            );
            rec.extend([q.w, q.i, q.j, q.k].iter().map(|x| format!("{x}")));
            let vectors = [s.omega, row.e_x, row.e_r];
            rec.extend(
                vectors
                    .iter()
                    .flat_map(|v| v.iter().map(|x| format!("{x}"))),
            );
            rec.extend(row.u.0.iter().map(|x| format!("{x}")));
            rec.push(u8::from(row.saturated).to_string());
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Closed loop: measure → control with the nominal model → plant with the
/// composite model → log. Stops when every waypoint is achieved or at `t_max`.
///
/// The plant integrates the composite centre of mass; the vehicle pose the
/// controller sees is recovered from it through the payload CoM shift.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioLog> {
    sc.validate()?;
    let am = build_actuation_matrix(&sc.design)?;
    let (plant, shift) = match &sc.payload {
        Some(p) => (composite_inertia(&sc.inertia, p), p.com_shift(sc.inertia.m)),
        None => (sc.inertia.clone(), Vector3::zeros()),
    };
    let to_vehicle = |c: &RigidBodyState| RigidBodyState {
        x: c.x - c.r * shift,
        v: c.v - c.r * c.omega.cross(&shift),
        r: c.r,
        omega: c.omega,
    };
    let s0 = &sc.initial;
    let mut composite = RigidBodyState {
        x: s0.x + s0.r * shift,
        v: s0.v + s0.r * s0.omega.cross(&shift),
        r: s0.r,
        omega: s0.omega,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sc.noise.map_or(0, |n| n.seed));

    let steps = (sc.t_max / sc.dt - 1e-9).ceil() as usize;
    let mut rows = Vec::with_capacity(steps.min(1 << 20));
    let mut current = 0;
    let mut inside_since: Option<f64> = None;
    let mut outcome = Outcome::TimedOut;

    for k in 0..steps {
        let t = k as f64 * sc.dt;
        let truth = to_vehicle(&composite);
        let wp = &sc.waypoints[current];
        let (pos_err, att_err) = wp.errors(&truth);
        if wp.within(pos_err, att_err) {
            let since = *inside_since.get_or_insert(t);
            if t - since >= wp.hold - 1e-9 {
                current += 1;
                inside_since = None;
                if current == sc.waypoints.len() {
                    outcome = Outcome::Completed;
                    break;
                }
            }
        } else {
            inside_since = None;
        }
        let wp = &sc.waypoints[current];

        let measured = match &sc.noise {
            Some(nm) => perturb_measurement(&truth, nm, &mut rng),
            None => truth.clone(),
        };
        let setpoint = Setpoint::hold(wp.x_d, wp.attitude_d);
        let cmd = match wrench_command(
            &measured,
            &setpoint,
            &sc.gains,
            &sc.inertia,
            &am,
            sc.saturation,
        ) {
            Ok(cmd) => cmd,
            Err(Error::AttitudeSingularity { .. }) => {
                outcome = Outcome::AttitudeSingularity;
                break;
            }
            Err(e) => return Err(e),
        };
        let e_r = attitude_error(&measured.r, &setpoint.r_d)?;
        let transported = measured.r.transpose() * setpoint.r_d * setpoint.omega_d;
        rows.push(LogRow {
            t,
            waypoint: current,
            e_x: measured.x - setpoint.x_d,
            e_v: measured.v - setpoint.v_d,
            e_r,
            e_omega: measured.omega - transported,
            state: truth,
            measured,
            setpoint,
            u: cmd.u,
            saturated: cmd.saturated,
        });

        // Force acts at the vehicle CoM, offset by -shift from the composite CoM.
        let f = cmd.applied.force;
        let applied = Wrench::new(f, cmd.applied.torque - shift.cross(&f));
        composite = integrate_step(&composite, &applied, &plant, sc.dt);
    }

    Ok(ScenarioLog {
        rows,
        waypoints: sc.waypoints.clone(),
        achieved: current,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaypointMetrics {
    pub index: usize,
    pub start_time: f64,
    /// From the waypoint becoming active to the first entry into tolerance
    /// that was then sustained for the hold time.
    pub settling_time: Option<f64>,
    pub peak_position_error: f64,
    pub peak_attitude_error_deg: f64,
    /// Largest excursion past the target along the initial error direction,
    /// relative to the initial error.
    pub overshoot: f64,
    /// Same measure for the attitude, on the rotation-vector error `log(R_dᵀR)`.
    pub attitude_overshoot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub outcome: Outcome,
    pub all_waypoints_achieved: bool,
    pub waypoints_achieved: usize,
    pub duration: f64,
    /// Sum of the per-waypoint settling times, if all settled.
    pub total_settling_time: Option<f64>,
    pub saturated_fraction: f64,
    /// Fitted `α` of `‖e_x‖ ≈ C e^{-αt}` on the first waypoint.
    pub position_decay_rate: Option<f64>,
    pub position_decay_r2: Option<f64>,
    /// Per-axis rates fitted the same way (axes with a negligible initial error are null).
    pub axis_decay_rates: [Option<f64>; 3],
    /// Largest pairwise gap between per-axis error curves normalized by their
    /// initial values, first waypoint.
    pub axis_profile_deviation: Option<f64>,
    pub waypoints: Vec<WaypointMetrics>,
}

/// Least-squares line `y = a + b t`; returns `(b, R²)`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = t.len() as f64;
    if t.len() < 3 {
        return None;
    }
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|v| (v - mt).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sty * sty / (stt * syy)
    };
    Some((slope, r2))
}

/// Fraction of the initial magnitude down to which decay rates are fitted.
const FIT_FLOOR: f64 = 1e-4;

fn decay_fit(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let v0 = values.first()?.abs();
    if v0 <= 1e-9 {
        return None;
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .take_while(|(_, v)| v.abs() >= FIT_FLOOR * v0)
        .map(|(t, v)| (*t, v.abs().ln()))
        .unzip();
    linear_fit(&t, &y).map(|(slope, r2)| (-slope, r2))
}

pub fn summarize_metrics(log: &ScenarioLog) -> Result<Metrics> {
    let last = log.rows.last().ok_or(Error::EmptyLog)?;
    let mut waypoints = Vec::new();
    for (index, wp) in log.waypoints.iter().enumerate() {
        let rows: Vec<&LogRow> = log.rows.iter().filter(|r| r.waypoint == index).collect();
        let Some(first) = rows.first() else { break };
        let start_time = first.t;
        let e0 = first.state.x - wp.x_d;
        let a0 = so3_log(&(wp.attitude_d.transpose() * first.state.r));
        let mut attitude_overshoot: f64 = 0.0;
        let mut settled = None;
        let mut since: Option<f64> = None;
        let mut peak_pos: f64 = 0.0;
        let mut peak_att: f64 = 0.0;
        let mut overshoot: f64 = 0.0;
        for r in &rows {
            let (pos, att) = wp.errors(&r.state);
            peak_pos = peak_pos.max(pos);
            peak_att = peak_att.max(att);
            if e0.norm() > 1e-9 {
                let along = (r.state.x - wp.x_d).dot(&e0) / e0.norm();
                overshoot = overshoot.max(-along / e0.norm());
            }
            if a0.norm() > 1e-9 {
                let a = so3_log(&(wp.attitude_d.transpose() * r.state.r));
                attitude_overshoot = attitude_overshoot.max(-a.dot(&a0) / a0.norm_squared());
            }
            if wp.within(pos, att) {
                let s = *since.get_or_insert(r.t);
                if settled.is_none() && r.t - s >= wp.hold - 1e-9 {
                    settled = Some(s - start_time);
                }
            } else {
                since = None;
            }
        }
        // A waypoint achieved on the step after its last row is settled too.
        if settled.is_none() && index < log.achieved {
            settled = since.map(|s| s - start_time);
        }
        waypoints.push(WaypointMetrics {
            index,
            start_time,
            settling_time: settled,
            peak_position_error: peak_pos,
            peak_attitude_error_deg: peak_att.to_degrees(),
            overshoot,
            attitude_overshoot,
        });
    }

    let first: Vec<&LogRow> = log.rows.iter().filter(|r| r.waypoint == 0).collect();
    let times: Vec<f64> = first.iter().map(|r| r.t).collect();
    let x_d = log.waypoints.first().map(|w| w.x_d).unwrap_or_default();
    let errors: Vec<Vector3<f64>> = first.iter().map(|r| r.state.x - x_d).collect();
    let norms: Vec<f64> = errors.iter().map(|e| e.norm()).collect();
    let fit = decay_fit(&times, &norms);
    let axis_decay_rates = [0, 1, 2].map(|a| {
        let values: Vec<f64> = errors.iter().map(|e| e[a]).collect();
        decay_fit(&times, &values).map(|(rate, _)| rate)
    });
    let axis_profile_deviation = errors.first().and_then(|e0| {
        let axes: Vec<usize> = (0..3)
            .filter(|&a| e0[a].abs() > 1e-9 * e0.norm().max(1e-300))
            .collect();
        if axes.len() < 2 || e0.norm() <= 1e-9 {
            return None;
        }
        let mut worst: f64 = 0.0;
        for e in &errors {
            for (i, &a) in axes.iter().enumerate() {
                for &b in &axes[i + 1..] {
                    worst = worst.max((e[a] / e0[a] - e[b] / e0[b]).abs());
                }
            }
        }
        Some(worst)
    });

    let total_settling_time = if waypoints.len() == log.waypoints.len() {
        waypoints.iter().map(|w| w.settling_time).sum()
    } else {
        None
    };
    let saturated = log.rows.iter().filter(|r| r.saturated).count();
    Ok(Metrics {
        outcome: log.outcome,
        all_waypoints_achieved: log.outcome == Outcome::Completed,
        waypoints_achieved: log.achieved,
        duration: last.t,
        total_settling_time,
        saturated_fraction: saturated as f64 / log.rows.len() as f64,
        position_decay_rate: fit.map(|f| f.0),
        position_decay_r2: fit.map(|f| f.1),
        axis_decay_rates,
        axis_profile_deviation,
        waypoints,
    })
}

// File layout.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InertiaFile {
    m: f64,
    j: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    x: [f64; 3],
    #[serde(default)]
    v: [f64; 3],
    #[serde(default)]
    attitude_deg: [f64; 3],
    #[serde(default)]
    omega: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointFile {
    x: [f64; 3],
    #[serde(default)]
    attitude_deg: [f64; 3],
    #[serde(default = "default_pos_tol")]
    pos_tol: f64,
    #[serde(default = "default_att_tol")]
    att_tol_deg: f64,
    #[serde(default = "default_hold")]
    hold: f64,
}

fn default_pos_tol() -> f64 {
    0.05
}
fn default_att_tol() -> f64 {
    3.0
}
fn default_hold() -> f64 {
    0.5
}
fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    sigma_x: f64,
    sigma_v: f64,
    sigma_att_deg: f64,
    sigma_omega_deg: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayloadFile {
    mass: f64,
    offset: [f64; 3],
    shape_inertia: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: String,
    design: DesignConfig,
    inertia: InertiaFile,
    #[serde(default)]
    gains: Gains,
    initial: StateFile,
    waypoints: Vec<WaypointFile>,
    #[serde(default)]
    noise: Option<NoiseFile>,
    #[serde(default)]
    payload: Option<PayloadFile>,
    #[serde(default = "default_dt")]
    dt: f64,
    t_max: f64,
    #[serde(default)]
    saturation: SaturationPolicy,
}

fn rows_to_matrix(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

fn matrix_to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// XYZ Euler angles (deg) of `R = Rx Ry Rz`.
pub fn euler_xyz_deg_of(r: &Matrix3<f64>) -> [f64; 3] {
    let b = r[(0, 2)].clamp(-1.0, 1.0).asin();
    let a = (-r[(1, 2)]).atan2(r[(2, 2)]);
    let c = (-r[(0, 1)]).atan2(r[(0, 0)]);
    [a, b, c].map(|v| tidy_degrees(v.to_degrees()))
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        Ok(Scenario {
            name: f.name,
            design: f.design,
            inertia: InertiaParams::new(f.inertia.m, rows_to_matrix(&f.inertia.j))?,
            gains: f.gains,
            initial: RigidBodyState {
                x: f.initial.x.into(),
                v: f.initial.v.into(),
                r: euler_xyz_deg(f.initial.attitude_deg),
                omega: f.initial.omega.into(),
            },
            waypoints: f
                .waypoints
                .iter()
                .map(|w| Waypoint {
                    x_d: w.x.into(),
                    attitude_d: euler_xyz_deg(w.attitude_deg),
                    pos_tol: w.pos_tol,
                    att_tol: w.att_tol_deg.to_radians(),
                    hold: w.hold,
                })
                .collect(),
            noise: f.noise.map(|n| NoiseModel {
                sigma_x: n.sigma_x,
                sigma_v: n.sigma_v,
                sigma_att: n.sigma_att_deg.to_radians(),
                sigma_omega: n.sigma_omega_deg.to_radians(),
                seed: n.seed,
            }),
            payload: f.payload.map(|p| PayloadSpec {
                mass: p.mass,
                offset: p.offset.into(),
                shape_inertia: rows_to_matrix(&p.shape_inertia),
            }),
            dt: f.dt,
            t_max: f.t_max,
            saturation: f.saturation,
        })
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let v = |x: &Vector3<f64>| [x.x, x.y, x.z];
        ScenarioFile {
            name: s.name.clone(),
            design: s.design.clone(),
            inertia: InertiaFile {
                m: s.inertia.m,
                j: matrix_to_rows(&s.inertia.j),
            },
            gains: s.gains,
            initial: StateFile {
                x: v(&s.initial.x),
                v: v(&s.initial.v),
                attitude_deg: euler_xyz_deg_of(&s.initial.r),
                omega: v(&s.initial.omega),
            },
            waypoints: s
                .waypoints
                .iter()
                .map(|w| WaypointFile {
                    x: v(&w.x_d),
                    attitude_deg: euler_xyz_deg_of(&w.attitude_d),
                    pos_tol: w.pos_tol,
                    att_tol_deg: tidy_degrees(w.att_tol.to_degrees()),
                    hold: w.hold,
                })
                .collect(),
            noise: s.noise.map(|n| NoiseFile {
                sigma_x: n.sigma_x,
                sigma_v: n.sigma_v,
                sigma_att_deg: tidy_degrees(n.sigma_att.to_degrees()),
                sigma_omega_deg: tidy_degrees(n.sigma_omega.to_degrees()),
                seed: n.seed,
            }),
            payload: s.payload.as_ref().map(|p| PayloadFile {
                mass: p.mass,
                offset: v(&p.offset),
                shape_inertia: matrix_to_rows(&p.shape_inertia),
            }),
            dt: s.dt,
            t_max: s.t_max,
            saturation: s.saturation,
        }
    }
}

/// Scenarios shipped as fixtures.
pub mod presets {
    use super::*;

    fn base(name: &str, waypoints: Vec<Waypoint>, t_max: f64) -> Scenario {
        Scenario {
            name: name.into(),
            design: DesignConfig::selected(SCENARIO_K1, SCENARIO_K1 * SCENARIO_K_RATIO),
            inertia: InertiaParams::default(),
            gains: Gains::default(),
            initial: RigidBodyState::at_rest(Vector3::new(0.0, 0.0, 1.0), Matrix3::identity()),
            waypoints,
            noise: None,
            payload: None,
            dt: 1e-3,
            t_max,
            saturation: SaturationPolicy::Scale,
        }
    }

    /// Hold at (0,0,1), step to (1,2,4).
    pub fn position_step() -> Scenario {
        let mut wp = Waypoint::new(Vector3::new(1.0, 2.0, 4.0), [0.0; 3]);
        wp.hold = 2.0;
        base("position_step", vec![wp], 30.0)
    }

    /// Step from level to (70°, -50°, 30°) XYZ Euler.
    pub fn attitude_step() -> Scenario {
        let mut wp = Waypoint::new(Vector3::new(0.0, 0.0, 1.0), [70.0, -50.0, 30.0]);
        wp.hold = 4.0;
        base("attitude_step", vec![wp], 30.0)
    }

    /// Representative six-pose track with noisy measurements.
    pub fn waypoint_mission(seed: u64) -> Scenario {
        let poses = [
            ([1.0, 0.0, 1.0], [0.0, 0.0, 30.0]),
            ([1.0, 1.0, 2.0], [20.0, 0.0, 60.0]),
            ([0.0, 2.0, 2.0], [0.0, -30.0, 90.0]),
            ([-1.0, 1.0, 1.5], [-20.0, 20.0, 45.0]),
            ([0.5, -1.0, 2.0], [30.0, 10.0, -30.0]),
            ([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
        ];
        let waypoints = poses
            .iter()
            .map(|(x, a)| Waypoint::new(Vector3::from(*x), *a))
            .collect();
        let mut sc = base("waypoint_mission", waypoints, 120.0);
        sc.noise = Some(NoiseModel {
            seed,
            ..NoiseModel::default()
        });
        sc
    }

    fn track(name: &str, seed: u64) -> Scenario {
        let waypoints = vec![
            Waypoint::new(Vector3::new(0.0, 0.0, 2.0), [0.0; 3]),
            Waypoint::new(Vector3::new(0.0, 1.0, 2.0), [0.0; 3]),
        ];
        let mut sc = base(name, waypoints, 60.0);
        sc.noise = Some(NoiseModel {
            seed,
            ..NoiseModel::default()
        });
        sc
    }

    /// Two-waypoint track (1 m up, then 1 m along y) without payload.
    pub fn noload_mission(seed: u64) -> Scenario {
        track("noload_mission", seed)
    }

    /// Same track carrying an unmodeled 6 kg sphere below the vehicle.
    pub fn payload_mission(seed: u64) -> Scenario {
        let mut sc = track("payload_mission", seed);
        sc.payload = Some(PayloadSpec::sphere(6.0, 0.1, Vector3::new(0.0, 0.0, -0.25)));
        sc
    }
}
