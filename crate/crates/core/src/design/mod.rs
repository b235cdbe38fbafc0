//! Tilt-angle and spin-pattern optimization of the propeller ring.
//!
//! The worst-direction force and torque limits are `1/√p` and `1/√q` with
//! `p = max_i ‖b_i‖²` and `q = max_i ‖c_i‖²` (rows of `A⁻¹`). Both are minimized
//! in epigraph form over the 14 spin orbits and many random tilt starts,
//! then the trade-off between them is sampled with Normal Boundary
//! Intersection: for each `λ` the point `(1-λ)(p*, q0) + λ(p0, q*)` on the
//! line between the two shadow minima is pushed along the normal
//! `(q0 - q*, p0 - p*)` until it meets the attainable set.

pub mod lp;
pub mod orbits;
pub mod qp;
pub mod solver;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Matrix6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::wrench::{actuation_column, DesignConfig, PropellerGeometry};
pub use orbits::{spin_orbits, SpinPattern};
pub use solver::{local_solve, ConstrainedProblem, LocalMinimum, SolverOptions};

/// Constraint value reported for rank-deficient designs.
const SINGULAR_PENALTY: f64 = -1e6;
/// Row norms beyond this are treated as a singular actuation matrix.
const NORM_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    /// Largest tilt magnitude (rad).
    pub phi_max: f64,
    /// Arm length `d` (m).
    pub arm_length: f64,
    /// `K2 / K1`; the matrix is normalized by `K1`.
    pub k_ratio: f64,
    /// Random starts per spin orbit.
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_evaluations: usize,
    /// Costs closer than this are considered tied.
    pub tie_tol: f64,
    pub lambda_grid: Vec<f64>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            phi_max: PI / 3.0,
            arm_length: 0.16,
            k_ratio: 0.01,
            n_starts: 1000,
            seed: 0,
            tol: 1e-8,
            max_evaluations: 5000,
            tie_tol: 1e-8,
            lambda_grid: (0..=100).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.phi_max > 0.0 && self.phi_max < PI / 2.0) {
            return bad("phi_max must lie in (0, pi/2)");
        }
        if !(self.arm_length > 0.0) {
            return bad("arm length must be positive");
        }
        if !(self.k_ratio >= 0.0 && self.k_ratio.is_finite()) {
            return bad("k_ratio must be non-negative");
        }
        if self.n_starts == 0 {
            return bad("n_starts must be at least 1");
        }
        if !(self.tol > 0.0) || self.max_evaluations == 0 {
            return bad("tolerance and evaluation cap must be positive");
        }
        if self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l))
            || self.lambda_grid.windows(2).any(|w| w[0] > w[1])
        {
            return bad("lambda grid must be sorted within [0, 1]");
        }
        Ok(())
    }

    /// Settings file: every field optional, angles in degrees.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: SettingsFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let d = Self::default();
        let s = Self {
            phi_max: f.phi_max_deg.map_or(d.phi_max, f64::to_radians),
            arm_length: f.d.unwrap_or(d.arm_length),
            k_ratio: f.k_ratio.unwrap_or(d.k_ratio),
            n_starts: f.n_starts.unwrap_or(d.n_starts),
            seed: f.seed.unwrap_or(d.seed),
            tol: f.tol.unwrap_or(d.tol),
            max_evaluations: f.max_evaluations.unwrap_or(d.max_evaluations),
            tie_tol: f.tie_tol.unwrap_or(d.tie_tol),
            lambda_grid: f.lambda.unwrap_or(d.lambda_grid),
        };
        s.validate()?;
        Ok(s)
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_evaluations: self.max_evaluations,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsFile {
    phi_max_deg: Option<f64>,
    d: Option<f64>,
    k_ratio: Option<f64>,
    n_starts: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_evaluations: Option<usize>,
    tie_tol: Option<f64>,
    lambda: Option<Vec<f64>>,
}

/// Squared row norms `‖b_i‖²`, `‖c_i‖²` of the K1-normalized inverse actuation matrix.
pub fn block_norms(
    phi: &[f64],
    spin: &SpinPattern,
    arm_length: f64,
    k_ratio: f64,
) -> Option<([f64; 6], [f64; 6])> {
    let mut a = Matrix6::zeros();
    for i in 0..6 {
        let p = PropellerGeometry {
            theta: i as f64 * PI / 3.0,
            phi: phi[i],
            spin: spin.0[i],
            arm_length,
        };
        a.set_column(i, &actuation_column(&p, 1.0, k_ratio));
    }
    let inv = a.try_inverse()?;
    let mut b = [0.0; 6];
    let mut c = [0.0; 6];
    for i in 0..6 {
        b[i] = inv[(i, 0)].powi(2) + inv[(i, 1)].powi(2) + inv[(i, 2)].powi(2);
        c[i] = inv[(i, 3)].powi(2) + inv[(i, 4)].powi(2) + inv[(i, 5)].powi(2);
    }
    let finite = b.iter().chain(&c).all(|v| v.is_finite() && *v < NORM_LIMIT);
    finite.then_some((b, c))
}

fn max6(v: &[f64; 6]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One candidate design with its worst-direction costs.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    /// Tilt angles (rad).
    pub phi: [f64; 6],
    pub spin: SpinPattern,
    /// `max_i ‖b_i‖²`
    pub p: f64,
    /// `max_i ‖c_i‖²`
    pub q: f64,
    pub f_max: f64,
    pub m_max: f64,
}

impl DesignPoint {
    pub fn evaluate(
        phi: [f64; 6],
        spin: SpinPattern,
        settings: &OptimizerSettings,
    ) -> Option<Self> {
        let (b, c) = block_norms(&phi, &spin, settings.arm_length, settings.k_ratio)?;
        let (p, q) = (max6(&b), max6(&c));
        Some(Self {
            phi,
            spin,
            p,
            q,
            f_max: 1.0 / p.sqrt(),
            m_max: 1.0 / q.sqrt(),
        })
    }

    pub fn phi_deg(&self) -> [f64; 6] {
        self.phi.map(f64::to_degrees)
    }

    /// The design in K1-normalized units (`K1 = 1`, `K2 = k_ratio`).
    pub fn to_design_config(&self, settings: &OptimizerSettings) -> Result<DesignConfig> {
        DesignConfig::equally_spaced(
            self.phi,
            self.spin.0,
            settings.arm_length,
            1.0,
            settings.k_ratio,
        )
    }

    /// Same design with tilt angles rounded to whole degrees.
    pub fn rounded_design_config(&self, settings: &OptimizerSettings) -> Result<DesignConfig> {
        let phi = self.phi.map(|a| a.to_degrees().round().to_radians());
        DesignConfig::equally_spaced(phi, self.spin.0, settings.arm_length, 1.0, settings.k_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Force,
    Torque,
}

/// Epigraph subproblem; the first decision variable is the bound (`p`, `q` or `t`).
#[derive(Debug, Clone, Copy)]
enum Subproblem {
    Shadow(Objective),
    Nbi {
        /// Anchor on the search line.
        anchor_p: f64,
        anchor_q: f64,
        /// Normal components `(q0 - q*, p0 - p*)`.
        normal_p: f64,
        normal_q: f64,
    },
}

impl Subproblem {
    fn n_constraints(&self) -> usize {
        match self {
            Subproblem::Shadow(_) => 6,
            Subproblem::Nbi { .. } => 12,
        }
    }

    /// Writes `bound - g_j(φ) ≥ 0` terms; returns `max_j g_j(φ)`, the tight bound.
    fn terms(&self, b: &[f64; 6], c: &[f64; 6], out: &mut [f64]) {
        match *self {
            Subproblem::Shadow(Objective::Force) => out.copy_from_slice(b),
            Subproblem::Shadow(Objective::Torque) => out.copy_from_slice(c),
            Subproblem::Nbi {
                anchor_p,
                anchor_q,
                normal_p,
                normal_q,
            } => {
                for i in 0..6 {
                    out[i] = (b[i] - anchor_p) / normal_p;
                    out[6 + i] = (c[i] - anchor_q) / normal_q;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    orbit: usize,
    start: usize,
    /// Epigraph value recomputed from the returned angles.
    cost: f64,
    /// Bound variable as returned by the solver.
    bound: f64,
    point: DesignPoint,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG for one (orbit, start) pair.
pub fn start_rng(seed: u64, orbit: usize, start: usize) -> ChaCha8Rng {
    let h = splitmix64(splitmix64(seed ^ splitmix64(orbit as u64)) ^ start as u64);
    ChaCha8Rng::seed_from_u64(h)
}

fn solve_start(
    sub: &Subproblem,
    spin: SpinPattern,
    orbit: usize,
    start: usize,
    settings: &OptimizerSettings,
) -> Option<Candidate> {
    let mut rng = start_rng(settings.seed, orbit, start);
    let phi0: [f64; 6] =
        std::array::from_fn(|_| rng.random_range(-settings.phi_max..=settings.phi_max));
    let m = sub.n_constraints();
    let mut terms = vec![0.0; m];
    let (b0, c0) = block_norms(&phi0, &spin, settings.arm_length, settings.k_ratio)?;
    sub.terms(&b0, &c0, &mut terms);
    let bound0 = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut lower = vec![-settings.phi_max; 7];
    let mut upper = vec![settings.phi_max; 7];
    lower[0] = f64::NEG_INFINITY;
    upper[0] = f64::INFINITY;
    let (d, k) = (settings.arm_length, settings.k_ratio);
    let problem = ConstrainedProblem {
        n_constraints: m,
        lower,
        upper,
        eval: |x: &[f64], cons: &mut [f64]| {
            match block_norms(&x[1..], &spin, d, k) {
                Some((b, c)) => {
                    sub.terms(&b, &c, cons);
                    for v in cons.iter_mut() {
                        *v = x[0] - *v;
                    }
                }
                None => cons.fill(SINGULAR_PENALTY),
            }
            x[0]
        },
    };
    let mut x0 = [0.0; 7];
    x0[0] = bound0;
    x0[1..].copy_from_slice(&phi0);
    let sol = local_solve(&problem, &x0, &settings.solver_options()).ok()?;

    let phi: [f64; 6] =
        std::array::from_fn(|i| sol.x[i + 1].clamp(-settings.phi_max, settings.phi_max));
    let (b, c) = block_norms(&phi, &spin, d, k)?;
    sub.terms(&b, &c, &mut terms);
    let cost = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let point = DesignPoint::evaluate(phi, spin, settings)?;
    Some(Candidate {
        orbit,
        start,
        cost,
        bound: sol.x[0],
        point,
    })
}

/// Runs every (orbit, start) pair. Results come back in index order whatever
/// the thread count.
fn multistart(sub: Subproblem, settings: &OptimizerSettings) -> Vec<Candidate> {
    let orbits = spin_orbits();
    let n = settings.n_starts;
    (0..orbits.len() * n)
        .into_par_iter()
        .filter_map(|k| {
            let (orbit, start) = (k / n, k % n);
            solve_start(&sub, orbits[orbit], orbit, start, settings)
        })
        .collect()
}

/// Minimizer of one epigraph cost with its companion cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowSolution {
    pub point: DesignPoint,
    /// `p*` (force) or `q*` (torque).
    pub cost: f64,
    /// The other cost at the same design (`q0` or `p0`).
    pub companion: f64,
    /// Bound variable returned by the local solver.
    pub bound: f64,
    pub orbit: usize,
    pub start: usize,
    pub converged_starts: usize,
}

/// Best design for a single objective over all orbits and starts.
///
/// Ties within `tie_tol` go to the lowest orbit index; inside that orbit to
/// the lowest companion cost, then the lowest start index.
pub fn solve_shadow(kind: Objective, settings: &OptimizerSettings) -> Result<ShadowSolution> {
    settings.validate()?;
    let candidates = multistart(Subproblem::Shadow(kind), settings);
    let companion = |c: &Candidate| match kind {
        Objective::Force => c.point.q,
        Objective::Torque => c.point.p,
    };
    let best_cost = candidates
        .iter()
        .map(|c| c.cost)
        .fold(f64::INFINITY, f64::min);
    if !best_cost.is_finite() {
        return Err(Error::AllStartsFailed {
            starts: settings.n_starts * spin_orbits().len(),
        });
    }
    let tied = candidates
        .iter()
        .filter(|c| c.cost <= best_cost + settings.tie_tol);
    let orbit = tied.clone().map(|c| c.orbit).min().expect("non-empty");
    let winner = tied
        .filter(|c| c.orbit == orbit)
        .min_by(|a, b| {
            companion(a)
                .total_cmp(&companion(b))
                .then(a.start.cmp(&b.start))
        })
        .expect("non-empty");
    Ok(ShadowSolution {
        point: winner.point.clone(),
        cost: winner.cost,
        companion: companion(winner),
        bound: winner.bound,
        orbit: winner.orbit,
        start: winner.start,
        converged_starts: candidates.len(),
    })
}

/// The two extreme points anchoring the NBI search line.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowMinima {
    pub p_star: f64,
    pub q0: f64,
    pub p0: f64,
    pub q_star: f64,
    pub force: ShadowSolution,
    pub torque: ShadowSolution,
}

impl ShadowMinima {
    pub fn compute(settings: &OptimizerSettings) -> Result<Self> {
        let force = solve_shadow(Objective::Force, settings)?;
        let torque = solve_shadow(Objective::Torque, settings)?;
        Ok(Self::from_solutions(force, torque))
    }

    pub fn from_solutions(force: ShadowSolution, torque: ShadowSolution) -> Self {
        Self {
            p_star: force.cost,
            q0: force.companion,
            p0: torque.companion,
            q_star: torque.cost,
            force,
            torque,
        }
    }

    /// Point `(1-λ)(p*, q0) + λ(p0, q*)` on the search line.
    pub fn anchor(&self, lambda: f64) -> (f64, f64) {
        (
            (1.0 - lambda) * self.p_star + lambda * self.p0,
            (1.0 - lambda) * self.q0 + lambda * self.q_star,
        )
    }

    /// Normal `(q0 - q*, p0 - p*)`, floored away from zero for degenerate fronts.
    pub fn normal(&self) -> (f64, f64) {
        let floor = 1e-12;
        (
            (self.q0 - self.q_star).max(floor),
            (self.p0 - self.p_star).max(floor),
        )
    }

    /// Normalized distance from the utopia point `(p*, q*)`.
    fn utopia_distance(&self, point: &DesignPoint) -> f64 {
        let (np, nq) = self.normal();
        (point.p - self.p_star) / nq + (point.q - self.q_star) / np
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbiSolution {
    pub lambda: f64,
    pub point: DesignPoint,
    /// Offset along the normal, recomputed from the returned angles.
    pub t: f64,
    pub bound: f64,
    pub orbit: usize,
    pub start: usize,
}

/// Solves the NBI subproblem for one `λ`.
///
/// Ties in `t` prefer the design nearest the utopia point (so a dominating
/// design wins over a dominated one at the same offset), then the lowest
/// orbit and start index.
pub fn nbi_subproblem(
    lambda: f64,
    shadow: &ShadowMinima,
    settings: &OptimizerSettings,
) -> Result<NbiSolution> {
    settings.validate()?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda {lambda} outside [0, 1]"
        )));
    }
    let (anchor_p, anchor_q) = shadow.anchor(lambda);
    let (normal_p, normal_q) = shadow.normal();
    let sub = Subproblem::Nbi {
        anchor_p,
        anchor_q,
        normal_p,
        normal_q,
    };
    let candidates = multistart(sub, settings);
    let best = candidates
        .iter()
        .map(|c| c.cost)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::AllStartsFailed {
            starts: settings.n_starts * spin_orbits().len(),
        });
    }
    let tied: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| c.cost <= best + settings.tie_tol)
        .collect();
    let closest = tied
        .iter()
        .map(|c| shadow.utopia_distance(&c.point))
        .fold(f64::INFINITY, f64::min);
    let winner = tied
        .into_iter()
        .filter(|c| shadow.utopia_distance(&c.point) <= closest + 1e-6)
        .min_by(|a, b| a.orbit.cmp(&b.orbit).then(a.start.cmp(&b.start)))
        .expect("non-empty");
    Ok(NbiSolution {
        lambda,
        point: winner.point.clone(),
        t: winner.cost,
        bound: winner.bound,
        orbit: winner.orbit,
        start: winner.start,
    })
}

/// One sample of the front; `solution` is `None` when every start failed.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub lambda: f64,
    pub solution: Option<NbiSolution>,
    pub dominated: bool,
}

/// Pointwise approximation of the force/torque Pareto set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub shadow: ShadowMinima,
    pub points: Vec<FrontPoint>,
}

/// Absolute tolerance of the dominance test on `(p, q)`.
pub const DOMINANCE_TOL: f64 = 1e-6;

/// `a` dominates `b` beyond [`DOMINANCE_TOL`].
pub fn dominates(a: &DesignPoint, b: &DesignPoint) -> bool {
    let no_worse = a.p <= b.p + DOMINANCE_TOL && a.q <= b.q + DOMINANCE_TOL;
    let better = a.p < b.p - DOMINANCE_TOL || a.q < b.q - DOMINANCE_TOL;
    no_worse && better
}

impl ParetoFront {
    pub fn compute(settings: &OptimizerSettings) -> Result<Self> {
        settings.validate()?;
        let shadow = ShadowMinima::compute(settings)?;
        Self::sweep(shadow, settings)
    }

    /// NBI sweep over `settings.lambda_grid` from precomputed shadow minima.
    pub fn sweep(shadow: ShadowMinima, settings: &OptimizerSettings) -> Result<Self> {
        settings.validate()?;
        let mut points: Vec<FrontPoint> = settings
            .lambda_grid
            .iter()
            .map(|&lambda| FrontPoint {
                lambda,
                solution: nbi_subproblem(lambda, &shadow, settings).ok(),
                dominated: false,
            })
            .collect();
        let designs: Vec<Option<DesignPoint>> = points
            .iter()
            .map(|p| p.solution.as_ref().map(|s| s.point.clone()))
            .collect();
        for (i, fp) in points.iter_mut().enumerate() {
            if let Some(own) = &designs[i] {
                fp.dominated = designs
                    .iter()
                    .enumerate()
                    .any(|(j, other)| j != i && other.as_ref().is_some_and(|o| dominates(o, own)));
            }
        }
        Ok(Self { shadow, points })
    }

    /// Lowest-λ converged point, angles rounded to whole degrees.
    pub fn selected_design(&self, settings: &OptimizerSettings) -> Option<DesignConfig> {
        self.points
            .iter()
            .find_map(|p| p.solution.as_ref())
            .and_then(|s| s.point.rounded_design_config(settings).ok())
    }

    /// CSV with header `lambda,p,q,f_max,m_max,phi1_deg..phi6_deg,w1..w6,converged`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["lambda", "p", "q", "f_max", "m_max"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        header.extend((1..=6).map(|i| format!("phi{i}_deg")));
        header.extend((1..=6).map(|i| format!("w{i}")));
        header.push("converged".into());
        wtr.write_record(&header).map_err(io)?;
        for fp in &self.points {
            let mut rec = vec![format!("{}", fp.lambda)];
            match &fp.solution {
                Some(s) => {
                    let d = &s.point;
                    rec.extend([d.p, d.q, d.f_max, d.m_max].map(|v| format!("{v:.10}")));
                    rec.extend(d.phi_deg().map(|a| format!("{a:.6}")));
                    rec.extend(d.spin.signs().map(|w| w.to_string()));
                    rec.push("true".into());
                }
                None => {
                    rec.extend(std::iter::repeat_n(String::new(), 16));
                    rec.push("false".into());
                }
            }
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        Ok(())
    }
}
