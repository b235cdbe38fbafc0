//! Derivative-free local solver for small inequality-constrained problems.
//!
//! Sequential quadratic programming on finite-difference derivatives: each
//! iteration solves a QP built from a damped-BFGS model of the Lagrangian
//! Hessian and the linearized constraints, then backtracks on the exact ℓ1
//! penalty merit `f + μ Σ max(0, -c_j)`. Constraints violated at the current
//! iterate get an elastic slack so the QP always has a feasible start.

use nalgebra::{DMatrix, DVector};

use crate::design::qp::solve_qp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Step length at which the iteration stops, and accepted constraint violation.
    pub tol: f64,
    /// Cap on function evaluations (one evaluation = objective + all constraints).
    pub max_evaluations: usize,
    /// Initial ℓ1 penalty weight; raised to twice the largest multiplier when needed.
    pub penalty: f64,
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_evaluations: 5000,
            penalty: 10.0,
            fd_step: 1e-6,
        }
    }
}

/// `minimize f(x)` subject to `c_j(x) ≥ 0` and `lower ≤ x ≤ upper`.
///
/// `eval` returns `f(x)` and writes the constraint values into its second argument.
pub struct ConstrainedProblem<F> {
    pub n_constraints: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eval: F,
}

impl<F> ConstrainedProblem<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub objective: f64,
    pub constraints: Vec<f64>,
    /// `max_j max(0, -c_j)` at `x`.
    pub violation: f64,
    pub evaluations: usize,
    pub iterations: usize,
}

struct Counter<'a, F> {
    problem: &'a ConstrainedProblem<F>,
    evaluations: usize,
    limit: usize,
}

impl<F> Counter<'_, F>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    fn eval(&mut self, x: &[f64], c: &mut [f64]) -> Result<f64> {
        if self.evaluations >= self.limit {
            return Err(Error::NoConvergence {
                evaluations: self.evaluations,
            });
        }
        self.evaluations += 1;
        Ok((self.problem.eval)(x, c))
    }

    /// Central differences, one-sided where a bound is hit.
    fn linearize(
        &mut self,
        x: &[f64],
        h0: f64,
        grad: &mut DVector<f64>,
        jac: &mut DMatrix<f64>,
    ) -> Result<()> {
        let n = x.len();
        let m = self.problem.n_constraints;
        let mut xt = x.to_vec();
        let mut cp = vec![0.0; m];
        let mut cm = vec![0.0; m];
        for k in 0..n {
            let h = h0 * (1.0 + x[k].abs());
            let hi = (x[k] + h).min(self.problem.upper[k]);
            let lo = (x[k] - h).max(self.problem.lower[k]);
            xt[k] = hi;
            let fp = self.eval(&xt, &mut cp)?;
            xt[k] = lo;
            let fm = self.eval(&xt, &mut cm)?;
            xt[k] = x[k];
            let span = hi - lo;
            grad[k] = (fp - fm) / span;
            for j in 0..m {
                jac[(j, k)] = (cp[j] - cm[j]) / span;
            }
        }
        Ok(())
    }
}

fn violation(c: &[f64]) -> f64 {
    c.iter().fold(0.0, |acc, &v| acc.max(-v))
}

fn merit(f: f64, c: &[f64], mu: f64) -> f64 {
    f + mu * c.iter().map(|&v| (-v).max(0.0)).sum::<f64>()
}

/// Runs the solver from `x0` (clamped into the bounds).
pub fn local_solve<F>(
    problem: &ConstrainedProblem<F>,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<LocalMinimum>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = problem.dim();
    let m = problem.n_constraints;
    if x0.len() != n || problem.upper.len() != n {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    let mut counter = Counter {
        problem,
        evaluations: 0,
        limit: opts.max_evaluations,
    };
    let no_convergence = |evaluations| Error::NoConvergence { evaluations };

    let clamp = |x: &mut [f64]| {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(problem.lower[k], problem.upper[k]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut c = vec![0.0; m];
    let mut f = counter.eval(&x, &mut c)?;
    if !f.is_finite() {
        return Err(no_convergence(counter.evaluations));
    }
    let mut grad = DVector::zeros(n);
    let mut jac = DMatrix::zeros(m, n);
    counter.linearize(&x, opts.fd_step, &mut grad, &mut jac)?;

    let mut hess = DMatrix::<f64>::identity(n, n);
    let mut mu = opts.penalty;
    let mut xt = vec![0.0; n];
    let mut ct = vec![0.0; m];
    let mut grad_t = DVector::zeros(n);
    let mut jac_t = DMatrix::zeros(m, n);
    let mut iterations = 0;

    loop {
        iterations += 1;
        let elastic: Vec<usize> = (0..m).filter(|&j| c[j] < 0.0).collect();
        let ns = elastic.len();
        let nz = n + ns;

        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + ns + 2 * n);
        for j in 0..m {
            let mut a = vec![0.0; nz];
            for k in 0..n {
                a[k] = jac[(j, k)];
            }
            if let Some(e) = elastic.iter().position(|&v| v == j) {
                a[n + e] = 1.0;
            }
            rows.push((a, -c[j]));
        }
        for e in 0..ns {
            let mut a = vec![0.0; nz];
            a[n + e] = 1.0;
            rows.push((a, 0.0));
        }
        for k in 0..n {
            if problem.lower[k].is_finite() {
                let mut a = vec![0.0; nz];
                a[k] = 1.0;
                rows.push((a, problem.lower[k] - x[k]));
            }
            if problem.upper[k].is_finite() {
                let mut a = vec![0.0; nz];
                a[k] = -1.0;
                rows.push((a, x[k] - problem.upper[k]));
            }
        }
        let a_mat = DMatrix::from_fn(rows.len(), nz, |r, col| rows[r].0[col]);
        let b_vec = DVector::from_fn(rows.len(), |r, _| rows[r].1);
        let mut h = DMatrix::zeros(nz, nz);
        h.view_mut((0, 0), (n, n)).copy_from(&hess);
        for e in 0..ns {
            h[(n + e, n + e)] = 1e-6;
        }
        let mut lin = DVector::zeros(nz);
        lin.rows_mut(0, n).copy_from(&grad);
        for e in 0..ns {
            lin[n + e] = mu;
        }
        let mut z0 = DVector::zeros(nz);
        for (e, &j) in elastic.iter().enumerate() {
            z0[n + e] = -c[j];
        }
        let qp = solve_qp(&h, &lin, &a_mat, &b_vec, &z0)
            .or_else(|_| {
                // Rebuild from an identity model when the QP degenerates.
                hess.fill_with_identity();
                h.view_mut((0, 0), (n, n)).copy_from(&hess);
                solve_qp(&h, &lin, &a_mat, &b_vec, &z0)
            })
            .map_err(|_| no_convergence(counter.evaluations))?;
        let d = qp.z.rows(0, n).into_owned();
        let slack_sum: f64 = qp.z.rows(n, ns).iter().sum();
        let lambda = qp.multipliers.rows(0, m).into_owned();

        let d_norm = d.amax();
        if d_norm <= opts.tol && violation(&c) <= opts.tol {
            break;
        }
        let lambda_max = lambda.amax();
        if mu < 1.5 * lambda_max {
            mu = 2.0 * lambda_max;
        }

        let current = merit(f, &c, mu);
        let infeasibility: f64 = c.iter().map(|&v| (-v).max(0.0)).sum();
        let slope = grad.dot(&d) - mu * (infeasibility - slack_sum);
        if slope >= -1e-16 * (1.0 + current.abs()) {
            break;
        }

        let mut alpha = 1.0;
        let mut f_t;
        loop {
            for k in 0..n {
                xt[k] = x[k] + alpha * d[k];
            }
            clamp(&mut xt);
            f_t = counter.eval(&xt, &mut ct)?;
            if f_t.is_finite() && merit(f_t, &ct, mu) <= current + 1e-4 * alpha * slope {
                break;
            }
            alpha *= 0.5;
            if alpha * d_norm < 1e-3 * opts.tol {
                break;
            }
        }
        if alpha * d_norm < 1e-3 * opts.tol {
            break;
        }

        counter.linearize(&xt, opts.fd_step, &mut grad_t, &mut jac_t)?;
        let s = DVector::from_fn(n, |k, _| xt[k] - x[k]);
        let y = (&grad_t - jac_t.transpose() * &lambda) - (&grad - jac.transpose() * &lambda);
        let bs = &hess * &s;
        let sbs = s.dot(&bs);
        let sy = s.dot(&y);
        if sbs > 1e-300 {
            let theta = if sy >= 0.2 * sbs {
                1.0
            } else {
                0.8 * sbs / (sbs - sy)
            };
            let r = theta * &y + (1.0 - theta) * &bs;
            let sr = s.dot(&r);
            if sr > 1e-300 {
                hess += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
            }
        }

        x.copy_from_slice(&xt);
        c.copy_from_slice(&ct);
        f = f_t;
        std::mem::swap(&mut grad, &mut grad_t);
        std::mem::swap(&mut jac, &mut jac_t);

        if alpha * d_norm <= opts.tol && violation(&c) <= opts.tol {
            break;
        }
    }

    let viol = violation(&c);
    if viol > opts.tol {
        return Err(no_convergence(counter.evaluations));
    }
    Ok(LocalMinimum {
        x,
        objective: f,
        constraints: c,
        violation: viol,
        evaluations: counter.evaluations,
        iterations,
    })
}
