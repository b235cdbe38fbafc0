//! Dense primal active-set solver for small convex quadratic programs.
//!
//! `minimize ½ zᵀHz + cᵀz` subject to `A z ≥ b`, with `H` positive definite
//! and a feasible starting point supplied by the caller.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: DVector<f64>,
    /// One multiplier per row of `A`; zero for inactive rows.
    pub multipliers: DVector<f64>,
    pub iterations: usize,
}

/// Solves the QP from the feasible point `z0`.
pub fn solve_qp(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    z0: &DVector<f64>,
) -> Result<QpSolution> {
    let n = h.nrows();
    let m = a.nrows();
    if h.ncols() != n || c.len() != n || a.ncols() != n || b.len() != m || z0.len() != n {
        return Err(Error::InvalidParameter("qp dimension mismatch".into()));
    }
    let scale = 1.0 + b.amax();
    let residual = a * z0 - b;
    if residual.iter().any(|&r| r < -1e-9 * scale) {
        return Err(Error::InvalidParameter("qp start is infeasible".into()));
    }

    let mut z = z0.clone();
    let mut working: Vec<usize> = Vec::new();
    // After an unblocked step `z` minimizes over the working set; any
    // remaining `p` is rounding noise.
    let mut full_step = false;
    let max_iter = 30 * (n + m) + 50;
    let bland_after = 5 * (n + m);
    for iteration in 1..=max_iter {
        let k = working.len();
        let grad = h * &z + c;
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        for (j, &row) in working.iter().enumerate() {
            for col in 0..n {
                kkt[(col, n + j)] = -a[(row, col)];
                kkt[(n + j, col)] = a[(row, col)];
            }
        }
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&grad));
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidParameter("qp working set is degenerate".into()))?;
        let p = sol.rows(0, n).into_owned();

        if full_step || p.amax() <= 1e-12 * (1.0 + z.amax()) {
            full_step = false;
            let lambda = sol.rows(n, k);
            let threshold = -1e-10 * (1.0 + grad.amax());
            let negative = (0..k).filter(|&j| lambda[j] < threshold);
            // Bland-style choice once degenerate cycling is possible.
            let most_negative = if iteration > bland_after {
                negative.min_by_key(|&j| working[j])
            } else {
                negative.min_by(|&i, &j| lambda[i].total_cmp(&lambda[j]))
            };
            match most_negative {
                Some(j) => {
                    working.remove(j);
                }
                None => {
                    let mut multipliers = DVector::zeros(m);
                    for (j, &row) in working.iter().enumerate() {
                        multipliers[row] = lambda[j];
                    }
                    return Ok(QpSolution {
                        z,
                        multipliers,
                        iterations: iteration,
                    });
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for i in (0..m).filter(|i| !working.contains(i)) {
            let ap = a.row(i).dot(&p.transpose());
            if ap < -1e-14 {
                let slack = (a.row(i).dot(&z.transpose()) - b[i]).max(0.0);
                let step = slack / -ap;
                if step < alpha - 1e-14
                    || (step <= alpha + 1e-14 && blocking.is_some_and(|j| i < j))
                {
                    alpha = step.min(alpha);
                    blocking = Some(i);
                }
            }
        }
        z += alpha * p;
        match blocking {
            Some(i) => working.push(i),
            None => full_step = true,
        }
    }
    Err(Error::NoConvergence {
        evaluations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unconstrained_minimum_inside() {
        let h = DMatrix::identity(2, 2);
        let c = DVector::from_vec(vec![-1.0, -2.0]);
        let a = DMatrix::from_row_slice(1, 2, &[-1.0, -1.0]);
        let b = DVector::from_vec(vec![-10.0]);
        let s = solve_qp(&h, &c, &a, &b, &DVector::zeros(2)).unwrap();
        assert_abs_diff_eq!(s.z[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.z[1], 2.0, epsilon = 1e-12);
        assert_eq!(s.multipliers[0], 0.0);
    }

    #[test]
    fn projection_onto_halfplane() {
        // min ½‖z - (2, 2)‖² s.t. z1 + z2 ≤ 2 → (1, 1), multiplier 2.
        let h = DMatrix::identity(2, 2);
        let c = DVector::from_vec(vec![-2.0, -2.0]);
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, -1.0, 1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![-2.0, 0.0, 0.0]);
        let s = solve_qp(&h, &c, &a, &b, &DVector::zeros(2)).unwrap();
        assert_abs_diff_eq!(s.z[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.z[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.multipliers[0], 1.0, epsilon = 1e-12);
        assert_eq!(s.multipliers[1], 0.0);
    }

    #[test]
    fn drops_constraint_with_negative_multiplier() {
        // Start on z1 = 0, optimum (1.5, 0) leaves z2 ≥ 0 active only.
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let c = DVector::from_vec(vec![-3.0, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::zeros(2);
        let s = solve_qp(&h, &c, &a, &b, &DVector::zeros(2)).unwrap();
        assert_abs_diff_eq!(s.z[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.z[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.multipliers[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_infeasible_start() {
        let h = DMatrix::identity(1, 1);
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DVector::from_vec(vec![1.0]);
        assert!(solve_qp(&h, &DVector::zeros(1), &a, &b, &DVector::zeros(1)).is_err());
    }
}
