//! Dense two-phase simplex for small linear programs.
//!
//! Solves `minimize cᵀx` subject to rows `aᵀx {≤, =, ≥} b` and `x ≥ 0`.
//! Meant for small problems such as wrench-polytope queries (tens of rows
//! and columns), so the tableau is kept dense.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize, obj: &mut [f64]) {
        let w = self.cols + 1;
        let p = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= p;
        }
        let (before, rest) = self.t.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
            }
        }
        let f = obj[pc];
        if f != 0.0 {
            for (x, &y) in obj.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on the reduced-cost row `obj` (length cols + 1,
    /// last entry is minus the objective value). Columns with `allowed[c] ==
    /// false` never enter.
    fn optimize(&mut self, obj: &mut [f64], allowed: &[bool]) -> Result<()> {
        let max_iter = 50 * (self.rows + self.cols) + 100;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_SWITCH;
            let mut entering = None;
            let mut best = -PIVOT_EPS;
            for c in 0..self.cols {
                if !allowed[c] || obj[c] >= -PIVOT_EPS {
                    continue;
                }
                if bland {
                    entering = Some(c);
                    break;
                }
                if obj[c] < best {
                    best = obj[c];
                    entering = Some(c);
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14
                                || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                leaving = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, ratio)) = leaving else {
                return Err(Error::Unbounded);
            };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc, obj);
        }
        // Cycling guard; Bland's rule makes this unreachable in exact arithmetic.
        Err(Error::InvalidParameter("simplex iteration limit".into()))
    }
}

/// Minimizes the program; `x ≥ 0` is implicit.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    for row in &lp.rows {
        if row.coeffs.len() != n {
            return Err(Error::InvalidParameter(format!(
                "row has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
    }

    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 {
                let rel = match r.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (r.coeffs.iter().map(|a| -a).collect(), rel, -r.rhs)
            } else {
                (r.coeffs.clone(), r.relation, r.rhs)
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let w = cols + 1;
    let mut tab = Tableau {
        t: vec![0.0; m * w],
        rows: m,
        cols,
        basis: vec![0; m],
    };
    let art_start = n + n_slack;
    let (mut slack, mut art) = (n, art_start);
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        tab.t[i * w..i * w + n].copy_from_slice(coeffs);
        tab.t[i * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                tab.t[i * w + slack] = 1.0;
                tab.basis[i] = slack;
                slack += 1;
            }
            Relation::Ge => {
                tab.t[i * w + slack] = -1.0;
                slack += 1;
                tab.t[i * w + art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                tab.t[i * w + art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
        }
    }

    let mut allowed = vec![true; cols];
    if n_art > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut obj = vec![0.0; w];
        for c in art_start..cols {
            obj[c] = 1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for c in 0..w {
                    obj[c] -= tab.at(r, c);
                }
            }
        }
        tab.optimize(&mut obj, &allowed)?;
        let infeasibility = -obj[cols];
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| tab.at(r, c).abs() > 1e-9) {
                    tab.pivot(r, c, &mut obj);
                }
            }
        }
        for a in allowed.iter_mut().skip(art_start) {
            *a = false;
        }
    }

    // Phase 2.
    let mut obj = vec![0.0; w];
    obj[..n].copy_from_slice(&lp.objective);
    for r in 0..m {
        let cb = if tab.basis[r] < n {
            lp.objective[tab.basis[r]]
        } else {
            0.0
        };
        if cb != 0.0 {
            for c in 0..w {
                obj[c] -= cb * tab.at(r, c);
            }
        }
    }
    tab.optimize(&mut obj, &allowed)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let lp = LinearProgram {
            objective: vec![-3.0, -5.0],
            rows: vec![
                Row::new(vec![1.0, 0.0], Relation::Le, 4.0),
                Row::new(vec![0.0, 2.0], Relation::Le, 12.0),
                Row::new(vec![3.0, 2.0], Relation::Le, 18.0),
            ],
        };
        let s = solve(&lp).unwrap();
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.objective, -36.0, epsilon = 1e-12);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y, x + y ≥ 2, x - y = 1 → (1.5, 0.5)
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            rows: vec![
                Row::new(vec![1.0, 1.0], Relation::Ge, 2.0),
                Row::new(vec![1.0, -1.0], Relation::Eq, 1.0),
            ],
        };
        let s = solve(&lp).unwrap();
        assert_abs_diff_eq!(s.x[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn negative_rhs_le_row() {
        // min x, -x ≤ -3 → x = 3
        let lp = LinearProgram {
            objective: vec![1.0],
            rows: vec![Row::new(vec![-1.0], Relation::Le, -3.0)],
        };
        assert_abs_diff_eq!(solve(&lp).unwrap().x[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = LinearProgram {
            objective: vec![1.0],
            rows: vec![
                Row::new(vec![1.0], Relation::Le, 1.0),
                Row::new(vec![1.0], Relation::Ge, 2.0),
            ],
        };
        assert_eq!(solve(&infeasible).unwrap_err(), Error::Infeasible);
        let unbounded = LinearProgram {
            objective: vec![-1.0, 0.0],
            rows: vec![Row::new(vec![0.0, 1.0], Relation::Le, 1.0)],
        };
        assert_eq!(solve(&unbounded).unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn degenerate_program_terminates() {
        // Classic cycling example (Beale) under Dantzig's rule.
        let lp = LinearProgram {
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            rows: vec![
                Row::new(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0),
                Row::new(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0),
                Row::new(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0),
            ],
        };
        let s = solve(&lp).unwrap();
        assert_abs_diff_eq!(s.objective, -0.05, epsilon = 1e-10);
    }
}
