//! Dense two-phase primal simplex, written for the assignment relaxation:
//! minimize c.x subject to equality rows, upper-bound rows, and x >= 0.
//!
//! Equality rows get artificial variables (phase 1 drives them to zero),
//! upper-bound rows get slacks. Entering column is Dantzig's rule, falling
//! back to Bland's rule after a run of degenerate pivots so cycling cannot
//! hang the solver.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("upper-bound rows must have non-negative right-hand sides")]
    NegativeRhs,
    #[error("row references column {0} beyond the declared count")]
    BadColumn(usize),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("pivot limit exhausted")]
    IterationLimit,
}

/// `min objective . x` s.t. `eq_rows` hold with equality, `ub_rows` hold
/// with `<=`, `x >= 0`. Rows are sparse `(column, coefficient)` lists.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub cols: usize,
    pub objective: Vec<f64>,
    pub eq_rows: Vec<(Vec<(usize, f64)>, f64)>,
    pub ub_rows: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, solution: Vec<f64> },
    Infeasible,
}

const PIVOT_EPS: f64 = 1e-9;
const REDUCED_COST_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns at indices >= `real_cols` are artificials.
    real_cols: usize,
    rhs: usize,
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    let cols = problem.cols;
    let n_eq = problem.eq_rows.len();
    let n_ub = problem.ub_rows.len();
    let m = n_eq + n_ub;
    let real_cols = cols + n_ub;
    let total_cols = real_cols + n_eq;
    let rhs = total_cols;

    let mut rows = vec![vec![0.0; total_cols + 1]; m];
    let mut basis = vec![0usize; m];

    for (i, (entries, b)) in problem.eq_rows.iter().enumerate() {
        // Flip rows with negative rhs so artificials start feasible.
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for &(col, coeff) in entries {
            if col >= cols {
                return Err(LpError::BadColumn(col));
            }
            rows[i][col] += sign * coeff;
        }
        rows[i][real_cols + i] = 1.0;
        rows[i][rhs] = sign * b;
        basis[i] = real_cols + i;
    }
    for (j, (entries, b)) in problem.ub_rows.iter().enumerate() {
        if *b < 0.0 {
            return Err(LpError::NegativeRhs);
        }
        let i = n_eq + j;
        for &(col, coeff) in entries {
            if col >= cols {
                return Err(LpError::BadColumn(col));
            }
            rows[i][col] += coeff;
        }
        rows[i][cols + j] = 1.0;
        rows[i][rhs] = *b;
        basis[i] = cols + j;
    }

    let mut t = Tableau { rows, basis, real_cols, rhs };

    // Phase 1: minimize the sum of artificials.
    if n_eq > 0 {
        let mut phase1 = vec![0.0; total_cols];
        phase1[real_cols..].fill(1.0);
        optimize(&mut t, &phase1, false)?;
        let w: f64 = t.objective_value(&phase1);
        if w > FEAS_EPS {
            return Ok(LpOutcome::Infeasible);
        }
        evict_artificials(&mut t);
    }

    // Phase 2: minimize the real objective, artificials barred from entering.
    let mut phase2 = vec![0.0; total_cols];
    phase2[..cols].copy_from_slice(&problem.objective);
    optimize(&mut t, &phase2, true)?;

    let mut solution = vec![0.0; cols];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < cols {
            solution[b] = t.rows[i][rhs].max(0.0);
        }
    }
    Ok(LpOutcome::Optimal { value: t.objective_value(&phase2), solution })
}

impl Tableau {
    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rows[i][self.rhs])
            .sum()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in r.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
    }
}

/// Runs the simplex loop to optimality for the given cost vector.
fn optimize(t: &mut Tableau, cost: &[f64], bar_artificials: bool) -> Result<(), LpError> {
    let m = t.rows.len();
    let n = cost.len();
    let enter_limit = if bar_artificials { t.real_cols } else { n };
    let max_iterations = 20 * (m + n) + 50_000;
    let bland_after = 2 * (m + n) + 2_000;

    // Reduced-cost row, kept in sync by pivoting.
    let mut zrow = vec![0.0; n + 1];
    zrow[..n].copy_from_slice(cost);
    for (i, &b) in t.basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            let row = t.rows[i].clone();
            for (z, v) in zrow.iter_mut().zip(&row) {
                *z -= cb * v;
            }
        }
    }

    let mut degenerate_run = 0usize;
    for iteration in 0..max_iterations {
        let use_bland = iteration >= bland_after || degenerate_run > bland_after;
        let entering = if use_bland {
            (0..enter_limit).find(|&j| zrow[j] < -REDUCED_COST_EPS)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for (j, &z) in zrow[..enter_limit].iter().enumerate() {
                if z < -REDUCED_COST_EPS && best.is_none_or(|(_, bz)| z < bz) {
                    best = Some((j, z));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(je) = entering else {
            return Ok(());
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t.rows[i][je];
            if a > PIVOT_EPS {
                let ratio = t.rows[i][t.rhs] / a;
                let better = match leaving {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - 1e-12
                            || (ratio < lr + 1e-12 && t.basis[i] < t.basis[li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((li, ratio)) = leaving else {
            return Err(LpError::Unbounded);
        };
        degenerate_run = if ratio <= 1e-12 { degenerate_run + 1 } else { 0 };

        t.pivot(li, je);
        let factor = zrow[je];
        if factor != 0.0 {
            let pivot_row = &t.rows[li];
            for (z, v) in zrow.iter_mut().zip(pivot_row) {
                *z -= factor * v;
            }
            zrow[je] = 0.0;
        }
    }
    Err(LpError::IterationLimit)
}

/// Pivots basic artificials (all at zero after phase 1) out of the basis
/// where a structural column is available. Rows that stay artificial are
/// redundant and remain inert.
fn evict_artificials(t: &mut Tableau) {
    for i in 0..t.rows.len() {
        if t.basis[i] >= t.real_cols {
            let col = (0..t.real_cols).find(|&j| t.rows[i][j].abs() > PIVOT_EPS);
            if let Some(j) = col {
                t.pivot(i, j);
            }
        }
    }
}
