//! Exact rational linear programming over equality constraints.
//!
//! Decision problems in this crate reduce to feasibility of a system
//! `A x = b`, `x >= 0` with rational data. Floating point is useless for
//! that purpose — feasibility is a yes/no question about an exact polytope —
//! so this module implements a dense two-phase primal simplex over
//! [`Rational`] entries. Bland's rule is used for both the entering and the
//! leaving choice, which guarantees termination and makes every run
//! deterministic.
//!
//! Phase 1 minimizes the total infeasibility (the sum of artificial
//! variables); its optimum is reported as the residual of infeasible
//! systems. Phase 2 optimizes a linear objective over the feasible region
//! and exists mainly to probe the solution set, e.g. to certify that a
//! feasible point is unique by maximizing and minimizing each coordinate.

use crate::rational::Rational;

/// One equality constraint: the sparse left-hand side and its right-hand
/// side. Repeated variable indices are summed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    /// The least total constraint violation attainable with `x >= 0`.
    Infeasible { residual: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        solution: Vec<Rational>,
    },
    Infeasible {
        residual: Rational,
    },
    Unbounded,
}

struct Tableau {
    ncols: usize,
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    /// Basic column per row; values `>= ncols` denote artificials.
    basis: Vec<usize>,
}

impl Tableau {
    fn new(problem: &LpProblem) -> Tableau {
        let ncols = problem.num_vars;
        let mut rows = Vec::with_capacity(problem.rows.len());
        let mut rhs = Vec::with_capacity(problem.rows.len());
        for (i, row) in problem.rows.iter().enumerate() {
            let mut dense = vec![Rational::zero(); ncols];
            for (j, c) in &row.coeffs {
                assert!(*j < ncols, "row {i} references variable {j} out of range");
                dense[*j] += c;
            }
            let mut b = row.rhs.clone();
            if b.is_negative() {
                for c in &mut dense {
                    *c = -c.clone();
                }
                b = -b;
            }
            rows.push(dense);
            rhs.push(b);
        }
        let basis = (0..rows.len()).map(|i| ncols + i).collect();
        Tableau {
            ncols,
            rows,
            rhs,
            basis,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.rows[row][col].clone().recip();
        for c in &mut self.rows[row] {
            *c = c.clone() * &inv;
        }
        self.rhs[row] = self.rhs[row].clone() * &inv;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                let delta = factor.clone() * &self.rows[row][j];
                self.rows[i][j] -= &delta;
            }
            let delta = factor * &self.rhs[row];
            self.rhs[i] -= &delta;
        }
        self.basis[row] = col;
    }

    /// Bland ratio test: the argmin row of `rhs / column`, ties broken by
    /// the smallest basic variable index. `None` when the column has no
    /// positive entry.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for i in 0..self.rows.len() {
            if !self.rows[i][col].is_positive() {
                continue;
            }
            let ratio = self.rhs[i].clone() / &self.rows[i][col];
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    /// Minimizes the given cost over the current (artificial-free) basis.
    /// Returns false on an unbounded ray.
    fn run_simplex(&mut self, cost: &[Rational]) -> bool {
        loop {
            let mut entering = None;
            for j in 0..self.ncols {
                let mut r = cost[j].clone();
                for i in 0..self.rows.len() {
                    let b = self.basis[i];
                    if b >= self.ncols || cost[b].is_zero() {
                        continue;
                    }
                    r -= &(cost[b].clone() * &self.rows[i][j]);
                }
                if r.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            match self.leaving_row(col) {
                Some(row) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    /// Phase-1 iteration: minimize the sum of artificial values.
    fn run_phase1(&mut self) {
        loop {
            let mut entering = None;
            for j in 0..self.ncols {
                // Reduced cost of column j for the all-ones artificial
                // objective: minus the column sum over artificial rows.
                let mut r = Rational::zero();
                for i in 0..self.rows.len() {
                    if self.basis[i] >= self.ncols {
                        r -= &self.rows[i][j];
                    }
                }
                if r.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return };
            let row = self
                .leaving_row(col)
                .expect("phase-1 objective is bounded below by zero");
            self.pivot(row, col);
        }
    }

    fn residual(&self) -> Rational {
        (0..self.rows.len())
            .filter(|&i| self.basis[i] >= self.ncols)
            .map(|i| self.rhs[i].clone())
            .sum()
    }

    /// Pivots zero-valued artificials out of the basis and drops redundant
    /// rows. Call only when the residual is zero.
    fn eliminate_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < self.ncols {
                i += 1;
                continue;
            }
            debug_assert!(self.rhs[i].is_zero());
            match (0..self.ncols).find(|&j| !self.rows[i][j].is_zero()) {
                Some(col) => {
                    self.pivot(i, col);
                    i += 1;
                }
                None => {
                    self.rows.swap_remove(i);
                    self.rhs.swap_remove(i);
                    self.basis.swap_remove(i);
                }
            }
        }
    }

    fn solution(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.ncols];
        for i in 0..self.rows.len() {
            if self.basis[i] < self.ncols {
                x[self.basis[i]] = self.rhs[i].clone();
            }
        }
        x
    }
}

impl LpProblem {
    /// Finds a nonnegative solution of the equality system, or the smallest
    /// attainable total violation.
    pub fn feasible_point(&self) -> Feasibility {
        let mut t = Tableau::new(self);
        t.run_phase1();
        let residual = t.residual();
        if residual.is_zero() {
            Feasibility::Feasible(t.solution())
        } else {
            Feasibility::Infeasible { residual }
        }
    }

    pub fn minimize(&self, objective: &[Rational]) -> LpOutcome {
        assert_eq!(objective.len(), self.num_vars);
        let mut t = Tableau::new(self);
        t.run_phase1();
        let residual = t.residual();
        if !residual.is_zero() {
            return LpOutcome::Infeasible { residual };
        }
        t.eliminate_artificials();
        if !t.run_simplex(objective) {
            return LpOutcome::Unbounded;
        }
        let solution = t.solution();
        let value = objective
            .iter()
            .zip(&solution)
            .map(|(c, x)| c.clone() * x)
            .sum();
        LpOutcome::Optimal { value, solution }
    }

    pub fn maximize(&self, objective: &[Rational]) -> LpOutcome {
        let negated: Vec<Rational> = objective.iter().map(|c| -c.clone()).collect();
        match self.minimize(&negated) {
            LpOutcome::Optimal { value, solution } => LpOutcome::Optimal {
                value: -value,
                solution,
            },
            other => other,
        }
    }
}
