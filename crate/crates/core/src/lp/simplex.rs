//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b` of any
//! sign. Rows with a negative right-hand side get an artificial variable and
//! are handled by phase one. Instances here are tiny, so the solver favours
//! determinism over speed.

use thiserror::Error;

/// Pivot and feasibility tolerance.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint row {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    /// `max objective·x` over non-negative `x`, no constraints yet.
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds `coeffs·x ≤ rhs`.
    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        self
    }

    /// Adds `Σ coeff·x[var] ≤ rhs` from sparse terms; repeated indices add up.
    pub fn add_le_sparse(&mut self, terms: &[(usize, f64)], rhs: f64) -> &mut Self {
        let mut row = vec![0.0; self.objective.len()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.add_le(row, rhs)
    }

    /// Adds `coeffs·x ≥ rhs`.
    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        let neg = coeffs.into_iter().map(|a| -a).collect();
        self.add_le(neg, -rhs)
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.rows
            .iter()
            .map(Vec::as_slice)
            .zip(self.rhs.iter().copied())
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::DimensionMismatch {
                    row: i,
                    got: row.len(),
                    expected: n,
                });
            }
            if row.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite("constraint matrix"));
            }
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(LpError::NonFinite("right-hand side"));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; all zero unless `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; the last column is
    /// the right-hand side. The objective row stores `-reduced cost` so that a
    /// negative entry marks an improving column.
    cells: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.cells[i][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (i, r) in self.cells.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: lowest-index improving column; among tied ratios the
    /// row whose basic variable has the lowest index. Returns `false` if the
    /// objective is unbounded over the allowed columns.
    fn optimize(&mut self, allowed: usize) -> bool {
        let m = self.basis.len();
        loop {
            let obj = &self.cells[m];
            let Some(col) = (0..allowed).find(|&j| obj[j] < -EPS) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.cells[i][col];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - EPS
                                || (ratio <= br + EPS && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return false,
                Some((row, _)) => self.pivot(row, col),
            }
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let m = self.basis.len();
        let mut z = vec![0.0; self.width + 1];
        for (j, &c) in costs.iter().enumerate() {
            z[j] = -c;
        }
        for i in 0..m {
            let cb = costs.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (zj, &a) in z.iter_mut().zip(&self.cells[i]) {
                    *zj += cb * a;
                }
            }
        }
        self.cells[m] = z;
    }
}

/// Solves `lp` to optimality or reports infeasibility/unboundedness.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let negative: Vec<usize> = (0..m).filter(|&i| lp.rhs[i] < 0.0).collect();
    let n_art = negative.len();
    let width = n + m + n_art;

    let mut cells = vec![vec![0.0; width + 1]; m + 1];
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for (cell, &a) in cells[i].iter_mut().zip(&lp.rows[i]) {
            *cell = sign * a;
        }
        cells[i][n + i] = sign;
        cells[i][width] = sign * lp.rhs[i];
        if sign < 0.0 {
            cells[i][n + m + art] = 1.0;
            basis[i] = n + m + art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut t = Tableau {
        cells,
        basis,
        width,
    };

    if n_art > 0 {
        // phase one: maximize -(sum of artificials)
        let mut costs = vec![0.0; width];
        for c in costs.iter_mut().skip(n + m) {
            *c = -1.0;
        }
        t.set_objective(&costs);
        t.optimize(width);
        if t.cells[m][width] < -EPS * (1.0 + m as f64) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: 0.0,
            });
        }
        // drive zero-valued artificials out of the basis
        let mut row = 0;
        while row < t.basis.len() {
            if t.basis[row] >= n + m {
                match (0..n + m).find(|&j| t.cells[row][j].abs() > EPS) {
                    Some(j) => t.pivot(row, j),
                    None => {
                        // redundant constraint
                        t.cells.remove(row);
                        t.basis.remove(row);
                        continue;
                    }
                }
            }
            row += 1;
        }
    }

    let m = t.basis.len();
    let mut costs = lp.objective.clone();
    costs.resize(width, 0.0);
    t.set_objective(&costs);
    if !t.optimize(n + lp.num_constraints()) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::INFINITY,
        });
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}
