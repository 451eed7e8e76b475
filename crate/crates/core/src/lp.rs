//! Dense linear-programming solver for decoding problems.
//!
//! Problems have the fixed shape: minimize a linear objective over variables
//! boxed to [0,1], subject to accumulated `>=` rows (parity inequalities and
//! hard-decision initialization rows). The solver is a revised primal
//! simplex on the bounded-variable standard form with one surplus variable
//! per row, two-phase with artificials, Dantzig pricing, and a Bland's-rule
//! fallback against cycling. All choices are deterministic so identical
//! problems produce bit-identical solutions.

use std::fmt::Write as _;
use thiserror::Error;

/// Primal feasibility tolerance.
pub const EPS_FEAS: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const EPS_OPT: f64 = 1e-9;
/// Constraint activity threshold: slack below this counts as active.
pub const EPS_ACTIVE: f64 = 1e-9;

const EPS_PIVOT: f64 = 1e-10;

/// Where a constraint came from; used for duplicate tracking, the per-row
/// ledger of the modified decoders, and statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintOrigin {
    /// Hard-decision initialization row (duplicates a box bound).
    Box,
    /// Parity inequality from row `row` of the original matrix, subset V.
    OriginalRow { row: usize, subset: Vec<usize> },
    /// Parity inequality from a redundant parity check with the stored
    /// support bits.
    Rpc { support: Vec<usize>, subset: Vec<usize> },
}

impl ConstraintOrigin {
    pub fn is_parity(&self) -> bool {
        !matches!(self, ConstraintOrigin::Box)
    }
}

/// A `>=` constraint with sparse coefficients over the problem variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    /// (variable index, coefficient), ascending by index. Parity rows carry
    /// only +1/-1 coefficients.
    pub coeffs: Vec<(usize, f64)>,
    pub bound: f64,
    pub origin: ConstraintOrigin,
}

impl LinearConstraint {
    /// `u_i >= 0` initialization row.
    pub fn lower_box(i: usize) -> Self {
        LinearConstraint { coeffs: vec![(i, 1.0)], bound: 0.0, origin: ConstraintOrigin::Box }
    }

    /// `u_i <= 1` initialization row, stored as `-u_i >= -1`.
    pub fn upper_box(i: usize) -> Self {
        LinearConstraint { coeffs: vec![(i, -1.0)], bound: -1.0, origin: ConstraintOrigin::Box }
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, v)| v * point[i]).sum()
    }

    pub fn slack(&self, point: &[f64]) -> f64 {
        self.evaluate(point) - self.bound
    }
}

/// An LP in decoder form: minimize `objective . u` subject to the constraint
/// rows and the implicit box `0 <= u_i <= 1`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    objective: Vec<f64>,
    constraints: Vec<LinearConstraint>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        assert!(!objective.is_empty(), "need at least one variable");
        assert!(objective.iter().all(|c| c.is_finite()), "objective must be finite");
        LpProblem { objective, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Appends constraints in order, keeping origin tags. Duplicates are
    /// allowed; callers that need duplicate suppression track it themselves.
    pub fn add_constraints(
        &mut self,
        constraints: impl IntoIterator<Item = LinearConstraint>,
    ) -> Result<(), LpError> {
        let staged: Vec<LinearConstraint> = constraints.into_iter().collect();
        for c in &staged {
            for &(i, _) in &c.coeffs {
                if i >= self.num_vars() {
                    return Err(LpError::IndexOutOfRange { index: i, vars: self.num_vars() });
                }
            }
        }
        self.constraints.extend(staged);
        Ok(())
    }

    /// Removes every constraint for which `remove` returns true, preserving
    /// the relative order of survivors. `slacks` must come from the most
    /// recent solve of this problem.
    pub fn remove_constraints(
        &mut self,
        slacks: &[f64],
        mut remove: impl FnMut(&LinearConstraint, f64) -> bool,
    ) -> usize {
        assert_eq!(slacks.len(), self.constraints.len(), "stale slack vector");
        let before = self.constraints.len();
        let mut idx = 0;
        self.constraints.retain(|c| {
            let keep = !remove(c, slacks[idx]);
            idx += 1;
            keep
        });
        before - self.constraints.len()
    }

    /// Plain-text dump in LP-file style for eyeballing and external
    /// cross-checks. Not load-bearing.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        for (i, &c) in self.objective.iter().enumerate() {
            let _ = write!(out, " {} {} u{}", if c < 0.0 { "-" } else { "+" }, c.abs(), i + 1);
        }
        out.push_str("\nSubject To\n");
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{}:", k + 1);
            for &(i, v) in &c.coeffs {
                let _ = write!(out, " {} {} u{}", if v < 0.0 { "-" } else { "+" }, v.abs(), i + 1);
            }
            let _ = writeln!(out, " >= {}", c.bound);
        }
        out.push_str("Bounds\n");
        for i in 0..self.num_vars() {
            let _ = writeln!(out, " 0 <= u{} <= 1", i + 1);
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// Cannot occur for valid parity constraints (every codeword is
    /// feasible); decoders treat it as an internal-consistency failure.
    Infeasible,
}

/// Solution of an [`LpProblem`]: a vertex of the constraint polytope with
/// per-constraint slacks `a . u* - b`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Vec<f64>,
    pub objective_value: f64,
    pub slacks: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("variable index {index} out of range for {vars} variables")]
    IndexOutOfRange { index: usize, vars: usize },
    #[error("simplex cycling guard exceeded after {pivots} pivots")]
    CyclingGuard { pivots: usize },
    #[error("numerical breakdown in simplex: {0}")]
    Numerical(String),
}

/// Solves the problem to a basic optimal solution.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let mut simplex = Simplex::build(problem);
    let status = simplex.run()?;
    let point = simplex.structural_point();
    let slacks: Vec<f64> = problem.constraints.iter().map(|c| c.slack(&point)).collect();
    let objective_value =
        problem.objective.iter().zip(&point).map(|(c, u)| c * u).sum();
    if status == LpStatus::Optimal {
        if let Some(worst) = slacks.iter().copied().fold(None::<f64>, |acc, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        }) {
            if worst < -1e-6 {
                return Err(LpError::Numerical(format!(
                    "feasibility drift: slack {worst} at claimed optimum"
                )));
            }
        }
    }
    Ok(LpSolution { status, point, objective_value, slacks })
}

/// Revised simplex state over columns `[structural | surplus | artificial]`.
struct Simplex {
    rows: usize,
    structural: usize,
    /// Sparse columns of the equality system `A u - s (+ artificials) = b`.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    phase1_cost: Vec<f64>,
    b: Vec<f64>,
    /// basis[r] = column basic in row r.
    basis: Vec<usize>,
    basic_pos: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    x_basic: Vec<f64>,
    /// Dense row-major basis inverse.
    binv: Vec<f64>,
    artificial_start: usize,
}

impl Simplex {
    fn build(problem: &LpProblem) -> Simplex {
        let rows = problem.constraints.len();
        let structural = problem.num_vars();
        let ncols = structural + rows;

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for (r, c) in problem.constraints.iter().enumerate() {
            for &(i, v) in &c.coeffs {
                cols[i].push((r, v));
            }
            cols[structural + r].push((r, -1.0));
        }
        let mut lower = vec![0.0; ncols];
        let mut upper = vec![f64::INFINITY; ncols];
        for i in 0..structural {
            lower[i] = 0.0;
            upper[i] = 1.0;
        }
        let mut cost = vec![0.0; ncols];
        cost[..structural].copy_from_slice(&problem.objective);
        let b: Vec<f64> = problem.constraints.iter().map(|c| c.bound).collect();

        // Nonbasic start at the objective-greedy bound: this is the
        // hard-decision point, optimal for the box alone.
        let mut at_upper = vec![false; ncols];
        for i in 0..structural {
            at_upper[i] = problem.objective[i] < 0.0;
        }

        // Residual b - N x_N at the start point.
        let mut residual = b.clone();
        for i in 0..structural {
            if at_upper[i] {
                for &(r, v) in &cols[i] {
                    residual[r] -= v;
                }
            }
        }

        // Surplus basic where feasible, artificial where not.
        let mut basis = Vec::with_capacity(rows);
        let mut x_basic = Vec::with_capacity(rows);
        let mut binv = vec![0.0; rows * rows];
        let mut phase1_cost = vec![0.0; ncols];
        let artificial_start = ncols;
        for r in 0..rows {
            if residual[r] <= 0.0 {
                basis.push(structural + r);
                x_basic.push(-residual[r]);
                binv[r * rows + r] = -1.0;
            } else {
                let art = cols.len();
                cols.push(vec![(r, 1.0)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                cost.push(0.0);
                phase1_cost.push(1.0);
                at_upper.push(false);
                basis.push(art);
                x_basic.push(residual[r]);
                binv[r * rows + r] = 1.0;
            }
        }
        let mut basic_pos = vec![None; cols.len()];
        for (r, &col) in basis.iter().enumerate() {
            basic_pos[col] = Some(r);
        }

        Simplex {
            rows,
            structural,
            cols,
            lower,
            upper,
            cost,
            phase1_cost,
            b,
            basis,
            basic_pos,
            at_upper,
            x_basic,
            binv,
            artificial_start,
        }
    }

    fn has_artificials(&self) -> bool {
        self.cols.len() > self.artificial_start
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        if self.has_artificials() {
            let phase1 = std::mem::take(&mut self.phase1_cost);
            self.iterate(&phase1)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.x_basic)
                .filter(|&(&col, _)| col >= self.artificial_start)
                .map(|(_, &x)| x)
                .sum();
            if infeasibility > 1e-7 {
                return Ok(LpStatus::Infeasible);
            }
            self.evict_artificials()?;
            // Freeze artificials so phase 2 cannot re-enter them.
            for col in self.artificial_start..self.cols.len() {
                self.upper[col] = 0.0;
            }
        }
        let cost = std::mem::take(&mut self.cost);
        self.iterate(&cost)?;
        self.cost = cost;
        Ok(LpStatus::Optimal)
    }

    /// Pivots every artificial still basic (at value ~0) out of the basis.
    /// A replacement column always exists because `[A | -I]` has full row
    /// rank.
    fn evict_artificials(&mut self) -> Result<(), LpError> {
        for r in 0..self.rows {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let mut replaced = false;
            for col in 0..self.artificial_start {
                if self.basic_pos[col].is_some() {
                    continue;
                }
                let w = self.ftran(col);
                if w[r].abs() > 1e-7 {
                    let entering_value =
                        if self.at_upper[col] { self.upper[col] } else { self.lower[col] };
                    self.replace_basis(r, col, &w, entering_value);
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                return Err(LpError::Numerical(format!(
                    "cannot drive artificial out of basis row {r}"
                )));
            }
        }
        Ok(())
    }

    /// w = B^-1 a_col.
    fn ftran(&self, col: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.rows];
        for &(r, v) in &self.cols[col] {
            let row = &self.binv[..];
            for (wr, k) in w.iter_mut().zip(0..self.rows) {
                *wr += row[k * self.rows + r] * v;
            }
        }
        w
    }

    /// Basis change in row `r`: entering column `col` with direction `w`,
    /// taking value `value`.
    fn replace_basis(&mut self, r: usize, col: usize, w: &[f64], value: f64) {
        let leaving = self.basis[r];
        self.basic_pos[leaving] = None;
        self.basis[r] = col;
        self.basic_pos[col] = Some(r);
        self.x_basic[r] = value;

        let pivot = w[r];
        let (head, tail) = self.binv.split_at_mut(r * self.rows);
        let (pivot_row, rest) = tail.split_at_mut(self.rows);
        for x in pivot_row.iter_mut() {
            *x /= pivot;
        }
        for (rr, chunk) in head.chunks_exact_mut(self.rows).enumerate() {
            let factor = w[rr];
            if factor != 0.0 {
                for (x, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *x -= factor * p;
                }
            }
        }
        for (off, chunk) in rest.chunks_exact_mut(self.rows).enumerate() {
            let factor = w[r + 1 + off];
            if factor != 0.0 {
                for (x, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *x -= factor * p;
                }
            }
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.rows;
        if m == 0 {
            return Ok(());
        }
        // Gauss-Jordan inversion of the basis matrix.
        let mut aug = vec![0.0; m * 2 * m];
        for (r, &col) in self.basis.iter().enumerate() {
            for &(rr, v) in &self.cols[col] {
                aug[rr * 2 * m + r] = v;
            }
        }
        for r in 0..m {
            aug[r * 2 * m + m + r] = 1.0;
        }
        for c in 0..m {
            let pivot_row = (c..m)
                .max_by(|&a, &b| {
                    aug[a * 2 * m + c]
                        .abs()
                        .partial_cmp(&aug[b * 2 * m + c].abs())
                        .unwrap()
                })
                .unwrap();
            let pv = aug[pivot_row * 2 * m + c];
            if pv.abs() < 1e-12 {
                return Err(LpError::Numerical("singular basis during refactorization".into()));
            }
            if pivot_row != c {
                for k in 0..2 * m {
                    aug.swap(pivot_row * 2 * m + k, c * 2 * m + k);
                }
            }
            let inv = 1.0 / aug[c * 2 * m + c];
            for k in 0..2 * m {
                aug[c * 2 * m + k] *= inv;
            }
            for r in 0..m {
                if r != c {
                    let f = aug[r * 2 * m + c];
                    if f != 0.0 {
                        for k in 0..2 * m {
                            aug[r * 2 * m + k] -= f * aug[c * 2 * m + k];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            for k in 0..m {
                self.binv[r * m + k] = aug[r * 2 * m + m + k];
            }
        }
        // Basic values from the nonbasic bound point.
        let mut rhs = self.b.clone();
        for col in 0..self.cols.len() {
            if self.basic_pos[col].is_none() && self.at_upper[col] {
                let x = self.upper[col];
                if x != 0.0 {
                    for &(r, v) in &self.cols[col] {
                        rhs[r] -= v * x;
                    }
                }
            }
        }
        for r in 0..m {
            self.x_basic[r] =
                (0..m).map(|k| self.binv[r * m + k] * rhs[k]).sum::<f64>();
        }
        Ok(())
    }

    fn iterate(&mut self, cost: &[f64]) -> Result<(), LpError> {
        if self.rows == 0 {
            return Ok(());
        }
        let max_pivots = 10_000 + 200 * (self.rows + self.structural);
        let bland_after = 5 * (self.rows + self.structural);
        let mut degenerate_run = 0usize;
        let mut pivots = 0usize;

        loop {
            if pivots >= max_pivots {
                return Err(LpError::CyclingGuard { pivots });
            }
            if pivots > 0 && pivots % 256 == 0 {
                self.refactorize()?;
            }
            let bland = degenerate_run >= bland_after;

            // y = c_B^T B^-1.
            let mut y = vec![0.0; self.rows];
            for (r, &col) in self.basis.iter().enumerate() {
                let cb = cost[col];
                if cb != 0.0 {
                    for k in 0..self.rows {
                        y[k] += cb * self.binv[r * self.rows + k];
                    }
                }
            }

            // Pricing.
            let mut entering: Option<(usize, f64, bool)> = None; // (col, score, from_upper)
            for col in 0..self.cols.len() {
                if self.basic_pos[col].is_some() || self.upper[col] - self.lower[col] <= 0.0 {
                    continue;
                }
                let d = cost[col]
                    - self.cols[col].iter().map(|&(r, v)| y[r] * v).sum::<f64>();
                let (eligible, score) = if self.at_upper[col] {
                    (d > EPS_OPT, d)
                } else {
                    (d < -EPS_OPT, -d)
                };
                if eligible {
                    if bland {
                        entering = Some((col, score, self.at_upper[col]));
                        break;
                    }
                    if entering.as_ref().is_none_or(|&(_, best, _)| score > best) {
                        entering = Some((col, score, self.at_upper[col]));
                    }
                }
            }
            let Some((q, _, from_upper)) = entering else {
                return Ok(());
            };

            let w = self.ftran(q);
            let dir = if from_upper { -1.0 } else { 1.0 };

            // Ratio test: how far x_q can move before a basic variable hits
            // a bound, or x_q itself reaches its opposite bound.
            let t_bound = self.upper[q] - self.lower[q];
            let mut t_best = f64::INFINITY;
            let mut blocking: Option<usize> = None;
            for r in 0..self.rows {
                let delta = dir * w[r];
                let basic = self.basis[r];
                let t = if delta > EPS_PIVOT {
                    (self.x_basic[r] - self.lower[basic]) / delta
                } else if delta < -EPS_PIVOT {
                    let ub = self.upper[basic];
                    if ub.is_infinite() {
                        continue;
                    }
                    (ub - self.x_basic[r]) / -delta
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let better = match blocking {
                    None => t < t_best,
                    Some(cur) => {
                        if bland {
                            // Smallest ratio, then smallest basic column
                            // index: Bland's anti-cycling rule.
                            t < t_best - 1e-12
                                || (t < t_best + 1e-12 && self.basis[r] < self.basis[cur])
                        } else {
                            t < t_best - 1e-12
                                || (t < t_best + 1e-12 && w[r].abs() > w[cur].abs())
                        }
                    }
                };
                if better {
                    t_best = t;
                    blocking = Some(r);
                }
            }

            if t_bound <= t_best {
                if t_bound.is_infinite() {
                    return Err(LpError::Numerical("unbounded direction".into()));
                }
                // Bound flip: x_q crosses to its other bound.
                for r in 0..self.rows {
                    self.x_basic[r] -= dir * t_bound * w[r];
                }
                self.at_upper[q] = !self.at_upper[q];
                pivots += 1;
                degenerate_run = 0;
                continue;
            }

            let Some(r_star) = blocking else {
                return Err(LpError::Numerical("unbounded direction".into()));
            };
            let t = t_best;
            for r in 0..self.rows {
                if r != r_star {
                    self.x_basic[r] -= dir * t * w[r];
                }
            }
            let start = if from_upper { self.upper[q] } else { self.lower[q] };
            let leaving = self.basis[r_star];
            // The leaving variable settles on the bound it ran into.
            self.at_upper[leaving] = dir * w[r_star] < 0.0;
            self.replace_basis(r_star, q, &w, start + dir * t);

            pivots += 1;
            if t <= 1e-11 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    /// Values of the structural variables, clamped to the box.
    fn structural_point(&self) -> Vec<f64> {
        let mut point = vec![0.0; self.structural];
        for (i, p) in point.iter_mut().enumerate() {
            *p = match self.basic_pos[i] {
                Some(r) => self.x_basic[r].clamp(0.0, 1.0),
                None => {
                    if self.at_upper[i] {
                        self.upper[i]
                    } else {
                        self.lower[i]
                    }
                }
            };
        }
        point
    }
}
