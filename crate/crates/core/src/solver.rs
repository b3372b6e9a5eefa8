//! Dense bounded-variable simplex solver with full dual extraction.
//!
//! Solves problems of the form
//!
//! ```text
//!     minimize     c' x
//!     subject to   A_eq x  = b_eq     (duals y_eq, sign free)
//!                  A_ub x <= b_ub     (duals y_ub >= 0)
//!                  l <= x <= u        (duals z_lower, z_upper >= 0)
//! ```
//!
//! The dual sign convention follows the Lagrangian
//! `L = c'x - y_eq'(A_eq x - b_eq) + y_ub'(A_ub x - b_ub) - z_l'(x - l) + z_u'(x - u)`,
//! so `y_eq` is the marginal objective increase per unit of `b_eq`.
//!
//! Pivoting uses Bland's rule with lowest-index tie breaking, which makes
//! every solve deterministic and cycle-free. Problems here are desk scale
//! (a few hundred variables at most), so the basis inverse is kept dense.

use thiserror::Error;

/// Sentinel magnitude treated as infinity in bounds.
pub const INF: f64 = 1e30;

/// A bound is "infinite" when its magnitude reaches the sentinel threshold.
pub fn is_unbounded(v: f64) -> bool {
    v.abs() >= 1e18
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl Constraints {
    pub fn push(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Canonical linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub eq: Constraints,
    pub ub: Constraints,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Problem with all variables free and no constraints yet.
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            eq: Constraints::default(),
            ub: Constraints::default(),
            lower: vec![-INF; num_vars],
            upper: vec![INF; num_vars],
        }
    }

    fn check_well_formed(&self) -> Result<(), LpError> {
        let n = self.num_vars;
        let dims_ok = self.objective.len() == n
            && self.lower.len() == n
            && self.upper.len() == n
            && self.eq.rows.len() == self.eq.rhs.len()
            && self.ub.rows.len() == self.ub.rhs.len()
            && self.eq.rows.iter().all(|r| r.len() == n)
            && self.ub.rows.iter().all(|r| r.len() == n);
        if !dims_ok {
            return Err(LpError::MalformedProblem("dimension mismatch".into()));
        }
        let has_nan = self.objective.iter().any(|v| v.is_nan())
            || self.lower.iter().any(|v| v.is_nan())
            || self.upper.iter().any(|v| v.is_nan())
            || self.eq.rows.iter().flatten().any(|v| v.is_nan())
            || self.ub.rows.iter().flatten().any(|v| v.is_nan())
            || self.eq.rhs.iter().any(|v| v.is_nan())
            || self.ub.rhs.iter().any(|v| v.is_nan());
        if has_nan {
            return Err(LpError::MalformedProblem("NaN entry".into()));
        }
        for i in 0..n {
            if self.lower[i] > self.upper[i] {
                return Err(LpError::MalformedProblem(format!(
                    "lower_bounds[{i}] > upper_bounds[{i}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal/dual answer of [`solve_lp`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub y_eq: Vec<f64>,
    pub y_ub: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    /// Some optimal basic variable sits at a bound, or a nonbasic reduced
    /// cost vanishes: the optimal basis (hence the duals) may not be unique.
    pub degenerate: bool,
    /// A basic variable at a bound specifically: the reported duals may not
    /// be the unique optimal ones.
    pub duals_nonunique: bool,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, n: usize, m_eq: usize, m_ub: usize) -> Self {
        LpSolution {
            status,
            x: vec![0.0; n],
            objective_value: 0.0,
            y_eq: vec![0.0; m_eq],
            y_ub: vec![0.0; m_ub],
            z_lower: vec![0.0; n],
            z_upper: vec![0.0; n],
            degenerate: false,
            duals_nonunique: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("vertex enumeration limited to {max} variables, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

const FEAS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const DEGEN_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Free nonbasic variable pinned at zero until it enters the basis.
    FreeAtZero,
}

/// Working tableau: equality form `A x = b` over structurals, slacks and
/// artificials, with explicit basis inverse.
struct Simplex {
    m: usize,
    n_total: usize,
    cols: Vec<Vec<f64>>, // column-major, length m each
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<VarState>,
    x: Vec<f64>,
    basis: Vec<usize>,   // basis[row] = variable index
    binv: Vec<Vec<f64>>, // m x m
}

impl Simplex {
    fn value_at_bound(&self, j: usize) -> (f64, VarState) {
        let l = self.lower[j];
        let u = self.upper[j];
        if !is_unbounded(l) {
            (l, VarState::AtLower)
        } else if !is_unbounded(u) {
            (u, VarState::AtUpper)
        } else {
            (0.0, VarState::FreeAtZero)
        }
    }

    /// y = c_B' B^{-1}
    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (row, &bj) in self.basis.iter().enumerate() {
            let cb = self.cost[bj];
            if cb != 0.0 {
                for i in 0..self.m {
                    y[i] += cb * self.binv[row][i];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, y: &[f64], j: usize) -> f64 {
        let mut r = self.cost[j];
        for i in 0..self.m {
            r -= y[i] * self.cols[j][i];
        }
        r
    }

    /// d = B^{-1} A_j
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.m];
        for row in 0..self.m {
            let mut s = 0.0;
            for i in 0..self.m {
                s += self.binv[row][i] * self.cols[j][i];
            }
            d[row] = s;
        }
        d
    }

    fn basic_values(&mut self) {
        // x_B = B^{-1} (b - N x_N)
        let mut rhs = self.b.clone();
        for j in 0..self.n_total {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for i in 0..self.m {
                    rhs[i] -= self.cols[j][i] * self.x[j];
                }
            }
        }
        for row in 0..self.m {
            let mut s = 0.0;
            for i in 0..self.m {
                s += self.binv[row][i] * rhs[i];
            }
            self.x[self.basis[row]] = s;
        }
    }

    /// One phase of Bland-rule simplex over the given cost vector.
    /// Returns Ok(true) on optimality, Ok(false) on detected unboundedness.
    fn optimize(&mut self) -> Result<bool, LpError> {
        for _ in 0..MAX_ITERS {
            let y = self.duals();
            // Bland: entering variable is the lowest improving index.
            let mut entering: Option<(usize, f64)> = None; // (var, direction)
            for j in 0..self.n_total {
                match self.state[j] {
                    VarState::Basic => continue,
                    VarState::AtLower => {
                        if self.lower[j] == self.upper[j] {
                            continue;
                        }
                        let r = self.reduced_cost(&y, j);
                        if r < -COST_TOL {
                            entering = Some((j, 1.0));
                            break;
                        }
                    }
                    VarState::AtUpper => {
                        if self.lower[j] == self.upper[j] {
                            continue;
                        }
                        let r = self.reduced_cost(&y, j);
                        if r > COST_TOL {
                            entering = Some((j, -1.0));
                            break;
                        }
                    }
                    VarState::FreeAtZero => {
                        let r = self.reduced_cost(&y, j);
                        if r.abs() > COST_TOL {
                            entering = Some((j, if r < 0.0 { 1.0 } else { -1.0 }));
                            break;
                        }
                    }
                }
            }
            let Some((enter, dir)) = entering else {
                return Ok(true);
            };
            let d = self.ftran(enter);

            // Ratio test: how far can x_enter move in direction `dir`.
            let mut sigma = f64::INFINITY;
            // 0 = bound flip of entering var, 1 = basic leaves at lower, 2 at upper
            let mut leaving: Option<(usize, usize)> = None; // (row, kind 1|2)
            let range = self.upper[enter] - self.lower[enter];
            if !is_unbounded(self.lower[enter]) && !is_unbounded(self.upper[enter]) && range < sigma
            {
                sigma = range;
            }
            for row in 0..self.m {
                let delta = dir * d[row]; // basic value moves by -sigma*delta
                let bj = self.basis[row];
                let (ratio, kind) = if delta > PIVOT_TOL && !is_unbounded(self.lower[bj]) {
                    ((self.x[bj] - self.lower[bj]).max(0.0) / delta, 1)
                } else if delta < -PIVOT_TOL && !is_unbounded(self.upper[bj]) {
                    ((self.upper[bj] - self.x[bj]).max(0.0) / (-delta), 2)
                } else {
                    continue;
                };
                // Bland tie-break: among equal ratios keep the lowest variable index.
                let take = ratio < sigma - PIVOT_TOL
                    || (ratio < sigma + PIVOT_TOL
                        && leaving.map_or(true, |(r, _)| bj < self.basis[r]));
                if take {
                    sigma = sigma.min(ratio);
                    leaving = Some((row, kind));
                }
            }
            if sigma.is_infinite() {
                return Ok(false); // unbounded ray
            }

            match leaving {
                None => {
                    // Bound flip: entering variable runs to its opposite bound.
                    self.x[enter] += dir * sigma;
                    for row in 0..self.m {
                        let bj = self.basis[row];
                        self.x[bj] -= dir * sigma * d[row];
                    }
                    self.state[enter] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                Some((row, kind)) => {
                    let leave = self.basis[row];
                    self.x[enter] = match self.state[enter] {
                        VarState::AtLower => self.lower[enter] + sigma,
                        VarState::AtUpper => self.upper[enter] - sigma,
                        VarState::FreeAtZero => dir * sigma,
                        VarState::Basic => unreachable!(),
                    };
                    for r in 0..self.m {
                        if r != row {
                            let bj = self.basis[r];
                            self.x[bj] -= dir * sigma * d[r];
                        }
                    }
                    self.x[leave] = if kind == 1 {
                        self.lower[leave]
                    } else {
                        self.upper[leave]
                    };
                    self.state[leave] = if kind == 1 {
                        VarState::AtLower
                    } else {
                        VarState::AtUpper
                    };
                    self.state[enter] = VarState::Basic;
                    self.basis[row] = enter;
                    // Update B^{-1} by pivoting on d[row].
                    let piv = d[row];
                    for i in 0..self.m {
                        self.binv[row][i] /= piv;
                    }
                    let pivot_row = self.binv[row].clone();
                    for r in 0..self.m {
                        if r != row && d[r].abs() > 0.0 {
                            let factor = d[r];
                            for i in 0..self.m {
                                self.binv[r][i] -= factor * pivot_row[i];
                            }
                        }
                    }
                }
            }
        }
        Err(LpError::IterationLimit)
    }
}

/// Solve an LP, returning primal values, equality/inequality duals and bound
/// duals. Output is deterministic for identical input.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.check_well_formed()?;
    let n = problem.num_vars;
    let m_eq = problem.eq.len();
    let m_ub = problem.ub.len();
    let m = m_eq + m_ub;
    let n_slack = m_ub;
    let n_art = m;
    let n_total = n + n_slack + n_art;

    if m == 0 {
        return Ok(solve_unconstrained(problem));
    }

    // Row scales normalize tolerances for coefficients of O(1)..O(1e3).
    let mut row_scale = Vec::with_capacity(m);
    for row in problem.eq.rows.iter().chain(problem.ub.rows.iter()) {
        let norm = row.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        row_scale.push(norm);
    }

    let mut cols = vec![vec![0.0; m]; n_total];
    for (i, row) in problem.eq.rows.iter().enumerate() {
        for j in 0..n {
            cols[j][i] = row[j];
        }
    }
    for (k, row) in problem.ub.rows.iter().enumerate() {
        for j in 0..n {
            cols[j][m_eq + k] = row[j];
        }
        cols[n + k][m_eq + k] = 1.0; // slack
    }
    let mut b = Vec::with_capacity(m);
    b.extend_from_slice(&problem.eq.rhs);
    b.extend_from_slice(&problem.ub.rhs);

    let mut lower = vec![0.0; n_total];
    let mut upper = vec![INF; n_total];
    lower[..n].copy_from_slice(&problem.lower);
    upper[..n].copy_from_slice(&problem.upper);
    // slacks: [0, INF); artificials assigned below

    let mut spx = Simplex {
        m,
        n_total,
        cols,
        b: b.clone(),
        lower,
        upper,
        cost: vec![0.0; n_total],
        state: vec![VarState::AtLower; n_total],
        x: vec![0.0; n_total],
        basis: (n + n_slack..n_total).collect(),
        binv: (0..m)
            .map(|r| {
                let mut row = vec![0.0; m];
                row[r] = 1.0;
                row
            })
            .collect(),

    };

    // Nonbasic structurals and slacks start at a finite bound (or zero).
    for j in 0..n + n_slack {
        let (v, st) = spx.value_at_bound(j);
        spx.x[j] = v;
        spx.state[j] = st;
    }
    // Artificial columns absorb the residual of each row.
    let mut residual = b;
    for j in 0..n + n_slack {
        if spx.x[j] != 0.0 {
            for i in 0..m {
                residual[i] -= spx.cols[j][i] * spx.x[j];
            }
        }
    }
    for i in 0..m {
        let a = n + n_slack + i;
        let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
        spx.cols[a][i] = sign;
        spx.x[a] = residual[i].abs();
        spx.state[a] = VarState::Basic;
        spx.cost[a] = 1.0;
        // the initial basis matrix is diag(sign), which is its own inverse
        spx.binv[i][i] = sign;
    }

    // Phase 1: minimize sum of artificials.
    let optimal = spx.optimize()?;
    debug_assert!(optimal, "phase 1 objective is bounded below by zero");
    let infeas: f64 = (0..m).map(|i| spx.x[n + n_slack + i]).sum();
    let feas_scale: f64 = row_scale.iter().cloned().fold(1.0, f64::max);
    if infeas > FEAS_TOL * feas_scale * (m as f64).max(1.0) {
        return Ok(LpSolution::non_optimal(LpStatus::Infeasible, n, m_eq, m_ub));
    }

    // Pin artificials to zero; pivot basic ones out where possible.
    for i in 0..m {
        let a = n + n_slack + i;
        spx.cost[a] = 0.0;
        spx.lower[a] = 0.0;
        spx.upper[a] = 0.0;
        if spx.state[a] != VarState::Basic {
            spx.state[a] = VarState::AtLower;
            spx.x[a] = 0.0;
        }
    }
    for row in 0..m {
        let bj = spx.basis[row];
        if bj >= n + n_slack {
            // Replace with any non-artificial column having a usable pivot.
            let mut replaced = false;
            for j in 0..n + n_slack {
                if spx.state[j] == VarState::Basic {
                    continue;
                }
                let d = spx.ftran(j);
                if d[row].abs() > 1e-7 {
                    let piv = d[row];
                    let entering_val = spx.x[j];
                    spx.state[j] = VarState::Basic;
                    spx.state[bj] = VarState::AtLower;
                    spx.x[bj] = 0.0;
                    spx.basis[row] = j;
                    for i in 0..m {
                        spx.binv[row][i] /= piv;
                    }
                    let pivot_row = spx.binv[row].clone();
                    for r in 0..m {
                        if r != row {
                            let factor = d[r];
                            if factor != 0.0 {
                                for i in 0..m {
                                    spx.binv[r][i] -= factor * pivot_row[i];
                                }
                            }
                        }
                    }
                    let _ = entering_val;
                    spx.basic_values();
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                // Redundant row: artificial stays basic, pinned at zero.
            }
        }
    }

    // Phase 2 with the true objective.
    spx.cost[..n].copy_from_slice(&problem.objective);
    spx.basic_values();
    let optimal = spx.optimize()?;
    if !optimal {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded, n, m_eq, m_ub));
    }
    spx.basic_values();

    // Extract duals.
    let y = spx.duals();
    let y_eq = y[..m_eq].to_vec();
    let y_ub: Vec<f64> = (0..m_ub).map(|k| -y[m_eq + k]).collect();

    let mut z_lower = vec![0.0; n];
    let mut z_upper = vec![0.0; n];
    let mut degenerate = false;
    for j in 0..n {
        match spx.state[j] {
            VarState::Basic | VarState::FreeAtZero => {}
            VarState::AtLower | VarState::AtUpper => {
                let r = spx.reduced_cost(&y, j);
                if spx.lower[j] == spx.upper[j] {
                    z_lower[j] = r.max(0.0);
                    z_upper[j] = (-r).max(0.0);
                } else if spx.state[j] == VarState::AtLower {
                    z_lower[j] = r.max(0.0);
                } else {
                    z_upper[j] = (-r).max(0.0);
                }
                if r.abs() <= DEGEN_TOL {
                    degenerate = true;
                }
            }
        }
    }
    for j in n..n + n_slack {
        if spx.state[j] != VarState::Basic && spx.reduced_cost(&y, j).abs() <= DEGEN_TOL {
            degenerate = true;
        }
    }
    let mut duals_nonunique = false;
    for row in 0..m {
        let bj = spx.basis[row];
        if bj >= n + n_slack {
            continue;
        }
        let v = spx.x[bj];
        let near_lower = !is_unbounded(spx.lower[bj]) && (v - spx.lower[bj]).abs() <= DEGEN_TOL;
        let near_upper = !is_unbounded(spx.upper[bj]) && (spx.upper[bj] - v).abs() <= DEGEN_TOL;
        if near_lower || near_upper {
            degenerate = true;
            duals_nonunique = true;
        }
    }

    let x = spx.x[..n].to_vec();
    let objective_value: f64 = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
        y_eq,
        y_ub,
        z_lower,
        z_upper,
        degenerate,
        duals_nonunique,
    })
}

/// No constraint rows: each variable independently runs to its cheaper bound.
fn solve_unconstrained(problem: &LpProblem) -> LpSolution {
    let n = problem.num_vars;
    let mut sol = LpSolution::non_optimal(LpStatus::Optimal, n, 0, 0);
    for j in 0..n {
        let c = problem.objective[j];
        let (l, u) = (problem.lower[j], problem.upper[j]);
        if c > COST_TOL {
            if is_unbounded(l) {
                return LpSolution::non_optimal(LpStatus::Unbounded, n, 0, 0);
            }
            sol.x[j] = l;
            sol.z_lower[j] = c;
        } else if c < -COST_TOL {
            if is_unbounded(u) {
                return LpSolution::non_optimal(LpStatus::Unbounded, n, 0, 0);
            }
            sol.x[j] = u;
            sol.z_upper[j] = -c;
        } else {
            sol.x[j] = if !is_unbounded(l) {
                l
            } else if !is_unbounded(u) {
                u
            } else {
                0.0
            };
            sol.degenerate = true;
        }
    }
    sol.objective_value = problem
        .objective
        .iter()
        .zip(&sol.x)
        .map(|(c, v)| c * v)
        .sum();
    sol
}

/// One violated optimality condition, with its magnitude.
#[derive(Debug, Clone)]
pub struct KktViolation {
    pub condition: KktCondition,
    pub index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktCondition {
    PrimalFeasEq,
    PrimalFeasUb,
    PrimalFeasBound,
    DualFeas,
    Stationarity,
    ComplementarySlackUb,
    ComplementarySlackBound,
}

/// Violations of stationarity, feasibility and complementary slackness at
/// tolerance `tol`. Empty iff `(problem, solution)` self-certifies optimality.
pub type KktReport = Vec<KktViolation>;

pub fn check_kkt(problem: &LpProblem, solution: &LpSolution, tol: f64) -> KktReport {
    let mut report = Vec::new();
    let n = problem.num_vars;
    let x = &solution.x;

    for (i, (row, &rhs)) in problem.eq.rows.iter().zip(&problem.eq.rhs).enumerate() {
        let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        let viol = (lhs - rhs).abs() / scale;
        if viol > tol {
            report.push(KktViolation {
                condition: KktCondition::PrimalFeasEq,
                index: i,
                magnitude: viol,
            });
        }
    }
    for (k, (row, &rhs)) in problem.ub.rows.iter().zip(&problem.ub.rhs).enumerate() {
        let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = rhs - lhs;
        if slack < -tol * scale {
            report.push(KktViolation {
                condition: KktCondition::PrimalFeasUb,
                index: k,
                magnitude: -slack / scale,
            });
        }
        let y = solution.y_ub[k];
        if y < -tol {
            report.push(KktViolation {
                condition: KktCondition::DualFeas,
                index: n + k,
                magnitude: -y,
            });
        }
        let comp = y * slack;
        if comp.abs() > tol * scale.max(y.abs()).max(1.0) {
            report.push(KktViolation {
                condition: KktCondition::ComplementarySlackUb,
                index: k,
                magnitude: comp.abs(),
            });
        }
    }
    for j in 0..n {
        if x[j] < problem.lower[j] - tol || x[j] > problem.upper[j] + tol {
            let over = (problem.lower[j] - x[j]).max(x[j] - problem.upper[j]);
            report.push(KktViolation {
                condition: KktCondition::PrimalFeasBound,
                index: j,
                magnitude: over,
            });
        }
        if solution.z_lower[j] < -tol {
            report.push(KktViolation {
                condition: KktCondition::DualFeas,
                index: j,
                magnitude: -solution.z_lower[j],
            });
        }
        if solution.z_upper[j] < -tol {
            report.push(KktViolation {
                condition: KktCondition::DualFeas,
                index: j,
                magnitude: -solution.z_upper[j],
            });
        }
        if !is_unbounded(problem.lower[j]) {
            let comp = solution.z_lower[j] * (x[j] - problem.lower[j]);
            if comp.abs() > tol * solution.z_lower[j].abs().max(1.0) {
                report.push(KktViolation {
                    condition: KktCondition::ComplementarySlackBound,
                    index: j,
                    magnitude: comp.abs(),
                });
            }
        }
        if !is_unbounded(problem.upper[j]) {
            let comp = solution.z_upper[j] * (problem.upper[j] - x[j]);
            if comp.abs() > tol * solution.z_upper[j].abs().max(1.0) {
                report.push(KktViolation {
                    condition: KktCondition::ComplementarySlackBound,
                    index: j,
                    magnitude: comp.abs(),
                });
            }
        }
        // Stationarity: c - A_eq' y_eq + A_ub' y_ub - z_l + z_u = 0.
        let mut g = problem.objective[j];
        for (row, &ye) in problem.eq.rows.iter().zip(&solution.y_eq) {
            g -= row[j] * ye;
        }
        for (row, &yu) in problem.ub.rows.iter().zip(&solution.y_ub) {
            g += row[j] * yu;
        }
        g -= solution.z_lower[j];
        g += solution.z_upper[j];
        if g.abs() > tol * problem.objective[j].abs().max(1.0) {
            report.push(KktViolation {
                condition: KktCondition::Stationarity,
                index: j,
                magnitude: g.abs(),
            });
        }
    }
    report
}

/// Duality gap `|c'x - dual objective|`; zero at optimality.
pub fn duality_gap(problem: &LpProblem, solution: &LpSolution) -> f64 {
    let mut dual = 0.0;
    for (ye, &rhs) in solution.y_eq.iter().zip(&problem.eq.rhs) {
        dual += ye * rhs;
    }
    for (yu, &rhs) in solution.y_ub.iter().zip(&problem.ub.rhs) {
        dual -= yu * rhs;
    }
    for j in 0..problem.num_vars {
        if !is_unbounded(problem.lower[j]) {
            dual += solution.z_lower[j] * problem.lower[j];
        }
        if !is_unbounded(problem.upper[j]) {
            dual -= solution.z_upper[j] * problem.upper[j];
        }
    }
    (solution.objective_value - dual).abs()
}

/// Outcome of brute-force vertex enumeration.
#[derive(Debug, Clone)]
pub enum VertexEnumeration {
    /// All feasible basic solutions, as `(x, objective)` pairs.
    Vertices(Vec<(Vec<f64>, f64)>),
    /// A cost-improving ray escapes every finite bound.
    Unbounded,
}

const VERTEX_MAX_VARS: usize = 6;
const VERTEX_BIG: f64 = 1e9;

/// Exhaustive active-set enumeration for tiny LPs; the independent oracle
/// for [`solve_lp`]. Infinite bounds are boxed at a large magnitude; a
/// minimizer on the artificial box is reported as [`VertexEnumeration::Unbounded`].
pub fn enumerate_vertices(problem: &LpProblem) -> Result<VertexEnumeration, LpError> {
    problem.check_well_formed()?;
    let n = problem.num_vars;
    if n > VERTEX_MAX_VARS {
        return Err(LpError::TooLarge {
            max: VERTEX_MAX_VARS,
            got: n,
        });
    }
    let mut boxed_lower = problem.lower.clone();
    let mut boxed_upper = problem.upper.clone();
    let mut boxed = vec![false; 2 * n];
    for j in 0..n {
        if is_unbounded(boxed_lower[j]) {
            boxed_lower[j] = -VERTEX_BIG;
            boxed[2 * j] = true;
        }
        if is_unbounded(boxed_upper[j]) {
            boxed_upper[j] = VERTEX_BIG;
            boxed[2 * j + 1] = true;
        }
    }

    // Candidate active constraints: every ub row, every lower and upper bound.
    // Equality rows are always active.
    #[derive(Clone, Copy)]
    enum Active {
        Ub(usize),
        Lower(usize),
        Upper(usize),
    }
    let mut candidates = Vec::new();
    for k in 0..problem.ub.len() {
        candidates.push(Active::Ub(k));
    }
    for j in 0..n {
        candidates.push(Active::Lower(j));
        candidates.push(Active::Upper(j));
    }

    let m_eq = problem.eq.len();
    let need = n.saturating_sub(m_eq.min(n));
    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut hit_box_at_min = false;
    let mut best = f64::INFINITY;

    let mut choose = vec![0usize; need];
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    // Iterative k-combination enumeration over `candidates`.
    let total = candidates.len();
    let emit = |sel: &[usize],
                    vertices: &mut Vec<(Vec<f64>, f64)>,
                    best: &mut f64,
                    hit_box: &mut bool| {
        // Assemble square system: eq rows + selected active constraints.
        let mut a = Vec::with_capacity(n);
        let mut rhs = Vec::with_capacity(n);
        for (row, &r) in problem.eq.rows.iter().zip(&problem.eq.rhs) {
            a.push(row.clone());
            rhs.push(r);
        }
        let mut on_box = false;
        for &ci in sel {
            match candidates[ci] {
                Active::Ub(k) => {
                    a.push(problem.ub.rows[k].clone());
                    rhs.push(problem.ub.rhs[k]);
                }
                Active::Lower(j) => {
                    let mut row = vec![0.0; n];
                    row[j] = 1.0;
                    a.push(row);
                    rhs.push(boxed_lower[j]);
                    if boxed[2 * j] {
                        on_box = true;
                    }
                }
                Active::Upper(j) => {
                    let mut row = vec![0.0; n];
                    row[j] = 1.0;
                    a.push(row);
                    rhs.push(boxed_upper[j]);
                    if boxed[2 * j + 1] {
                        on_box = true;
                    }
                }
            }
        }
        if a.len() != n {
            return;
        }
        let Some(x) = solve_square(&a, &rhs) else {
            return;
        };
        // Feasibility check against the boxed problem.
        let feas_tol = 1e-7;
        for j in 0..n {
            if x[j] < boxed_lower[j] - feas_tol * boxed_lower[j].abs().max(1.0)
                || x[j] > boxed_upper[j] + feas_tol * boxed_upper[j].abs().max(1.0)
            {
                return;
            }
        }
        for (row, &r) in problem.ub.rows.iter().zip(&problem.ub.rhs) {
            let lhs: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            let scale = row.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if lhs > r + feas_tol * scale.max(r.abs()) {
                return;
            }
        }
        for (row, &r) in problem.eq.rows.iter().zip(&problem.eq.rhs) {
            let lhs: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            let scale = row.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if (lhs - r).abs() > feas_tol * scale.max(r.abs()) {
                return;
            }
        }
        let obj: f64 = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        if obj < *best - 1e-9 {
            *best = obj;
            *hit_box = on_box;
        } else if obj <= *best + 1e-9 && !on_box {
            // A non-box vertex attains the minimum too.
            *hit_box = *hit_box && on_box;
        }
        vertices.push((x, obj));
    };

    if need == 0 {
        emit(&[], &mut vertices, &mut best, &mut hit_box_at_min);
    } else {
        // Standard combinations loop.
        stack.clear();
        let mut idx = 0usize;
        let mut pos = 0usize;
        loop {
            if pos == need {
                emit(&choose, &mut vertices, &mut best, &mut hit_box_at_min);
                // backtrack
                loop {
                    if pos == 0 {
                        idx = total; // done
                        break;
                    }
                    pos -= 1;
                    idx = choose[pos] + 1;
                    if idx + (need - pos - 1) < total {
                        break;
                    }
                }
                if pos == 0 && idx >= total {
                    break;
                }
            } else if idx + (need - pos - 1) < total {
                choose[pos] = idx;
                pos += 1;
                idx += 1;
            } else if pos == 0 {
                break;
            } else {
                pos -= 1;
                idx = choose[pos] + 1;
            }
        }
    }

    if vertices.is_empty() {
        return Ok(VertexEnumeration::Vertices(vertices));
    }
    if hit_box_at_min {
        return Ok(VertexEnumeration::Unbounded);
    }
    Ok(VertexEnumeration::Vertices(vertices))
}

/// Gaussian elimination with partial pivoting; None when singular.
fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &r)| {
            let mut v = row.clone();
            v.push(r);
            v
        })
        .collect();
    for col in 0..n {
        let (piv_row, piv_val) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
        if piv_val < 1e-11 {
            return None;
        }
        m.swap(col, piv_row);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var_problem() -> LpProblem {
        // minimize 2x + 3y  s.t.  x + y = 10,  0 <= x,y <= 6
        let mut p = LpProblem::new(2);
        p.objective = vec![2.0, 3.0];
        p.eq.push(vec![1.0, 1.0], 10.0);
        p.lower = vec![0.0, 0.0];
        p.upper = vec![6.0, 6.0];
        p
    }

    #[test]
    fn single_equality_forces_solution() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.eq.push(vec![1.0], 5.0);
        p.lower = vec![0.0];
        p.upper = vec![10.0];
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 5.0).abs() < 1e-12);
        assert!((s.objective_value - 5.0).abs() < 1e-12);
        assert!((s.y_eq[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_var_vertex_and_duals() {
        // Hand KKT: x at its upper bound 6, y = 4 basic, y_eq = 3,
        // z_upper_x = 3 - 2 = 1.
        let p = two_var_problem();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 6.0).abs() < 1e-9);
        assert!((s.x[1] - 4.0).abs() < 1e-9);
        assert!((s.objective_value - 24.0).abs() < 1e-9);
        assert!((s.y_eq[0] - 3.0).abs() < 1e-9);
        assert!((s.z_upper[0] - 1.0).abs() < 1e-9);
        assert!(check_kkt(&p, &s, 1e-8).is_empty());
        assert!(duality_gap(&p, &s) < 1e-9);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.eq.push(vec![1.0], 1.0);
        p.eq.push(vec![1.0], 2.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_below_is_detected() {
        let mut p = LpProblem::new(1);
        p.objective = vec![-1.0];
        p.lower = vec![0.0];
        p.ub.push(vec![-1.0], 0.0); // -x <= 0, no upper bound
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn kkt_flags_perturbed_primal() {
        let p = two_var_problem();
        let mut s = solve_lp(&p).unwrap();
        s.x[0] += 0.1;
        let report = check_kkt(&p, &s, 1e-8);
        assert!(report
            .iter()
            .any(|v| v.condition == KktCondition::PrimalFeasEq && (v.magnitude - 0.1).abs() < 1e-9));
    }

    #[test]
    fn kkt_flags_perturbed_dual() {
        // Hand KKT algebra: with y_eq = 2.9, stationarity on y misses by 0.1.
        let p = two_var_problem();
        let mut s = solve_lp(&p).unwrap();
        s.y_eq[0] = 2.9;
        s.z_upper[0] = 0.9; // keep x's stationarity consistent
        let report = check_kkt(&p, &s, 1e-8);
        let stat: Vec<_> = report
            .iter()
            .filter(|v| v.condition == KktCondition::Stationarity)
            .collect();
        assert_eq!(stat.len(), 1);
        assert_eq!(stat[0].index, 1);
        assert!((stat[0].magnitude - 0.1).abs() < 1e-9);
    }

    #[test]
    fn vertex_enumeration_finds_optimum() {
        let p = two_var_problem();
        let VertexEnumeration::Vertices(vs) = enumerate_vertices(&p).unwrap() else {
            panic!("bounded problem");
        };
        let min = vs
            .iter()
            .map(|(_, o)| *o)
            .fold(f64::INFINITY, f64::min);
        assert!((min - 24.0).abs() < 1e-9);
        assert!(vs
            .iter()
            .any(|(x, o)| (x[0] - 6.0).abs() < 1e-9 && (x[1] - 4.0).abs() < 1e-9
                && (o - 24.0).abs() < 1e-9));
    }

    #[test]
    fn vertex_enumeration_single_point() {
        let mut p = LpProblem::new(1);
        p.objective = vec![1.0];
        p.eq.push(vec![1.0], 5.0);
        let VertexEnumeration::Vertices(vs) = enumerate_vertices(&p).unwrap() else {
            panic!("bounded");
        };
        assert!(vs.iter().all(|(x, _)| (x[0] - 5.0).abs() < 1e-9));
    }

    #[test]
    fn vertex_enumeration_reports_unbounded_ray() {
        let mut p = LpProblem::new(1);
        p.objective = vec![-1.0];
        p.lower = vec![0.0]; // no upper bound
        assert!(matches!(
            enumerate_vertices(&p).unwrap(),
            VertexEnumeration::Unbounded
        ));
    }

    #[test]
    fn vertex_enumeration_rejects_large_problems() {
        let p = LpProblem::new(7);
        assert!(matches!(
            enumerate_vertices(&p),
            Err(LpError::TooLarge { max: 6, got: 7 })
        ));
    }

    #[test]
    fn malformed_problems_are_rejected() {
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0];
        assert!(matches!(solve_lp(&p), Err(LpError::MalformedProblem(_))));
        let mut p = LpProblem::new(1);
        p.lower = vec![2.0];
        p.upper = vec![1.0];
        assert!(matches!(solve_lp(&p), Err(LpError::MalformedProblem(_))));
        let mut p = LpProblem::new(1);
        p.objective = vec![f64::NAN];
        assert!(matches!(solve_lp(&p), Err(LpError::MalformedProblem(_))));
    }

    #[test]
    fn resolving_is_bit_identical() {
        let p = two_var_problem();
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y_eq, b.y_eq);
        assert_eq!(a.z_lower, b.z_lower);
        assert_eq!(a.z_upper, b.z_upper);
    }

    #[test]
    fn free_variables_are_handled() {
        // minimize x + 2y s.t. x + y = 3, y free, 0 <= x <= 1
        let mut p = LpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        p.eq.push(vec![1.0, 1.0], 3.0);
        p.lower = vec![0.0, -INF];
        p.upper = vec![1.0, INF];
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 2.0).abs() < 1e-9);
        assert!((s.y_eq[0] - 2.0).abs() < 1e-9);
        assert!(check_kkt(&p, &s, 1e-7).is_empty());
    }
}
