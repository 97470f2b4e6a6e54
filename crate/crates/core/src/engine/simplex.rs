//! Bounded revised simplex with an explicit dense basis inverse.
//!
//! Every row `i` becomes `sum_j a_ij x_j - s_i = 0` with the logical `s_i`
//! bounded by the row range, so the basis always has one column per row and
//! the all-logical basis is a valid start. The inverse is updated with
//! sparse-aware rank-one updates and rebuilt periodically from a factorization
//! of the structural block only.

use thiserror::Error;

use super::model::{LinearModel, ModelError, Row, Sense};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 100;
const STALL_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable held at zero.
    Zero,
}

/// Basis snapshot: one status per column (structurals, then logicals) and
/// the column held at each basis position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    status: Vec<Status>,
    head: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural values.
    pub x: Vec<f64>,
    /// Row duals; nonnegative on active `>=` rows.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

/// Reusable simplex state: rows and bounds may change between solves and the
/// last basis is kept as the warm start.
#[derive(Debug, Clone)]
pub struct LpSolver {
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    status: Vec<Status>,
    head: Vec<usize>,
    binv: Vec<Vec<f64>>,
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    since_refactor: usize,
    primal_dirty: bool,
    basis_dirty: bool,
    iterations: usize,
    last_status: Option<LpStatus>,
}

impl LpSolver {
    pub fn new(model: &LinearModel) -> Result<Self, LpError> {
        model.validate()?;
        let n = model.var_count();
        let mut solver = LpSolver {
            n,
            cols: vec![Vec::new(); n],
            rows: Vec::new(),
            cost: model.vars.iter().map(|v| v.cost).collect(),
            lo: model.vars.iter().map(|v| v.lower).collect(),
            hi: model.vars.iter().map(|v| v.upper).collect(),
            status: Vec::new(),
            head: Vec::new(),
            binv: Vec::new(),
            x: vec![0.0; n],
            y: Vec::new(),
            d: vec![0.0; n],
            since_refactor: 0,
            primal_dirty: true,
            basis_dirty: false,
            iterations: 0,
            last_status: None,
        };
        solver.status = (0..n).map(|j| solver.resting_status(j, None)).collect();
        for row in &model.rows {
            solver.push_row(row);
        }
        Ok(solver)
    }

    pub fn var_count(&self) -> usize {
        self.n
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Total simplex iterations over the solver's lifetime.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        debug_assert!(j < self.n);
        if self.lo[j] == lower && self.hi[j] == upper {
            return;
        }
        self.lo[j] = lower;
        self.hi[j] = upper;
        if self.status[j] != Status::Basic {
            self.status[j] = self.resting_status(j, Some(self.status[j]));
            self.primal_dirty = true;
        }
        self.last_status = None;
    }

    pub fn set_cost(&mut self, j: usize, cost: f64) {
        self.cost[j] = cost;
        self.last_status = None;
    }

    /// Appends a row with its logical basic, which keeps the current basis
    /// dual feasible.
    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        let row = Row { coefs, sense, rhs };
        self.push_row(&row);
        self.last_status = None;
        self.rows.len() - 1
    }

    fn push_row(&mut self, row: &Row) {
        let i = self.rows.len();
        let (lo, hi) = row.range();
        let mut coefs = row.coefs.clone();
        coefs.sort_by_key(|&(j, _)| j);
        coefs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        coefs.retain(|&(_, a)| a != 0.0);
        for &(j, a) in &coefs {
            self.cols[j].push((i, a));
        }
        // inverse of [[B, 0], [a_B, -1]] is [[B^-1, 0], [a_B B^-1, -1]]
        let mut new_row = vec![0.0; i + 1];
        if !self.basis_dirty {
            for &(j, a) in &coefs {
                if self.status[j] == Status::Basic {
                    let p = self.head.iter().position(|&c| c == j).unwrap();
                    for (t, v) in self.binv[p].iter().enumerate() {
                        new_row[t] += a * v;
                    }
                }
            }
        }
        new_row[i] = -1.0;
        for r in &mut self.binv {
            r.push(0.0);
        }
        self.binv.push(new_row);
        self.rows.push(coefs);
        self.lo.push(lo);
        self.hi.push(hi);
        self.cost.push(0.0);
        self.status.push(Status::Basic);
        self.head.push(self.n + i);
        let activity = self.rows[i].iter().map(|&(j, a)| a * self.x[j]).sum();
        self.x.push(activity);
        self.y.push(0.0);
        self.d.push(0.0);
    }

    pub fn basis(&self) -> Basis {
        Basis {
            status: self.status.clone(),
            head: self.head.clone(),
        }
    }

    /// Restores a snapshot; rows added after it keep their logical basic.
    pub fn set_basis(&mut self, basis: &Basis) {
        let m = self.rows.len();
        let mut status = basis.status.clone();
        let mut head = basis.head.clone();
        for i in head.len()..m {
            status.push(Status::Basic);
            head.push(self.n + i);
        }
        if status == self.status && head == self.head {
            return;
        }
        for (j, s) in status.iter_mut().enumerate() {
            if *s != Status::Basic {
                *s = self.resting_status(j, Some(*s));
            }
        }
        self.status = status;
        self.head = head;
        self.basis_dirty = true;
        self.primal_dirty = true;
        self.last_status = None;
    }

    pub fn x(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn duals(&self) -> &[f64] {
        &self.y
    }

    pub fn objective(&self) -> f64 {
        self.cost[..self.n]
            .iter()
            .zip(&self.x)
            .map(|(c, x)| c * x)
            .sum()
    }

    pub fn solution(&self) -> LpSolution {
        let status = self.last_status.unwrap_or(LpStatus::Infeasible);
        let objective = match status {
            LpStatus::Optimal => self.objective(),
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        };
        LpSolution {
            status,
            x: self.x().to_vec(),
            duals: self.y.clone(),
            reduced_costs: self.d[..self.n].to_vec(),
            objective,
        }
    }

    fn resting_status(&self, j: usize, prefer: Option<Status>) -> Status {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        match prefer {
            Some(Status::Upper) if hi.is_finite() && lo != hi => Status::Upper,
            _ if lo.is_finite() => Status::Lower,
            _ if hi.is_finite() => Status::Upper,
            _ => Status::Zero,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            Status::Lower => self.lo[j],
            Status::Upper => self.hi[j],
            Status::Zero | Status::Basic => 0.0,
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.hi[j]
    }

    fn column_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * v[i]).sum()
        } else {
            -v[j - self.n]
        }
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            self.binv
                .iter()
                .map(|row| self.cols[j].iter().map(|&(i, a)| a * row[i]).sum())
                .collect()
        } else {
            let i = j - self.n;
            self.binv.iter().map(|row| -row[i]).collect()
        }
    }

    fn compute_primal(&mut self) {
        let m = self.rows.len();
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] == Status::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v != 0.0 {
                if j < self.n {
                    for &(i, a) in &self.cols[j] {
                        rhs[i] -= a * v;
                    }
                } else {
                    rhs[j - self.n] += v;
                }
            }
        }
        for p in 0..m {
            let v = self.binv[p].iter().zip(&rhs).map(|(b, r)| b * r).sum();
            self.x[self.head[p]] = v;
        }
        self.primal_dirty = false;
    }

    fn compute_duals(&mut self) {
        let m = self.rows.len();
        let mut y = vec![0.0; m];
        for p in 0..m {
            let c = self.cost[self.head[p]];
            if c != 0.0 {
                for (yi, b) in y.iter_mut().zip(&self.binv[p]) {
                    *yi += c * b;
                }
            }
        }
        for j in 0..self.n + m {
            self.d[j] = if self.status[j] == Status::Basic {
                0.0
            } else {
                self.cost[j] - self.column_dot(j, &y)
            };
        }
        self.y = y;
    }

    /// Rebuilds `B^-1`. With `K` the basic structurals and `C` the rows whose
    /// logical is nonbasic, `B^-1 = [[M^-1, 0], [A_RK M^-1, -I]]` for
    /// `M = A[C, K]`. Dependent structural columns are swapped for logicals.
    fn reinvert(&mut self) {
        let m = self.rows.len();
        loop {
            let structural: Vec<usize> = (0..m).filter(|&p| self.head[p] < self.n).collect();
            let mut logical_basic = vec![false; m];
            for &c in &self.head {
                if c >= self.n {
                    logical_basic[c - self.n] = true;
                }
            }
            let crows: Vec<usize> = (0..m).filter(|&i| !logical_basic[i]).collect();
            let k = structural.len();
            debug_assert_eq!(k, crows.len());
            let mut row_slot = vec![usize::MAX; m];
            for (t, &i) in crows.iter().enumerate() {
                row_slot[i] = t;
            }
            let mut mat = vec![vec![0.0; k]; k];
            for (c, &p) in structural.iter().enumerate() {
                for &(i, a) in &self.cols[self.head[p]] {
                    if row_slot[i] != usize::MAX {
                        mat[row_slot[i]][c] = a;
                    }
                }
            }
            match invert_dense(mat) {
                Ok(inv) => {
                    // inv is M^-1 with rows by structural index, columns by C slot
                    let mut col_of = vec![usize::MAX; self.n];
                    for (c, &p) in structural.iter().enumerate() {
                        col_of[self.head[p]] = c;
                    }
                    let mut binv = vec![vec![0.0; m]; m];
                    for p in 0..m {
                        let col = self.head[p];
                        if col < self.n {
                            let c = col_of[col];
                            for (t, &i) in crows.iter().enumerate() {
                                binv[p][i] = inv[c][t];
                            }
                        } else {
                            let i = col - self.n;
                            for &(j, a) in &self.rows[i] {
                                let c = col_of[j];
                                if self.status[j] == Status::Basic && c != usize::MAX {
                                    for (t, &r) in crows.iter().enumerate() {
                                        binv[p][r] += a * inv[c][t];
                                    }
                                }
                            }
                            binv[p][i] = -1.0;
                        }
                    }
                    self.binv = binv;
                    break;
                }
                Err((dependent, free_rows)) => {
                    for (c, t) in dependent.into_iter().zip(free_rows) {
                        let p = structural[c];
                        let j = self.head[p];
                        let logical = self.n + crows[t];
                        self.status[j] = self.resting_status(j, None);
                        self.status[logical] = Status::Basic;
                        self.head[p] = logical;
                    }
                    self.primal_dirty = true;
                }
            }
        }
        self.since_refactor = 0;
        self.basis_dirty = false;
    }

    fn refresh(&mut self) {
        if self.basis_dirty || self.since_refactor > 0 {
            self.reinvert();
        }
        self.compute_primal();
        self.compute_duals();
    }

    fn pivot(&mut self, r: usize, q: usize, dq: &[f64]) {
        let piv = dq[r];
        let row_r: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
        let nz: Vec<usize> = (0..row_r.len()).filter(|&i| row_r[i] != 0.0).collect();
        for (p, &f) in dq.iter().enumerate() {
            if p == r || f == 0.0 {
                continue;
            }
            let row = &mut self.binv[p];
            for &i in &nz {
                row[i] -= f * row_r[i];
            }
        }
        self.binv[r] = row_r;
        self.head[r] = q;
        self.status[q] = Status::Basic;
        self.since_refactor += 1;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.lo[j] - v).max(v - self.hi[j]).max(0.0)
    }

    fn primal_feasible(&self) -> bool {
        self.head
            .iter()
            .all(|&j| self.infeasibility(j) <= PRIMAL_TOL)
    }

    fn dual_infeasibility(&self, j: usize) -> f64 {
        if self.is_fixed(j) {
            return 0.0;
        }
        match self.status[j] {
            Status::Basic => 0.0,
            Status::Lower => (-self.d[j]).max(0.0),
            Status::Upper => self.d[j].max(0.0),
            Status::Zero => self.d[j].abs(),
        }
    }

    /// Flips boxed variables to the bound matching their reduced cost.
    /// Returns false if some other variable is dual infeasible.
    fn make_dual_feasible(&mut self) -> bool {
        let mut flipped = false;
        for j in 0..self.status.len() {
            if self.dual_infeasibility(j) <= DUAL_TOL {
                continue;
            }
            let boxed = self.lo[j].is_finite() && self.hi[j].is_finite();
            if !boxed {
                return false;
            }
            self.status[j] = if self.d[j] < 0.0 {
                Status::Upper
            } else {
                Status::Lower
            };
            flipped = true;
        }
        if flipped {
            self.compute_primal();
        }
        true
    }

    fn iteration_budget(&self) -> usize {
        20_000 + 50 * (self.n + self.rows.len())
    }

    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        if self.basis_dirty || self.binv.len() != self.rows.len() {
            self.reinvert();
            self.primal_dirty = true;
        }
        if self.primal_dirty {
            self.compute_primal();
        }
        self.compute_duals();
        let budget = self.iterations + self.iteration_budget();
        let mut verified = 0;
        let status = loop {
            let outcome = if !self.primal_feasible() && self.make_dual_feasible() {
                self.dual_simplex(budget)?
            } else {
                self.primal_simplex(budget)?
            };
            if outcome != LpStatus::Optimal || verified >= 3 {
                break outcome;
            }
            self.refresh();
            let clean = self.primal_feasible()
                && (0..self.status.len()).all(|j| self.dual_infeasibility(j) <= DUAL_TOL * 10.0);
            if clean {
                break outcome;
            }
            verified += 1;
        };
        self.last_status = Some(status);
        Ok(status)
    }

    fn dual_simplex(&mut self, budget: usize) -> Result<LpStatus, LpError> {
        let mut stall = 0;
        let mut best = f64::NEG_INFINITY;
        loop {
            if self.iterations >= budget {
                return Err(LpError::IterationLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refresh();
                if !self.make_dual_feasible() {
                    return self.primal_simplex(budget);
                }
            }
            let bland = stall > STALL_LIMIT;

            // leaving row: largest bound violation
            let mut leave: Option<(usize, f64)> = None;
            for (p, &j) in self.head.iter().enumerate() {
                let inf = self.infeasibility(j);
                if inf <= PRIMAL_TOL {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((bp, bi)) => {
                        if bland {
                            j < self.head[bp]
                        } else {
                            inf > bi
                        }
                    }
                };
                if better {
                    leave = Some((p, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let jr = self.head[r];
            let to_lower = self.x[jr] < self.lo[jr];
            let s = if to_lower { -1.0 } else { 1.0 };
            let rho = self.binv[r].clone();

            let total = self.status.len();
            let mut alpha = vec![0.0; total];
            let mut cands = Vec::new();
            for j in 0..total {
                if self.status[j] == Status::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = self.column_dot(j, &rho);
                alpha[j] = a;
                let abar = s * a;
                let eligible = match self.status[j] {
                    Status::Lower => abar > PIVOT_TOL,
                    Status::Upper => abar < -PIVOT_TOL,
                    Status::Zero => abar.abs() > PIVOT_TOL,
                    Status::Basic => false,
                };
                if eligible {
                    cands.push(j);
                }
            }
            if cands.is_empty() {
                return Ok(LpStatus::Infeasible);
            }
            // Harris two-pass ratio test on the reduced costs
            let ratio = |j: usize, slack: f64| -> f64 {
                let abar = s * alpha[j];
                match self.status[j] {
                    Status::Lower => (self.d[j] + slack) / abar,
                    Status::Upper => (self.d[j] - slack) / abar,
                    _ => (self.d[j].abs() + slack) / abar.abs(),
                }
            };
            let q = if bland {
                let t_min = cands.iter().map(|&j| ratio(j, 0.0)).fold(f64::INFINITY, f64::min);
                *cands
                    .iter()
                    .filter(|&&j| ratio(j, 0.0) <= t_min + 1e-12)
                    .min()
                    .unwrap()
            } else {
                let bound = cands
                    .iter()
                    .map(|&j| ratio(j, DUAL_TOL))
                    .fold(f64::INFINITY, f64::min);
                let mut pick = None;
                for &j in &cands {
                    if ratio(j, 0.0) <= bound {
                        let mag = alpha[j].abs();
                        if pick.is_none_or(|(_, m)| mag > m) {
                            pick = Some((j, mag));
                        }
                    }
                }
                pick.map(|(j, _)| j).unwrap_or(cands[0])
            };

            let dq = self.ftran(q);
            let arq = dq[r];
            if arq.abs() <= PIVOT_TOL || (arq - alpha[q]).abs() > 1e-7 * (1.0 + arq.abs()) {
                self.refresh();
                self.iterations += 1;
                stall += 1;
                if !self.make_dual_feasible() {
                    return self.primal_simplex(budget);
                }
                continue;
            }
            let step_dual = {
                let abar = s * alpha[q];
                (self.d[q] / abar).max(0.0)
            };
            let target = if to_lower { self.lo[jr] } else { self.hi[jr] };
            let theta = (self.x[jr] - target) / arq;
            for (p, &f) in dq.iter().enumerate() {
                if f != 0.0 {
                    let c = self.head[p];
                    self.x[c] -= theta * f;
                }
            }
            self.x[q] += theta;
            self.x[jr] = target;

            for j in 0..total {
                if self.status[j] != Status::Basic && alpha[j] != 0.0 {
                    self.d[j] -= step_dual * s * alpha[j];
                }
            }
            for (yi, r) in self.y.iter_mut().zip(&rho) {
                *yi += s * step_dual * r;
            }
            self.pivot(r, q, &dq);
            self.d[q] = 0.0;
            self.d[jr] = -s * step_dual;
            self.status[jr] = if to_lower { Status::Lower } else { Status::Upper };
            if self.is_fixed(jr) {
                self.status[jr] = Status::Lower;
            }
            self.iterations += 1;

            let obj = self.objective();
            if obj > best + 1e-12 {
                best = obj;
                stall = 0;
            } else {
                stall += 1;
            }
        }
    }

    fn primal_simplex(&mut self, budget: usize) -> Result<LpStatus, LpError> {
        let mut stall = 0;
        let mut best = f64::INFINITY;
        let mut was_phase1 = true;
        loop {
            if self.iterations >= budget {
                return Err(LpError::IterationLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refresh();
            }
            let m = self.rows.len();
            let total = self.status.len();

            // phase costs on basic variables
            let mut y = vec![0.0; m];
            let mut phase1 = false;
            let mut phase_obj = 0.0;
            for p in 0..m {
                let j = self.head[p];
                let c = if self.x[j] < self.lo[j] - PRIMAL_TOL {
                    phase1 = true;
                    phase_obj += self.lo[j] - self.x[j];
                    -1.0
                } else if self.x[j] > self.hi[j] + PRIMAL_TOL {
                    phase1 = true;
                    phase_obj += self.x[j] - self.hi[j];
                    1.0
                } else {
                    0.0
                };
                if c != 0.0 {
                    for (yi, b) in y.iter_mut().zip(&self.binv[p]) {
                        *yi += c * b;
                    }
                }
            }
            if !phase1 {
                if was_phase1 {
                    best = f64::INFINITY;
                    stall = 0;
                    was_phase1 = false;
                }
                self.compute_duals();
                phase_obj = self.objective();
            } else if !was_phase1 {
                was_phase1 = true;
                best = f64::INFINITY;
                stall = 0;
            }
            if phase_obj < best - 1e-12 {
                best = phase_obj;
                stall = 0;
            } else {
                stall += 1;
            }
            let bland = stall > STALL_LIMIT;

            let reduced = |j: usize| -> f64 {
                if phase1 {
                    -self.column_dot(j, &y)
                } else {
                    self.d[j]
                }
            };
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                if self.status[j] == Status::Basic || self.is_fixed(j) {
                    continue;
                }
                let dj = reduced(j);
                let dir = match self.status[j] {
                    Status::Lower if dj < -DUAL_TOL => 1.0,
                    Status::Upper if dj > DUAL_TOL => -1.0,
                    Status::Zero if dj.abs() > DUAL_TOL => -dj.signum(),
                    _ => continue,
                };
                let better = match enter {
                    None => true,
                    Some((_, _, bd)) => !bland && dj.abs() > bd.abs(),
                };
                if better {
                    enter = Some((j, dir, dj));
                }
            }
            let Some((q, dir, _)) = enter else {
                return Ok(if phase1 {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                });
            };

            let dq = self.ftran(q);
            // rate of change of each basic variable per unit step
            let rate: Vec<f64> = dq.iter().map(|v| -dir * v).collect();
            let limit = |p: usize, slack: f64| -> Option<(f64, bool)> {
                let g = rate[p];
                if g.abs() <= PIVOT_TOL {
                    return None;
                }
                let j = self.head[p];
                let (v, lo, hi) = (self.x[j], self.lo[j], self.hi[j]);
                if v < lo - PRIMAL_TOL {
                    (g > 0.0).then(|| (((lo - v) + slack) / g, true))
                } else if v > hi + PRIMAL_TOL {
                    (g < 0.0).then(|| (((v - hi) + slack) / -g, false))
                } else if g < 0.0 {
                    lo.is_finite().then(|| (((v - lo).max(0.0) + slack) / -g, true))
                } else {
                    hi.is_finite().then(|| (((hi - v).max(0.0) + slack) / g, false))
                }
            };
            let span = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, f64, bool)> = None;
            if bland {
                let mut best_t = f64::INFINITY;
                for p in 0..m {
                    if let Some((t, _)) = limit(p, 0.0) {
                        best_t = best_t.min(t);
                    }
                }
                for p in 0..m {
                    if let Some((t, at_lo)) = limit(p, 0.0) {
                        if t <= best_t + 1e-12
                            && leave.is_none_or(|(bp, _, _)| self.head[p] < self.head[bp])
                        {
                            leave = Some((p, t, at_lo));
                        }
                    }
                }
            } else {
                let bound = (0..m)
                    .filter_map(|p| limit(p, PRIMAL_TOL).map(|(t, _)| t))
                    .fold(f64::INFINITY, f64::min);
                let mut mag = 0.0;
                for p in 0..m {
                    if let Some((t, at_lo)) = limit(p, 0.0) {
                        if t <= bound && rate[p].abs() > mag {
                            mag = rate[p].abs();
                            leave = Some((p, t, at_lo));
                        }
                    }
                }
            }
            let step = leave.map_or(f64::INFINITY, |(_, t, _)| t.max(0.0));
            if span.is_finite() && span <= step {
                // bound flip without a basis change
                for (p, &g) in rate.iter().enumerate() {
                    if g != 0.0 {
                        let c = self.head[p];
                        self.x[c] += g * span;
                    }
                }
                self.status[q] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                self.x[q] = self.nonbasic_value(q);
                self.iterations += 1;
                continue;
            }
            let Some((r, _, at_lo)) = leave else {
                if phase1 {
                    // cannot happen with a correct phase objective; rebuild and retry
                    self.refresh();
                    self.iterations += 1;
                    continue;
                }
                return Ok(LpStatus::Unbounded);
            };
            let jr = self.head[r];
            for (p, &g) in rate.iter().enumerate() {
                if g != 0.0 {
                    let c = self.head[p];
                    self.x[c] += g * step;
                }
            }
            self.x[q] += dir * step;
            self.pivot(r, q, &dq);
            self.status[jr] = if at_lo { Status::Lower } else { Status::Upper };
            if self.is_fixed(jr) {
                self.status[jr] = Status::Lower;
            }
            self.x[jr] = self.nonbasic_value(jr);
            self.iterations += 1;
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting. On failure returns the
/// dependent column indices and the rows left without a pivot.
fn invert_dense(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, (Vec<usize>, Vec<usize>)> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut r = vec![0.0; k];
            r[i] = 1.0;
            r
        })
        .collect();
    let mut pivot_row_of_col = vec![usize::MAX; k];
    let mut used = vec![false; k];
    let mut dependent = Vec::new();
    for c in 0..k {
        let mut best = None;
        let mut mag = SINGULAR_TOL;
        for (r, row) in a.iter().enumerate() {
            if !used[r] && row[c].abs() > mag {
                mag = row[c].abs();
                best = Some(r);
            }
        }
        let Some(r) = best else {
            dependent.push(c);
            continue;
        };
        used[r] = true;
        pivot_row_of_col[c] = r;
        let p = a[r][c];
        for v in a[r].iter_mut() {
            *v /= p;
        }
        for v in inv[r].iter_mut() {
            *v /= p;
        }
        let (pr, pi) = (a[r].clone(), inv[r].clone());
        let nz: Vec<usize> = (0..k).filter(|&t| pr[t] != 0.0).collect();
        let nzi: Vec<usize> = (0..k).filter(|&t| pi[t] != 0.0).collect();
        for o in 0..k {
            if o == r {
                continue;
            }
            let f = a[o][c];
            if f == 0.0 {
                continue;
            }
            for &t in &nz {
                a[o][t] -= f * pr[t];
            }
            for &t in &nzi {
                inv[o][t] -= f * pi[t];
            }
        }
    }
    if !dependent.is_empty() {
        let free: Vec<usize> = (0..k).filter(|&r| !used[r]).collect();
        return Err((dependent, free));
    }
    // row r of `inv` now holds the inverse row for the column pivoted there
    Ok((0..k).map(|c| inv[pivot_row_of_col[c]].clone()).collect())
}

/// Solves `model` from scratch or from a basis snapshot.
pub fn solve_lp(model: &LinearModel, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    let mut solver = LpSolver::new(model)?;
    if let Some(b) = warm {
        solver.set_basis(b);
    }
    solver.solve()?;
    Ok(solver.solution())
}
