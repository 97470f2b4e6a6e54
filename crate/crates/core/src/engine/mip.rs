//! Best-bound branch-and-cut over an [`LpSolver`] with a lazy separator.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::model::{LinearModel, Sense};
use super::simplex::{Basis, LpError, LpSolver, LpStatus};

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const CUT_VIOLATION_TOL: f64 = 1e-6;
const MAX_INTEGER_ROUNDS: usize = 1000;
const MAX_FRACTIONAL_ROUNDS: usize = 20;

/// Origin of a cut, used for per-family counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CutKind {
    Benders,
    Lifted1,
    Lifted2,
    Base9,
    Base10,
    QZero,
    Mixed,
}

impl CutKind {
    pub const ALL: [CutKind; 7] = [
        CutKind::Benders,
        CutKind::Lifted1,
        CutKind::Lifted2,
        CutKind::Base9,
        CutKind::Base10,
        CutKind::QZero,
        CutKind::Mixed,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CutKind::Benders => "benders",
            CutKind::Lifted1 => "supermod-lifted-1",
            CutKind::Lifted2 => "supermod-lifted-2",
            CutKind::Base9 => "base-9",
            CutKind::Base10 => "base-10",
            CutKind::QZero => "q-zero",
            CutKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for CutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A row to append to the model; `origin` is the scenario or destination
/// that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub kind: CutKind,
    pub origin: Option<usize>,
}

impl Cut {
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coefs.iter().map(|&(j, a)| a * x[j]).sum();
        match self.sense {
            Sense::Ge => self.rhs - lhs,
            Sense::Le => lhs - self.rhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Called with every node LP solution whose integer variables are integral
/// (`integral = true`), and with fractional ones when fractional cuts are
/// enabled. Returned cuts must be valid for the true problem.
pub trait LazySeparator {
    fn separate(&mut self, x: &[f64], integral: bool) -> Vec<Cut>;
}

impl<F> LazySeparator for F
where
    F: FnMut(&[f64], bool) -> Vec<Cut>,
{
    fn separate(&mut self, x: &[f64], integral: bool) -> Vec<Cut> {
        self(x, integral)
    }
}

/// Separator for models that are complete as given.
pub struct NoSeparator;

impl LazySeparator for NoSeparator {
    fn separate(&mut self, _: &[f64], _: bool) -> Vec<Cut> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
pub struct BcOptions {
    /// Relative gap at which the search stops.
    pub gap: f64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Also call the separator at fractional node solutions.
    pub fractional_cuts: bool,
    /// Restore the parent's optimal basis before solving a node.
    pub parent_warm_start: bool,
    /// Keep every added cut in [`SolveResult::cut_log`].
    pub record_cuts: bool,
}

impl Default for BcOptions {
    fn default() -> Self {
        BcOptions {
            gap: 1e-4,
            time_limit: None,
            node_limit: None,
            fractional_cuts: false,
            parent_warm_start: true,
            record_cuts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

impl SolveStatus {
    pub fn tag(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NodeLimit => "node_limit",
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(self, SolveStatus::TimeLimit | SolveStatus::NodeLimit)
    }
}

/// Counters shared between a driver's root loop and the tree search.
#[derive(Debug, Clone)]
pub struct RunStats {
    pub started: Instant,
    pub cuts: BTreeMap<CutKind, usize>,
    pub time_cutgen: Duration,
    pub time_lp: Duration,
    /// Valid lower bound from a root cutting loop; seeds the root node.
    pub root_bound: Option<f64>,
    pub log: Option<Vec<Cut>>,
}

impl RunStats {
    pub fn start() -> Self {
        RunStats {
            started: Instant::now(),
            cuts: BTreeMap::new(),
            time_cutgen: Duration::ZERO,
            time_lp: Duration::ZERO,
            root_bound: None,
            log: None,
        }
    }

    /// Counts the cut and keeps a copy when logging is on.
    pub fn record(&mut self, cut: &Cut) {
        *self.cuts.entry(cut.kind).or_insert(0) += 1;
        if let Some(log) = &mut self.log {
            log.push(cut.clone());
        }
    }

    pub fn out_of_time(&self, limit: Option<Duration>) -> bool {
        limit.is_some_and(|l| self.started.elapsed() >= l)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Incumbent value, `+inf` without an incumbent.
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    /// Incumbent with integer variables rounded.
    pub x: Option<Vec<f64>>,
    pub nodes: usize,
    pub cuts: BTreeMap<CutKind, usize>,
    /// LP value after the root cutting phase.
    pub root_bound: f64,
    pub time_total: Duration,
    pub time_cutgen: Duration,
    pub time_lp: Duration,
    /// Added cuts, when recording was requested.
    pub cut_log: Vec<Cut>,
}

impl SolveResult {
    pub fn total_cuts(&self) -> usize {
        self.cuts.values().sum()
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// The result if it is optimal, or the limit error carrying it.
    pub fn into_optimal(self) -> Result<SolveResult, LimitReached> {
        if self.status.is_limit() {
            Err(LimitReached(Box::new(self)))
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("search stopped at {} with objective {} and bound {}", .0.status.tag(), .0.objective, .0.bound)]
pub struct LimitReached(pub Box<SolveResult>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("node relaxation is unbounded")]
    Unbounded,
    #[error("separator keeps returning violated cuts at one point")]
    CutLoop,
}

/// `(objective - bound) / max(|objective|, 1e-10)`, infinite when either is.
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    ((objective - bound) / objective.abs().max(1e-10)).max(0.0)
}

struct Node {
    lb: f64,
    seq: usize,
    fixes: Vec<(usize, f64, f64)>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl Ord for Node {
    // max-heap on the reverse: smallest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn most_fractional(x: &[f64], integer: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&v, &int)) in x.iter().zip(integer).enumerate() {
        if !int {
            continue;
        }
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, b)| frac > b) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

/// Solves `model` with lazy cuts from `separator`.
pub fn branch_and_cut(
    model: &LinearModel,
    separator: &mut dyn LazySeparator,
    options: &BcOptions,
) -> Result<SolveResult, BcError> {
    let solver = LpSolver::new(model)?;
    let integer: Vec<bool> = model.vars.iter().map(|v| v.integer).collect();
    branch_and_cut_from(solver, &integer, separator, options, RunStats::start())
}

/// Tree search from a prepared solver, typically one that already holds the
/// cuts and basis of a root cutting loop.
pub fn branch_and_cut_from(
    mut solver: LpSolver,
    integer: &[bool],
    separator: &mut dyn LazySeparator,
    options: &BcOptions,
    mut stats: RunStats,
) -> Result<SolveResult, BcError> {
    if options.record_cuts && stats.log.is_none() {
        stats.log = Some(Vec::new());
    }
    let n = solver.var_count();
    let root: Vec<(f64, f64)> = (0..n).map(|j| solver.bounds(j)).collect();
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node {
        lb: stats.root_bound.unwrap_or(f64::NEG_INFINITY),
        seq,
        fixes: Vec::new(),
        basis: None,
    });
    let mut changed: Vec<usize> = Vec::new();
    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    let mut pruned = f64::INFINITY;
    let mut nodes = 0;
    let mut first = true;

    let status = 'search: loop {
        if stats.out_of_time(options.time_limit) {
            break SolveStatus::TimeLimit;
        }
        if options.node_limit.is_some_and(|l| nodes >= l) {
            break SolveStatus::NodeLimit;
        }
        let Some(node) = heap.pop() else {
            break if incumbent.is_some() {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
        };
        let prunable = |lb: f64, inc: f64| {
            inc.is_finite() && lb >= inc - options.gap * inc.abs().max(1e-10)
        };
        if prunable(node.lb, inc_obj) {
            pruned = pruned.min(node.lb);
            continue;
        }
        nodes += 1;

        for &j in &changed {
            solver.set_bounds(j, root[j].0, root[j].1);
        }
        changed.clear();
        for &(j, lo, hi) in &node.fixes {
            solver.set_bounds(j, lo, hi);
            changed.push(j);
        }
        if options.parent_warm_start {
            if let Some(b) = &node.basis {
                solver.set_basis(b);
            }
        }

        let mut rounds = 0;
        let outcome = loop {
            if stats.out_of_time(options.time_limit) {
                heap.push(Node { basis: None, ..node });
                continue 'search;
            }
            let t = Instant::now();
            let lp = solver.solve()?;
            stats.time_lp += t.elapsed();
            match lp {
                LpStatus::Infeasible => break None,
                LpStatus::Unbounded => return Err(BcError::Unbounded),
                LpStatus::Optimal => {}
            }
            let obj = solver.objective();
            if first {
                stats.root_bound.get_or_insert(obj);
            }
            if prunable(obj, inc_obj) {
                pruned = pruned.min(obj);
                break None;
            }
            let x = solver.x().to_vec();
            let branch = most_fractional(&x, integer);
            let integral = branch.is_none();
            let may_cut = integral || (options.fractional_cuts && rounds < MAX_FRACTIONAL_ROUNDS);
            if may_cut {
                let t = Instant::now();
                let cuts = separator.separate(&x, integral);
                stats.time_cutgen += t.elapsed();
                let violated: Vec<Cut> = cuts
                    .into_iter()
                    .filter(|c| c.violation(&x) > CUT_VIOLATION_TOL)
                    .collect();
                if !violated.is_empty() {
                    rounds += 1;
                    if rounds > MAX_INTEGER_ROUNDS {
                        return Err(BcError::CutLoop);
                    }
                    for cut in violated {
                        stats.record(&cut);
                        solver.add_row(cut.coefs, cut.sense, cut.rhs);
                    }
                    continue;
                }
            }
            break Some((obj, x, branch));
        };
        first = false;

        match outcome {
            None => {}
            Some((obj, x, None)) => {
                if obj < inc_obj {
                    inc_obj = obj;
                    let rounded = x
                        .iter()
                        .zip(integer)
                        .map(|(&v, &int)| if int { v.round() } else { v })
                        .collect();
                    incumbent = Some(rounded);
                }
            }
            Some((obj, x, Some(j))) => {
                let basis = solver.basis();
                let v = x[j];
                let (lo, hi) = solver.bounds(j);
                for (clo, chi) in [(lo, v.floor()), (v.ceil(), hi)] {
                    let mut fixes: Vec<(usize, f64, f64)> =
                        node.fixes.iter().copied().filter(|f| f.0 != j).collect();
                    fixes.push((j, clo, chi));
                    seq += 1;
                    heap.push(Node {
                        lb: obj,
                        seq,
                        fixes,
                        basis: Some(basis.clone()),
                    });
                }
            }
        }
    };

    for &j in &changed {
        solver.set_bounds(j, root[j].0, root[j].1);
    }
    let open = heap.iter().map(|n| n.lb).fold(f64::INFINITY, f64::min);
    let bound = match status {
        SolveStatus::Infeasible => f64::INFINITY,
        SolveStatus::Optimal => pruned.min(inc_obj),
        _ => open.min(pruned).min(inc_obj),
    };
    let objective = inc_obj;
    Ok(SolveResult {
        status,
        objective,
        bound,
        gap: if status == SolveStatus::Infeasible {
            0.0
        } else {
            relative_gap(objective, bound)
        },
        x: incumbent,
        nodes,
        root_bound: stats.root_bound.unwrap_or(f64::NEG_INFINITY),
        cuts: stats.cuts,
        time_total: stats.started.elapsed(),
        time_cutgen: stats.time_cutgen,
        time_lp: stats.time_lp,
        cut_log: stats.log.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_knapsack() {
        let mut m = LinearModel::new();
        let x = m.add_var(0.0, 1.0, -1.0, true);
        let y = m.add_var(0.0, 1.0, -1.0, true);
        m.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let r = branch_and_cut(&m, &mut NoSeparator, &BcOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-9);
        assert!(r.gap <= 1e-4);
    }

    #[test]
    fn branching_needed() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = LinearModel::new();
        let v: Vec<usize> = [-5.0, -4.0, -3.0]
            .iter()
            .map(|&c| m.add_var(0.0, 1.0, c, true))
            .collect();
        m.add_row(vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0);
        m.add_row(vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0);
        m.add_row(vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Sense::Le, 8.0);
        m.add_row(vec![(v[0], 1.0), (v[1], 1.0), (v[2], 1.0)], Sense::Le, 2.5);
        let r = branch_and_cut(&m, &mut NoSeparator, &BcOptions::default()).unwrap();
        assert!((r.objective + 9.0).abs() < 1e-9);
        assert_eq!(r.x.unwrap(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn diamond_with_lazy_path_cut() {
        // x0: sensor on (a,t), x1: sensor on (s,b); pi is the attacker value
        let mut m = LinearModel::new();
        let xa = m.add_var(0.0, 1.0, 0.0, true);
        let xb = m.add_var(0.0, 1.0, 0.0, true);
        let pi = m.add_var(0.0, 0.72, 1.0, false);
        m.add_row(vec![(xa, 1.0), (xb, 1.0)], Sense::Le, 1.0);
        let mut sep = |x: &[f64], _: bool| {
            let mut out = Vec::new();
            // top path: 0.72 with factor 0.5 when (a,t) is interdicted
            let top = if x[xa] > 0.5 { 0.36 } else { 0.72 };
            if x[pi] < top - 1e-6 {
                out.push(Cut {
                    coefs: vec![(pi, 1.0), (xa, 0.36)],
                    sense: Sense::Ge,
                    rhs: 0.72,
                    kind: CutKind::Lifted1,
                    origin: Some(0),
                });
            }
            let bottom = if x[xb] > 0.5 { 0.063 } else { 0.63 };
            if x[pi] < bottom - 1e-6 {
                out.push(Cut {
                    coefs: vec![(pi, 1.0), (xb, 0.567)],
                    sense: Sense::Ge,
                    rhs: 0.63,
                    kind: CutKind::Lifted1,
                    origin: Some(0),
                });
            }
            out
        };
        let r = branch_and_cut(&m, &mut sep, &BcOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 0.63).abs() < 1e-9);
        assert_eq!(&r.x.as_ref().unwrap()[..2], &[1.0, 0.0]);
        assert!(r.total_cuts() >= 2);
    }

    #[test]
    fn zero_time_limit() {
        let mut m = LinearModel::new();
        let x = m.add_var(0.0, 1.0, -1.0, true);
        m.add_row(vec![(x, 2.0)], Sense::Le, 1.0);
        let opts = BcOptions {
            time_limit: Some(Duration::ZERO),
            ..BcOptions::default()
        };
        let r = branch_and_cut(&m, &mut NoSeparator, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::TimeLimit);
        assert!(r.bound <= 0.0);
        assert!(r.into_optimal().is_err());
    }

    #[test]
    fn infeasible_model() {
        let mut m = LinearModel::new();
        let x = m.add_var(0.0, 1.0, 0.0, true);
        m.add_row(vec![(x, 1.0)], Sense::Ge, 0.4);
        m.add_row(vec![(x, 1.0)], Sense::Le, 0.6);
        let r = branch_and_cut(&m, &mut NoSeparator, &BcOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn matches_enumeration(
                costs in proptest::collection::vec(-5i32..=5, 4),
                rows in proptest::collection::vec((proptest::collection::vec(0i32..=4, 4), 1i32..=8), 1..=3),
            ) {
                let mut m = LinearModel::new();
                for &c in &costs {
                    m.add_var(0.0, 1.0, c as f64, true);
                }
                for (a, b) in &rows {
                    let coefs = a.iter().enumerate().map(|(j, &v)| (j, v as f64)).collect();
                    m.add_row(coefs, Sense::Le, *b as f64);
                }
                let mut best = f64::INFINITY;
                for bits in 0..16u32 {
                    let x: Vec<f64> = (0..4).map(|k| (bits >> k & 1) as f64).collect();
                    if m.max_violation(&x) <= 1e-12 {
                        best = best.min(m.objective(&x));
                    }
                }
                let opts = BcOptions { gap: 0.0, ..BcOptions::default() };
                let r = branch_and_cut(&m, &mut NoSeparator, &opts).unwrap();
                prop_assert_eq!(r.status, SolveStatus::Optimal);
                prop_assert!((r.objective - best).abs() <= 1e-9);
                prop_assert!(r.bound <= best + 1e-9);
            }
        }
    }
}
