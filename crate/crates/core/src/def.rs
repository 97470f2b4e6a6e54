//! Explicit extensive forms: one value variable per node and scenario, or per
//! node and destination in the compact form.

use crate::engine::{
    branch_and_cut, solve_lp, BcOptions, LinearModel, LpError, LpStatus, NoSeparator, Sense,
};
use crate::instance::{Instance, InterdictionPlan};
use crate::network::uninterdicted_bounds;
use crate::solve::{SolveError, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowFamily {
    Budget,
    /// `pi_i - r pi_j >= 0` on an arc without a sensor option.
    Plain,
    /// `pi_i - r pi_j + (r - q) u_j x >= 0`
    BigM,
    /// `pi_i - q pi_j >= 0`
    Interdicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowTag {
    pub family: RowFamily,
    pub block: usize,
    pub arc: usize,
}

/// Index maps between model variables/rows and instance objects. A block is
/// a scenario index for the full form and a destination node for the
/// compact form.
#[derive(Debug, Clone, PartialEq)]
pub struct DefModelMap {
    /// Model variable of each decision slot.
    pub x: Vec<usize>,
    pub blocks: Vec<usize>,
    /// `pi[b][i]`: value variable of node `i` in block `b`.
    pub pi: Vec<Vec<usize>>,
    pub rows: Vec<RowTag>,
}

impl DefModelMap {
    pub fn plan(&self, values: &[f64]) -> InterdictionPlan {
        let xs: Vec<f64> = self.x.iter().map(|&j| values[j]).collect();
        InterdictionPlan::from_values(&xs)
    }
}

/// Builds the model for the given blocks: `(destination, objective weights
/// per origin)`.
fn build(instance: &Instance, blocks: Vec<(usize, Vec<(usize, f64)>)>, ids: Vec<usize>) -> (LinearModel, DefModelMap) {
    let net = instance.network();
    let n = net.node_count();
    let dests: Vec<usize> = blocks.iter().map(|b| b.0).collect();
    let u = uninterdicted_bounds(net, dests.iter().copied());
    let mut m = LinearModel::new();
    let costs = instance.costs();
    let x: Vec<usize> = costs.iter().map(|_| m.add_var(0.0, 1.0, 0.0, true)).collect();

    let mut pi = Vec::with_capacity(blocks.len());
    for (t, weights) in &blocks {
        let ut = &u[t];
        let vars: Vec<usize> = (0..n)
            .map(|i| {
                let lo = if i == *t { 1.0 } else { 0.0 };
                m.add_var(lo, ut[i], 0.0, false)
            })
            .collect();
        for &(s, p) in weights {
            m.vars[vars[s]].cost += p;
        }
        pi.push(vars);
    }

    let mut rows = Vec::new();
    let budget: Vec<(usize, f64)> = x.iter().zip(&costs).map(|(&j, &c)| (j, c)).collect();
    m.add_row(budget, Sense::Le, instance.budget());
    rows.push(RowTag {
        family: RowFamily::Budget,
        block: usize::MAX,
        arc: usize::MAX,
    });
    for (b, (t, _)) in blocks.iter().enumerate() {
        let ut = &u[t];
        for (a, arc) in net.arcs().iter().enumerate() {
            let (pi_i, pi_j) = (pi[b][arc.tail], pi[b][arc.head]);
            let tag = |family| RowTag { family, block: b, arc: a };
            match net.slot(a) {
                None => {
                    m.add_row(vec![(pi_i, 1.0), (pi_j, -arc.r)], Sense::Ge, 0.0);
                    rows.push(tag(RowFamily::Plain));
                }
                Some(k) => {
                    let big_m = (arc.r - arc.q()) * ut[arc.head];
                    m.add_row(
                        vec![(pi_i, 1.0), (pi_j, -arc.r), (x[k], big_m)],
                        Sense::Ge,
                        0.0,
                    );
                    rows.push(tag(RowFamily::BigM));
                    m.add_row(vec![(pi_i, 1.0), (pi_j, -arc.q())], Sense::Ge, 0.0);
                    rows.push(tag(RowFamily::Interdicted));
                }
            }
        }
    }
    let map = DefModelMap {
        x,
        blocks: ids,
        pi,
        rows,
    };
    (m, map)
}

/// One value block per scenario.
pub fn build_def(instance: &Instance) -> (LinearModel, DefModelMap) {
    let blocks = instance
        .scenarios()
        .iter()
        .map(|sc| (sc.t, vec![(sc.s, sc.p)]))
        .collect();
    build(instance, blocks, (0..instance.scenarios().len()).collect())
}

/// One value block per distinct destination, shared by its scenarios.
pub fn build_compact_def(instance: &Instance) -> (LinearModel, DefModelMap) {
    let dests = instance.destinations();
    let blocks = dests
        .iter()
        .map(|&t| {
            let w = instance
                .scenarios()
                .iter()
                .filter(|sc| sc.t == t)
                .map(|sc| (sc.s, sc.p))
                .collect();
            (t, w)
        })
        .collect();
    build(instance, blocks, dests)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelaxationError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("relaxation is {0:?}")]
    Status(LpStatus),
}

/// Optimal value with integrality dropped.
pub fn lp_relaxation_value(model: &LinearModel) -> Result<f64, RelaxationError> {
    let sol = solve_lp(model, None)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        s => Err(RelaxationError::Status(s)),
    }
}

fn solve_model(model: LinearModel, map: DefModelMap, options: &BcOptions) -> Result<Solution, SolveError> {
    let stats = branch_and_cut(&model, &mut NoSeparator, options)?;
    let plan = stats.x.as_ref().map(|x| map.plan(x));
    Ok(Solution { stats, plan })
}

pub fn solve_def(instance: &Instance, options: &BcOptions) -> Result<Solution, SolveError> {
    let (model, map) = build_def(instance);
    solve_model(model, map, options)
}

pub fn solve_compact_def(instance: &Instance, options: &BcOptions) -> Result<Solution, SolveError> {
    let (model, map) = build_compact_def(instance);
    solve_model(model, map, options)
}
