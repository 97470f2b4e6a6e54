//! Benders decomposition of the extensive form with one value variable
//! `theta` per scenario.
//!
//! Master layout: decision slot `k` is variable `k`, scenario `w` is variable
//! `|D| + w`.

use std::collections::BTreeMap;

use crate::cutloop::{fresh_violated, root_loop, CutPool};
use crate::engine::{
    branch_and_cut_from, solve_lp, Cut, CutKind, LinearModel, LpSolver, LpStatus, RunStats, Sense,
};
use crate::instance::{Instance, InterdictionPlan};
use crate::network::{max_labels_with, uninterdicted_bounds, NodeId, ReliabilityLabels};
use crate::solve::{SolveError, SolveOptions, Solution, Subproblem};

/// Dual solution of a scenario subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub scenario: usize,
    /// Per arc: multiplier of the uninterdicted row (or the big-M row on
    /// interdictable arcs).
    pub y: Vec<f64>,
    /// Per arc: multiplier of the interdicted row, zero off `D`.
    pub z: Vec<f64>,
    pub y_t: f64,
}

/// Scenario subproblem value and a dual point certifying it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub point: DualPoint,
}

/// Value recursion `pi_i = max(r pi_j - (r - q) u_j x, q pi_j)` towards `t`.
fn relaxed_labels(instance: &Instance, x: &[f64], t: NodeId, u: &[f64]) -> ReliabilityLabels {
    let net = instance.network();
    max_labels_with(net, t, |a, v| {
        let arc = net.arc(a);
        match net.slot(a) {
            Some(k) => {
                let keep = arc.r * v - (arc.r - arc.q()) * u[arc.head] * x[k];
                keep.max(arc.q() * v)
            }
            None => arc.r * v,
        }
    })
}

/// Walks the argmax path from the scenario origin and records the running
/// product of the chosen coefficients as the dual point.
fn dual_from_labels(
    instance: &Instance,
    scenario: usize,
    x: &[f64],
    u: &[f64],
    labels: &ReliabilityLabels,
) -> Evaluation {
    let net = instance.network();
    let sc = instance.scenarios()[scenario];
    let m = net.arcs().len();
    let mut point = DualPoint {
        scenario,
        y: vec![0.0; m],
        z: vec![0.0; m],
        y_t: 0.0,
    };
    let value = labels.pi[sc.s];
    if value <= 0.0 {
        return Evaluation { value: 0.0, point };
    }
    let mut run = 1.0;
    let mut at = sc.s;
    while at != sc.t {
        let a = labels.successor[at].expect("positive label has a successor");
        let arc = net.arc(a);
        let pj = labels.pi[arc.head];
        let q_branch = match net.slot(a) {
            Some(k) => arc.q() * pj > arc.r * pj - (arc.r - arc.q()) * u[arc.head] * x[k],
            None => false,
        };
        if q_branch {
            point.z[a] = run;
            run *= arc.q();
        } else {
            point.y[a] = run;
            run *= arc.r;
        }
        at = arc.head;
    }
    point.y_t = run;
    Evaluation { value, point }
}

/// Subproblem by the value recursion; `u` is the uninterdicted bound
/// vector of the scenario's destination.
pub fn subproblem_dp(instance: &Instance, scenario: usize, x: &[f64], u: &[f64]) -> Evaluation {
    let t = instance.scenarios()[scenario].t;
    let labels = relaxed_labels(instance, x, t, u);
    dual_from_labels(instance, scenario, x, u, &labels)
}

/// Subproblem as an explicit LP over the nodes that can reach `t`, with
/// the dual point read from the row multipliers.
pub fn subproblem_lp(instance: &Instance, scenario: usize, x: &[f64], u: &[f64]) -> Evaluation {
    let net = instance.network();
    let sc = instance.scenarios()[scenario];
    let mut model = LinearModel::new();
    let var: Vec<Option<usize>> = (0..net.node_count())
        .map(|i| {
            (u[i] > 0.0).then(|| {
                let cost = if i == sc.s { 1.0 } else { 0.0 };
                model.add_var(f64::NEG_INFINITY, f64::INFINITY, cost, false)
            })
        })
        .collect();
    let mut rows: Vec<(usize, bool)> = Vec::new();
    for (a, arc) in net.arcs().iter().enumerate() {
        let (Some(i), Some(j)) = (var[arc.tail], var[arc.head]) else {
            continue;
        };
        match net.slot(a) {
            None => {
                model.add_row(vec![(i, 1.0), (j, -arc.r)], Sense::Ge, 0.0);
                rows.push((a, false));
            }
            Some(k) => {
                let rhs = -(arc.r - arc.q()) * u[arc.head] * x[k];
                model.add_row(vec![(i, 1.0), (j, -arc.r)], Sense::Ge, rhs);
                rows.push((a, false));
                model.add_row(vec![(i, 1.0), (j, -arc.q())], Sense::Ge, 0.0);
                rows.push((a, true));
            }
        }
    }
    let t_row = model.add_row(vec![(var[sc.t].expect("destination reaches itself"), 1.0)], Sense::Eq, 1.0);
    let sol = solve_lp(&model, None).expect("scenario subproblem is a small bounded LP");
    assert_eq!(sol.status, LpStatus::Optimal, "scenario subproblem always has an optimum");
    let m = net.arcs().len();
    let mut point = DualPoint {
        scenario,
        y: vec![0.0; m],
        z: vec![0.0; m],
        y_t: sol.duals[t_row],
    };
    for (row, &(a, interdicted)) in rows.iter().enumerate() {
        let d = sol.duals[row].max(0.0);
        if interdicted {
            point.z[a] = d;
        } else {
            point.y[a] = d;
        }
    }
    Evaluation {
        value: sol.objective,
        point,
    }
}

/// `theta_w >= y_t - sum (r - q) u_j y_a x_a`.
pub fn benders_cut(point: &DualPoint, instance: &Instance, u: &[f64]) -> Cut {
    let net = instance.network();
    let theta = net.interdictable().len() + point.scenario;
    let mut coefs = vec![(theta, 1.0)];
    for (k, &a) in net.interdictable().iter().enumerate() {
        let arc = net.arc(a);
        let c = (arc.r - arc.q()) * u[arc.head] * point.y[a];
        if c != 0.0 {
            coefs.push((k, c));
        }
    }
    Cut {
        coefs,
        sense: Sense::Ge,
        rhs: point.y_t,
        kind: CutKind::Benders,
        origin: Some(point.scenario),
    }
}

/// Master relaxation with its cut pool after the root loop.
pub struct BendersMaster {
    pub solver: LpSolver,
    pub integer: Vec<bool>,
    pub stats: RunStats,
    pool: CutPool,
    bounds: BTreeMap<NodeId, Vec<f64>>,
}

impl BendersMaster {
    pub fn new(instance: &Instance) -> Self {
        let stats = RunStats::start();
        let net = instance.network();
        let bounds = uninterdicted_bounds(net, instance.destinations());
        let mut m = LinearModel::new();
        let costs = instance.costs();
        for _ in &costs {
            m.add_var(0.0, 1.0, 0.0, true);
        }
        for sc in instance.scenarios() {
            m.add_var(0.0, bounds[&sc.t][sc.s], sc.p, false);
        }
        m.add_row(costs.iter().copied().enumerate().collect(), Sense::Le, instance.budget());
        let integer = m.vars.iter().map(|v| v.integer).collect();
        let solver = LpSolver::new(&m).expect("master model is well formed");
        BendersMaster {
            solver,
            integer,
            stats,
            pool: CutPool::default(),
            bounds,
        }
    }

    pub fn cut_count(&self) -> usize {
        self.pool.len()
    }
}

/// Violated Benders cuts at `(x, theta)` for the listed scenarios.
fn separate(
    instance: &Instance,
    bounds: &BTreeMap<NodeId, Vec<f64>>,
    mode: Subproblem,
    values: &[f64],
    scenarios: &[usize],
) -> Vec<Cut> {
    let d = instance.network().interdictable().len();
    let x: Vec<f64> = values[..d].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut labels: BTreeMap<NodeId, ReliabilityLabels> = BTreeMap::new();
    let mut cuts = Vec::new();
    for &w in scenarios {
        let sc = instance.scenarios()[w];
        let u = &bounds[&sc.t];
        let eval = match mode {
            Subproblem::Dp => {
                let l = labels
                    .entry(sc.t)
                    .or_insert_with(|| relaxed_labels(instance, &x, sc.t, u));
                dual_from_labels(instance, w, &x, u, l)
            }
            Subproblem::Lp => subproblem_lp(instance, w, &x, u),
        };
        if eval.value - values[d + w] > crate::engine::CUT_VIOLATION_TOL {
            cuts.push(benders_cut(&eval.point, instance, u));
        }
    }
    cuts
}

/// Runs the root cutting loop; returns the master and the root bound.
pub fn benders_root_loop(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<(BendersMaster, f64), SolveError> {
    let mut master = BendersMaster::new(instance);
    let BendersMaster {
        solver,
        stats,
        pool,
        bounds,
        ..
    } = &mut master;
    let value = root_loop(
        solver,
        stats,
        pool,
        instance.scenarios().len(),
        options,
        |values, active| separate(instance, bounds, options.subproblem, values, active),
    )?;
    master.stats.root_bound = Some(value);
    Ok((master, value))
}

pub fn solve_benders(instance: &Instance, options: &SolveOptions) -> Result<Solution, SolveError> {
    let (master, _) = benders_root_loop(instance, options)?;
    let BendersMaster {
        solver,
        integer,
        stats,
        mut pool,
        bounds,
    } = master;
    let all: Vec<usize> = (0..instance.scenarios().len()).collect();
    let mut lazy = |values: &[f64], integral: bool| {
        if !integral {
            return Vec::new();
        }
        let cuts = separate(instance, &bounds, options.subproblem, values, &all);
        fresh_violated(&mut pool, cuts, values)
    };
    let mut bc = options.bc.clone();
    bc.fractional_cuts = false;
    let result = branch_and_cut_from(solver, &integer, &mut lazy, &bc, stats)?;
    let d = instance.network().interdictable().len();
    let plan = result.x.as_ref().map(|x| InterdictionPlan::from_values(&x[..d]));
    Ok(Solution {
        stats: result,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{diamond, diamond_with_budget};
    use crate::instance::{brute_force, generate, GridParams, QRegime, Scenario};
    use crate::network::{max_reliability_labels, plan_sigma, Arc, Network};

    fn u_for(inst: &Instance, w: usize) -> Vec<f64> {
        let t = inst.scenarios()[w].t;
        uninterdicted_bounds(inst.network(), [t]).remove(&t).unwrap()
    }

    #[test]
    fn diamond_subproblems() {
        let inst = diamond();
        let u = u_for(&inst, 0);
        let e = subproblem_dp(&inst, 0, &[0.0, 0.0], &u);
        assert!((e.value - 0.72).abs() < 1e-12);
        assert_eq!(e.point.y[0], 1.0);
        assert!((e.point.y[1] - 0.9).abs() < 1e-12);
        assert!((e.point.y_t - 0.72).abs() < 1e-12);
        let cut = benders_cut(&e.point, &inst, &u);
        assert!((cut.rhs - 0.72).abs() < 1e-12);
        assert_eq!(cut.coefs.len(), 2);
        assert_eq!(cut.coefs[1].0, 0);
        assert!((cut.coefs[1].1 - 0.36).abs() < 1e-12);

        let lp = subproblem_lp(&inst, 0, &[0.0, 0.0], &u);
        assert!((lp.value - 0.72).abs() < 1e-9);
        let at = subproblem_dp(&inst, 0, &[1.0, 0.0], &u);
        assert!((at.value - 0.63).abs() < 1e-12);
        assert!((subproblem_lp(&inst, 0, &[1.0, 0.0], &u).value - 0.63).abs() < 1e-9);
        let half = subproblem_dp(&inst, 0, &[0.5, 0.0], &u);
        assert!((half.value - subproblem_lp(&inst, 0, &[0.5, 0.0], &u).value).abs() < 1e-9);
        assert!((half.value - 0.63).abs() < 1e-12);
    }

    #[test]
    fn single_arc() {
        let net = Network::new(2, vec![Arc::interdictable(0, 1, 0.9, 0.3, 1.0)]).unwrap();
        let inst = Instance::new(net, vec![Scenario { s: 0, t: 1, p: 1.0 }], 1.0).unwrap();
        let u = u_for(&inst, 0);
        let e = subproblem_dp(&inst, 0, &[0.0], &u);
        assert!((e.value - 0.9).abs() < 1e-12);
        let cut = benders_cut(&e.point, &inst, &u);
        assert_eq!(cut.coefs, vec![(1, 1.0), (0, 0.9 - 0.3)]);
        assert!((cut.rhs - 0.9).abs() < 1e-12);
    }

    #[test]
    fn diamond_root_and_search() {
        let (_, root) = benders_root_loop(&diamond(), &SolveOptions::default()).unwrap();
        assert!(root <= 0.63 + 1e-9);
        let sol = solve_benders(&diamond(), &SolveOptions::default()).unwrap();
        assert!((sol.objective() - 0.63).abs() < 1e-9);
        assert_eq!(sol.plan.unwrap().x, vec![true, false]);
        assert!(sol.stats.cuts[&CutKind::Benders] >= 1);
    }

    #[test]
    fn zero_budget() {
        let inst = diamond_with_budget(0.0);
        let (master, root) = benders_root_loop(&inst, &SolveOptions::default()).unwrap();
        assert!((root - 0.72).abs() < 1e-9);
        assert!(master.cut_count() >= 1);
        let sol = solve_benders(&inst, &SolveOptions::default()).unwrap();
        assert!((sol.objective() - 0.72).abs() < 1e-9);
    }

    #[test]
    fn lp_mode_matches() {
        let opts = SolveOptions {
            subproblem: Subproblem::Lp,
            ..SolveOptions::default()
        };
        let sol = solve_benders(&diamond(), &opts).unwrap();
        assert!((sol.objective() - 0.63).abs() < 1e-9);
    }

    fn small(seed: u64, regime: QRegime) -> Instance {
        generate(&GridParams {
            interdictable_fraction: 0.35,
            scenarios: 3,
            budget: 2.0,
            ..GridParams::new(3, 3, regime, seed)
        })
        .unwrap()
    }

    #[test]
    fn generated_match_oracle() {
        let regimes = [QRegime::Factor(0.5), QRegime::Factor(0.1), QRegime::Zero, QRegime::Mixed(0.5)];
        for seed in 0..12 {
            let inst = small(seed, regimes[seed as usize % 4]);
            let oracle = brute_force(&inst).unwrap().objective;
            for subproblem in [Subproblem::Dp, Subproblem::Lp] {
                let opts = SolveOptions {
                    subproblem,
                    ..SolveOptions::default()
                };
                let sol = solve_benders(&inst, &opts).unwrap();
                assert!(sol.stats.is_optimal());
                assert!((sol.objective() - oracle).abs() <= 1e-4 * oracle + 1e-9, "seed {seed}");
            }
        }
    }

    #[test]
    fn cuts_valid_at_binary_points() {
        for seed in 0..6 {
            let inst = small(seed, QRegime::Mixed(0.5));
            let d = inst.network().interdictable().len();
            for w in 0..inst.scenarios().len() {
                let u = u_for(&inst, w);
                let sc = inst.scenarios()[w];
                for probe in 0..6 {
                    let xf: Vec<f64> = (0..d).map(|k| ((k * 7 + probe * 3 + seed as usize) % 5) as f64 / 4.0).collect();
                    let cut = benders_cut(&subproblem_dp(&inst, w, &xf, &u).point, &inst, &u);
                    for bits in 0..1u32 << d {
                        let plan: Vec<bool> = (0..d).map(|k| bits >> k & 1 == 1).collect();
                        let sigma = plan_sigma(inst.network(), &plan);
                        let theta = max_reliability_labels(inst.network(), &sigma, sc.t).pi[sc.s];
                        let mut v = vec![0.0; d + inst.scenarios().len()];
                        for k in 0..d {
                            v[k] = if plan[k] { 1.0 } else { 0.0 };
                        }
                        v[d + w] = theta;
                        assert!(cut.violation(&v) <= 1e-9);
                    }
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(60))]

            #[test]
            fn dp_matches_lp(seed in 0u64..1000, xs in proptest::collection::vec(0.0f64..=1.0, 32)) {
                let inst = small(seed, QRegime::Mixed(0.3));
                let d = inst.network().interdictable().len();
                let x = &xs[..d];
                for w in 0..inst.scenarios().len() {
                    let u = u_for(&inst, w);
                    let dp = subproblem_dp(&inst, w, x, &u);
                    let lp = subproblem_lp(&inst, w, x, &u);
                    prop_assert!((dp.value - lp.value).abs() < 1e-7);
                    // both dual points certify their value
                    for e in [&dp, &lp] {
                        let cut = benders_cut(&e.point, &inst, &u);
                        let at: f64 = cut.rhs - cut.coefs[1..].iter().map(|&(k, c)| c * x[k]).sum::<f64>();
                        prop_assert!((at - e.value).abs() < 1e-7);
                    }
                }
            }
        }
    }
}
