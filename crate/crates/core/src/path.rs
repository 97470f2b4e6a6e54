//! Path-based branch-and-cut: one value variable per distinct
//! origin-destination pair, bounded below by lifted supermodular cuts on
//! maximum-reliability paths.
//!
//! Master layout: decision slot `k` is variable `k`, pair `p` is variable
//! `|D| + p`.

use std::collections::BTreeMap;

use crate::cuts::{separate_fractional, separate_integer, AffineCut, PathFunction};
use crate::cutloop::{fresh_violated, root_loop, CutPool};
use crate::engine::{branch_and_cut_from, Cut, LinearModel, LpSolver, RunStats, Sense};
use crate::instance::{Instance, InterdictionPlan};
use crate::network::{
    extract_path, fractional_sigma, max_reliability_labels, plan_sigma, power_sigma,
    uninterdicted_bounds, NodeId,
};
use crate::solve::{FracSigma, SolveError, SolveOptions, Solution};

/// A distinct origin-destination pair with its total probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub s: NodeId,
    pub t: NodeId,
    pub p: f64,
}

/// Distinct pairs in first-appearance order.
pub fn pairs(instance: &Instance) -> Vec<Pair> {
    let mut out: Vec<Pair> = Vec::new();
    for sc in instance.scenarios() {
        match out.iter_mut().find(|q| q.s == sc.s && q.t == sc.t) {
            Some(q) => q.p += sc.p,
            None => out.push(Pair { s: sc.s, t: sc.t, p: sc.p }),
        }
    }
    out
}

/// Separation state shared by the root loop and the lazy callback.
pub struct PathSeparator<'a> {
    instance: &'a Instance,
    pairs: Vec<Pair>,
    /// Pair indices per destination.
    by_destination: BTreeMap<NodeId, Vec<usize>>,
    slots: usize,
    /// Label-setting runs so far and separation calls so far.
    pub dp_runs: usize,
    pub rounds: usize,
}

impl<'a> PathSeparator<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let pairs = pairs(instance);
        let mut by_destination: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (k, p) in pairs.iter().enumerate() {
            by_destination.entry(p.t).or_default().push(k);
        }
        PathSeparator {
            instance,
            pairs,
            by_destination,
            slots: instance.network().interdictable().len(),
            dp_runs: 0,
            rounds: 0,
        }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    fn to_cut(&self, pair: usize, cut: AffineCut) -> Cut {
        let mut coefs = vec![(self.slots + pair, 1.0)];
        coefs.extend(cut.coefs.iter().map(|&(k, c)| (k, -c)));
        Cut {
            coefs,
            sense: Sense::Ge,
            rhs: cut.constant,
            kind: cut.kind,
            origin: Some(pair),
        }
    }

    /// Cuts at a fractional point for the listed pairs: one path per pair
    /// and arc weighting, then the heuristic separation.
    pub fn fractional(&mut self, values: &[f64], active: &[usize], mode: FracSigma) -> Vec<Cut> {
        self.rounds += 1;
        let net = self.instance.network();
        let x: Vec<f64> = values[..self.slots].iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut sigmas = Vec::new();
        if matches!(mode, FracSigma::Convex | FracSigma::Both) {
            sigmas.push(fractional_sigma(net, &x));
        }
        if matches!(mode, FracSigma::Power | FracSigma::Both) {
            sigmas.push(power_sigma(net, &x));
        }
        let mut cuts = Vec::new();
        for (&t, members) in &self.by_destination {
            let wanted: Vec<usize> = members.iter().copied().filter(|k| active.contains(k)).collect();
            if wanted.is_empty() {
                continue;
            }
            for sigma in &sigmas {
                let labels = max_reliability_labels(net, sigma, t);
                self.dp_runs += 1;
                for &k in &wanted {
                    let Ok(path) = extract_path(net, &labels, self.pairs[k].s) else {
                        continue;
                    };
                    let pf = PathFunction::new(net, &path);
                    let pi = values[self.slots + k];
                    for c in separate_fractional(&pf, &x, pi) {
                        cuts.push(self.to_cut(k, c));
                    }
                }
            }
        }
        cuts
    }

    /// Cuts at an integral point: the most reliable path of every pair under
    /// the plan, separated exactly.
    pub fn integer(&mut self, values: &[f64]) -> Vec<Cut> {
        self.rounds += 1;
        let net = self.instance.network();
        let x: Vec<f64> = values[..self.slots].iter().map(|v| v.round()).collect();
        let plan: Vec<bool> = x.iter().map(|&v| v > 0.5).collect();
        let sigma = plan_sigma(net, &plan);
        let mut cuts = Vec::new();
        for (&t, members) in &self.by_destination {
            let labels = max_reliability_labels(net, &sigma, t);
            self.dp_runs += 1;
            for &k in members {
                let s = self.pairs[k].s;
                let pi = values[self.slots + k];
                if pi >= labels.pi[s] - crate::engine::CUT_VIOLATION_TOL {
                    continue;
                }
                let path = extract_path(net, &labels, s).expect("positive label has a path");
                let pf = PathFunction::new(net, &path);
                for c in separate_integer(&pf, &x, pi) {
                    cuts.push(self.to_cut(k, c));
                }
            }
        }
        cuts
    }
}

/// Master relaxation after the root loop.
pub struct PathMaster {
    pub solver: LpSolver,
    pub integer: Vec<bool>,
    pub stats: RunStats,
    pool: CutPool,
}

impl PathMaster {
    pub fn new(instance: &Instance) -> Self {
        let stats = RunStats::start();
        let bounds = uninterdicted_bounds(instance.network(), instance.destinations());
        let mut m = LinearModel::new();
        let costs = instance.costs();
        for _ in &costs {
            m.add_var(0.0, 1.0, 0.0, true);
        }
        for p in pairs(instance) {
            m.add_var(0.0, bounds[&p.t][p.s], p.p, false);
        }
        m.add_row(costs.iter().copied().enumerate().collect(), Sense::Le, instance.budget());
        let integer = m.vars.iter().map(|v| v.integer).collect();
        let solver = LpSolver::new(&m).expect("master model is well formed");
        PathMaster {
            solver,
            integer,
            stats,
            pool: CutPool::default(),
        }
    }

    pub fn cut_count(&self) -> usize {
        self.pool.len()
    }
}

/// Root cutting loop with fractional separation.
pub fn path_root_loop(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<(PathMaster, f64), SolveError> {
    let mut sep = PathSeparator::new(instance);
    path_root_loop_with(instance, &mut sep, options)
}

fn path_root_loop_with(
    instance: &Instance,
    sep: &mut PathSeparator<'_>,
    options: &SolveOptions,
) -> Result<(PathMaster, f64), SolveError> {
    let mut master = PathMaster::new(instance);
    let units = sep.pairs().len();
    let PathMaster {
        solver,
        stats,
        pool,
        ..
    } = &mut master;
    let value = root_loop(solver, stats, pool, units, options, |values, active| {
        sep.fractional(values, active, options.frac_sigma)
    })?;
    master.stats.root_bound = Some(value);
    Ok((master, value))
}

pub fn solve_path(instance: &Instance, options: &SolveOptions) -> Result<Solution, SolveError> {
    let mut sep = PathSeparator::new(instance);
    let (master, _) = path_root_loop_with(instance, &mut sep, options)?;
    let PathMaster {
        solver,
        integer,
        stats,
        mut pool,
    } = master;
    let mut lazy = |values: &[f64], integral: bool| {
        if !integral {
            return Vec::new();
        }
        let cuts = sep.integer(values);
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
    use crate::engine::CutKind;
    use crate::instance::fixtures::{diamond, diamond_with_budget};
    use crate::instance::{brute_force, generate, GridParams, QRegime, Scenario};
    use crate::network::{Arc, Network};

    #[test]
    fn diamond_solution() {
        let (_, root) = path_root_loop(&diamond(), &SolveOptions::default()).unwrap();
        assert!(root <= 0.63 + 1e-9);
        let sol = solve_path(&diamond(), &SolveOptions::default()).unwrap();
        assert!(sol.stats.is_optimal());
        assert!((sol.objective() - 0.63).abs() < 1e-9);
        assert_eq!(sol.plan.unwrap().x, vec![true, false]);
    }

    #[test]
    fn diamond_integer_cut() {
        let inst = diamond();
        let mut sep = PathSeparator::new(&inst);
        let cuts = sep.integer(&[1.0, 0.0, 0.5]);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].kind, CutKind::Lifted1);
        assert!((cuts[0].rhs - 0.63).abs() < 1e-12);
        assert_eq!(cuts[0].coefs[0], (2, 1.0));
        assert_eq!(cuts[0].coefs[1].0, 1);
        assert!((cuts[0].coefs[1].1 - 0.567).abs() < 1e-12);
        assert!(sep.integer(&[1.0, 0.0, 0.63]).is_empty());
    }

    #[test]
    fn zero_budget() {
        let inst = diamond_with_budget(0.0);
        let (_, root) = path_root_loop(&inst, &SolveOptions::default()).unwrap();
        assert!((root - 0.72).abs() < 1e-9);
    }

    #[test]
    fn zero_q_full_cut() {
        let net = Network::new(
            3,
            vec![
                Arc::interdictable(0, 1, 0.9, 0.0, 1.0),
                Arc::interdictable(0, 2, 0.8, 0.0, 1.0),
                Arc::new(1, 2, 0.9),
            ],
        )
        .unwrap();
        let inst = Instance::new(net, vec![Scenario { s: 0, t: 2, p: 1.0 }], 2.0).unwrap();
        let sol = solve_path(&inst, &SolveOptions::default()).unwrap();
        assert!(sol.objective().abs() < 1e-9);
    }

    #[test]
    fn pairs_are_merged() {
        let inst = Instance::new(
            crate::instance::fixtures::diamond_network(),
            vec![
                Scenario { s: 0, t: 3, p: 0.25 },
                Scenario { s: 1, t: 3, p: 0.5 },
                Scenario { s: 0, t: 3, p: 0.25 },
            ],
            1.0,
        )
        .unwrap();
        let p = pairs(&inst);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].p, 0.5);
    }

    fn grid(seed: u64, regime: QRegime, rows: usize, cols: usize) -> Instance {
        generate(&GridParams {
            interdictable_fraction: 0.3,
            scenarios: 5,
            destinations: Some(2),
            budget: 2.0,
            ..GridParams::new(rows, cols, regime, seed)
        })
        .unwrap()
    }

    #[test]
    fn one_label_run_per_destination_and_round() {
        let inst = grid(4, QRegime::Factor(0.5), 4, 4);
        let mut sep = PathSeparator::new(&inst);
        let all: Vec<usize> = (0..sep.pairs().len()).collect();
        let d = inst.network().interdictable().len();
        let values = vec![0.0; d + all.len()];
        sep.fractional(&values, &all, FracSigma::Convex);
        assert!(sep.dp_runs <= inst.destinations().len());
        sep.integer(&values);
        assert!(sep.dp_runs <= 2 * inst.destinations().len());
        assert_eq!(sep.rounds, 2);
    }

    #[test]
    fn generated_match_oracle_in_every_sigma_mode() {
        let regimes = [QRegime::Factor(0.5), QRegime::Factor(0.1), QRegime::Zero, QRegime::Mixed(0.5)];
        for seed in 0..12 {
            let inst = grid(seed, regimes[seed as usize % 4], 4, 4);
            let oracle = brute_force(&inst).unwrap().objective;
            for frac_sigma in [FracSigma::Convex, FracSigma::Power, FracSigma::Both] {
                let opts = SolveOptions {
                    frac_sigma,
                    ..SolveOptions::default()
                };
                let sol = solve_path(&inst, &opts).unwrap();
                assert!(sol.stats.is_optimal());
                assert!(
                    (sol.objective() - oracle).abs() <= 1e-4 * oracle + 1e-9,
                    "seed {seed} {frac_sigma:?}: {} vs {oracle}",
                    sol.objective()
                );
                // the accepted values dominate the true attacker values
                let x = sol.stats.x.as_ref().unwrap();
                let d = inst.network().interdictable().len();
                let plan: Vec<bool> = x[..d].iter().map(|&v| v > 0.5).collect();
                let sigma = plan_sigma(inst.network(), &plan);
                for (k, p) in pairs(&inst).iter().enumerate() {
                    let h = max_reliability_labels(inst.network(), &sigma, p.t).pi[p.s];
                    assert!(x[d + k] >= h - 1e-6);
                }
            }
        }
    }
}
