use thiserror::Error;

use super::Instance;

/// Largest number of affordable plans the oracle will evaluate.
pub const BRUTE_FORCE_LIMIT: usize = 2_000_000;
const MAX_SLOTS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub objective: f64,
    pub plan: Vec<bool>,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("brute force refused: {slots} interdictable arcs, {plans} affordable plans")]
pub struct TooLarge {
    pub slots: usize,
    pub plans: usize,
}

/// Visits affordable plans in lexicographic order of `x`, with `x[0]` most
/// significant and 0 before 1. `visit` returns false to stop.
fn enumerate(costs: &[f64], budget: f64, mut visit: impl FnMut(&[bool]) -> bool) {
    fn go(
        k: usize,
        spent: f64,
        costs: &[f64],
        budget: f64,
        x: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[bool]) -> bool,
    ) -> bool {
        if k == costs.len() {
            return visit(x);
        }
        x[k] = false;
        if !go(k + 1, spent, costs, budget, x, visit) {
            return false;
        }
        if spent + costs[k] <= budget + 1e-9 {
            x[k] = true;
            let more = go(k + 1, spent + costs[k], costs, budget, x, visit);
            x[k] = false;
            return more;
        }
        true
    }
    let mut x = vec![false; costs.len()];
    go(0, 0.0, costs, budget, &mut x, &mut visit);
}

/// Exhaustive optimum over every affordable plan; ties keep the
/// lexicographically smallest plan.
pub fn brute_force(instance: &Instance) -> Result<BruteForce, TooLarge> {
    let costs = instance.costs();
    let mut plans = 0;
    enumerate(&costs, instance.budget(), |_| {
        plans += 1;
        plans <= BRUTE_FORCE_LIMIT
    });
    if costs.len() > MAX_SLOTS || plans > BRUTE_FORCE_LIMIT {
        return Err(TooLarge {
            slots: costs.len(),
            plans,
        });
    }
    let mut best = BruteForce {
        objective: f64::INFINITY,
        plan: Vec::new(),
        evaluated: plans,
    };
    enumerate(&costs, instance.budget(), |x| {
        let v = instance.evaluate(x);
        if v < best.objective {
            best.objective = v;
            best.plan = x.to_vec();
        }
        true
    });
    Ok(best)
}
