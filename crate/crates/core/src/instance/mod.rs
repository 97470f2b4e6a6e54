//! Instances: a network, a distribution over origin-destination pairs and a
//! sensor budget.

mod brute;
mod generate;
mod io;

use std::collections::BTreeMap;

use crate::error::ValidationError;
use crate::network::{max_reliability_labels, plan_sigma, Network, NodeId};

pub use brute::{brute_force, BruteForce, TooLarge, BRUTE_FORCE_LIMIT};
pub use generate::{generate, GridParams, InfeasibleParams, QRegime};
pub use io::{from_json, load, save, to_json, InstanceError};

const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub s: NodeId,
    pub t: NodeId,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    network: Network,
    scenarios: Vec<Scenario>,
    budget: f64,
}

impl Instance {
    /// Validates the data and renormalizes probabilities that are off from
    /// one by more than rounding noise.
    pub fn new(
        network: Network,
        mut scenarios: Vec<Scenario>,
        budget: f64,
    ) -> Result<Self, ValidationError> {
        // zero is admitted: it fixes every plan to the empty one
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(ValidationError::new("budget", "must be nonnegative"));
        }
        if scenarios.is_empty() {
            return Err(ValidationError::new("scenarios", "at least one is required"));
        }
        let n = network.node_count();
        for (k, sc) in scenarios.iter().enumerate() {
            let at = |field: &str| format!("scenarios[{k}].{field}");
            if sc.s >= n {
                return Err(ValidationError::new(at("s"), "node id out of range"));
            }
            if sc.t >= n {
                return Err(ValidationError::new(at("t"), "node id out of range"));
            }
            if sc.s == sc.t {
                return Err(ValidationError::new(at("t"), "origin equals destination"));
            }
            if !(sc.p > 0.0 && sc.p.is_finite()) {
                return Err(ValidationError::new(at("p"), "must be positive"));
            }
        }
        let total: f64 = scenarios.iter().map(|sc| sc.p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(ValidationError::new(
                "scenarios",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        if (total - 1.0).abs() > 4.0 * scenarios.len() as f64 * f64::EPSILON {
            for sc in &mut scenarios {
                sc.p /= total;
            }
        }

        let sigma = network.uninterdicted_sigma();
        let mut labels = BTreeMap::new();
        for (k, sc) in scenarios.iter().enumerate() {
            let pi = labels
                .entry(sc.t)
                .or_insert_with(|| max_reliability_labels(&network, &sigma, sc.t).pi);
            if pi[sc.s] <= 0.0 {
                return Err(ValidationError::new(
                    format!("scenarios[{k}]"),
                    format!("no path from {} to {}", sc.s, sc.t),
                ));
            }
        }
        Ok(Instance {
            network,
            scenarios,
            budget,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Distinct destinations in increasing order.
    pub fn destinations(&self) -> Vec<NodeId> {
        let mut t: Vec<NodeId> = self.scenarios.iter().map(|sc| sc.t).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Interdiction cost per decision slot.
    pub fn costs(&self) -> Vec<f64> {
        self.network
            .interdictable()
            .iter()
            .map(|&a| self.network.arc(a).interdiction.map_or(0.0, |i| i.cost))
            .collect()
    }

    /// Expected reliability of the attacker's best path under `plan`.
    pub fn evaluate(&self, plan: &[bool]) -> f64 {
        let sigma = plan_sigma(&self.network, plan);
        let mut labels = BTreeMap::new();
        self.scenarios
            .iter()
            .map(|sc| {
                let pi = labels
                    .entry(sc.t)
                    .or_insert_with(|| max_reliability_labels(&self.network, &sigma, sc.t).pi);
                sc.p * pi[sc.s]
            })
            .sum()
    }
}

/// Sensor placement over the interdictable arcs, indexed by decision slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterdictionPlan {
    pub x: Vec<bool>,
}

impl InterdictionPlan {
    pub fn empty(instance: &Instance) -> Self {
        InterdictionPlan {
            x: vec![false; instance.network().interdictable().len()],
        }
    }

    /// Rounds a solver vector over the decision slots.
    pub fn from_values(values: &[f64]) -> Self {
        InterdictionPlan {
            x: values.iter().map(|&v| v >= 0.5).collect(),
        }
    }

    pub fn cost(&self, instance: &Instance) -> f64 {
        instance
            .costs()
            .iter()
            .zip(&self.x)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c)
            .sum()
    }

    pub fn is_affordable(&self, instance: &Instance) -> bool {
        self.cost(instance) <= instance.budget() + 1e-9
    }

    /// Arc ids that receive a sensor.
    pub fn arcs(&self, instance: &Instance) -> Vec<usize> {
        let d = instance.network().interdictable();
        self.x
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(k, _)| d[k])
            .collect()
    }
}
