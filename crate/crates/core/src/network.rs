//! Directed network with evasion probabilities and the maximum-reliability
//! label-setting routines shared by every solver.
//!
//! Reliabilities are products of per-arc probabilities in `[0, 1]`, so a
//! label can only shrink when a path is extended. That makes a
//! Dijkstra-style label-setting search exact for the max-product problem:
//! the node with the largest tentative label is final when it is popped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::error::ValidationError;

pub type NodeId = usize;
pub type ArcId = usize;

/// Sensor data for an interdictable arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interdiction {
    /// Evasion probability once a sensor is installed, in `[0, r)`.
    pub q: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    /// Evasion probability without a sensor, in `(0, 1]`.
    pub r: f64,
    pub interdiction: Option<Interdiction>,
}

impl Arc {
    pub fn new(tail: NodeId, head: NodeId, r: f64) -> Self {
        Arc {
            tail,
            head,
            r,
            interdiction: None,
        }
    }

    pub fn interdictable(tail: NodeId, head: NodeId, r: f64, q: f64, cost: f64) -> Self {
        Arc {
            tail,
            head,
            r,
            interdiction: Some(Interdiction { q, cost }),
        }
    }

    /// Interdicted evasion probability, using `q = r` for arcs outside `D`.
    pub fn q(&self) -> f64 {
        self.interdiction.map_or(self.r, |i| i.q)
    }

    pub fn is_interdictable(&self) -> bool {
        self.interdiction.is_some()
    }
}

/// Immutable directed graph. Interdictable arcs are additionally numbered
/// `0..|D|` in arc-id order; decision vectors `x` use that numbering.
#[derive(Debug, Clone)]
pub struct Network {
    node_count: usize,
    arcs: Vec<Arc>,
    interdictable: Vec<ArcId>,
    slot: Vec<Option<usize>>,
    incoming: Vec<Vec<ArcId>>,
    outgoing: Vec<Vec<ArcId>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count && self.arcs == other.arcs
    }
}

impl Network {
    pub fn new(node_count: usize, arcs: Vec<Arc>) -> Result<Self, ValidationError> {
        if node_count == 0 {
            return Err(ValidationError::new("nodes", "must be positive"));
        }
        let mut seen = BTreeMap::new();
        for (id, arc) in arcs.iter().enumerate() {
            let at = |field: &str| format!("arcs[{id}].{field}");
            if arc.tail >= node_count {
                return Err(ValidationError::new(at("tail"), "node id out of range"));
            }
            if arc.head >= node_count {
                return Err(ValidationError::new(at("head"), "node id out of range"));
            }
            if arc.tail == arc.head {
                return Err(ValidationError::new(at("head"), "self-loop"));
            }
            if let Some(first) = seen.insert((arc.tail, arc.head), id) {
                return Err(ValidationError::new(
                    format!("arcs[{id}]"),
                    format!("duplicates arcs[{first}]"),
                ));
            }
            if !(arc.r > 0.0 && arc.r <= 1.0) {
                return Err(ValidationError::new(at("r"), "must lie in (0, 1]"));
            }
            if let Some(Interdiction { q, cost }) = arc.interdiction {
                if !(q >= 0.0 && q < arc.r) {
                    return Err(ValidationError::new(at("q"), "must lie in [0, r)"));
                }
                if !(cost > 0.0 && cost.is_finite()) {
                    return Err(ValidationError::new(at("cost"), "must be positive"));
                }
            }
        }

        let mut interdictable = Vec::new();
        let mut slot = vec![None; arcs.len()];
        let mut incoming = vec![Vec::new(); node_count];
        let mut outgoing = vec![Vec::new(); node_count];
        for (id, arc) in arcs.iter().enumerate() {
            if arc.is_interdictable() {
                slot[id] = Some(interdictable.len());
                interdictable.push(id);
            }
            incoming[arc.head].push(id);
            outgoing[arc.tail].push(id);
        }
        Ok(Network {
            node_count,
            arcs,
            interdictable,
            slot,
            incoming,
            outgoing,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id]
    }

    /// Arc ids of the interdictable set `D`, indexed by decision slot.
    pub fn interdictable(&self) -> &[ArcId] {
        &self.interdictable
    }

    /// Decision slot of an arc, if it is interdictable.
    pub fn slot(&self, arc: ArcId) -> Option<usize> {
        self.slot[arc]
    }

    pub fn incoming(&self, node: NodeId) -> &[ArcId] {
        &self.incoming[node]
    }

    pub fn outgoing(&self, node: NodeId) -> &[ArcId] {
        &self.outgoing[node]
    }

    pub fn uninterdicted_sigma(&self) -> Vec<f64> {
        self.arcs.iter().map(|a| a.r).collect()
    }
}

/// Per-node maximum reliability towards a fixed destination.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityLabels {
    pub destination: NodeId,
    pub pi: Vec<f64>,
    /// First arc of the best path from each node; `None` at the destination
    /// and wherever `pi` is zero.
    pub successor: Vec<Option<ArcId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no path with positive reliability from node {from} to node {to}")]
pub struct NoPath {
    pub from: NodeId,
    pub to: NodeId,
}

/// A simple path stored as its arc sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub origin: NodeId,
    pub destination: NodeId,
    pub arcs: Vec<ArcId>,
}

impl Path {
    /// Checks chaining and simplicity.
    pub fn new(
        network: &Network,
        origin: NodeId,
        destination: NodeId,
        arcs: Vec<ArcId>,
    ) -> Result<Self, ValidationError> {
        let mut visited = vec![false; network.node_count()];
        let mut at = origin;
        visited[at] = true;
        for (k, &id) in arcs.iter().enumerate() {
            let arc = network.arc(id);
            if arc.tail != at {
                return Err(ValidationError::new(format!("path[{k}]"), "does not chain"));
            }
            at = arc.head;
            if std::mem::replace(&mut visited[at], true) {
                return Err(ValidationError::new(format!("path[{k}]"), "revisits a node"));
            }
        }
        if at != destination {
            return Err(ValidationError::new("path", "does not end at the destination"));
        }
        Ok(Path {
            origin,
            destination,
            arcs,
        })
    }

    pub fn reliability(&self, sigma: &[f64]) -> f64 {
        self.arcs.iter().map(|&a| sigma[a]).product()
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    value: f64,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting search towards `destination` for any arc extension rule
/// `extend(arc, label_of_head)` that is monotone and never exceeds its
/// argument. Ties between arcs are broken towards the smaller arc id.
pub fn max_labels_with<F>(network: &Network, destination: NodeId, extend: F) -> ReliabilityLabels
where
    F: Fn(ArcId, f64) -> f64,
{
    let n = network.node_count();
    let mut pi = vec![0.0; n];
    let mut successor: Vec<Option<ArcId>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    pi[destination] = 1.0;
    heap.push(Entry {
        value: 1.0,
        node: destination,
    });
    while let Some(Entry { value, node }) = heap.pop() {
        if done[node] || value < pi[node] {
            continue;
        }
        done[node] = true;
        for &a in network.incoming(node) {
            let tail = network.arc(a).tail;
            if done[tail] {
                continue;
            }
            let cand = extend(a, value);
            if cand <= 0.0 {
                continue;
            }
            let better = cand > pi[tail]
                || (cand == pi[tail] && successor[tail].is_none_or(|s| a < s));
            if better {
                let raised = cand > pi[tail];
                pi[tail] = cand;
                successor[tail] = Some(a);
                if raised {
                    heap.push(Entry {
                        value: cand,
                        node: tail,
                    });
                }
            }
        }
    }
    ReliabilityLabels {
        destination,
        pi,
        successor,
    }
}

/// Maximum product of `sigma` over simple paths from every node to `t`.
pub fn max_reliability_labels(network: &Network, sigma: &[f64], t: NodeId) -> ReliabilityLabels {
    debug_assert_eq!(sigma.len(), network.arcs().len());
    max_labels_with(network, t, |a, v| sigma[a] * v)
}

/// Uninterdicted maximum reliabilities `u[t][j]` for each destination.
pub fn uninterdicted_bounds(
    network: &Network,
    destinations: impl IntoIterator<Item = NodeId>,
) -> BTreeMap<NodeId, Vec<f64>> {
    let sigma = network.uninterdicted_sigma();
    destinations
        .into_iter()
        .map(|t| (t, max_reliability_labels(network, &sigma, t).pi))
        .collect()
}

/// Follows successor arcs from `s` to the labels' destination.
pub fn extract_path(
    network: &Network,
    labels: &ReliabilityLabels,
    s: NodeId,
) -> Result<Path, NoPath> {
    let t = labels.destination;
    if s != t && labels.pi[s] <= 0.0 {
        return Err(NoPath { from: s, to: t });
    }
    let mut arcs = Vec::new();
    let mut at = s;
    while at != t {
        let a = labels.successor[at].ok_or(NoPath { from: s, to: t })?;
        arcs.push(a);
        at = network.arc(a).head;
    }
    Ok(Path {
        origin: s,
        destination: t,
        arcs,
    })
}

/// Arc reliabilities under a binary interdiction plan: `r^(1-x) q^x`.
pub fn plan_sigma(network: &Network, plan: &[bool]) -> Vec<f64> {
    debug_assert_eq!(plan.len(), network.interdictable().len());
    network
        .arcs()
        .iter()
        .enumerate()
        .map(|(id, arc)| match network.slot(id) {
            Some(k) if plan[k] => arc.q(),
            _ => arc.r,
        })
        .collect()
}

/// Convex combination `(1 - x) r + x q` for fractional `x`.
pub fn fractional_sigma(network: &Network, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), network.interdictable().len());
    network
        .arcs()
        .iter()
        .enumerate()
        .map(|(id, arc)| match network.slot(id) {
            Some(k) => (1.0 - x[k]) * arc.r + x[k] * arc.q(),
            None => arc.r,
        })
        .collect()
}

/// Geometric interpolation `r^(1-x) q^x` evaluated at fractional `x`.
/// `0^0` is taken as 1, so `x = 0` on a `q = 0` arc leaves it at `r`.
pub fn power_sigma(network: &Network, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), network.interdictable().len());
    network
        .arcs()
        .iter()
        .enumerate()
        .map(|(id, arc)| match network.slot(id) {
            Some(k) => {
                let xk = x[k].clamp(0.0, 1.0);
                let q = arc.q();
                if xk <= 0.0 {
                    arc.r
                } else if q == 0.0 {
                    0.0
                } else {
                    arc.r.powf(1.0 - xk) * q.powf(xk)
                }
            }
            None => arc.r,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // s=0, a=1, b=2, t=3
    fn diamond() -> Network {
        Network::new(
            4,
            vec![
                Arc::new(0, 1, 0.9),
                Arc::interdictable(1, 3, 0.8, 0.4, 1.0),
                Arc::interdictable(0, 2, 0.7, 0.07, 1.0),
                Arc::new(2, 3, 0.9),
            ],
        )
        .unwrap()
    }

    /// Exhaustive simple-path enumeration, independent of the label search.
    fn brute_best(network: &Network, sigma: &[f64], s: NodeId, t: NodeId) -> f64 {
        fn walk(
            net: &Network,
            sigma: &[f64],
            at: NodeId,
            t: NodeId,
            seen: &mut Vec<bool>,
            acc: f64,
            best: &mut f64,
        ) {
            if at == t {
                *best = best.max(acc);
                return;
            }
            for &a in net.outgoing(at) {
                let h = net.arc(a).head;
                if !seen[h] {
                    seen[h] = true;
                    walk(net, sigma, h, t, seen, acc * sigma[a], best);
                    seen[h] = false;
                }
            }
        }
        let mut seen = vec![false; network.node_count()];
        seen[s] = true;
        let mut best = 0.0;
        walk(network, sigma, s, t, &mut seen, 1.0, &mut best);
        best
    }

    #[test]
    fn line_product() {
        let net = Network::new(3, vec![Arc::new(0, 1, 0.9), Arc::new(1, 2, 0.8)]).unwrap();
        let labels = max_reliability_labels(&net, &[0.9, 0.8], 2);
        assert!((labels.pi[0] - 0.72).abs() < 1e-15);
        assert!((labels.pi[1] - 0.8).abs() < 1e-15);
        assert_eq!(labels.pi[2], 1.0);
    }

    #[test]
    fn diamond_prefers_top() {
        let net = diamond();
        let labels = max_reliability_labels(&net, &net.uninterdicted_sigma(), 3);
        assert!((labels.pi[0] - 0.72).abs() < 1e-15);
        assert_eq!(labels.successor[0], Some(0));
        let path = extract_path(&net, &labels, 0).unwrap();
        assert_eq!(path.arcs, vec![0, 1]);
        assert!((path.reliability(&net.uninterdicted_sigma()) - labels.pi[0]).abs() < 1e-12);
    }

    #[test]
    fn trivial_and_missing_paths() {
        let net = diamond();
        let labels = max_reliability_labels(&net, &net.uninterdicted_sigma(), 3);
        let own = extract_path(&net, &labels, 3).unwrap();
        assert!(own.is_empty());
        assert_eq!(own.reliability(&[]), 1.0);

        let back = max_reliability_labels(&net, &net.uninterdicted_sigma(), 0);
        assert_eq!(back.pi[3], 0.0);
        assert_eq!(extract_path(&net, &back, 3), Err(NoPath { from: 3, to: 0 }));

        let u = uninterdicted_bounds(&net, [3, 0]);
        assert!((u[&3][0] - 0.72).abs() < 1e-15);
        assert_eq!(u[&3][3], 1.0);
        assert_eq!(u[&0][3], 0.0);
    }

    #[test]
    fn equal_paths_pick_smaller_arc() {
        // two parallel two-arc routes with identical products
        let net = Network::new(
            4,
            vec![
                Arc::new(0, 2, 0.5),
                Arc::new(2, 3, 0.8),
                Arc::new(0, 1, 0.5),
                Arc::new(1, 3, 0.8),
            ],
        )
        .unwrap();
        let labels = max_reliability_labels(&net, &net.uninterdicted_sigma(), 3);
        assert_eq!(labels.successor[0], Some(0));
    }

    #[test]
    fn sigma_rules() {
        let net = diamond();
        assert_eq!(plan_sigma(&net, &[false, false]), vec![0.9, 0.8, 0.7, 0.9]);
        assert_eq!(plan_sigma(&net, &[true, false])[1], 0.4);
        let zero = Network::new(2, vec![Arc::interdictable(0, 1, 0.8, 0.0, 1.0)]).unwrap();
        assert_eq!(plan_sigma(&zero, &[true]), vec![0.0]);
        assert_eq!(power_sigma(&zero, &[0.0]), vec![0.8]);
        assert_eq!(power_sigma(&zero, &[0.3]), vec![0.0]);

        let mid = fractional_sigma(&net, &[0.5, 0.0]);
        assert!((mid[1] - 0.6).abs() < 1e-15);
        assert_eq!(fractional_sigma(&net, &[1.0, 0.0])[1], 0.4);
        assert_eq!(fractional_sigma(&net, &[0.0, 0.0])[1], 0.8);
    }

    #[test]
    fn rejects_bad_networks() {
        let bad_q = Network::new(2, vec![Arc::interdictable(0, 1, 0.5, 0.5, 1.0)]);
        assert_eq!(bad_q.unwrap_err().path, "arcs[0].q");
        assert!(Network::new(2, vec![Arc::new(0, 0, 0.5)]).is_err());
        assert!(Network::new(2, vec![Arc::new(0, 1, 0.5), Arc::new(0, 1, 0.4)]).is_err());
        assert!(Network::new(2, vec![Arc::new(0, 2, 0.5)]).is_err());
        assert!(Network::new(2, vec![Arc::new(0, 1, 0.0)]).is_err());
        assert!(Network::new(2, vec![Arc::interdictable(0, 1, 0.5, 0.1, 0.0)]).is_err());
    }

    #[test]
    fn path_checks() {
        let net = diamond();
        assert!(Path::new(&net, 0, 3, vec![0, 1]).is_ok());
        assert!(Path::new(&net, 0, 3, vec![0, 3]).is_err());
        assert!(Path::new(&net, 0, 3, vec![0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_network() -> impl Strategy<Value = (Network, Vec<f64>)> {
            (2usize..=12)
                .prop_flat_map(|n| {
                    let pairs = proptest::collection::vec((0..n, 0..n, 0.0f64..=1.0), 1..40);
                    (Just(n), pairs)
                })
                .prop_map(|(n, raw)| {
                    let mut seen = std::collections::BTreeSet::new();
                    let mut arcs = Vec::new();
                    let mut sigma = Vec::new();
                    for (u, v, s) in raw {
                        if u != v && seen.insert((u, v)) {
                            arcs.push(Arc::new(u, v, 0.5));
                            // snap a few reliabilities to the edges of [0, 1]
                            sigma.push(if s < 0.05 { 0.0 } else if s > 0.95 { 1.0 } else { s });
                        }
                    }
                    if arcs.is_empty() {
                        arcs.push(Arc::new(0, 1, 0.5));
                        sigma.push(0.5);
                    }
                    (Network::new(n, arcs).unwrap(), sigma)
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn labels_match_enumeration((net, sigma) in random_network(), t_raw in 0usize..12) {
                let t = t_raw % net.node_count();
                let labels = max_reliability_labels(&net, &sigma, t);
                for s in 0..net.node_count() {
                    let brute = if s == t { 1.0 } else { brute_best(&net, &sigma, s, t) };
                    prop_assert!((labels.pi[s] - brute).abs() <= 1e-12);
                    if labels.pi[s] > 0.0 {
                        let path = extract_path(&net, &labels, s).unwrap();
                        prop_assert!(Path::new(&net, s, t, path.arcs.clone()).is_ok());
                        prop_assert!((path.reliability(&sigma) - labels.pi[s]).abs() <= 1e-12);
                    }
                }
                // fixed point of the optimality conditions
                for i in 0..net.node_count() {
                    if i == t || labels.pi[i] == 0.0 { continue; }
                    let best = net.outgoing(i).iter()
                        .map(|&a| sigma[a] * labels.pi[net.arc(a).head])
                        .fold(0.0, f64::max);
                    prop_assert!((best - labels.pi[i]).abs() <= 1e-12);
                }
            }

            #[test]
            fn raising_sigma_never_lowers_labels((net, sigma) in random_network(), which in 0usize..40, t_raw in 0usize..12) {
                let t = t_raw % net.node_count();
                let before = max_reliability_labels(&net, &sigma, t);
                let mut raised = sigma.clone();
                let a = which % raised.len();
                raised[a] = (raised[a] + 0.3).min(1.0);
                let after = max_reliability_labels(&net, &raised, t);
                for i in 0..net.node_count() {
                    prop_assert!(after.pi[i] >= before.pi[i] - 1e-15);
                }
            }

            #[test]
            fn sigma_rules_agree_on_binary(bits in proptest::collection::vec(any::<bool>(), 2)) {
                let net = diamond();
                let x: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                let plan = plan_sigma(&net, &bits);
                prop_assert_eq!(&plan, &fractional_sigma(&net, &x));
                prop_assert_eq!(&plan, &power_sigma(&net, &x));
            }
        }
    }
}
