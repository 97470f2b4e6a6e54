use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Instance, Scenario};
use crate::network::{max_reliability_labels, Arc, Network};

/// How interdicted evasion probabilities relate to `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QRegime {
    /// `q = factor * r` on every interdictable arc.
    Factor(f64),
    Zero,
    /// A fair coin per arc chooses between `q = factor * r` and `q = 0`.
    Mixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    pub rows: usize,
    pub cols: usize,
    /// Share of arcs that can receive a sensor, rounded to a whole count.
    pub interdictable_fraction: f64,
    pub regime: QRegime,
    pub scenarios: usize,
    /// Restrict destinations to this many distinct nodes.
    pub destinations: Option<usize>,
    pub budget: f64,
    pub seed: u64,
}

impl GridParams {
    pub fn new(rows: usize, cols: usize, regime: QRegime, seed: u64) -> Self {
        GridParams {
            rows,
            cols,
            interdictable_fraction: 0.5,
            regime,
            scenarios: 1,
            destinations: None,
            budget: 1.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot generate instance: {0}")]
pub struct InfeasibleParams(pub String);

/// Directed grid: forward arcs along each row and lateral arcs both ways
/// between neighbouring rows. Costs are 1 and scenario probabilities uniform.
pub fn generate(params: &GridParams) -> Result<Instance, InfeasibleParams> {
    let bad = |m: &str| Err(InfeasibleParams(m.to_string()));
    if params.rows < 2 || params.cols < 2 {
        return bad("grid needs at least 2 rows and 2 columns");
    }
    if params.scenarios == 0 {
        return bad("at least one scenario is required");
    }
    if !(0.0..=1.0).contains(&params.interdictable_fraction) {
        return bad("interdictable fraction must lie in [0, 1]");
    }
    let factor = match params.regime {
        QRegime::Factor(f) | QRegime::Mixed(f) => f,
        QRegime::Zero => 0.0,
    };
    if !(0.0..1.0).contains(&factor) {
        return bad("q factor must lie in [0, 1)");
    }
    if !(params.budget >= 0.0 && params.budget.is_finite()) {
        return bad("budget must be nonnegative");
    }
    if params.destinations == Some(0) {
        return bad("destination pool must be nonempty");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (rows, cols) = (params.rows, params.cols);
    let id = |i: usize, j: usize| i * cols + j;
    let mut ends = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if j + 1 < cols {
                ends.push((id(i, j), id(i, j + 1)));
            }
            if i + 1 < rows {
                ends.push((id(i, j), id(i + 1, j)));
                ends.push((id(i + 1, j), id(i, j)));
            }
        }
    }
    let count = (params.interdictable_fraction * ends.len() as f64).round() as usize;
    let mut chosen = vec![false; ends.len()];
    for k in rand::seq::index::sample(&mut rng, ends.len(), count) {
        chosen[k] = true;
    }
    let arcs: Vec<Arc> = ends
        .iter()
        .zip(&chosen)
        .map(|(&(tail, head), &on)| {
            let r = (rng.gen_range(0.5..=0.99) * 1e4_f64).round() / 1e4;
            if !on {
                return Arc::new(tail, head, r);
            }
            let q = match params.regime {
                QRegime::Factor(f) => f * r,
                QRegime::Zero => 0.0,
                QRegime::Mixed(f) => {
                    if rng.gen_bool(0.5) {
                        f * r
                    } else {
                        0.0
                    }
                }
            };
            Arc::interdictable(tail, head, r, q, 1.0)
        })
        .collect();
    let network = Network::new(rows * cols, arcs).map_err(|e| InfeasibleParams(e.to_string()))?;

    let n = rows * cols;
    let mut targets: Vec<usize> = (0..n).collect();
    if let Some(k) = params.destinations {
        // column 0 cannot be reached from another column
        let mut pool: Vec<usize> = (0..n).filter(|v| v % cols != 0).collect();
        pool.shuffle(&mut rng);
        pool.truncate(k);
        pool.sort_unstable();
        targets = pool;
    }
    let sigma = network.uninterdicted_sigma();
    let mut pairs = Vec::new();
    for &t in &targets {
        let pi = max_reliability_labels(&network, &sigma, t).pi;
        pairs.extend((0..n).filter(|&s| s != t && pi[s] > 0.0).map(|s| (s, t)));
    }
    if pairs.len() < params.scenarios {
        return Err(InfeasibleParams(format!(
            "only {} connected origin-destination pairs for {} scenarios",
            pairs.len(),
            params.scenarios
        )));
    }
    let picked: Vec<(usize, usize)> = pairs
        .choose_multiple(&mut rng, params.scenarios)
        .copied()
        .collect();
    let p = 1.0 / params.scenarios as f64;
    let scenarios = picked
        .into_iter()
        .map(|(s, t)| Scenario { s, t, p })
        .collect();
    Instance::new(network, scenarios, params.budget).map_err(|e| InfeasibleParams(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::to_json;

    #[test]
    fn small_grid() {
        let inst = generate(&GridParams::new(2, 2, QRegime::Factor(0.5), 7)).unwrap();
        assert_eq!(inst.network().node_count(), 4);
        let total: f64 = inst.scenarios().iter().map(|s| s.p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for &a in inst.network().interdictable() {
            let arc = inst.network().arc(a);
            assert!((arc.q() - 0.5 * arc.r).abs() < 1e-15);
            assert_eq!(arc.interdiction.unwrap().cost, 1.0);
        }
    }

    #[test]
    fn deterministic() {
        let p = GridParams {
            scenarios: 6,
            ..GridParams::new(4, 5, QRegime::Mixed(0.1), 42)
        };
        assert_eq!(to_json(&generate(&p).unwrap()), to_json(&generate(&p).unwrap()));
        let other = GridParams { seed: 43, ..p.clone() };
        assert_ne!(to_json(&generate(&p).unwrap()), to_json(&generate(&other).unwrap()));
    }

    #[test]
    fn zero_regime() {
        let inst = generate(&GridParams::new(3, 3, QRegime::Zero, 1)).unwrap();
        assert!(!inst.network().interdictable().is_empty());
        for &a in inst.network().interdictable() {
            assert_eq!(inst.network().arc(a).q(), 0.0);
        }
    }

    #[test]
    fn destination_pool_and_counts() {
        let p = GridParams {
            scenarios: 50,
            destinations: Some(10),
            interdictable_fraction: 0.25,
            ..GridParams::new(15, 15, QRegime::Factor(0.5), 3)
        };
        let inst = generate(&p).unwrap();
        assert_eq!(inst.scenarios().len(), 50);
        assert!(inst.destinations().len() <= 10);
        let arcs = inst.network().arcs().len();
        assert_eq!(
            inst.network().interdictable().len(),
            (0.25 * arcs as f64).round() as usize
        );
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate(&GridParams::new(1, 4, QRegime::Zero, 0)).is_err());
        let too_many = GridParams {
            scenarios: 1000,
            ..GridParams::new(2, 2, QRegime::Zero, 0)
        };
        assert!(generate(&too_many).is_err());
        assert!(generate(&GridParams::new(3, 3, QRegime::Factor(1.0), 0)).is_err());
    }
}
