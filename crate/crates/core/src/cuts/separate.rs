//! Separation of the path inequalities at a master solution `(x, pi)`.

use super::lifting::{lifted_1_mask, lifted_2_mask};
use super::{mixed_from_mask, q_zero_cut, AffineCut, Lifting, PathFunction};

/// Minimum violation for a cut to be returned.
pub const VIOLATION_TOL: f64 = 1e-6;

const ASCENT_ITERS: usize = 200;
const DENOM_FLOOR: f64 = 1e-12;

fn keep_violated(cuts: Vec<AffineCut>, x: &[f64], pi: f64) -> Vec<AffineCut> {
    let mut out: Vec<AffineCut> = Vec::new();
    for cut in cuts {
        if cut.violation(x, pi) >= VIOLATION_TOL && !out.iter().any(|c| c.same_as(&cut)) {
            out.push(cut);
        }
    }
    out
}

/// Cuts violated at a binary `x`, built from `S = {a : x_a = 1}`.
///
/// Whenever `pi < h(S) - 1e-6` the result is nonempty: every family used is
/// tight at `x = χ^S` except when a `q = 0` arc is interdicted, in which case
/// `h(S) = 0` and nothing is violated.
pub fn separate_integer(pf: &PathFunction, x: &[f64], pi: f64) -> Vec<AffineCut> {
    let mask = pf.support(x);
    if pi >= pf.h_mask(&mask) - VIOLATION_TOL {
        return Vec::new();
    }
    let cuts = if !pf.has_zero() {
        vec![
            lifted_1_mask(pf, &mask).expect("no q = 0 arcs"),
            lifted_2_mask(pf, &mask).expect("no q = 0 arcs"),
        ]
    } else if !pf.has_positive() {
        vec![q_zero_cut(pf).expect("all q = 0")]
    } else {
        let plus = pf.positive_part();
        let inner = plus.support(x);
        [Lifting::First, Lifting::Second]
            .into_iter()
            .map(|l| mixed_from_mask(pf, &plus, &inner, l).expect("mixed path"))
            .collect()
    };
    keep_violated(cuts, x, pi)
}

/// Heuristic separation at a fractional `x`.
///
/// For paths without `q = 0` arcs, two continuous problems over `z ∈ [0,1]`
/// are maximized and greedily rounded to the sets used by the two lifted
/// cuts. Paths with only `q = 0` arcs use the exact hull inequality. Mixed
/// paths run the same search on their `q > 0` part with `pi` shifted by the
/// `q = 0` terms of the mixed cut.
pub fn separate_fractional(pf: &PathFunction, x: &[f64], pi: f64) -> Vec<AffineCut> {
    let binary = pf
        .members()
        .iter()
        .all(|m| x[m.slot].min(1.0 - x[m.slot]).abs() <= 1e-9);
    if binary {
        return separate_integer(pf, x, pi);
    }
    if !pf.has_zero() {
        let [first, second] = candidate_sets(pf, x, pi);
        let cuts = vec![
            lifted_1_mask(pf, &first).expect("no q = 0 arcs"),
            lifted_2_mask(pf, &second).expect("no q = 0 arcs"),
        ];
        return keep_violated(cuts, x, pi);
    }
    if !pf.has_positive() {
        return keep_violated(vec![q_zero_cut(pf).expect("all q = 0")], x, pi);
    }
    let plus = pf.positive_part();
    let zero_load: f64 = pf
        .members()
        .iter()
        .filter(|m| m.q == 0.0)
        .map(|m| x[m.slot])
        .sum();
    let shifted = pi + pf.base() * zero_load;
    let [first, second] = candidate_sets(&plus, x, shifted);
    let cuts = vec![
        mixed_from_mask(pf, &plus, &first, Lifting::First).expect("mixed path"),
        mixed_from_mask(pf, &plus, &second, Lifting::Second).expect("mixed path"),
    ];
    keep_violated(cuts, x, pi)
}

/// `f(z) = (1 - pi) / (1 - exp(-sum alpha z - beta)) + sum linear_k z_k`.
struct Surrogate {
    scale: f64,
    beta: f64,
    alpha: Vec<f64>,
    linear: Vec<f64>,
}

impl Surrogate {
    fn load(&self, z: &[f64]) -> f64 {
        self.alpha.iter().zip(z).map(|(a, z)| a * z).sum()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let denom = (-(-self.load(z) - self.beta).exp_m1()).max(DENOM_FLOOR);
        self.scale / denom + self.linear.iter().zip(z).map(|(c, z)| c * z).sum::<f64>()
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let e = (-self.load(z) - self.beta).exp();
        let denom = 1.0 - e;
        let d_first = if denom > DENOM_FLOOR {
            -self.scale * e / (denom * denom)
        } else {
            0.0
        };
        self.alpha
            .iter()
            .zip(&self.linear)
            .map(|(a, c)| d_first * a + c)
            .collect()
    }

    /// Projected gradient ascent with backtracking from `start`.
    fn ascend(&self, start: Vec<f64>) -> Vec<f64> {
        let mut z = start;
        let mut value = self.value(&z);
        let mut step = 1.0;
        for _ in 0..ASCENT_ITERS {
            let g = self.gradient(&z);
            let mut moved = false;
            while step >= 1e-12 {
                let trial: Vec<f64> = z
                    .iter()
                    .zip(&g)
                    .map(|(z, g)| (z + step * g).clamp(0.0, 1.0))
                    .collect();
                let gain: f64 = g.iter().zip(&trial).zip(&z).map(|((g, t), z)| g * (t - z)).sum();
                let tv = self.value(&trial);
                if gain > 0.0 && tv >= value + 1e-4 * gain {
                    moved = trial.iter().zip(&z).any(|(t, z)| (t - z).abs() > 1e-12);
                    z = trial;
                    value = tv;
                    step = (step * 2.0).min(1e6);
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        z
    }

    /// Rounds the fractional component whose best rounding loses the least
    /// objective, repeatedly; ties go to rounding down, then to lower index.
    fn round(&self, mut z: Vec<f64>) -> Vec<bool> {
        let fractional = |v: f64| v > 1e-9 && v < 1.0 - 1e-9;
        loop {
            let mut best: Option<(f64, usize, f64)> = None;
            let open: Vec<usize> = (0..z.len()).filter(|&k| fractional(z[k])).collect();
            for target in [0.0, 1.0] {
                for &k in &open {
                    let keep = z[k];
                    z[k] = target;
                    let v = self.value(&z);
                    z[k] = keep;
                    if best.is_none_or(|(bv, _, _)| v > bv) {
                        best = Some((v, k, target));
                    }
                }
            }
            match best {
                Some((_, k, target)) => z[k] = target,
                None => break,
            }
        }
        z.into_iter().map(|v| v >= 0.5).collect()
    }
}

/// Sets for the first and second lifted cut on a path without `q = 0` arcs.
fn candidate_sets(pf: &PathFunction, x: &[f64], pi: f64) -> [Vec<bool>; 2] {
    let members = pf.members();
    let h0 = pf.base();
    let alpha: Vec<f64> = members.iter().map(|m| m.alpha()).collect();
    let rho0: Vec<f64> = members.iter().map(|m| h0 * (m.q / m.r - 1.0)).collect();
    let xbar: Vec<f64> = members.iter().map(|m| x[m.slot].clamp(0.0, 1.0)).collect();

    let first = Surrogate {
        scale: 1.0 - pi,
        beta: pf.beta(),
        alpha: alpha.clone(),
        linear: rho0
            .iter()
            .zip(&xbar)
            .map(|(r, x)| -r / (h0 + 1.0) * x)
            .collect(),
    };
    let second = Surrogate {
        scale: 1.0 - pi,
        beta: pf.beta(),
        alpha,
        linear: members
            .iter()
            .zip(&rho0)
            .zip(&xbar)
            .map(|((m, r), x)| -r / (h0 * m.q / m.r + 1.0) * (1.0 - x))
            .collect(),
    };
    [
        first.round(first.ascend(xbar.clone())),
        second.round(second.ascend(xbar)),
    ]
}
