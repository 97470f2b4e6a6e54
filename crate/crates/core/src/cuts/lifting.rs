//! Subadditive lifting of the base inequalities for paths whose interdictable
//! arcs all have `q > 0`.
//!
//! With `alpha_a = log r_a - log q_a` and `beta = -log r(P)` the path value is
//! `h(S) = exp(-alpha(S) - beta)`. The lifting functions below are evaluated
//! in closed form from prefix sums of the sorted `alpha` values.

use super::{AffineCut, CutError, PathFunction};
use crate::engine::CutKind;

/// Marginals this small are dropped from the lifting order.
const RHO_FLOOR: f64 = 1e-15;

/// Which arcs a context orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftingOrder {
    /// Arcs outside `S`, for `zeta` and `phi`.
    Complement,
    /// Arcs inside `S`, for `xi` and `psi`.
    Members,
}

/// Sorted arcs, prefix sums `A_k` and marginals for one interdiction set.
#[derive(Debug, Clone)]
pub struct LiftingContext {
    order: LiftingOrder,
    h_set: f64,
    alpha_set: f64,
    /// Member indices in non-increasing `alpha`, ties by arc id.
    ranked: Vec<usize>,
    alpha: Vec<f64>,
    /// `rho_k(S)` for the complement order, `rho_k(S\{k})` for the member order.
    rho: Vec<f64>,
    /// `A_0 = 0, A_1, ..., A_m`.
    prefix: Vec<f64>,
    rho_prefix: Vec<f64>,
}

impl LiftingContext {
    pub fn new(pf: &PathFunction, set: &[usize], order: LiftingOrder) -> Result<Self, CutError> {
        Self::from_mask(pf, &pf.mask(set), order)
    }

    pub(crate) fn from_mask(
        pf: &PathFunction,
        mask: &[bool],
        order: LiftingOrder,
    ) -> Result<Self, CutError> {
        if pf.has_zero() {
            return Err(CutError::MixedQ);
        }
        let members = pf.members();
        let h_set = pf.h_mask(mask);
        let alpha_set = members
            .iter()
            .zip(mask)
            .filter(|(_, &inside)| inside)
            .map(|(m, _)| m.alpha())
            .sum();

        let mut ranked: Vec<usize> = Vec::new();
        let mut rho_of = Vec::new();
        for k in 0..members.len() {
            let rho = match order {
                LiftingOrder::Complement if !mask[k] => pf.rho_mask(k, mask),
                LiftingOrder::Members if mask[k] => {
                    let mut rest = mask.to_vec();
                    rest[k] = false;
                    pf.rho_mask(k, &rest)
                }
                _ => continue,
            };
            if rho.abs() >= RHO_FLOOR {
                ranked.push(k);
                rho_of.push((k, rho));
            }
        }
        ranked.sort_by(|&i, &j| {
            members[j]
                .alpha()
                .total_cmp(&members[i].alpha())
                .then(members[i].arc.cmp(&members[j].arc))
        });
        let alpha: Vec<f64> = ranked.iter().map(|&k| members[k].alpha()).collect();
        let rho: Vec<f64> = ranked
            .iter()
            .map(|&k| rho_of.iter().find(|&&(i, _)| i == k).unwrap().1)
            .collect();
        let mut prefix = vec![0.0];
        let mut rho_prefix = vec![0.0];
        for (a, r) in alpha.iter().zip(&rho) {
            prefix.push(prefix.last().unwrap() + a);
            rho_prefix.push(rho_prefix.last().unwrap() + r);
        }
        Ok(LiftingContext {
            order,
            h_set,
            alpha_set,
            ranked,
            alpha,
            rho,
            prefix,
            rho_prefix,
        })
    }

    pub fn order(&self) -> LiftingOrder {
        self.order
    }

    /// `h(S)`.
    pub fn h_set(&self) -> f64 {
        self.h_set
    }

    /// `alpha(S)`.
    pub fn alpha_set(&self) -> f64 {
        self.alpha_set
    }

    /// Member indices in lifting order.
    pub fn ranked(&self) -> &[usize] {
        &self.ranked
    }

    /// Prefix sums `A_0..=A_m`.
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    fn zeta_at(&self, k: usize, eta: f64) -> f64 {
        -self.h_set * (-self.prefix[k] - eta).exp() + self.rho_prefix[k] + self.h_set
    }

    fn xi_at(&self, k: usize, eta: f64) -> f64 {
        -self.h_set * (self.prefix[k] - eta).exp() - self.rho_prefix[k] + self.h_set
    }
}

/// Largest decrease of `h` from adding arcs outside `S` with total `alpha`
/// at most `-eta`, relaxed to fractional use of the last arc. Returns the
/// value and the number of arcs consumed.
pub fn zeta(ctx: &LiftingContext, eta: f64) -> (f64, usize) {
    debug_assert_eq!(ctx.order, LiftingOrder::Complement);
    let m = ctx.alpha.len();
    let mut k = 0;
    while k < m && ctx.prefix[k] + eta < 0.0 {
        k += 1;
    }
    (ctx.zeta_at(k, eta), k)
}

/// Concave envelope of `zeta`: each convex kink at `-A_{k-1}` is replaced by
/// the tangent line of slope `rho_k / alpha_k`.
pub fn phi(ctx: &LiftingContext, eta: f64) -> f64 {
    debug_assert_eq!(ctx.order, LiftingOrder::Complement);
    for k in 2..=ctx.alpha.len() {
        let a = ctx.alpha[k - 1];
        // -log(-rho_k(S) / alpha_k) - alpha(S) - beta, with h(S) divided out
        let mu = -(-(-a).exp_m1() / a).ln();
        let hi = mu - ctx.prefix[k - 1];
        if mu - ctx.prefix[k] <= eta && eta <= hi {
            return zeta(ctx, hi).0 + ctx.rho[k - 1] * (hi - eta) / a;
        }
    }
    zeta(ctx, eta).0
}

/// Counterpart of [`zeta`] for removing arcs of `S` with total `alpha` at
/// most `eta`.
pub fn xi(ctx: &LiftingContext, eta: f64) -> (f64, usize) {
    debug_assert_eq!(ctx.order, LiftingOrder::Members);
    let n = ctx.alpha.len();
    let mut k = 0;
    while k < n && ctx.prefix[k] < eta {
        k += 1;
    }
    (ctx.xi_at(k, eta), k)
}

/// Concave envelope of `xi`, bridging the kink at `A_{k-1}`.
pub fn psi(ctx: &LiftingContext, eta: f64) -> f64 {
    debug_assert_eq!(ctx.order, LiftingOrder::Members);
    for k in 2..=ctx.alpha.len() {
        let a = ctx.alpha[k - 1];
        // alpha(S) + beta + log(-rho_k(S\{k}) / alpha_k), with h(S) divided out
        let nu = (a.exp_m1() / a).ln();
        let hi = ctx.prefix[k] - nu;
        if ctx.prefix[k - 1] - nu <= eta && eta <= hi {
            return xi(ctx, hi).0 + ctx.rho[k - 1] * (hi - eta) / a;
        }
    }
    xi(ctx, eta).0
}

/// `pi >= h(S) - sum_{a in S} phi(-alpha_a)(1 - x_a) + sum_{a not in S} rho_a(S) x_a`.
pub fn lifted_cut_1(pf: &PathFunction, set: &[usize]) -> Result<AffineCut, CutError> {
    lifted_1_mask(pf, &pf.mask(set))
}

pub(crate) fn lifted_1_mask(pf: &PathFunction, mask: &[bool]) -> Result<AffineCut, CutError> {
    let ctx = LiftingContext::from_mask(pf, mask, LiftingOrder::Complement)?;
    let mut constant = ctx.h_set;
    let coefs: Vec<f64> = pf
        .members()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if mask[k] {
                let v = phi(&ctx, -m.alpha());
                constant -= v;
                v
            } else {
                pf.rho_mask(k, mask)
            }
        })
        .collect();
    Ok(pf.cut(CutKind::Lifted1, constant, &coefs))
}

/// `pi >= h(S) - sum_{a in S} rho_a(S\{a})(1 - x_a) - sum_{a not in S} psi(alpha_a) x_a`.
pub fn lifted_cut_2(pf: &PathFunction, set: &[usize]) -> Result<AffineCut, CutError> {
    lifted_2_mask(pf, &pf.mask(set))
}

pub(crate) fn lifted_2_mask(pf: &PathFunction, mask: &[bool]) -> Result<AffineCut, CutError> {
    let ctx = LiftingContext::from_mask(pf, mask, LiftingOrder::Members)?;
    let mut constant = ctx.h_set;
    let coefs: Vec<f64> = pf
        .members()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if mask[k] {
                let mut rest = mask.to_vec();
                rest[k] = false;
                let v = pf.rho_mask(k, &rest);
                constant -= v;
                v
            } else {
                -psi(&ctx, m.alpha())
            }
        })
        .collect();
    Ok(pf.cut(CutKind::Lifted2, constant, &coefs))
}
