//! Path reliability as a supermodular set function of the interdicted arcs,
//! and the inequalities that bound it from below.

mod lifting;
mod separate;

pub use lifting::{lifted_cut_1, lifted_cut_2, phi, psi, xi, zeta, LiftingContext, LiftingOrder};
pub use separate::{separate_fractional, separate_integer};

use thiserror::Error;

use crate::engine::CutKind;
use crate::network::{ArcId, Network, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CutError {
    #[error("path has interdictable arcs with q = 0; use the mixed cut")]
    MixedQ,
    #[error("path has interdictable arcs with q > 0")]
    NotAllZero,
    #[error("mixed cut needs arcs with q > 0 and arcs with q = 0 on the path")]
    NotMixed,
}

/// One interdictable arc of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    /// Decision slot in `0..|D|`.
    pub slot: usize,
    pub arc: ArcId,
    pub r: f64,
    pub q: f64,
}

impl Member {
    /// `log r - log q`; infinite when `q = 0`.
    pub fn alpha(&self) -> f64 {
        self.r.ln() - self.q.ln()
    }
}

/// `pi >= constant + sum coefs[k].1 * x[coefs[k].0]` over decision slots.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCut {
    pub kind: CutKind,
    pub constant: f64,
    pub coefs: Vec<(usize, f64)>,
}

impl AffineCut {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coefs.iter().map(|&(k, c)| c * x[k]).sum::<f64>()
    }

    /// Positive when `(x, pi)` violates the cut.
    pub fn violation(&self, x: &[f64], pi: f64) -> f64 {
        self.eval(x) - pi
    }

    fn same_as(&self, other: &AffineCut) -> bool {
        (self.constant - other.constant).abs() <= 1e-12
            && self.coefs.len() == other.coefs.len()
            && self
                .coefs
                .iter()
                .zip(&other.coefs)
                .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-12)
    }

    /// Builder used by every family: `constant` plus one coefficient per
    /// member, with `(1 - x)` terms already expanded by the caller.
    fn from_terms(kind: CutKind, constant: f64, members: &[Member], coefs: &[f64]) -> Self {
        let coefs = members
            .iter()
            .zip(coefs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(m, &c)| (m.slot, c))
            .collect();
        AffineCut {
            kind,
            constant,
            coefs,
        }
    }
}

/// `h(S) = r(P) * prod_{a in P∩S} q_a / r_a` for a fixed path `P`.
///
/// Arcs of the path outside `D` only contribute the constant factor `off`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFunction {
    off: f64,
    members: Vec<Member>,
}

impl PathFunction {
    pub fn new(network: &Network, path: &Path) -> Self {
        let mut off = 1.0;
        let mut members = Vec::new();
        for &a in &path.arcs {
            let arc = network.arc(a);
            match network.slot(a) {
                Some(slot) => members.push(Member {
                    slot,
                    arc: a,
                    r: arc.r,
                    q: arc.q(),
                }),
                None => off *= arc.r,
            }
        }
        PathFunction { off, members }
    }

    /// A path function without a backing network: member `k` gets slot and
    /// arc id `k`.
    pub fn from_arcs(off: f64, rq: &[(f64, f64)]) -> Self {
        let members = rq
            .iter()
            .enumerate()
            .map(|(k, &(r, q))| Member {
                slot: k,
                arc: k,
                r,
                q,
            })
            .collect();
        PathFunction { off, members }
    }

    /// Reliability of the arcs outside `D`.
    pub fn off_product(&self) -> f64 {
        self.off
    }

    /// `P ∩ D` in path order.
    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn has_zero(&self) -> bool {
        self.members.iter().any(|m| m.q == 0.0)
    }

    pub fn has_positive(&self) -> bool {
        self.members.iter().any(|m| m.q > 0.0)
    }

    /// `r(P)`.
    pub fn base(&self) -> f64 {
        self.off * self.members.iter().map(|m| m.r).product::<f64>()
    }

    /// `-sum log r_a` over the whole path.
    pub fn beta(&self) -> f64 {
        -self.base().ln()
    }

    /// The restriction to arcs with `q > 0`, with the `q = 0` arcs folded into
    /// the constant factor at their uninterdicted value.
    pub fn positive_part(&self) -> PathFunction {
        let zero: f64 = self
            .members
            .iter()
            .filter(|m| m.q == 0.0)
            .map(|m| m.r)
            .product();
        PathFunction {
            off: self.off * zero,
            members: self.members.iter().copied().filter(|m| m.q > 0.0).collect(),
        }
    }

    /// Membership mask over `members()` for a set of decision slots.
    pub fn mask(&self, set: &[usize]) -> Vec<bool> {
        self.members.iter().map(|m| set.contains(&m.slot)).collect()
    }

    /// Membership mask of the arcs with `x >= 0.5`.
    pub fn support(&self, x: &[f64]) -> Vec<bool> {
        self.members.iter().map(|m| x[m.slot] >= 0.5).collect()
    }

    pub(crate) fn h_mask(&self, mask: &[bool]) -> f64 {
        self.members
            .iter()
            .zip(mask)
            .fold(self.off, |acc, (m, &inside)| acc * if inside { m.q } else { m.r })
    }

    pub(crate) fn rho_mask(&self, k: usize, mask: &[bool]) -> f64 {
        if mask[k] {
            return 0.0;
        }
        let mut with = mask.to_vec();
        with[k] = true;
        self.h_mask(&with) - self.h_mask(mask)
    }

    /// `h(S)` for a set of decision slots; slots off the path are ignored.
    pub fn h(&self, set: &[usize]) -> f64 {
        self.h_mask(&self.mask(set))
    }

    /// `h(S ∪ {a}) - h(S)` for the arc in decision slot `slot`.
    pub fn rho(&self, slot: usize, set: &[usize]) -> f64 {
        match self.members.iter().position(|m| m.slot == slot) {
            Some(k) => self.rho_mask(k, &self.mask(set)),
            None => 0.0,
        }
    }

    /// `h` at a binary decision vector.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.h_mask(&self.support(x))
    }

    pub(crate) fn cut(&self, kind: CutKind, constant: f64, coefs: &[f64]) -> AffineCut {
        AffineCut::from_terms(kind, constant, &self.members, coefs)
    }
}

/// `pi >= h(S) - sum_{a in S} rho_a(D\{a})(1 - x_a) + sum_{a not in S} rho_a(S) x_a`.
pub fn base_cut_9(pf: &PathFunction, set: &[usize]) -> AffineCut {
    base_cut_9_mask(pf, &pf.mask(set))
}

pub(crate) fn base_cut_9_mask(pf: &PathFunction, mask: &[bool]) -> AffineCut {
    let n = pf.members().len();
    let mut constant = pf.h_mask(mask);
    let mut coefs = vec![0.0; n];
    for k in 0..n {
        if mask[k] {
            let mut others = vec![true; n];
            others[k] = false;
            let rho = pf.rho_mask(k, &others);
            constant -= rho;
            coefs[k] = rho;
        } else {
            coefs[k] = pf.rho_mask(k, mask);
        }
    }
    pf.cut(CutKind::Base9, constant, &coefs)
}

/// `pi >= h(S) - sum_{a in S} rho_a(S\{a})(1 - x_a) + sum_{a not in S} rho_a(∅) x_a`.
pub fn base_cut_10(pf: &PathFunction, set: &[usize]) -> AffineCut {
    base_cut_10_mask(pf, &pf.mask(set))
}

pub(crate) fn base_cut_10_mask(pf: &PathFunction, mask: &[bool]) -> AffineCut {
    let n = pf.members().len();
    let empty = vec![false; n];
    let mut constant = pf.h_mask(mask);
    let mut coefs = vec![0.0; n];
    for k in 0..n {
        if mask[k] {
            let mut rest = mask.to_vec();
            rest[k] = false;
            let rho = pf.rho_mask(k, &rest);
            constant -= rho;
            coefs[k] = rho;
        } else {
            coefs[k] = pf.rho_mask(k, &empty);
        }
    }
    pf.cut(CutKind::Base10, constant, &coefs)
}

/// `pi >= r(P) (1 - sum_{a in P∩D} x_a)` for a path whose interdictable arcs
/// all have `q = 0`.
pub fn q_zero_cut(pf: &PathFunction) -> Result<AffineCut, CutError> {
    if pf.has_positive() {
        return Err(CutError::NotAllZero);
    }
    let base = pf.base();
    let coefs = vec![-base; pf.members().len()];
    Ok(pf.cut(CutKind::QZero, base, &coefs))
}

/// Which lifted inequality supplies the inner cut of [`mixed_cut`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifting {
    First,
    Second,
}

/// Cut for a path with both `q > 0` and `q = 0` interdictable arcs.
///
/// The inner lifted cut is built on the `q > 0` arcs with the remaining
/// factors folded into its scale, and every `q = 0` arc gets coefficient
/// `-r(P)`.
pub fn mixed_cut(pf: &PathFunction, set: &[usize], lifting: Lifting) -> Result<AffineCut, CutError> {
    if !(pf.has_positive() && pf.has_zero()) {
        return Err(CutError::NotMixed);
    }
    let plus = pf.positive_part();
    let mask = plus.mask(set);
    mixed_from_mask(pf, &plus, &mask, lifting)
}

pub(crate) fn mixed_from_mask(
    pf: &PathFunction,
    plus: &PathFunction,
    mask: &[bool],
    lifting: Lifting,
) -> Result<AffineCut, CutError> {
    let inner = match lifting {
        Lifting::First => lifting::lifted_1_mask(plus, mask)?,
        Lifting::Second => lifting::lifted_2_mask(plus, mask)?,
    };
    let base = pf.base();
    let mut coefs = inner.coefs;
    coefs.extend(
        pf.members()
            .iter()
            .filter(|m| m.q == 0.0)
            .map(|m| (m.slot, -base)),
    );
    coefs.sort_by_key(|&(slot, _)| slot);
    Ok(AffineCut {
        kind: CutKind::Mixed,
        constant: inner.constant,
        coefs,
    })
}
