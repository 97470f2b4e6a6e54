//! Common front end over the four solution methods.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{BcError, BcOptions, LimitReached, LpError, LpStatus, SolveResult};
use crate::instance::{Instance, InterdictionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Def,
    CompactDef,
    Benders,
    Path,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Def,
        Algorithm::CompactDef,
        Algorithm::Benders,
        Algorithm::Path,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Def => "def",
            Algorithm::CompactDef => "cdef",
            Algorithm::Benders => "benders",
            Algorithm::Path => "path",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected def, cdef, benders or path)"))
    }
}

/// Arc reliabilities used to find paths at fractional root points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FracSigma {
    /// `(1 - x) r + x q`
    #[default]
    Convex,
    /// `r^(1 - x) q^x`
    Power,
    Both,
}

impl FromStr for FracSigma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "convex" => Ok(FracSigma::Convex),
            "power" => Ok(FracSigma::Power),
            "both" => Ok(FracSigma::Both),
            _ => Err(format!("unknown sigma mode `{s}` (expected convex, power or both)")),
        }
    }
}

/// How the Benders separator evaluates a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subproblem {
    #[default]
    Dp,
    Lp,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub bc: BcOptions,
    pub frac_sigma: FracSigma,
    pub subproblem: Subproblem,
    /// Separate only over scenarios that produced cuts in the last pass.
    pub scenario_list: bool,
    /// Root cutting passes before giving up.
    pub root_pass_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            bc: BcOptions::default(),
            frac_sigma: FracSigma::Convex,
            subproblem: Subproblem::Dp,
            scenario_list: true,
            root_pass_limit: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub stats: SolveResult,
    pub plan: Option<InterdictionPlan>,
}

impl Solution {
    pub fn objective(&self) -> f64 {
        self.stats.objective
    }

    pub fn into_optimal(self) -> Result<Solution, LimitReached> {
        let plan = self.plan;
        self.stats.into_optimal().map(|stats| Solution { stats, plan })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Search(#[from] BcError),
    #[error("root cutting loop did not settle within {0} passes")]
    RootIterationLimit(usize),
    #[error("root relaxation is {0:?}")]
    RootRelaxation(LpStatus),
}

impl From<LpError> for SolveError {
    fn from(e: LpError) -> Self {
        SolveError::Search(BcError::Lp(e))
    }
}

pub fn solve(
    instance: &Instance,
    algorithm: Algorithm,
    options: &SolveOptions,
) -> Result<Solution, SolveError> {
    match algorithm {
        Algorithm::Def => crate::def::solve_def(instance, &options.bc),
        Algorithm::CompactDef => crate::def::solve_compact_def(instance, &options.bc),
        Algorithm::Benders => crate::benders::solve_benders(instance, options),
        Algorithm::Path => crate::path::solve_path(instance, options),
    }
}
