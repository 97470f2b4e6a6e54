//! Solvers for the maximum-reliability stochastic network interdiction
//! problem: a defender places sensors on arcs under a budget to minimize the
//! expected probability that an attacker, who picks the most reliable path
//! for a random origin and destination, evades detection.

pub mod benders;
mod cutloop;
pub mod cuts;
pub mod def;
pub mod engine;
mod error;
pub mod instance;
pub mod network;
pub mod path;
mod solve;

pub use engine::{BcOptions, Cut, CutKind, LimitReached, SolveResult, SolveStatus};
pub use error::ValidationError;
pub use instance::{Instance, InterdictionPlan, Scenario};
pub use network::{
    extract_path, fractional_sigma, max_reliability_labels, plan_sigma, power_sigma,
    uninterdicted_bounds, Arc, ArcId, Interdiction, Network, NoPath, NodeId, Path,
    ReliabilityLabels,
};
pub use solve::{solve, Algorithm, FracSigma, SolveError, SolveOptions, Solution, Subproblem};
