//! LP and branch-and-cut engine shared by all formulations.

mod mip;
mod model;
mod simplex;

pub use mip::{
    branch_and_cut, branch_and_cut_from, relative_gap, BcError, BcOptions, Cut, CutKind,
    LazySeparator, LimitReached, NoSeparator, RunStats, SolveResult, SolveStatus,
    CUT_VIOLATION_TOL, INTEGRALITY_TOL,
};
pub use model::{LinearModel, ModelError, Row, Sense, Variable};
pub use simplex::{solve_lp, Basis, LpError, LpSolution, LpSolver, LpStatus, Status};
