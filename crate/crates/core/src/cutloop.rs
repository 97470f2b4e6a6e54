//! Root cutting loop shared by the decomposition drivers.

use std::collections::HashSet;
use std::time::Instant;

use crate::engine::{Cut, LpSolver, LpStatus, RunStats, CUT_VIOLATION_TOL};
use crate::solve::{SolveError, SolveOptions};

/// Remembers added cuts by origin and rounded coefficients.
#[derive(Debug, Default)]
pub(crate) struct CutPool {
    seen: HashSet<(Option<usize>, i64, Vec<(usize, i64)>)>,
}

impl CutPool {
    fn key(cut: &Cut) -> (Option<usize>, i64, Vec<(usize, i64)>) {
        let round = |v: f64| (v * 1e12).round() as i64;
        let mut coefs: Vec<(usize, i64)> = cut.coefs.iter().map(|&(j, a)| (j, round(a))).collect();
        coefs.sort_unstable();
        (cut.origin, round(cut.rhs), coefs)
    }

    /// True if the cut was not seen before.
    pub(crate) fn insert(&mut self, cut: &Cut) -> bool {
        self.seen.insert(Self::key(cut))
    }

    pub(crate) fn len(&self) -> usize {
        self.seen.len()
    }
}

/// Keeps violated cuts that are new to the pool.
pub(crate) fn fresh_violated(pool: &mut CutPool, cuts: Vec<Cut>, x: &[f64]) -> Vec<Cut> {
    cuts.into_iter()
        .filter(|c| c.violation(x) > CUT_VIOLATION_TOL && pool.insert(c))
        .collect()
}

/// Solves the relaxation, separates over the active units, adds cuts and
/// repeats until a pass over every unit adds nothing. The active list
/// shrinks to the units that produced cuts and is reset to all units after
/// a dry pass. `separate(x, active)` must set `origin` to the unit.
///
/// Returns the final relaxation value, or the last one reached when the time
/// limit interrupts the loop; either is a valid lower bound.
pub(crate) fn root_loop(
    solver: &mut LpSolver,
    stats: &mut RunStats,
    pool: &mut CutPool,
    units: usize,
    options: &SolveOptions,
    mut separate: impl FnMut(&[f64], &[usize]) -> Vec<Cut>,
) -> Result<f64, SolveError> {
    if options.bc.record_cuts {
        stats.log.get_or_insert_with(Vec::new);
    }
    let all: Vec<usize> = (0..units).collect();
    let mut active = all.clone();
    for _ in 0..options.root_pass_limit {
        let t = Instant::now();
        let status = solver.solve()?;
        stats.time_lp += t.elapsed();
        if status != LpStatus::Optimal {
            return Err(SolveError::RootRelaxation(status));
        }
        let value = solver.objective();
        if stats.out_of_time(options.bc.time_limit) {
            return Ok(value);
        }
        let x = solver.x().to_vec();
        let t = Instant::now();
        let cuts = fresh_violated(pool, separate(&x, &active), &x);
        stats.time_cutgen += t.elapsed();
        if cuts.is_empty() {
            if active.len() == units {
                return Ok(value);
            }
            active = all.clone();
            continue;
        }
        let mut yielded: Vec<usize> = cuts.iter().filter_map(|c| c.origin).collect();
        yielded.sort_unstable();
        yielded.dedup();
        for cut in cuts {
            stats.record(&cut);
            solver.add_row(cut.coefs, cut.sense, cut.rhs);
        }
        active = if options.scenario_list { yielded } else { all.clone() };
    }
    Err(SolveError::RootIterationLimit(options.root_pass_limit))
}
