use std::collections::BTreeMap;
use std::fmt::Write as _;

use snip::{Algorithm, Solution, SolveStatus};

pub const HEADER: &str =
    "instance\talg\tstatus\tobjective\tbound\tgap\tnodes\tcuts\ttime_total\ttime_cutgen\ttime_lp";

/// One (instance, algorithm) run.
#[derive(Debug, Clone)]
pub struct Row {
    pub instance: String,
    pub alg: Algorithm,
    pub budget: f64,
    pub outcome: Result<Solution, String>,
}

impl Row {
    pub fn status(&self) -> Option<SolveStatus> {
        self.outcome.as_ref().ok().map(|s| s.stats.status)
    }

    pub fn is_optimal(&self) -> bool {
        self.status() == Some(SolveStatus::Optimal)
    }

    pub fn tsv(&self) -> String {
        match &self.outcome {
            Ok(s) => {
                let st = &s.stats;
                format!(
                    "{}\t{}\t{}\t{:.10}\t{:.10}\t{:.3e}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}",
                    self.instance,
                    self.alg,
                    st.status.tag(),
                    st.objective,
                    st.bound,
                    st.gap,
                    st.nodes,
                    st.total_cuts(),
                    st.time_total.as_secs_f64(),
                    st.time_cutgen.as_secs_f64(),
                    st.time_lp.as_secs_f64(),
                )
            }
            Err(_) => format!("{}\t{}\terror\tnan\tnan\tnan\t0\t0\t0\t0\t0", self.instance, self.alg),
        }
    }

    /// Cut counts by kind, e.g. `benders=12 supermod-lifted-1=3`.
    pub fn cut_kinds(&self) -> String {
        let Ok(s) = &self.outcome else { return String::new() };
        let parts: Vec<String> = s.stats.cuts.iter().map(|(k, n)| format!("{}={n}", k.tag())).collect();
        parts.join(" ")
    }
}

/// Pairs of optimal rows on the same instance whose objectives differ by more
/// than the tolerance allows.
pub fn disagreements(rows: &[Row], gap: f64) -> Vec<String> {
    let mut by_instance: BTreeMap<&str, Vec<&Row>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.is_optimal()) {
        by_instance.entry(&row.instance).or_default().push(row);
    }
    let mut out = Vec::new();
    for (name, group) in by_instance {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                let (va, vb) = (objective(a), objective(b));
                let tol = 2.0 * gap * va.abs().max(vb.abs()).max(1.0) + 1e-9;
                if (va - vb).abs() > tol {
                    out.push(format!("{name}: {} {va} vs {} {vb}", a.alg, b.alg));
                }
            }
        }
    }
    out
}

fn objective(row: &Row) -> f64 {
    row.outcome.as_ref().map(|s| s.objective()).unwrap_or(f64::NAN)
}

/// Mean solve time over solved runs, with the unsolved count in parentheses,
/// one line per budget and one column per algorithm.
pub fn summary(rows: &[Row], algorithms: &[Algorithm]) -> String {
    let mut cells: BTreeMap<(u64, Algorithm), (f64, usize, usize)> = BTreeMap::new();
    for row in rows {
        let cell = cells.entry((row.budget.to_bits(), row.alg)).or_default();
        if row.is_optimal() {
            cell.0 += row.outcome.as_ref().unwrap().stats.time_total.as_secs_f64();
            cell.1 += 1;
        } else {
            cell.2 += 1;
        }
    }
    let mut budgets: Vec<f64> = cells.keys().map(|(b, _)| f64::from_bits(*b)).collect();
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();

    let mut out = String::new();
    let _ = write!(out, "{:>8}", "budget");
    for alg in algorithms {
        let _ = write!(out, "  {:>16}", alg.tag());
    }
    out.push('\n');
    for b in budgets {
        let _ = write!(out, "{b:>8}");
        for alg in algorithms {
            let text = match cells.get(&(b.to_bits(), *alg)) {
                None => "-".to_string(),
                Some(&(_, 0, unsolved)) => format!("- ({unsolved})"),
                Some(&(total, solved, unsolved)) => format!("{:.3} ({unsolved})", total / solved as f64),
            };
            let _ = write!(out, "  {text:>16}");
        }
        out.push('\n');
    }
    out
}
