//! Fixed instances shared by the benchmarks.

use snip::instance::{generate, GridParams, QRegime};
use snip::Instance;

/// Square grid with a quarter of the arcs interdictable and `q = r / 2`.
pub fn grid(side: usize, scenarios: usize, budget: f64) -> Instance {
    let params = GridParams {
        interdictable_fraction: 0.25,
        scenarios,
        destinations: Some(scenarios.min(4)),
        budget,
        ..GridParams::new(side, side, QRegime::Factor(0.5), 17)
    };
    generate(&params).expect("benchmark grid is feasible")
}
