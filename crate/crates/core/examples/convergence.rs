//! Observed orders of accuracy against manufactured solutions, and blow-up
//! time estimates under joint grid and tolerance refinement.

use nlheat::harness::convergence::{blowup_study, spatial_study, temporal_study};
use nlheat::problem::ProblemSpec;

fn main() {
    for s in [spatial_study(&[50, 100, 200], 0.1), temporal_study(32, &[400, 800, 1600, 3200], 0.1)] {
        println!("{}", s.name);
        for l in &s.levels {
            println!("    n={:<4} steps={:<6} error {:.3e}", l.n, l.steps, l.error);
        }
        println!("    orders {:.3?}", s.orders);
    }

    let spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 50.0, 1.0);
    let study = blowup_study(&spec, &[(100, 1e-5), (200, 1e-6), (400, 1e-7)], 1.0).expect("blow-up runs");
    for l in &study.levels {
        println!("n={:<4} err_tol={:.0e} t* {:.9e}", l.n, l.err_tol, l.t_star);
    }
    let rel: Vec<String> = study.relative_increments.iter().map(|r| format!("{r:.2e}")).collect();
    println!("relative increments [{}], shrinking: {}", rel.join(", "), study.decreasing);
}
