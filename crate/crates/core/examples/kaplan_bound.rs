//! Linear absorption, quadratic flux and c = 0: the mass obeys a Riccati-type
//! inequality, which bounds the blow-up time by a function of the datum mass.

use nlheat::discretization::Grid;
use nlheat::monitors::{kaplan_check, track};
use nlheat::problem::{blowup_time_bound, ProblemSpec};
use nlheat::timestepper::{run, StepControl};

fn main() {
    let grid = Grid::new(400, 1.0);
    for u0 in [1.0, 2.0, 4.0] {
        let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 1.0, u0, 1.0);
        let bound = blowup_time_bound(&spec, spec.u0.mass(1.0)).expect("bound");
        let out = run(&spec, &grid, &StepControl::default().with_err_tol(1e-8), 1.0).expect("run");
        let t_star = out.t_star_estimate.unwrap_or(out.t_end);
        let kaplan = kaplan_check(&track(&out.trajectory, &spec, &grid, None), &spec).expect("p = 1");
        println!(
            "u0 = {u0}: {:?}, t* {t_star:.6} <= bound {bound:.6}, mass inequality holds: {} (worst ratio {:.3})",
            out.kind, kaplan.pass, kaplan.worst_ratio
        );
    }
}
