//! Large data with l > max(1, p): boundary blow-up, its time, rate and location.

use nlheat::discretization::Grid;
use nlheat::monitors::{localization_monitor, rate_monitor, terminal_resolution, track, LocalizationThresholds};
use nlheat::problem::ProblemSpec;
use nlheat::timestepper::{run, StepControl};

fn main() {
    let spec = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 50.0, 1.0);
    let grid = Grid::new(400, 1.0);
    let ctrl = StepControl::default().with_err_tol(1e-8);
    let out = run(&spec, &grid, &ctrl, 1.0).expect("blow-up run");

    let t_star = out.t_star_estimate.unwrap_or(out.t_end);
    println!("{:?} at t = {:.9e}", out.kind, out.t_end);
    println!("t* ~ {t_star:.9e}, estimator gap {:?}", out.estimator_gap);
    println!("rate exponent {:?}, location {:?}", out.rate_exponent, out.location);
    println!("{} accepted, {} rejected steps", out.stats.accepted, out.stats.rejected);

    let series = track(&out.trajectory, &spec, &grid, None);
    let resolution = terminal_resolution(&out);
    let rate = rate_monitor(&series, t_star, spec.l, resolution).expect("rate window");
    println!("sup J (t*-t)^(1/(l-1)) = {:.4e}, trend Z = {:.2}, bounded: {}", rate.sup_q, rate.trend.z, rate.bounded);

    let loc = localization_monitor(&series, &spec, t_star, resolution, &LocalizationThresholds::default())
        .expect("localization window");
    println!(
        "boundary max {:.3e}, interior max {:.3e}, envelope c1 {:.3e}, boundary blow-up: {}",
        loc.boundary_max, loc.interior_max, loc.envelope_c1, loc.pass
    );
}
