//! Pure diffusion with zero flux: the cosine bump flattens and mass stays put.

use nlheat::discretization::Grid;
use nlheat::monitors::{mass_identity, track};
use nlheat::problem::{InitialDatum, ProblemSpec};
use nlheat::timestepper::{run, StepControl};

fn main() {
    let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
        .with_u0(InitialDatum::Cosine { mean: 1.0, amplitude: 0.5 });
    let grid = Grid::new(100, 1.0);
    let out = run(&spec, &grid, &StepControl::default(), 0.5).expect("heat run");

    println!("{:>8} {:>10} {:>10} {:>12}", "t", "max u", "u(0)", "mass");
    for s in out.trajectory.samples.iter().step_by(5) {
        println!("{:8.4} {:10.6} {:10.6} {:12.9}", s.t, s.max_u, s.u_left, s.mass);
    }

    let mass = mass_identity(&track(&out.trajectory, &spec, &grid, None));
    println!("{:?} at t = {}, relative mass defect {:.2e}", out.kind, out.t_end, mass.relative_defect);
}
