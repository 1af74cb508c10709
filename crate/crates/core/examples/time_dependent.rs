//! Coefficients that vary in time and space: growing absorption with a cosine
//! modulation, decaying flux weighted differently at the two ends.

use nlheat::discretization::Grid;
use nlheat::monitors::{mass_identity, track};
use nlheat::problem::{classify_spec, CoefficientDescriptor, InitialDatum, Modulation, ProblemSpec, TimeProfile};
use nlheat::timestepper::{run, StepControl};

fn main() {
    let mut spec = ProblemSpec::constant(2.0, 1.5, 1.0, 1.0, 1.0, 2.0)
        .with_u0(InitialDatum::Cosine { mean: 2.0, amplitude: 1.0 });
    spec.c = CoefficientDescriptor::from_profile(TimeProfile::power_log(1.0, 1.0, 0.0))
        .with_modulation(Modulation::Cosine { depth: 0.5 });
    spec.k = CoefficientDescriptor::from_profile(TimeProfile::exponential(0.5, -0.5)).with_endpoint_weights([1.0, 0.5]);

    let pred = classify_spec(&spec);
    println!("predicted {:?}", pred.verdict);

    let grid = Grid::new(200, spec.length());
    let out = run(&spec, &grid, &StepControl::default(), 2.0).expect("run");
    for s in out.trajectory.samples.iter().step_by(40) {
        println!("t={:6.3} max u {:8.5} u(0) {:8.5} u(L) {:8.5} mass {:8.5}", s.t, s.max_u, s.u_left, s.u_right, s.mass);
    }
    let mass = mass_identity(&track(&out.trajectory, &spec, &grid, None));
    println!("{:?}, relative mass defect {:.2e}", out.kind, mass.relative_defect);
}
