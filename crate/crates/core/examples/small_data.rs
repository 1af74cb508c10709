//! Sublinear absorption with superlinear flux (p < 1 < l): a small datum
//! under a psi*f supersolution dies out in finite time.

use nlheat::certificates::{build_ode_bound, check_certificate, sandwich_test, small_data_threshold, Direction, OdeBoundKind};
use nlheat::discretization::Grid;
use nlheat::problem::{InitialDatum, ProblemSpec};
use nlheat::timestepper::{run, StepControl};

fn main() {
    let (tau, a, horizon) = (1.0, 0.25, 2.0);
    let kind = OdeBoundKind::SuperSmallData { tau, additive_constant: a, horizon };

    // the builder reports the largest admissible amplitude f0; start at half of it
    let base = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
    let probe = build_ode_bound(&base.clone().with_u0(InitialDatum::Constant(0.0)), kind).expect("probe");
    let f0 = probe.constant("f0").expect("f0");
    let spec = base.with_u0(InitialDatum::PsiProfile { additive_constant: a, scale: 0.5 * f0 });
    let cert = build_ode_bound(&spec, kind).expect("supersolution");

    let c = |k: &str| cert.constant(k).unwrap_or(f64::NAN);
    println!("f0 = {:.4e} below threshold {:.4e}", c("f0"), small_data_threshold(c("c0"), c("b"), 0.5, tau));
    println!("supersolution vanishes at t = {:.4}", c("extinction_time"));

    let grid = Grid::new(400, 1.0);
    let residual = check_certificate(&cert, &spec, &grid, cert.window, Direction::Super);
    println!("residual check: {}", residual.pass);

    let out = run(&spec, &grid, &StepControl::default().with_err_tol(1e-8), horizon).expect("run");
    let r = sandwich_test(None, Some(&cert), &out.trajectory, &grid);
    println!("{:?}, final max u {:.3e}, below supersolution: {}", out.kind, out.final_state.max(), r.pass);
}
