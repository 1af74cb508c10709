//! Sublinear flux (l <= 1): the solution grows but stays under an explicit
//! eigenfunction supersolution for all time.

use nlheat::certificates::{build_eigen_supersolution, sandwich_test, solve_eigenpair};
use nlheat::discretization::Grid;
use nlheat::problem::ProblemSpec;
use nlheat::timestepper::{run, StepControl};

fn main() {
    let horizon = 10.0;
    let spec = ProblemSpec::constant(0.5, 0.5, 1.0, 1.0, 50.0, 1.0);
    let grid = Grid::new(100, 1.0);
    let out = run(&spec, &grid, &StepControl::default().with_err_tol(1e-8), horizon).expect("run");
    println!("{:?}, max u at t = {}: {:.4}", out.kind, out.t_end, out.final_state.max());

    let eig = solve_eigenpair(&grid);
    println!("first Dirichlet eigenvalue {:.6}", eig.lambda1);
    let cert = build_eigen_supersolution(&spec, &eig, horizon).expect("supersolution");
    println!("supersolution constants {:?} on {:?}", cert.constants, cert.window);

    let r = sandwich_test(None, Some(&cert), &out.trajectory, &grid);
    println!("u below the supersolution at all {} snapshots: {}", r.snapshots_checked, r.pass);
}
