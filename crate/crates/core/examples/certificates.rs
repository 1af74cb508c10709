//! Comparison functions built for a problem and checked for residual sign on
//! a grid, plus one deliberately broken certificate.

use nlheat::certificates::{
    build_boundary_layer_supersolution, build_ode_bound, build_psi_profile_subsolution, check_certificate, Certificate,
    CertificateKind, Direction, OdeBoundKind, Profile,
};
use nlheat::discretization::Grid;
use nlheat::problem::ProblemSpec;

fn report(name: &str, cert: &Certificate, spec: &ProblemSpec, grid: &Grid) {
    let r = check_certificate(cert, spec, grid, cert.window, cert.direction);
    let label = if r.pass { "tightest" } else { "violated" };
    let worst = r.worst.map(|w| format!(", {label} {:?} at x={} t={}", w.inequality, w.x, w.t)).unwrap_or_default();
    println!("{name:28} {:?} {:?} on {:?}: {}{worst}", cert.kind, cert.direction, cert.window, if r.pass { "ok" } else { "FAILS" });
}

fn main() {
    let grid = Grid::new(100, 1.0);

    let spec = ProblemSpec::constant(3.0, 2.0, 1.0, 1.0, 1.0, 1.0);
    match build_boundary_layer_supersolution(&spec, 2.0) {
        Ok(cert) => report("boundary layer, p=3 l=2", &cert, &spec, &grid),
        Err(e) => println!("boundary layer: {e}"),
    }

    let spec = ProblemSpec::constant(1.5, 3.0, 1.0, 1.0, 1.0, 1.0);
    let cert = build_ode_bound(&spec, OdeBoundKind::SubPowerLaw { horizon: 2.0 }).expect("power-law sub");
    report("power-law sub, p=1.5 l=3", &cert, &spec, &grid);

    let spec = ProblemSpec::constant(2.0, 3.0, 1.0, 1.0, 0.01, 1.0);
    let cert = build_ode_bound(&spec, OdeBoundKind::SuperBoundedRatio { horizon: 5.0 }).expect("bounded ratio");
    report("bounded-ratio super", &cert, &spec, &grid);

    let spec = ProblemSpec::constant(2.0, 3.0, 1.0, 1.0, 1.0, 1.0);
    let cert = build_psi_profile_subsolution(&spec, 2.0).expect("psi sub");
    report("psi-profile sub", &cert, &spec, &grid);

    // e^t is not a subsolution of u_t = u_xx - u
    let spec = ProblemSpec::constant(1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
    let bad = Certificate::new(CertificateKind::OdeSub, Direction::Sub, Profile::Exponential { amplitude: 1.0, rate: 1.0 }, (0.0, 1.0));
    report("e^t offered as sub", &bad, &spec, &grid);
}
