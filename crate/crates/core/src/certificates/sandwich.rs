use serde::Serialize;

use super::{Certificate, Direction, Profile};
use crate::discretization::{Grid, GridState};
use crate::timestepper::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    pub bound: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub pass: bool,
    pub snapshots_checked: usize,
    /// Largest amount by which `u` left the band (0 when inside).
    pub max_violation: f64,
    pub first: Option<Violation>,
}

fn within(cert: &Certificate, t: f64) -> bool {
    t >= cert.window.0 - 1e-12 && t <= cert.window.1 + 1e-12
}

/// Checks `lower ≤ u ≤ upper` at every stored snapshot inside each
/// certificate's window, allowing `1e-6 + h²·max|u|` for discretization error.
pub fn sandwich_test(
    lower: Option<&Certificate>,
    upper: Option<&Certificate>,
    traj: &Trajectory,
    grid: &Grid,
) -> SandwichReport {
    let len = grid.length();
    let h2 = grid.h() * grid.h();
    let mut report = SandwichReport { pass: true, snapshots_checked: 0, max_violation: 0.0, first: None };
    for snap in &traj.snapshots {
        let scale = snap.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-6 + h2 * scale;
        let mut checked = false;
        for (cert, sign) in [(lower, -1.0), (upper, 1.0)] {
            let Some(cert) = cert else { continue };
            if !within(cert, snap.t) {
                continue;
            }
            checked = true;
            for (&x, &u) in grid.nodes().iter().zip(&snap.u) {
                if !cert.covers(x, len) {
                    continue;
                }
                let bound = cert.evaluate(x, snap.t);
                let excess = sign * (u - bound);
                if excess > report.max_violation {
                    report.max_violation = excess;
                }
                if excess > tol && report.first.is_none() {
                    report.pass = false;
                    report.first = Some(Violation { x, t: snap.t, u, bound, direction: cert.direction });
                }
            }
        }
        report.snapshots_checked += checked as usize;
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollarReport {
    /// `u(·, t0) ≥ v(·, t0)` on the collar nodes.
    pub initial_ok: bool,
    /// `u ≥ v` at `s = γ` for snapshots in `[t0, min(t2, t_end)]`.
    pub lateral_ok: bool,
    pub snapshots_checked: usize,
    /// Smallest `u − v` seen (negative means violated).
    pub min_margin: f64,
    /// Blow-up bound implied by the certificate.
    pub t2: f64,
}

impl CollarReport {
    pub fn pass(&self) -> bool {
        self.initial_ok && self.lateral_ok
    }
}

fn interpolate(snap: &GridState, grid: &Grid, x: f64) -> f64 {
    let h = grid.h();
    let i = ((x / h).floor() as usize).min(grid.n() - 1);
    let w = x / h - i as f64;
    (1.0 - w) * snap.u[i] + w * snap.u[i + 1]
}

/// Numeric side conditions of a collar subsolution: the comparison with the
/// run at the window start and along the inner edge `s = γ` of the collars.
pub fn collar_comparison(cert: &Certificate, traj: &Trajectory, grid: &Grid) -> CollarReport {
    let len = grid.length();
    let (gamma, t2) = match (cert.region, &cert.profile) {
        (super::Region::Collar { width }, Profile::Traveling { t2, .. }) => (width, *t2),
        (super::Region::Collar { width }, _) => (width, cert.window.1),
        _ => (0.5 * len, cert.window.1),
    };
    let t0 = cert.window.0;
    let mut report = CollarReport { initial_ok: false, lateral_ok: true, snapshots_checked: 0, min_margin: f64::INFINITY, t2 };

    let Some(start) = traj.snapshots.iter().find(|s| s.t >= t0 - 1e-12) else {
        return report;
    };
    // the comparison needs the run at (or just after, within one sample) t0
    report.initial_ok = start.t - t0 <= 1e-9 * t0.max(1.0)
        && grid.nodes().iter().zip(&start.u).filter(|(&x, _)| cert.covers(x, len)).all(|(&x, &u)| {
            let m = u - cert.evaluate(x, t0);
            report.min_margin = report.min_margin.min(m);
            m >= -1e-9 * u.abs().max(1.0)
        });

    let t_end = traj.snapshots.last().map_or(t0, |s| s.t);
    for snap in traj.snapshots.iter().filter(|s| s.t >= t0 && s.t <= t2.min(t_end).min(cert.window.1)) {
        report.snapshots_checked += 1;
        for x in [gamma, len - gamma] {
            let u = interpolate(snap, grid, x);
            let m = u - cert.evaluate(x, snap.t);
            report.min_margin = report.min_margin.min(m);
            if m < -(1e-6 + grid.h() * grid.h() * u.abs()) {
                report.lateral_ok = false;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{build_eigen_supersolution, build_ode_bound, build_traveling_subsolution, solve_eigenpair, OdeBoundKind};
    use crate::problem::ProblemSpec;
    use crate::timestepper::{run, StepControl};

    #[test]
    fn eigen_and_ode_bounds_sandwich_a_run() {
        let spec = ProblemSpec::constant(0.5, 0.5, 1.0, 1.0, 1.0, 1.0);
        let g = Grid::new(50, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 1.0).unwrap();
        let upper = build_eigen_supersolution(&spec, &solve_eigenpair(&g), 1.0).unwrap();
        let lower = build_ode_bound(&spec, OdeBoundKind::SubLowP { amplitude: None, horizon: 1.0 }).unwrap();
        let r = sandwich_test(Some(&lower), Some(&upper), &out.trajectory, &g);
        assert!(r.pass, "{r:?}");
        assert!(r.snapshots_checked > 10);
    }

    #[test]
    fn violated_bound_is_reported() {
        let spec = ProblemSpec::constant(1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let g = Grid::new(20, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 0.5).unwrap();
        let fake = Certificate::new(
            crate::certificates::CertificateKind::OdeSuper,
            Direction::Super,
            Profile::Constant { value: 0.9 },
            (0.0, 0.5),
        );
        let r = sandwich_test(None, Some(&fake), &out.trajectory, &g);
        assert!(!r.pass);
        let v = r.first.unwrap();
        assert_eq!(v.t, 0.0);
        assert!((r.max_violation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn collar_subsolution_against_blowup_run() {
        let spec = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 1e4, 1.0);
        let g = Grid::new(200, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 1.0).unwrap();
        assert!(out.is_blow_up());
        let t_star = out.t_end;
        let snap = &out.trajectory.snapshots[0];
        let level = snap.u.iter().cloned().fold(f64::INFINITY, f64::min);
        let cert = build_traveling_subsolution(&spec, snap.t, |_| level).unwrap();
        let r = collar_comparison(&cert, &out.trajectory, &g);
        assert!(r.pass(), "{r:?}");
        assert!(t_star <= r.t2 + 1e-6, "{t_star} vs {}", r.t2);
    }
}
