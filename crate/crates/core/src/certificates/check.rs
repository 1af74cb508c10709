use serde::Serialize;

use super::{Certificate, Direction, InitialReference, Region};
use crate::discretization::Grid;
use crate::problem::ProblemSpec;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Inequality {
    Interior,
    Boundary,
    Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offender {
    pub inequality: Inequality,
    pub x: f64,
    pub t: f64,
    /// Signed residual (negative means violated).
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub interior_min: f64,
    pub boundary_min: f64,
    /// `None` when the comparison at the window start is made against a run.
    pub initial_min: Option<f64>,
    pub pass: bool,
    /// Point with the largest violation relative to its tolerance.
    pub worst: Option<Offender>,
}

const TIME_SAMPLES: usize = 96;

struct Tally {
    min: [f64; 3],
    worst: Option<(f64, Offender)>,
    pass: bool,
}

impl Tally {
    fn record(&mut self, inequality: Inequality, x: f64, t: f64, value: f64, scale: f64) {
        let tolerance = 1e-8 + 1e-6 * scale;
        let slot = inequality as usize;
        self.min[slot] = self.min[slot].min(value);
        if value < -tolerance || !value.is_finite() {
            self.pass = false;
        }
        let badness = if value.is_finite() { -value / tolerance } else { f64::INFINITY };
        if self.worst.is_none_or(|(b, _)| badness > b) {
            self.worst = Some((badness, Offender { inequality, x, t, value, tolerance }));
        }
    }
}

/// Spatial sample points: grid nodes plus geometric clusters at both ends.
fn sample_points(grid: &Grid) -> Vec<f64> {
    let len = grid.length();
    let mut xs: Vec<f64> = grid.nodes().to_vec();
    let mut s = 1e-10 * len;
    while s < grid.h() {
        xs.push(s);
        xs.push(len - s);
        s *= 2.0;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs
}

/// Verifies the comparison inequalities of `cert` for `spec` at the grid nodes
/// (plus points clustered at the boundary) and sampled times of `window`.
///
/// Derivatives are analytic and flux integrals adaptive, so the check measures
/// the certificate itself rather than a discretization of it. A point passes
/// when its signed residual is at least `-(1e-8 + 1e-6·scale)` with `scale` the
/// largest term of that inequality at that point.
pub fn check_certificate(
    cert: &Certificate,
    spec: &ProblemSpec,
    grid: &Grid,
    window: (f64, f64),
    direction: Direction,
) -> ResidualReport {
    let len = spec.length();
    let sign = direction.sign();
    let p = spec.p;
    let xs = sample_points(grid);
    let mut tally = Tally { min: [f64::INFINITY; 3], worst: None, pass: true };

    let times: Vec<f64> = (0..=TIME_SAMPLES)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / TIME_SAMPLES as f64)
        .collect();
    for &t in &times {
        for &x in xs.iter().filter(|&&x| cert.covers(x, len)) {
            let j = cert.profile.jet(x, t);
            let absorption = spec.c.eval_c(x, t, len) * quad::pow_nonneg(j.v.max(0.0), p);
            let r = j.v_t - j.v_xx + absorption;
            let scale = j.v_t.abs().max(j.v_xx.abs()).max(absorption.abs());
            tally.record(Inequality::Interior, x, t, sign * r, scale);
        }
        for b in 0..2 {
            let xb = b as f64 * len;
            let j = cert.profile.jet(xb, t);
            let normal = if b == 0 { -j.v_x } else { j.v_x };
            let flux = flux_integral(cert, spec, b, t);
            tally.record(Inequality::Boundary, xb, t, sign * (normal - flux), normal.abs().max(flux.abs()));
        }
    }

    let initial_applies = cert.initial_reference == InitialReference::Datum && window.0 == 0.0;
    if initial_applies {
        for &x in &xs {
            let v = cert.profile.eval(x, 0.0);
            let u0 = spec.u0.eval(x, len);
            tally.record(Inequality::Initial, x, 0.0, sign * (v - u0), v.abs().max(u0.abs()));
        }
    }

    ResidualReport {
        interior_min: tally.min[0],
        boundary_min: tally.min[1],
        initial_min: initial_applies.then_some(tally.min[2]),
        pass: tally.pass,
        worst: tally.worst.map(|(_, o)| o),
    }
}

/// `∫ k(b, y, t) v(y, t)^l dy` over the certificate's region.
pub(crate) fn flux_integral(cert: &Certificate, spec: &ProblemSpec, endpoint: usize, t: f64) -> f64 {
    let len = spec.length();
    let f = |y: f64| spec.k.eval_k(endpoint, y, t, len) * quad::pow_nonneg(cert.profile.eval(y, t).max(0.0), spec.l);
    let mut breaks = cert.profile.breakpoints(t, len);
    if let Region::Collar { width } = cert.region {
        breaks.extend([width, len - width]);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let inside = |a: f64, b: f64| b <= width + 1e-15 || a >= len - width - 1e-15;
        return breaks
            .windows(2)
            .filter(|w| inside(w[0], w[1]))
            .map(|w| quad::integrate(&f, w[0], w[1], 1e-12))
            .sum();
    }
    quad::integrate_pieces(&f, &breaks, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{CertificateKind, Profile};
    use crate::problem::InitialDatum;

    #[test]
    fn zero_profile_passes_both_ways() {
        let spec = ProblemSpec::constant(0.5, 2.0, 3.0, 2.0, 0.0, 1.0);
        let cert = Certificate::new(CertificateKind::OdeSuper, Direction::Super, Profile::Constant { value: 0.0 }, (0.0, 1.0));
        let g = Grid::new(16, 1.0);
        assert!(check_certificate(&cert, &spec, &g, (0.0, 1.0), Direction::Super).pass);
        assert!(check_certificate(&cert, &spec, &g, (0.0, 1.0), Direction::Sub).pass);
    }

    #[test]
    fn decaying_ode_is_not_a_supersolution_with_flux() {
        // w = 2e^{-t}: interior holds with equality, ∂w/∂ν = 0 < ∫k w²
        let spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 2.0, 1.0);
        let cert = Certificate::new(
            CertificateKind::OdeSuper,
            Direction::Super,
            Profile::Exponential { amplitude: 2.0, rate: -1.0 },
            (0.0, 1.0),
        );
        let r = check_certificate(&cert, &spec, &Grid::new(32, 1.0), (0.0, 1.0), Direction::Super);
        assert!(!r.pass);
        assert_eq!(r.worst.unwrap().inequality, Inequality::Boundary);
        assert!(r.interior_min.abs() < 1e-12);
        assert!((r.boundary_min + 4.0).abs() < 1e-9);
    }

    #[test]
    fn flux_integral_matches_closed_form() {
        let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 1.0, 1.0, 1.0)
            .with_u0(InitialDatum::PsiProfile { additive_constant: 0.25, scale: 1.0 });
        let psi = crate::certificates::solve_psi(1.0, 0.25).unwrap();
        let cert = Certificate::new(
            CertificateKind::PsiProfileSuper,
            Direction::Super,
            Profile::PsiBernoulli { psi, scale: psi.b, c_hat: crate::problem::TimeProfile::constant(0.0), p: 2.0, t_start: 0.0, f_start: 1.0 },
            (0.0, 0.0),
        );
        // ∫_0^1 ((x²-x)/2 + 1/4)² dx = 1/120 - 1/24 + 1/16
        let v = flux_integral(&cert, &spec, 0, 0.0);
        assert!((v - 7.0 / 240.0).abs() < 1e-14, "{v}");
    }
}
