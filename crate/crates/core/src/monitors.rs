//! Integral functionals and inequalities along numeric trajectories: mass
//! functionals, the blow-up rate bound and boundary localization.

use serde::Serialize;
use thiserror::Error;

use crate::discretization::Grid;
use crate::problem::ProblemSpec;
use crate::quad;
use crate::timestepper::{RunOutcome, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("only {available} samples in the terminal window, need {needed}")]
    InsufficientWindow { available: usize, needed: usize },
    /// The raw report is still attached, unclassified.
    #[error("hypothesis not met: {reason}")]
    HypothesisNotMet { reason: String, raw: Option<Box<LocalizationReport>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalPoint {
    pub t: f64,
    pub max_u: f64,
    /// `U(t) = ∫u`.
    pub mass: f64,
    /// `J(t) = ∫_0^t ∫u^l`.
    pub j: f64,
    /// `W(t) = e^{-t/m} U(t)`.
    pub w: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub interior_max: f64,
    /// `∫u^l` at the sample, when the nodal state was stored.
    pub power_mass: Option<f64>,
    pub flux_integral: f64,
    pub absorption_integral: f64,
    pub forcing_integral: f64,
    pub clamp_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalSeries {
    pub l: f64,
    pub m: f64,
    pub length: f64,
    pub points: Vec<FunctionalPoint>,
}

/// `sup ψ` of the ψ profile with `inf ψ = L²/8`, the default `m` in `W`.
pub fn default_m(length: f64) -> f64 {
    length * length / 4.0
}

/// Evaluates all functionals at every sample of `traj`.
pub fn track(traj: &Trajectory, spec: &ProblemSpec, grid: &Grid, m: Option<f64>) -> FunctionalSeries {
    let m = m.unwrap_or_else(|| default_m(grid.length()));
    let with_states = traj.snapshots.len() == traj.samples.len();
    let points = traj
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| FunctionalPoint {
            t: s.t,
            max_u: s.max_u,
            mass: s.mass,
            j: s.j,
            w: (-s.t / m).exp() * s.mass,
            u_left: s.u_left,
            u_right: s.u_right,
            interior_max: s.interior_max,
            power_mass: with_states.then(|| {
                let powered: Vec<f64> = traj.snapshots[i].u.iter().map(|&u| quad::pow_nonneg(u, spec.l)).collect();
                grid.integrate(&powered)
            }),
            flux_integral: s.flux_integral,
            absorption_integral: s.absorption_integral,
            forcing_integral: s.forcing_integral,
            clamp_mass: s.clamp_mass,
        })
        .collect();
    FunctionalSeries { l: spec.l, m, length: grid.length(), points }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannKendall {
    pub n: usize,
    pub s: i64,
    pub z: f64,
}

/// Mann–Kendall trend statistic; differences within `1e-12` relative count
/// as ties.
pub fn mann_kendall(series: &[f64]) -> MannKendall {
    let n = series.len();
    let scale = series.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tie = 1e-12 * scale;
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let d = series[j] - series[i];
            if d > tie {
                s += 1;
            } else if d < -tie {
                s -= 1;
            }
        }
    }
    let var = (n * (n.saturating_sub(1)) * (2 * n + 5)) as f64 / 18.0;
    let z = match s {
        0 => 0.0,
        s if s > 0 => (s - 1) as f64 / var.sqrt(),
        s => (s + 1) as f64 / var.sqrt(),
    };
    MannKendall { n, s, z }
}

/// `τ` below this multiple of the blow-up time uncertainty is excluded from
/// terminal windows: the relative error of `τ` there is at most 1%.
pub const RESOLUTION_FACTOR: f64 = 100.0;

/// Resolution for the terminal windows of a blow-up run: `tStar` is known no
/// better than the gap between its two estimates or the final step, and
/// samples after the first step taken at the floor are not error controlled.
pub fn terminal_resolution(outcome: &RunOutcome) -> f64 {
    let last_dt = outcome.trajectory.samples.last().map_or(0.0, |s| s.dt);
    let uncertainty = RESOLUTION_FACTOR * outcome.estimator_gap.unwrap_or(0.0).max(last_dt);
    let uncontrolled = match (outcome.t_star_estimate, outcome.stats.first_pinned_t) {
        (Some(t_star), Some(t_pin)) => t_star - t_pin,
        _ => 0.0,
    };
    uncertainty.max(uncontrolled)
}

/// One-sided 95% critical value of the standard normal.
pub const TREND_CRITICAL: f64 = 1.645;
const MIN_WINDOW: usize = 8;

/// `(τ, value)` pairs with `τ = tStar − t` in the final decade `[τ₀, 10 τ₀]`,
/// where `τ₀` is the smallest sampled `τ` but no less than `resolution`.
fn terminal_decade(
    series: &FunctionalSeries,
    t_star: f64,
    resolution: f64,
    f: impl Fn(&FunctionalPoint, f64) -> f64,
) -> Result<Vec<(f64, f64)>, MonitorError> {
    let taus: Vec<(f64, &FunctionalPoint)> =
        series.points.iter().map(|p| (t_star - p.t, p)).filter(|(tau, _)| *tau > 0.0 && *tau >= resolution).collect();
    let tau_min = taus.iter().map(|(tau, _)| *tau).fold(f64::INFINITY, f64::min);
    let window: Vec<(f64, f64)> =
        taus.iter().filter(|(tau, _)| *tau <= 10.0 * tau_min).map(|(tau, p)| (*tau, f(p, *tau))).collect();
    if window.len() < MIN_WINDOW {
        return Err(MonitorError::InsufficientWindow { available: window.len(), needed: MIN_WINDOW });
    }
    Ok(window)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// `sup Q` over the samples before `tStar`.
    pub sup_q: f64,
    /// `Q` in the final decade of `tStar − t`, in time order.
    pub window: Vec<(f64, f64)>,
    pub trend: MannKendall,
    /// No increasing trend at 95% in the final decade.
    pub bounded: bool,
}

/// `Q(t) = J(t)(tStar − t)^{1/(l−1)}`; bounded means no increasing trend
/// in the final decade of `tStar − t`.
///
/// `resolution` is the uncertainty of `tStar` (a multiple of the estimator
/// gap, or 0 for exact times): closer to `tStar` than that, `τ` is noise.
pub fn rate_monitor(series: &FunctionalSeries, t_star: f64, l: f64, resolution: f64) -> Result<RateReport, MonitorError> {
    let q = |p: &FunctionalPoint, tau: f64| p.j * tau.powf(1.0 / (l - 1.0));
    let sup_q = series.points.iter().filter(|p| p.t < t_star).map(|p| q(p, t_star - p.t)).fold(0.0, f64::max);
    let window = terminal_decade(series, t_star, resolution, q)?;
    let values: Vec<f64> = window.iter().map(|w| w.1).collect();
    let trend = mann_kendall(&values);
    Ok(RateReport { sup_q, window, trend, bounded: trend.z <= TREND_CRITICAL })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationThresholds {
    /// Required `boundary max / interior max` at the final sample.
    pub ratio: f64,
    /// A boundary value must exceed `u_cap · cap_fraction`.
    pub cap_fraction: f64,
    pub u_cap: f64,
}

impl Default for LocalizationThresholds {
    fn default() -> Self {
        LocalizationThresholds { ratio: 10.0, cap_fraction: 1e-2, u_cap: 1e10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub boundary_max: f64,
    pub interior_max: f64,
    pub ratio: f64,
    /// `c₁ = sup interiorMax · (tStar − t)^{1/(l−1)}`.
    pub envelope_c1: f64,
    pub envelope_trend: Option<MannKendall>,
    pub envelope_bounded: bool,
    pub boundary_reached_cap: bool,
    pub pass: bool,
}

/// Checks that blow-up happens on the boundary: the interior maximum on
/// `[L/4, 3L/4]` stays under a `c₁(tStar − t)^{−1/(l−1)}` envelope while a
/// boundary value approaches the cap.
pub fn localization_monitor(
    series: &FunctionalSeries,
    spec: &ProblemSpec,
    t_star: f64,
    resolution: f64,
    thresholds: &LocalizationThresholds,
) -> Result<LocalizationReport, MonitorError> {
    let (p, l) = (spec.p, spec.l);
    let last = series.points.last().expect("series has at least one point");
    let times = (0..=256).map(|i| t_star * i as f64 / 256.0);
    let inf_k = times.clone().map(|t| spec.k.bounds_k(t).0).fold(f64::INFINITY, f64::min);
    let inf_c = times.map(|t| spec.c.bounds_c(t).0).fold(f64::INFINITY, f64::min);

    let boundary_max = last.u_left.max(last.u_right);
    let ratio = boundary_max / last.interior_max;
    let beta = 1.0 / (l - 1.0).max(f64::MIN_POSITIVE);
    let env = |pt: &FunctionalPoint, tau: f64| pt.interior_max * tau.powf(beta);
    let envelope_c1 = series.points.iter().filter(|pt| pt.t < t_star).map(|pt| env(pt, t_star - pt.t)).fold(0.0, f64::max);
    let envelope_trend = terminal_decade(series, t_star, resolution, env).ok().map(|w| {
        let v: Vec<f64> = w.iter().map(|x| x.1).collect();
        mann_kendall(&v)
    });
    let envelope_bounded = envelope_c1.is_finite() && envelope_trend.is_some_and(|mk| mk.z <= TREND_CRITICAL);
    let boundary_reached_cap = boundary_max >= thresholds.u_cap * thresholds.cap_fraction;
    let mut report = LocalizationReport {
        boundary_max,
        interior_max: last.interior_max,
        ratio,
        envelope_c1,
        envelope_trend,
        envelope_bounded,
        boundary_reached_cap,
        pass: false,
    };

    let flux_driven = l > p.max(1.0) && inf_k > 0.0;
    let absorption_driven = p > 1.0 && inf_c > 0.0;
    if !(flux_driven || absorption_driven) {
        return Err(MonitorError::HypothesisNotMet {
            reason: format!("needs l > max(p, 1) with inf k > 0, or p > 1 with inf c > 0 (p = {p}, l = {l}, inf k = {inf_k}, inf c = {inf_c})"),
            raw: Some(Box::new(report)),
        });
    }
    report.pass = ratio >= thresholds.ratio && envelope_bounded && boundary_reached_cap;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KaplanReport {
    pub checked: usize,
    /// Smallest `ΔV / (Δt · min rhs)` over sample intervals.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// `V' ≥ |Ω|^{1−l} (∫_∂Ω k̲_c dS) V^l` for `V = e^{∫c̄} U`, checked in
/// integrated form between consecutive samples. Needs `p = 1`.
pub fn kaplan_check(series: &FunctionalSeries, spec: &ProblemSpec) -> Result<KaplanReport, MonitorError> {
    if spec.p != 1.0 {
        return Err(MonitorError::HypothesisNotMet { reason: format!("needs p = 1, got {}", spec.p), raw: None });
    }
    let l = spec.l;
    let len = series.length;
    let bounds = spec.coefficient_bounds();
    let c_int = |t: f64| match &bounds {
        Some(b) => b.c_bar.integral(0.0, t),
        None => spec.c.bounds_c(0.0).1 * t,
    };
    let k_sum = |t: f64| match &bounds {
        Some(b) => b.k_under_c_boundary_sum(t, l),
        None => 2.0 * spec.k.bounds_k(t).0 * (-(l - 1.0) * spec.c.bounds_c(0.0).1 * t).exp(),
    };
    let v = |pt: &FunctionalPoint| c_int(pt.t).exp() * pt.mass;
    let rhs = |pt: &FunctionalPoint| len.powf(1.0 - l) * k_sum(pt.t) * v(pt).powf(l);

    let mut worst_ratio = f64::INFINITY;
    let mut pass = true;
    let mut checked = 0;
    for w in series.points.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let gain = v(&w[1]) - v(&w[0]);
        let need = dt * rhs(&w[0]).min(rhs(&w[1]));
        checked += 1;
        if need > 0.0 {
            worst_ratio = worst_ratio.min(gain / need);
        }
        if gain < need - (1e-6 * need + 1e-12 * v(&w[1])) {
            pass = false;
        }
    }
    Ok(KaplanReport { checked, worst_ratio, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenReport {
    pub checked: usize,
    pub worst_defect: f64,
    pub pass: bool,
}

/// `∫u^l ≥ |Ω|^{1−l} U^l` at every sample with a stored state (`l ≥ 1`).
pub fn jensen_check(series: &FunctionalSeries) -> JensenReport {
    let l = series.l;
    let mut report = JensenReport { checked: 0, worst_defect: 0.0, pass: true };
    for pt in &series.points {
        let Some(pm) = pt.power_mass else { continue };
        let lower = series.length.powf(1.0 - l) * pt.mass.powf(l);
        let defect = (lower - pm) / pm.max(lower).max(f64::MIN_POSITIVE);
        report.checked += 1;
        report.worst_defect = report.worst_defect.max(defect);
        if l >= 1.0 && defect > 1e-12 {
            report.pass = false;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    /// Largest `|U(t) − U(0) − flux + absorption − forcing|` over samples.
    pub max_defect: f64,
    /// `max_defect` relative to the largest term of the identity.
    pub relative_defect: f64,
    /// Mass injected by clamping undershoots, part of the truncation budget.
    pub clamp_mass: f64,
    pub pass: bool,
}

/// Relative threshold for the mass identity at default tolerances.
pub const MASS_TOLERANCE: f64 = 1e-3;

pub fn mass_identity(series: &FunctionalSeries) -> MassReport {
    let first = series.points[0];
    let mut max_defect = 0.0f64;
    let mut scale = first.mass.abs();
    for pt in &series.points {
        let predicted = first.mass + pt.flux_integral - pt.absorption_integral + pt.forcing_integral;
        max_defect = max_defect.max((pt.mass - predicted).abs());
        scale = scale.max(pt.mass.abs()).max(pt.flux_integral).max(pt.absorption_integral).max(pt.forcing_integral.abs());
    }
    let relative_defect = max_defect / scale.max(f64::MIN_POSITIVE);
    let clamp_mass = series.points.last().map_or(0.0, |p| p.clamp_mass);
    MassReport { max_defect, relative_defect, clamp_mass, pass: relative_defect <= MASS_TOLERANCE }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CoefficientDescriptor, Modulation};
    use crate::timestepper::{run, StepControl};

    fn synthetic(j: impl Fn(f64) -> f64) -> FunctionalSeries {
        let points = (0..200)
            .map(|i| {
                let t = 1.0 - 0.5 * 0.95f64.powi(i);
                FunctionalPoint {
                    t,
                    max_u: 1.0,
                    mass: 1.0,
                    j: j(t),
                    w: 1.0,
                    u_left: 1.0,
                    u_right: 1.0,
                    interior_max: 1.0,
                    power_mass: None,
                    flux_integral: 0.0,
                    absorption_integral: 0.0,
                    forcing_integral: 0.0,
                    clamp_mass: 0.0,
                }
            })
            .collect();
        FunctionalSeries { l: 2.0, m: 0.25, length: 1.0, points }
    }

    #[test]
    fn stationary_state_functionals() {
        let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 0.0, 1.0, 1.0);
        let g = Grid::new(40, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 1.0).unwrap();
        let s = track(&out.trajectory, &spec, &g, None);
        for pt in &s.points {
            assert!((pt.mass - 1.0).abs() < 1e-12);
            assert!((pt.j - pt.t).abs() < 1e-12);
            assert!((pt.w - (-pt.t / 0.25).exp()).abs() < 1e-12);
        }
        assert!(s.points.windows(2).all(|w| w[1].j >= w[0].j));
    }

    #[test]
    fn heat_only_conserves_mass() {
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
            .with_u0(crate::problem::InitialDatum::Cosine { mean: 1.0, amplitude: 0.5 });
        let g = Grid::new(50, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 0.5).unwrap();
        let s = track(&out.trajectory, &spec, &g, None);
        let u0 = s.points[0].mass;
        assert!(s.points.iter().all(|p| (p.mass - u0).abs() < 1e-10));
        assert!(mass_identity(&s).pass);
    }

    #[test]
    fn mann_kendall_basics() {
        assert_eq!(mann_kendall(&[1.0; 10]).z, 0.0);
        let up: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mk = mann_kendall(&up);
        assert_eq!(mk.s, 45);
        assert!(mk.z > 3.0);
        let down: Vec<f64> = up.iter().rev().cloned().collect();
        assert!(mann_kendall(&down).z < -3.0);
    }

    #[test]
    fn rate_monitor_synthetic() {
        let ok = rate_monitor(&synthetic(|t| 1.0 / (1.0 - t)), 1.0, 2.0, 0.0).unwrap();
        assert!(ok.bounded);
        assert!(ok.window.iter().all(|w| (w.1 - 1.0).abs() < 1e-12));
        let bad = rate_monitor(&synthetic(|t| (1.0 - t).powi(-2)), 1.0, 2.0, 0.0).unwrap();
        assert!(!bad.bounded);
        assert!(bad.trend.z > TREND_CRITICAL);
    }

    #[test]
    fn rate_monitor_needs_samples() {
        let mut s = synthetic(|t| t);
        s.points.truncate(3);
        assert!(matches!(rate_monitor(&s, 1.0, 2.0, 0.0), Err(MonitorError::InsufficientWindow { .. })));
    }

    #[test]
    fn kaplan_inequality_on_linear_absorption_runs() {
        let g = Grid::new(50, 1.0);
        for (c, u0) in [(0.0, 1.0), (0.0, 2.0), (1.0, 5.0)] {
            let spec = ProblemSpec::constant(1.0, 2.0, c, 1.0, u0, 1.0);
            let out = run(&spec, &g, &StepControl::default(), 1.0).unwrap();
            let s = track(&out.trajectory, &spec, &g, None);
            let r = kaplan_check(&s, &spec).unwrap();
            assert!(r.pass && r.checked > 10, "{c} {u0} {r:?}");
            assert!(jensen_check(&s).pass);
            assert!(mass_identity(&s).pass);
        }
    }

    #[test]
    fn symmetric_run_has_equal_boundary_values() {
        let spec = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 20.0, 1.0);
        let g = Grid::new(60, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 1.0).unwrap();
        for pt in &track(&out.trajectory, &spec, &g, None).points {
            assert!((pt.u_left - pt.u_right).abs() <= 1e-10 * pt.u_left.max(1.0));
        }
    }

    #[test]
    fn localization_gate() {
        let mut spec = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 20.0, 1.0);
        spec.k = CoefficientDescriptor::constant(1.0).with_modulation(Modulation::Linear { slope: -1.0 });
        let s = synthetic(|t| t);
        match localization_monitor(&s, &spec, 1.0, 0.0, &LocalizationThresholds::default()) {
            Err(MonitorError::HypothesisNotMet { raw, .. }) => assert!(raw.is_some()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_blowup_is_localized() {
        let spec = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 50.0, 1.0);
        let g = Grid::new(200, 1.0);
        let out = run(&spec, &g, &StepControl::default(), 1.0).unwrap();
        let s = track(&out.trajectory, &spec, &g, None);
        let t_star = out.t_star_estimate.unwrap();
        let resolution = RESOLUTION_FACTOR * out.estimator_gap.unwrap();
        let r = localization_monitor(&s, &spec, t_star, resolution, &LocalizationThresholds::default()).unwrap();
        assert!(r.pass, "{r:?}");
        let rate = rate_monitor(&s, t_star, spec.l, resolution).unwrap();
        assert!(rate.bounded, "{rate:?}");
    }
}
