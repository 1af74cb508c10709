//! Adaptive explicit Euler driver with step-doubling error control and
//! blow-up detection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{Forcing, Grid, GridState, RhsParts, SemiDiscrete};
use crate::problem::ProblemSpec;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub safety: f64,
    pub dt_max: f64,
    pub dt_floor: f64,
    pub u_cap: f64,
    /// Step-doubling local error target, relative to `max(1, |u|)`.
    pub err_tol: f64,
    /// Trajectory sampling cadence in time.
    pub sample_interval: f64,
    /// Extra samples whenever `max u` grows by this factor since the last one.
    pub growth_sample_factor: f64,
    /// Consecutive steps pinned at the floor below `u_cap` before giving up.
    pub max_pinned_steps: u64,
    pub max_steps: u64,
    /// Keep the full nodal state at every sample.
    pub store_snapshots: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            safety: 0.8,
            dt_max: 1e-2,
            dt_floor: 1e-14,
            u_cap: 1e10,
            err_tol: 1e-6,
            sample_interval: 1e-2,
            growth_sample_factor: 1.02,
            max_pinned_steps: 100_000,
            max_steps: 200_000_000,
            store_snapshots: true,
        }
    }
}

impl StepControl {
    pub fn with_err_tol(mut self, err_tol: f64) -> Self {
        self.err_tol = err_tol;
        self
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::InvalidControl(m.to_string()));
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad("safety must lie in (0, 1]");
        }
        if !(self.dt_floor > 0.0 && self.dt_floor < self.dt_max) {
            return bad("need 0 < dt_floor < dt_max");
        }
        if !(self.u_cap > 1.0) {
            return bad("u_cap must exceed 1");
        }
        if !(self.err_tol > 0.0) {
            return bad("err_tol must be positive");
        }
        if !(self.sample_interval > 0.0) {
            return bad("sample_interval must be positive");
        }
        if !(self.growth_sample_factor > 1.0) {
            return bad("growth_sample_factor must exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    GlobalToHorizon,
    BlowUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpLocation {
    LeftBoundary,
    RightBoundary,
    Interior,
}

impl BlowUpLocation {
    /// Buckets a node position: `[L/4, 3L/4]` is interior, the rest goes to the
    /// nearer boundary.
    pub fn from_position(x: f64, length: f64) -> Self {
        if x < 0.25 * length {
            BlowUpLocation::LeftBoundary
        } else if x > 0.75 * length {
            BlowUpLocation::RightBoundary
        } else {
            BlowUpLocation::Interior
        }
    }
}

/// One trajectory sample. Integrals are accumulated with the same Euler
/// quadrature the scheme uses, so
/// `U(t) − U(0) = flux − absorption + forcing + clamp` holds to round-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub max_u: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub interior_max: f64,
    /// `U(t) = Σ w_i u_i`.
    pub mass: f64,
    /// `J(t) = ∫_0^t Σ w_i u_i^l`.
    pub j: f64,
    /// Step size of the step that produced this sample (0 at `t = 0`).
    pub dt: f64,
    pub flux_integral: f64,
    pub absorption_integral: f64,
    pub forcing_integral: f64,
    /// Mass added by clamping negative undershoots to zero.
    pub clamp_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Nodal states at the sample times, when requested.
    pub snapshots: Vec<GridState>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn max_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.max_u)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpFit {
    /// Zero crossing of the `M^{-(l-1)}` extrapolation.
    pub t_star: f64,
    /// Exponent `β` of the generic `M ≈ C (T − t)^{-β}` fit.
    pub rate_exponent: f64,
    /// `T` of the generic fit.
    pub generic_t_star: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub accepted: u64,
    pub rejected: u64,
    pub pinned: u64,
    /// Start of the first accepted step taken at the floor, where the error
    /// target was no longer enforced.
    pub first_pinned_t: Option<f64>,
    /// Most negative nodal undershoot relative to `max u` before clamping.
    pub worst_undershoot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    pub t_end: f64,
    pub t_star_estimate: Option<f64>,
    pub rate_exponent: Option<f64>,
    pub estimator_gap: Option<f64>,
    pub location: Option<BlowUpLocation>,
    pub trajectory: Trajectory,
    pub final_state: GridState,
    pub stats: RunStats,
}

impl RunOutcome {
    pub fn is_blow_up(&self) -> bool {
        self.kind == OutcomeKind::BlowUp
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("no convergence at t={t}: dt pinned at the floor for {steps} steps with max u = {max_u:e} below the cap")]
    NonConvergence { t: f64, max_u: f64, steps: u64 },
    #[error("step budget of {0} exhausted")]
    StepBudget(u64),
    #[error("invalid step control: {0}")]
    InvalidControl(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("blow-up fit degenerate: {0}")]
    FitDegenerate(String),
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("overflow during step at t={t}")]
pub struct Overflow {
    pub t: f64,
}

/// Work buffers for one step-doubling attempt.
struct Stepper<'a> {
    op: SemiDiscrete<'a>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    half: Vec<f64>,
    full: Vec<f64>,
    next: Vec<f64>,
    parts0: Option<RhsParts>,
}

struct Attempt {
    err: f64,
    parts0: RhsParts,
    parts1: RhsParts,
    finite: bool,
}

impl<'a> Stepper<'a> {
    fn new(op: SemiDiscrete<'a>) -> Self {
        let m = op.grid().n() + 1;
        Stepper {
            op,
            f0: vec![0.0; m],
            f1: vec![0.0; m],
            half: vec![0.0; m],
            full: vec![0.0; m],
            next: vec![0.0; m],
            parts0: None,
        }
    }

    /// Full Euler step and two half steps from `(t, u)`; the two-half-step
    /// result lands in `self.next`. `f(t, u)` is cached until `invalidate`.
    fn attempt(&mut self, t: f64, u: &[f64], dt: f64) -> Attempt {
        let parts0 = match self.parts0 {
            Some(p) => p,
            None => {
                let p = self.op.rhs_into(t, u, &mut self.f0);
                self.parts0 = Some(p);
                p
            }
        };
        for i in 0..u.len() {
            self.full[i] = u[i] + dt * self.f0[i];
            self.half[i] = u[i] + 0.5 * dt * self.f0[i];
        }
        let parts1 = self.op.rhs_into(t + 0.5 * dt, &self.half, &mut self.f1);
        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..u.len() {
            let v = self.half[i] + 0.5 * dt * self.f1[i];
            self.next[i] = v;
            if !v.is_finite() {
                finite = false;
            }
            err = err.max((v - self.full[i]).abs() / v.abs().max(1.0));
        }
        Attempt { err, parts0, parts1, finite }
    }

    fn invalidate(&mut self) {
        self.parts0 = None;
    }
}

/// Clamps negatives to zero; returns `(added mass, most negative value)`.
fn clamp_nonneg(u: &mut [f64], weights: &[f64]) -> (f64, f64) {
    let mut added = 0.0;
    let mut worst: f64 = 0.0;
    for (v, w) in u.iter_mut().zip(weights) {
        if *v < 0.0 {
            added -= w * *v;
            worst = worst.min(*v);
            *v = 0.0;
        }
    }
    (added, worst)
}

/// One explicit Euler step with step doubling: returns the two-half-step
/// state (clamped at 0) and the local error estimate.
pub fn step(state: &GridState, dt: f64, spec: &ProblemSpec, grid: &Grid) -> Result<(GridState, f64), Overflow> {
    let mut st = Stepper::new(SemiDiscrete::new(spec, grid));
    let a = st.attempt(state.t, &state.u, dt);
    if !a.finite {
        return Err(Overflow { t: state.t });
    }
    let mut u = st.next.clone();
    clamp_nonneg(&mut u, grid.weights());
    Ok((GridState { t: state.t + dt, u }, a.err))
}

fn sample_of(state: &GridState, grid: &Grid, acc: &Accumulators, dt: f64) -> Sample {
    let n = grid.n();
    let interior_max = grid.interior_range().map(|i| state.u[i]).fold(0.0, f64::max);
    Sample {
        t: state.t,
        max_u: state.max(),
        u_left: state.u[0],
        u_right: state.u[n],
        interior_max,
        mass: grid.integrate(&state.u),
        j: acc.j,
        dt,
        flux_integral: acc.flux,
        absorption_integral: acc.absorption,
        forcing_integral: acc.forcing,
        clamp_mass: acc.clamp,
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Accumulators {
    j: f64,
    flux: f64,
    absorption: f64,
    forcing: f64,
    clamp: f64,
}

/// Integrates `spec` on `grid` up to `horizon` or until blow-up.
pub fn run(spec: &ProblemSpec, grid: &Grid, ctrl: &StepControl, horizon: f64) -> Result<RunOutcome, RunError> {
    run_forced(spec, grid, ctrl, horizon, None)
}

pub fn run_forced(
    spec: &ProblemSpec,
    grid: &Grid,
    ctrl: &StepControl,
    horizon: f64,
    forcing: Option<Forcing>,
) -> Result<RunOutcome, RunError> {
    ctrl.validate()?;
    let mut stepper = Stepper::new(SemiDiscrete::new(spec, grid).with_forcing(forcing));
    let mut state = GridState::from_spec(spec, grid);
    let mut acc = Accumulators::default();
    let mut stats = RunStats::default();
    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, state: &GridState, acc: &Accumulators, dt: f64| {
        traj.samples.push(sample_of(state, grid, acc, dt));
        if ctrl.store_snapshots {
            traj.snapshots.push(state.clone());
        }
    };
    record(&mut traj, &state, &acc, 0.0);

    let stability = grid.stability_limit(ctrl.safety);
    let blowup_exp = 1.0 - spec.p.max(spec.l);
    let mut dt = ctrl.dt_max.min(stability);
    let mut next_sample_t = ctrl.sample_interval;
    let mut last_sample_max = state.max().max(f64::MIN_POSITIVE);
    let mut consecutive_pinned = 0u64;
    let mut max_u = state.max();
    // Kahan compensation for `t`, whose steps shrink to a few ulps near blow-up
    let mut t_comp = 0.0;

    let blow_up = |state: GridState, traj: Trajectory, stats: RunStats| {
        let fit = estimate_blowup_time(&traj.max_series(), spec.l).ok();
        let t_end = state.t;
        let location = BlowUpLocation::from_position(grid.nodes()[state.argmax()], grid.length());
        RunOutcome {
            kind: OutcomeKind::BlowUp,
            t_end,
            t_star_estimate: Some(fit.map_or(t_end, |f| f.t_star.max(t_end))),
            rate_exponent: fit.map(|f| f.rate_exponent),
            estimator_gap: fit.map(|f| f.gap),
            location: Some(location),
            trajectory: traj,
            final_state: state,
            stats,
        }
    };

    loop {
        let remaining = horizon - state.t;
        if remaining <= 1e-12 * horizon.max(1.0) {
            if traj.last().t < state.t {
                record(&mut traj, &state, &acc, dt);
            }
            return Ok(RunOutcome {
                kind: OutcomeKind::GlobalToHorizon,
                t_end: state.t,
                t_star_estimate: None,
                rate_exponent: None,
                estimator_gap: None,
                location: None,
                trajectory: traj,
                final_state: state,
                stats,
            });
        }
        if stats.accepted + stats.rejected >= ctrl.max_steps {
            return Err(RunError::StepBudget(ctrl.max_steps));
        }

        let mut limit = ctrl.dt_max.min(stability).min(remaining);
        if blowup_exp < 0.0 && max_u > 1.0 {
            limit = limit.min(1e-2 * max_u.powf(blowup_exp));
        }
        dt = dt.min(limit);
        let floor = ctrl.dt_floor.max(4.0 * f64::EPSILON * state.t);
        let mut pinned = false;
        if dt <= floor && remaining > floor {
            dt = floor;
            pinned = true;
        }

        let a = stepper.attempt(state.t, &state.u, dt);
        if !a.finite {
            if max_u >= ctrl.u_cap && dt <= 10.0 * floor {
                return Ok(blow_up(state, traj, stats));
            }
            if pinned {
                return Err(RunError::NonConvergence { t: state.t, max_u, steps: consecutive_pinned });
            }
            stats.rejected += 1;
            dt *= 0.2;
            continue;
        }
        if a.err > ctrl.err_tol && !pinned {
            stats.rejected += 1;
            let shrink = (ctrl.safety * (ctrl.err_tol / a.err).sqrt()).max(0.2);
            dt = (dt * shrink).max(floor);
            continue;
        }

        // accept
        let half_dt = 0.5 * dt;
        acc.flux += half_dt * (a.parts0.flux[0] + a.parts0.flux[1] + a.parts1.flux[0] + a.parts1.flux[1]);
        acc.absorption += half_dt * (a.parts0.absorption + a.parts1.absorption);
        acc.forcing += half_dt * (a.parts0.forcing_mass + a.parts1.forcing_mass);
        acc.j += half_dt * (a.parts0.flux_power_mass + a.parts1.flux_power_mass);
        std::mem::swap(&mut state.u, &mut stepper.next);
        stepper.invalidate();
        let (added, worst) = clamp_nonneg(&mut state.u, grid.weights());
        acc.clamp += added;
        let y = dt - t_comp;
        let t_new = state.t + y;
        t_comp = (t_new - state.t) - y;
        state.t = t_new;
        max_u = state.max();
        if max_u > 0.0 {
            stats.worst_undershoot = stats.worst_undershoot.min(worst / max_u);
        }
        stats.accepted += 1;
        if pinned {
            stats.pinned += 1;
            stats.first_pinned_t.get_or_insert(state.t - dt);
        }

        if state.t >= next_sample_t || max_u >= last_sample_max * ctrl.growth_sample_factor {
            record(&mut traj, &state, &acc, dt);
            last_sample_max = max_u.max(f64::MIN_POSITIVE);
            while next_sample_t <= state.t {
                next_sample_t += ctrl.sample_interval;
            }
        }

        if !max_u.is_finite() {
            return Ok(blow_up(state, traj, stats));
        }
        if max_u >= ctrl.u_cap && dt <= 10.0 * floor {
            if traj.last().t < state.t {
                record(&mut traj, &state, &acc, dt);
            }
            return Ok(blow_up(state, traj, stats));
        } else if pinned {
            consecutive_pinned += 1;
            if consecutive_pinned > ctrl.max_pinned_steps {
                return Err(RunError::NonConvergence { t: state.t, max_u, steps: consecutive_pinned });
            }
        } else {
            consecutive_pinned = 0;
        }

        let grow = if a.err > 0.0 { ctrl.safety * (ctrl.err_tol / a.err).sqrt() } else { 5.0 };
        dt *= grow.clamp(0.2, 5.0);
    }
}

/// Fixed-step two-stage Euler (the accepted update of the adaptive driver)
/// from the initial datum to `t_end` with `steps` equal steps.
pub fn integrate_fixed(spec: &ProblemSpec, grid: &Grid, t_end: f64, steps: usize, forcing: Option<Forcing>) -> GridState {
    let mut stepper = Stepper::new(SemiDiscrete::new(spec, grid).with_forcing(forcing));
    let mut state = GridState::from_spec(spec, grid);
    let dt = t_end / steps as f64;
    for k in 0..steps {
        stepper.attempt(state.t, &state.u, dt);
        std::mem::swap(&mut state.u, &mut stepper.next);
        stepper.invalidate();
        clamp_nonneg(&mut state.u, grid.weights());
        state.t = (k + 1) as f64 * dt;
    }
    state
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (slope, intercept, sse)
}

/// Blow-up time and rate from samples `(t_j, M_j)` of `max u`.
///
/// The terminal window is the upper half of the `log M` range (at least 8
/// samples). The returned `t_star` extrapolates `M^{-(l-1)}` linearly to zero;
/// the generic fit `log M = a − β log(T − t)` supplies `β` and a second `T`.
pub fn estimate_blowup_time(series: &[(f64, f64)], l: f64) -> Result<BlowUpFit, FitError> {
    const MIN_WINDOW: usize = 8;
    let degenerate = |m: &str| Err(FitError::FitDegenerate(m.to_string()));
    if series.len() < MIN_WINDOW {
        return degenerate("fewer than 8 samples");
    }
    if !(l > 1.0) {
        return degenerate("rate-specific extrapolation needs l > 1");
    }
    let positive: Vec<(f64, f64)> = series.iter().copied().filter(|&(_, m)| m > 0.0 && m.is_finite()).collect();
    if positive.len() < MIN_WINDOW {
        return degenerate("fewer than 8 positive samples");
    }
    let log_first = positive[0].1.ln();
    let log_last = positive[positive.len() - 1].1.ln();
    let cut = 0.5 * (log_first + log_last);
    let mut start = positive.iter().position(|&(_, m)| m.ln() >= cut).unwrap_or(0);
    start = start.min(positive.len() - MIN_WINDOW);
    let window = &positive[start..];
    if window.windows(2).any(|w| !(w[1].1 > w[0].1) || !(w[1].0 > w[0].0)) {
        return degenerate("terminal window is not strictly increasing");
    }

    let ts: Vec<f64> = window.iter().map(|w| w.0).collect();
    let inv: Vec<f64> = window.iter().map(|w| w.1.powf(-(l - 1.0))).collect();
    let (slope, intercept, _) = linear_fit(&ts, &inv);
    if !(slope < 0.0) {
        return degenerate("M^{-(l-1)} is not decreasing");
    }
    let t_last = ts[ts.len() - 1];
    let t_star = (-intercept / slope).max(t_last);

    let logm: Vec<f64> = window.iter().map(|w| w.1.ln()).collect();
    let span = (t_last - ts[0]).max(f64::MIN_POSITIVE);
    let sse_at = |s: f64| {
        let gap = s.exp();
        let xs: Vec<f64> = ts.iter().map(|t| (t_last + gap - t).ln()).collect();
        linear_fit(&xs, &logm).2
    };
    let (lo, hi) = ((span * 1e-12).ln(), (span * 1e3).ln());
    let scan = 400;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=scan {
        let s = lo + (hi - lo) * i as f64 / scan as f64;
        let v = sse_at(s);
        if v < best.0 {
            best = (v, s);
        }
    }
    let step = (hi - lo) / scan as f64;
    let s_opt = quad::golden_min(sse_at, best.1 - step, best.1 + step, 80);
    let generic_t_star = t_last + s_opt.exp();
    let xs: Vec<f64> = ts.iter().map(|t| (generic_t_star - t).ln()).collect();
    let (beta_slope, _, _) = linear_fit(&xs, &logm);
    Ok(BlowUpFit { t_star, rate_exponent: -beta_slope, generic_t_star, gap: (t_star - generic_t_star).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::InitialDatum;

    fn quick() -> StepControl {
        StepControl { err_tol: 1e-6, ..StepControl::default() }
    }

    #[test]
    fn steady_state_is_fixed() {
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 5.0, 1.0);
        let g = Grid::new(16, 1.0);
        let s = GridState::from_spec(&spec, &g);
        let (s2, err) = step(&s, 1e-3, &spec, &g).unwrap();
        assert!(s2.u.iter().all(|v| *v == 5.0));
        assert_eq!(err, 0.0);
    }

    #[test]
    fn pure_decay_step() {
        let spec = ProblemSpec::constant(1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let g = Grid::new(16, 1.0);
        let (s2, _) = step(&GridState::from_spec(&spec, &g), 1e-3, &spec, &g).unwrap();
        assert!(s2.u.iter().all(|v| (v - (1.0 - 1e-3)).abs() < 1e-6));
    }

    #[test]
    fn heat_only_conserves_mass_per_step() {
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
            .with_u0(InitialDatum::Cosine { mean: 1.0, amplitude: 1.0 });
        let g = Grid::new(64, 1.0);
        let mut s = GridState::from_spec(&spec, &g);
        let m0 = g.integrate(&s.u);
        for _ in 0..50 {
            s = step(&s, g.stability_limit(0.8), &spec, &g).unwrap().0;
            assert!((g.integrate(&s.u) - m0).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_only_run_is_global_with_constant_mass() {
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
            .with_u0(InitialDatum::Cosine { mean: 2.0, amplitude: 1.0 });
        let g = Grid::new(32, 1.0);
        let out = run(&spec, &g, &quick(), 1.0).unwrap();
        assert_eq!(out.kind, OutcomeKind::GlobalToHorizon);
        assert!((out.t_end - 1.0).abs() < 1e-9);
        let m0 = out.trajectory.samples[0].mass;
        assert!(out.trajectory.samples.iter().all(|s| (s.mass - m0).abs() < 1e-10));
    }

    #[test]
    fn mass_identity_exact_to_roundoff() {
        let spec = ProblemSpec::constant(2.0, 1.5, 1.0, 1.0, 1.0, 1.0)
            .with_u0(InitialDatum::Cosine { mean: 1.0, amplitude: 0.5 });
        let g = Grid::new(40, 1.0);
        let out = run(&spec, &g, &quick(), 1.0).unwrap();
        let s0 = out.trajectory.samples[0];
        for s in &out.trajectory.samples {
            let balance = s0.mass + s.flux_integral - s.absorption_integral + s.clamp_mass;
            assert!((s.mass - balance).abs() < 1e-10 * s.mass.max(1.0));
        }
    }

    #[test]
    fn sublinear_absorption_large_data_blows_up() {
        let spec = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 50.0, 1.0);
        let g = Grid::new(100, 1.0);
        let out = run(&spec, &g, &quick(), 1.0).unwrap();
        assert_eq!(out.kind, OutcomeKind::BlowUp);
        let t_star = out.t_star_estimate.unwrap();
        assert!(t_star >= out.t_end && t_star < 0.1);
        assert!(out.final_state.max() >= StepControl::default().u_cap);
        assert_ne!(out.location, Some(BlowUpLocation::Interior));
    }

    #[test]
    fn strong_absorption_stays_global() {
        let spec = ProblemSpec::constant(2.0, 1.5, 1.0, 1.0, 1.0, 1.0);
        let g = Grid::new(32, 1.0);
        let out = run(&spec, &g, &quick(), 3.0).unwrap();
        assert_eq!(out.kind, OutcomeKind::GlobalToHorizon);
        assert!(out.trajectory.samples.iter().all(|s| s.max_u < 10.0));
    }

    #[test]
    fn stalled_run_is_nonconvergence() {
        // an error target below round-off forces dt to the floor without growth
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
            .with_u0(InitialDatum::Cosine { mean: 1.0, amplitude: 1.0 });
        let ctrl = StepControl { err_tol: 1e-300, dt_floor: 1e-12, max_pinned_steps: 50, ..quick() };
        let g = Grid::new(16, 1.0);
        assert!(matches!(run(&spec, &g, &ctrl, 1.0), Err(RunError::NonConvergence { .. })));
    }

    #[test]
    fn invalid_control_rejected() {
        let ctrl = StepControl { dt_floor: 1.0, dt_max: 0.1, ..quick() };
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        assert!(matches!(run(&spec, &Grid::new(8, 1.0), &ctrl, 1.0), Err(RunError::InvalidControl(_))));
    }

    #[test]
    fn runs_are_bit_identical() {
        let spec = ProblemSpec::constant(1.5, 3.0, 1.0, 1.0, 3.0, 1.0);
        let g = Grid::new(40, 1.0);
        let a = run(&spec, &g, &quick(), 0.5).unwrap();
        let b = run(&spec, &g, &quick(), 0.5).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
    }

    #[test]
    fn fit_exact_simple_pole() {
        let series: Vec<(f64, f64)> = (0..200).map(|j| {
            let t = 0.99 * (1.0 - (-(j as f64) / 30.0).exp());
            (t, 1.0 / (1.0 - t))
        }).collect();
        let fit = estimate_blowup_time(&series, 2.0).unwrap();
        assert!((fit.t_star - 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.rate_exponent - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn fit_generated_series() {
        let series: Vec<(f64, f64)> = (0..300).map(|j| {
            let t = 0.7 - 0.7 * (-(j as f64) / 40.0).exp();
            (t, 3.0 * (0.7 - t).powi(-2))
        }).collect();
        let fit = estimate_blowup_time(&series, 1.5).unwrap();
        assert!((fit.t_star - 0.7).abs() < 1e-4, "{fit:?}");
        assert!((fit.rate_exponent - 2.0).abs() < 1e-2, "{fit:?}");
    }

    #[test]
    fn constant_series_is_degenerate() {
        let series: Vec<(f64, f64)> = (0..20).map(|j| (j as f64, 3.0)).collect();
        assert!(matches!(estimate_blowup_time(&series, 2.0), Err(FitError::FitDegenerate(_))));
    }

    #[test]
    fn discrete_comparison_preserves_order() {
        let lo = ProblemSpec::constant(2.0, 1.5, 1.0, 1.0, 1.0, 1.0)
            .with_u0(InitialDatum::Cosine { mean: 1.0, amplitude: 0.5 });
        let hi = lo.clone().with_u0(InitialDatum::Cosine { mean: 1.6, amplitude: 0.5 });
        let g = Grid::new(32, 1.0);
        let dt = 0.5 * g.stability_limit(0.8);
        let (mut a, mut b) = (GridState::from_spec(&lo, &g), GridState::from_spec(&hi, &g));
        for _ in 0..2000 {
            a = step(&a, dt, &lo, &g).unwrap().0;
            b = step(&b, dt, &hi, &g).unwrap().0;
            assert!(a.u.iter().zip(&b.u).all(|(x, y)| x <= y));
        }
    }
}
