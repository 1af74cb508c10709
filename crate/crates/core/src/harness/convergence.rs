//! Refinement studies against manufactured solutions, and blow-up time
//! increments under joint grid and tolerance refinement.

use serde::Serialize;

use crate::discretization::{Forcing, Grid};
use crate::problem::{InitialDatum, ProblemSpec};
use crate::timestepper::{integrate_fixed, run, RunError, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub n: usize,
    pub steps: usize,
    /// Max nodal error against the exact solution, or the max difference to
    /// the next finer level for self-convergence studies.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStudy {
    pub name: String,
    pub levels: Vec<Level>,
    /// `log2` ratios of successive errors.
    pub orders: Vec<f64>,
}

impl RefinementStudy {
    fn new(name: &str, levels: Vec<Level>) -> Self {
        let orders = levels.windows(2).map(|w| (w[0].error / w[1].error).log2()).collect();
        RefinementStudy { name: name.to_string(), levels, orders }
    }

    /// Order between the two finest levels.
    pub fn observed_order(&self) -> f64 {
        self.orders.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_error(&self) -> f64 {
        self.levels.iter().map(|l| l.error).fold(0.0, f64::max)
    }
}

fn max_error(grid: &Grid, u: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    grid.nodes().iter().zip(u).map(|(&x, &v)| (v - exact(x)).abs()).fold(0.0, f64::max)
}

/// `u* = e^t (1 + x²)` on `(0, 1)` with `c ≡ k ≡ 1`, `p = 1`, `l = 2`, fixed
/// steps `dt = h²/4`. Both error sources scale with `h²`.
pub fn spatial_study(levels: &[usize], t_end: f64) -> RefinementStudy {
    const I: f64 = 28.0 / 15.0; // ∫ (1 + y²)² dy on (0, 1)
    let spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 1.0, 1.0)
        .with_u0(InitialDatum::custom("1+x^2", |x| 1.0 + x * x, |x| 2.0 * x));
    let levels = levels
        .iter()
        .map(|&n| {
            let grid = Grid::new(n, 1.0);
            let h = grid.h();
            let steps = (t_end / (0.25 * h * h)).ceil() as usize;
            let forcing = Forcing::new(
                |x, t: f64| 2.0 * t.exp() * x * x,
                |t: f64| -I * (2.0 * t).exp(),
                |t: f64| 2.0 * t.exp() - I * (2.0 * t).exp(),
            );
            let state = integrate_fixed(&spec, &grid, t_end, steps, Some(forcing));
            let error = max_error(&grid, &state.u, |x| t_end.exp() * (1.0 + x * x));
            Level { n, steps, error }
        })
        .collect();
    RefinementStudy::new("manufactured e^t(1+x^2)", levels)
}

/// `u* = e^{-π²t} sin(πx) + 2` with `c ≡ k ≡ 0` and the matching boundary
/// flux, on a fixed grid. The spatial error is common to all step counts, so
/// the order comes from differences of successive levels.
pub fn temporal_study(n: usize, steps: &[usize], t_end: f64) -> RefinementStudy {
    use std::f64::consts::PI;
    let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 1.0)
        .with_u0(InitialDatum::custom("sin(pi x)+2", |x| (PI * x).sin() + 2.0, |x| PI * (PI * x).cos()));
    let grid = Grid::new(n, 1.0);
    let flux = |t: f64| -PI * (-PI * PI * t).exp();
    let states: Vec<Vec<f64>> = steps
        .iter()
        .map(|&s| integrate_fixed(&spec, &grid, t_end, s, Some(Forcing::new(|_, _| 0.0, flux, flux))).u)
        .collect();
    let levels = states
        .windows(2)
        .zip(steps)
        .map(|(w, &s)| Level { n, steps: s, error: w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) })
        .collect();
    RefinementStudy::new("pure heat e^{-pi^2 t} sin(pi x)+2", levels)
}

/// The zero datum with zero forcing stays exactly zero.
pub fn zero_study(levels: &[usize], t_end: f64) -> RefinementStudy {
    let spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 0.0, 1.0);
    let levels = levels
        .iter()
        .map(|&n| {
            let grid = Grid::new(n, 1.0);
            let steps = (t_end / (0.25 * grid.h() * grid.h())).ceil() as usize;
            let state = integrate_fixed(&spec, &grid, t_end, steps, None);
            Level { n, steps, error: max_error(&grid, &state.u, |_| 0.0) }
        })
        .collect();
    RefinementStudy::new("zero solution", levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUpLevel {
    pub n: usize,
    pub err_tol: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUpStudy {
    pub levels: Vec<BlowUpLevel>,
    /// `|t*_{k+1} − t*_k|`.
    pub increments: Vec<f64>,
    /// Increments relative to the finer estimate.
    pub relative_increments: Vec<f64>,
    pub decreasing: bool,
}

/// Blow-up time estimates as `n` doubles and `err_tol` drops tenfold per level.
pub fn blowup_study(spec: &ProblemSpec, levels: &[(usize, f64)], horizon: f64) -> Result<BlowUpStudy, RunError> {
    let mut out = Vec::new();
    for &(n, err_tol) in levels {
        let ctrl = StepControl { store_snapshots: false, ..StepControl::default().with_err_tol(err_tol) };
        let o = run(spec, &Grid::new(n, spec.length()), &ctrl, horizon)?;
        let t_star = if o.is_blow_up() { o.t_star_estimate.unwrap_or(o.t_end) } else { f64::NAN };
        out.push(BlowUpLevel { n, err_tol, t_star });
    }
    let increments: Vec<f64> = out.windows(2).map(|w| (w[1].t_star - w[0].t_star).abs()).collect();
    let relative_increments = out.windows(2).zip(&increments).map(|(w, d)| d / w[1].t_star).collect();
    let decreasing = increments.windows(2).all(|w| w[1] < w[0]);
    Ok(BlowUpStudy { levels: out, increments, relative_increments, decreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub spatial: RefinementStudy,
    pub temporal: RefinementStudy,
    pub zero: RefinementStudy,
    pub blowup: Vec<(String, Result<BlowUpStudy, String>)>,
}

/// The standard suite: spatial order over `n ∈ {100, 200, 400}`, temporal
/// order over four step counts, the zero solution, and blow-up time
/// increments for each of `blowup_specs` over `blowup_levels`.
pub fn convergence_suite(blowup_specs: &[(String, ProblemSpec)], blowup_levels: &[(usize, f64)]) -> ConvergenceReport {
    ConvergenceReport {
        spatial: spatial_study(&[100, 200, 400], 0.1),
        temporal: temporal_study(32, &[400, 800, 1600, 3200, 6400], 0.1),
        zero: zero_study(&[16, 32, 64], 0.1),
        blowup: blowup_specs
            .iter()
            .map(|(name, spec)| (name.clone(), blowup_study(spec, blowup_levels, 1.0).map_err(|e| e.to_string())))
            .collect(),
    }
}
