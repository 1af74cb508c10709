//! Method-of-lines discretization on a uniform grid: 3-point Laplacian with
//! ghost-node flux coupling and trapezoid quadrature for the nonlocal flux.
//!
//! The ghost values `u_{-1} = u_1 + 2h·g0`, `u_{n+1} = u_{n-1} + 2h·gL` make the
//! trapezoid sum of the discrete Laplacian telescope to `g0 + gL`, so the
//! trapezoid mass obeys the same balance law as the continuous one.

use std::fmt;
use std::sync::Arc;

use crate::problem::{CoefficientDescriptor, Endpoint, ProblemSpec, TimeProfile};
use crate::quad::pow_nonneg;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
    length: f64,
    x: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub const MIN_INTERVALS: usize = 8;

    /// `n` intervals (`n + 1` nodes) on `[0, length]`.
    pub fn new(n: usize, length: f64) -> Self {
        assert!(n >= Self::MIN_INTERVALS, "grid needs at least {} intervals, got {n}", Self::MIN_INTERVALS);
        assert!(length > 0.0 && length.is_finite(), "grid length must be positive");
        let h = length / n as f64;
        let x = (0..=n).map(|i| if i == n { length } else { i as f64 * h }).collect();
        let mut weights = vec![h; n + 1];
        weights[0] = 0.5 * h;
        weights[n] = 0.5 * h;
        Grid { n, h, length, x, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(w, v)| w * v).sum()
    }

    /// Largest explicit Euler step that keeps the heat part monotone.
    pub fn stability_limit(&self, safety: f64) -> f64 {
        safety * self.h * self.h / 2.0
    }

    /// Node index range covering `[L/4, 3L/4]`.
    pub fn interior_range(&self) -> std::ops::RangeInclusive<usize> {
        let lo = (self.n as f64 / 4.0).ceil() as usize;
        let hi = (3.0 * self.n as f64 / 4.0).floor() as usize;
        lo..=hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub u: Vec<f64>,
}

impl GridState {
    pub fn from_spec(spec: &ProblemSpec, grid: &Grid) -> Self {
        let u = grid.nodes().iter().map(|&x| spec.u0.eval(x, grid.length()).max(0.0)).collect();
        GridState { t: 0.0, u }
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.u.iter().enumerate() {
            if v > self.u[best] {
                best = i;
            }
        }
        best
    }
}

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Signal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Source terms for manufactured solutions: `F(x, t)` added to the PDE and
/// `G_b(t)` added to the boundary flux at each endpoint.
#[derive(Clone)]
pub struct Forcing {
    pub interior: Field,
    pub boundary: [Signal; 2],
}

impl Forcing {
    pub fn new<F, G0, G1>(interior: F, left: G0, right: G1) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G0: Fn(f64) -> f64 + Send + Sync + 'static,
        G1: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Forcing { interior: Arc::new(interior), boundary: [Arc::new(left), Arc::new(right)] }
    }

    pub fn interior_only<F>(interior: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(interior, |_| 0.0, |_| 0.0)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Forcing { .. }")
    }
}

/// Closed coefficients factor as `profile(t) × spatial part`; the spatial part
/// (and for `k` the quadrature weight) is tabulated once per grid.
#[derive(Debug, Clone)]
enum Tabulated {
    Closed { profile: TimeProfile, spatial: Vec<f64>, endpoint_weights: [f64; 2] },
    Custom,
}

impl Tabulated {
    fn new(coef: &CoefficientDescriptor, grid: &Grid, with_weights: bool) -> Self {
        match coef.closed() {
            Some(c) => {
                let spatial = grid
                    .nodes()
                    .iter()
                    .zip(grid.weights())
                    .map(|(&x, &w)| c.modulation.eval(x, grid.length()) * if with_weights { w } else { 1.0 })
                    .collect();
                Tabulated::Closed { profile: c.profile, spatial, endpoint_weights: c.endpoint_weights }
            }
            None => Tabulated::Custom,
        }
    }
}

/// Pieces of one right-hand-side evaluation, reused for the mass bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RhsParts {
    /// Boundary fluxes `g0`, `gL` (forcing included).
    pub flux: [f64; 2],
    /// `Σ w_i c(x_i, t) u_i^p`.
    pub absorption: f64,
    /// `Σ w_i u_i^l`.
    pub flux_power_mass: f64,
    /// `Σ w_i F(x_i, t)`.
    pub forcing_mass: f64,
}

/// Semi-discrete operator for one problem on one grid.
#[derive(Debug, Clone)]
pub struct SemiDiscrete<'a> {
    spec: &'a ProblemSpec,
    grid: &'a Grid,
    c_tab: Tabulated,
    k_tab: Tabulated,
    forcing: Option<Forcing>,
    pow_l: Vec<f64>,
}

impl<'a> SemiDiscrete<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: &'a Grid) -> Self {
        SemiDiscrete {
            spec,
            grid,
            c_tab: Tabulated::new(&spec.c, grid, false),
            k_tab: Tabulated::new(&spec.k, grid, true),
            forcing: None,
            pow_l: vec![0.0; grid.n() + 1],
        }
    }

    pub fn with_forcing(mut self, forcing: Option<Forcing>) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    /// Nonlocal fluxes `g_b = Σ_j w_j k(b, y_j, t) u_j^l`, without forcing.
    pub fn fluxes(&mut self, t: f64, u: &[f64]) -> [f64; 2] {
        self.fill_pow_l(u);
        self.fluxes_from_pow(t)
    }

    fn fill_pow_l(&mut self, u: &[f64]) {
        let l = self.spec.l;
        for (dst, &v) in self.pow_l.iter_mut().zip(u) {
            *dst = pow_nonneg(v.max(0.0), l);
        }
    }

    fn fluxes_from_pow(&self, t: f64) -> [f64; 2] {
        match &self.k_tab {
            Tabulated::Closed { profile, spatial, endpoint_weights } => {
                let a = profile.eval(t);
                if a == 0.0 {
                    return [0.0, 0.0];
                }
                let s: f64 = spatial.iter().zip(&self.pow_l).map(|(k, v)| k * v).sum();
                [a * endpoint_weights[0] * s, a * endpoint_weights[1] * s]
            }
            Tabulated::Custom => {
                let len = self.grid.length();
                let mut g = [0.0; 2];
                for (b, slot) in g.iter_mut().enumerate() {
                    *slot = self
                        .grid
                        .nodes()
                        .iter()
                        .zip(self.grid.weights())
                        .zip(&self.pow_l)
                        .map(|((&y, &w), &v)| w * self.spec.k.eval_k(b, y, t, len) * v)
                        .sum();
                }
                g
            }
        }
    }

    #[inline]
    fn c_at(&self, i: usize, t: f64, profile_value: f64) -> f64 {
        match &self.c_tab {
            Tabulated::Closed { spatial, .. } => profile_value * spatial[i],
            Tabulated::Custom => self.spec.c.eval_c(self.grid.nodes()[i], t, self.grid.length()),
        }
    }

    /// Writes `Δ_h u − c u^p (+ F)` into `out` and returns the pieces.
    pub fn rhs_into(&mut self, t: f64, u: &[f64], out: &mut [f64]) -> RhsParts {
        self.fill_pow_l(u);
        let mut flux = self.fluxes_from_pow(t);
        if let Some(f) = &self.forcing {
            flux[0] += (f.boundary[0])(t);
            flux[1] += (f.boundary[1])(t);
        }
        laplacian_into(u, flux[0], flux[1], self.grid.h(), out);

        let p = self.spec.p;
        let w = self.grid.weights();
        let c_profile = match &self.c_tab {
            Tabulated::Closed { profile, .. } => profile.eval(t),
            Tabulated::Custom => f64::NAN,
        };
        let mut absorption = 0.0;
        if !(matches!(self.c_tab, Tabulated::Closed { .. }) && c_profile == 0.0) {
            for (i, (o, &v)) in out.iter_mut().zip(u).enumerate() {
                let a = self.c_at(i, t, c_profile) * pow_nonneg(v.max(0.0), p);
                *o -= a;
                absorption += w[i] * a;
            }
        }
        let mut forcing_mass = 0.0;
        if let Some(f) = &self.forcing {
            for (i, o) in out.iter_mut().enumerate() {
                let v = (f.interior)(self.grid.nodes()[i], t);
                *o += v;
                forcing_mass += w[i] * v;
            }
        }
        let flux_power_mass = w.iter().zip(&self.pow_l).map(|(w, v)| w * v).sum();
        RhsParts { flux, absorption, flux_power_mass, forcing_mass }
    }
}

fn laplacian_into(u: &[f64], g0: f64, gl: f64, h: f64, out: &mut [f64]) {
    let n = u.len() - 1;
    let inv_h2 = 1.0 / (h * h);
    out[0] = (2.0 * (u[1] - u[0]) + 2.0 * h * g0) * inv_h2;
    for i in 1..n {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
    }
    out[n] = (2.0 * (u[n - 1] - u[n]) + 2.0 * h * gl) * inv_h2;
}

/// Trapezoid approximation of `∫_Ω k(b, y, t) u(y)^l dy`.
pub fn boundary_flux(state: &GridState, spec: &ProblemSpec, grid: &Grid, endpoint: Endpoint) -> f64 {
    SemiDiscrete::new(spec, grid).fluxes(state.t, &state.u)[endpoint.index()]
}

/// `Δ_h u` with boundary rows closed by the outward fluxes `g0`, `gL`.
pub fn discrete_laplacian(u: &[f64], g0: f64, gl: f64, grid: &Grid) -> Vec<f64> {
    assert_eq!(u.len(), grid.n() + 1);
    let mut out = vec![0.0; u.len()];
    laplacian_into(u, g0, gl, grid.h(), &mut out);
    out
}

/// `Δ_h u − c u^p (+ F)` with the nonlocal fluxes closing the boundary rows.
pub fn rhs(state: &GridState, spec: &ProblemSpec, grid: &Grid, forcing: Option<&Forcing>) -> Vec<f64> {
    let mut op = SemiDiscrete::new(spec, grid).with_forcing(forcing.cloned());
    let mut out = vec![0.0; state.u.len()];
    op.rhs_into(state.t, &state.u, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::InitialDatum;
    use proptest::prelude::*;

    fn state_from(grid: &Grid, f: impl Fn(f64) -> f64) -> GridState {
        GridState { t: 0.0, u: grid.nodes().iter().map(|&x| f(x)).collect() }
    }

    #[test]
    fn weights_sum_to_length() {
        let g = Grid::new(37, 2.5);
        assert!((g.weights().iter().sum::<f64>() - 2.5).abs() < 1e-14);
        assert_eq!(*g.nodes().last().unwrap(), 2.5);
    }

    #[test]
    #[should_panic]
    fn tiny_grids_rejected() {
        Grid::new(7, 1.0);
    }

    #[test]
    fn flux_examples() {
        let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 1.0, 1.0, 1.0);
        let g = Grid::new(40, 1.0);
        let one = state_from(&g, |_| 1.0);
        assert!((boundary_flux(&one, &spec, &g, Endpoint::Left) - 1.0).abs() < 1e-14);
        assert!((boundary_flux(&one, &spec, &g, Endpoint::Right) - 1.0).abs() < 1e-14);

        let lin = ProblemSpec::constant(1.0, 1.0, 0.0, 1.0, 1.0, 1.0);
        let ramp = state_from(&g, |x| x);
        assert!((boundary_flux(&ramp, &lin, &g, Endpoint::Left) - 0.5).abs() < 1e-14);

        let g200 = Grid::new(200, 1.0);
        let ramp = state_from(&g200, |x| x);
        let v = boundary_flux(&ramp, &spec, &g200, Endpoint::Right);
        assert!((v - 1.0 / 3.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        let g = Grid::new(16, 1.0);
        let u: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        for v in discrete_laplacian(&u, 0.0, 2.0, &g) {
            assert!((v - 2.0).abs() < 1e-9, "{v}");
        }
        let c = vec![3.0; 17];
        assert!(discrete_laplacian(&c, 0.0, 0.0, &g).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rhs_examples() {
        let g = Grid::new(10, 1.0);
        let spec = ProblemSpec::constant(2.0, 2.0, 1.0, 0.0, 1.0, 1.0);
        let r = rhs(&state_from(&g, |_| 1.0), &spec, &g, None);
        assert!(r.iter().all(|v| (v + 1.0).abs() < 1e-14));
        let r = rhs(&state_from(&g, |_| 0.0), &spec, &g, None);
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn manufactured_residual_is_second_order() {
        // u* = e^t (1 + x²), c ≡ 1, p = 2, k ≡ 0: F = u*_t − u*_xx + u*², flux u*_x(1) = 2e^t
        let spec = ProblemSpec::constant(2.0, 1.0, 1.0, 0.0, 1.0, 1.0);
        let exact = |x: f64, t: f64| t.exp() * (1.0 + x * x);
        let forcing = Forcing::new(
            move |x, t| exact(x, t) - 2.0 * t.exp() + exact(x, t).powi(2),
            |_| 0.0,
            |t| 2.0 * t.exp(),
        );
        let mut errs = Vec::new();
        for n in [20, 40, 80] {
            let g = Grid::new(n, 1.0);
            let t = 0.3;
            let s = GridState { t, u: g.nodes().iter().map(|&x| exact(x, t)).collect() };
            let r = rhs(&s, &spec, &g, Some(&forcing));
            let err = g.nodes().iter().zip(&r).map(|(&x, v)| (v - exact(x, t)).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        // the stencil is exact on quadratics in x, so the residual is round-off
        assert!(errs.iter().all(|e| *e < 1e-9), "{errs:?}");
    }

    #[test]
    fn closed_and_custom_kernels_agree() {
        let g = Grid::new(24, 1.0);
        let closed = ProblemSpec::constant(1.0, 1.5, 0.0, 2.0, 1.0, 1.0);
        let mut custom = closed.clone();
        custom.k = CoefficientDescriptor::custom("two", 2.0, 2.0, |_, _, _| 2.0);
        let s = state_from(&g, |x| 1.0 + x.sin());
        let a = boundary_flux(&s, &closed, &g, Endpoint::Left);
        let b = boundary_flux(&s, &custom, &g, Endpoint::Left);
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn interior_range_is_middle_half() {
        let g = Grid::new(400, 1.0);
        let r = g.interior_range();
        assert_eq!((*r.start(), *r.end()), (100, 300));
    }

    #[test]
    fn initial_state_samples_datum() {
        let spec = ProblemSpec::constant(1.0, 1.0, 0.0, 0.0, 1.0, 2.0)
            .with_u0(InitialDatum::Cosine { mean: 1.0, amplitude: 1.0 });
        let g = Grid::new(8, 2.0);
        let s = GridState::from_spec(&spec, &g);
        assert!((s.u[0] - 2.0).abs() < 1e-14 && s.u[8].abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn discrete_green_identity(
            u in prop::collection::vec(0.0f64..100.0, 9..200),
            g0 in -50.0f64..50.0,
            gl in -50.0f64..50.0,
        ) {
            let grid = Grid::new(u.len() - 1, 1.7);
            let lap = discrete_laplacian(&u, g0, gl, &grid);
            let lhs = grid.integrate(&lap);
            let scale = lap.iter().zip(grid.weights()).map(|(v, w)| (v * w).abs()).sum::<f64>().max(1.0);
            prop_assert!((lhs - (g0 + gl)).abs() <= 1e-12 * scale);
        }

        #[test]
        fn flux_monotone_in_nodal_values(
            u in prop::collection::vec(0.0f64..10.0, 17),
            idx in 0usize..17,
            bump in 0.0f64..5.0,
        ) {
            let spec = ProblemSpec::constant(1.0, 1.7, 1.0, 1.0, 1.0, 1.0);
            let grid = Grid::new(16, 1.0);
            let s = GridState { t: 0.0, u: u.clone() };
            let mut v = u;
            v[idx] += bump;
            let s2 = GridState { t: 0.0, u: v };
            for e in Endpoint::BOTH {
                prop_assert!(boundary_flux(&s2, &spec, &grid, e) >= boundary_flux(&s, &spec, &grid, e));
            }
        }
    }
}
