//! Explicit super- and subsolutions with pointwise verification.
//!
//! A [`Certificate`] is a closed-form profile with analytic `v_t`, `v_x`,
//! `v_xx`, the constants that built it, and the window and region on which
//! it claims the comparison inequalities. [`check_certificate`] verifies
//! those claims; [`sandwich_test`] compares certificates with numeric runs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::discretization::Grid;
use crate::problem::{ProblemSpec, TimeProfile};

mod builders;
mod check;
mod sandwich;

pub use builders::{
    build_boundary_layer_supersolution, build_eigen_supersolution, build_ode_bound, build_psi_profile_subsolution,
    build_traveling_subsolution, small_data_f, small_data_threshold, OdeBoundKind,
};
pub use check::{check_certificate, Inequality, Offender, ResidualReport};
pub use sandwich::{collar_comparison, sandwich_test, CollarReport, SandwichReport, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("no feasible constants: {0}")]
    Infeasible(String),
    #[error("psi profile with additive constant {additive_constant} is not positive (needs > {minimum})")]
    NonPositivePsi { additive_constant: f64, minimum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CertificateKind {
    EigenSuper,
    BoundaryLayerSuper,
    OdeSub,
    OdeSuper,
    PsiProfileSuper,
    PsiProfileSub,
    TravelingSub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Super,
    Sub,
}

impl Direction {
    /// `+1` for supersolutions, `-1` for subsolutions.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Super => 1.0,
            Direction::Sub => -1.0,
        }
    }
}

/// Where the interior and flux inequalities are claimed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    Whole,
    /// Boundary collars `{s < width}`; the flux integral runs over the collars.
    Collar { width: f64 },
}

/// What the profile is compared against at the start of its window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialReference {
    /// The problem's initial datum (window starts at `t = 0`).
    Datum,
    /// A numeric solution at the window start, checked against a run.
    External,
}

/// First eigenpair of the Dirichlet Laplacian on `(0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi: Vec<f64>,
    /// `∂φ/∂ν` at `x = 0` and `x = L`.
    pub normal_derivative: [f64; 2],
    pub length: f64,
}

/// `λ₁ = (π/L)²` and `φ = sin(πx/L)` sampled on the grid.
pub fn solve_eigenpair(grid: &Grid) -> EigenPair {
    let len = grid.length();
    let k = PI / len;
    EigenPair {
        lambda1: k * k,
        phi: grid.nodes().iter().map(|&x| (k * x).sin()).collect(),
        normal_derivative: [-k, -k],
        length: len,
    }
}

impl EigenPair {
    /// `max_i |Δ_h φ + λ₁ φ|` over interior nodes.
    pub fn dirichlet_residual(&self, grid: &Grid) -> f64 {
        let h2 = grid.h() * grid.h();
        (1..grid.n())
            .map(|i| {
                let lap = (self.phi[i - 1] - 2.0 * self.phi[i] + self.phi[i + 1]) / h2;
                (lap + self.lambda1 * self.phi[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `ψ(x) = (x² − Lx)/2 + C`: `ψ'' = 1`, `∂ψ/∂ν = L/2` at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiSolution {
    pub additive_constant: f64,
    /// `inf ψ = C − L²/8`.
    pub b: f64,
    pub sup_psi: f64,
    pub length: f64,
}

pub fn solve_psi(length: f64, additive_constant: f64) -> Result<PsiSolution, CertificateError> {
    let minimum = length * length / 8.0;
    if !(additive_constant > minimum) {
        return Err(CertificateError::NonPositivePsi { additive_constant, minimum });
    }
    Ok(PsiSolution { additive_constant, b: additive_constant - minimum, sup_psi: additive_constant, length })
}

impl PsiSolution {
    /// The profile whose infimum is `b`.
    pub fn with_inf(length: f64, b: f64) -> Result<Self, CertificateError> {
        solve_psi(length, b + length * length / 8.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        0.5 * (x * x - self.length * x) + self.additive_constant
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        x - 0.5 * self.length
    }

    pub fn nodal(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x)).collect()
    }

    /// `∫_0^L ψ^l`.
    pub fn integral_pow(&self, l: f64) -> f64 {
        let f = |x: f64| self.eval(x).powf(l);
        crate::quad::integrate_pieces(&f, &[0.0, 0.5 * self.length, self.length], 1e-13)
    }
}

/// Value and derivatives of a profile at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub v_t: f64,
    pub v_x: f64,
    pub v_xx: f64,
}

/// Analytic profiles. Profiles written in `s = dist(x, ∂Ω)` are even about
/// `L/2` and have `v_x = ±v_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Profile {
    Constant { value: f64 },
    /// `A e^{rt}`.
    Exponential { amplitude: f64, rate: f64 },
    /// `C e^{μt} / (a sin(πx/L) + 1)`.
    Eigen { c: f64, mu: f64, a: f64, length: f64 },
    /// `[(αs + ε)^{-γ} − ω^{-γ}]₊^{β/γ} + A`.
    BoundaryLayer { alpha: f64, eps: f64, omega: f64, beta: f64, gamma: f64, shift: f64, length: f64 },
    /// `[A^{1-p} − (1−p)∫_0^t c̄]₊^{1/(1-p)}`, or `A e^{-∫c̄}` for `p = 1`.
    OdeLowP { amplitude: f64, p: f64, c_bar: TimeProfile },
    /// `[(p−1) c₁ (t + t₂)]^{-1/(p-1)}`.
    OdePower { c1: f64, t2: f64, p: f64 },
    /// `ψ(x) f(t)` with `f' = f/s − s^{p-1} ĉ(t) f^p`, `f(t_start) = f_start`.
    PsiBernoulli { psi: PsiSolution, scale: f64, c_hat: TimeProfile, p: f64, t_start: f64, f_start: f64 },
    /// `(t₂ + ωs − t)^{-σ}`.
    Traveling { t2: f64, omega: f64, sigma: f64, length: f64 },
}

fn dist_and_sign(x: f64, length: f64) -> (f64, f64) {
    if x <= 0.5 * length {
        (x, 1.0)
    } else {
        (length - x, -1.0)
    }
}

/// `F(z) = [z^{-γ} − ω^{-γ}]₊^{β/γ}` and its first two derivatives.
fn layer(z: f64, omega: f64, beta: f64, gamma: f64) -> (f64, f64, f64) {
    let zg = z.powf(-gamma);
    let g = zg - omega.powf(-gamma);
    if g <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = g.powf(beta / gamma);
    let d1 = -beta * zg / z * g.powf((beta - gamma) / gamma);
    let d2 = beta * zg / (z * z) * g.powf((beta - 2.0 * gamma) / gamma) * ((gamma + 1.0) * g + (beta - gamma) * zg);
    (f, d1, d2)
}

impl Profile {
    pub fn jet(&self, x: f64, t: f64) -> Jet {
        match *self {
            Profile::Constant { value } => Jet { v: value, ..Jet::default() },
            Profile::Exponential { amplitude, rate } => {
                let v = amplitude * (rate * t).exp();
                Jet { v, v_t: rate * v, ..Jet::default() }
            }
            Profile::Eigen { c, mu, a, length } => {
                let k = PI / length;
                let phi = (k * x).sin();
                let dphi = k * (k * x).cos();
                let ddphi = -k * k * phi;
                let e = c * (mu * t).exp();
                let d = a * phi + 1.0;
                let v = e / d;
                Jet {
                    v,
                    v_t: mu * v,
                    v_x: -e * a * dphi / (d * d),
                    v_xx: e * (-a * ddphi / (d * d) + 2.0 * a * a * dphi * dphi / (d * d * d)),
                }
            }
            Profile::BoundaryLayer { alpha, eps, omega, beta, gamma, shift, length } => {
                let (s, sign) = dist_and_sign(x, length);
                let (f, d1, d2) = layer(alpha * s + eps, omega, beta, gamma);
                Jet { v: f + shift, v_t: 0.0, v_x: sign * alpha * d1, v_xx: alpha * alpha * d2 }
            }
            Profile::OdeLowP { amplitude, p, c_bar } => {
                let ci = c_bar.integral(0.0, t);
                let c = c_bar.eval(t);
                if p == 1.0 {
                    let v = amplitude * (-ci).exp();
                    return Jet { v, v_t: -c * v, ..Jet::default() };
                }
                let base = amplitude.powf(1.0 - p) - (1.0 - p) * ci;
                if base <= 0.0 {
                    return Jet::default();
                }
                let v = base.powf(1.0 / (1.0 - p));
                Jet { v, v_t: -c * v.powf(p), ..Jet::default() }
            }
            Profile::OdePower { c1, t2, p } => {
                let v = ((p - 1.0) * c1 * (t + t2)).powf(-1.0 / (p - 1.0));
                Jet { v, v_t: -c1 * v.powf(p), ..Jet::default() }
            }
            Profile::PsiBernoulli { psi, scale, c_hat, p, t_start, f_start } => {
                let (f, df) = bernoulli(t, scale, &c_hat, p, t_start, f_start);
                let ps = psi.eval(x);
                Jet { v: ps * f, v_t: ps * df, v_x: psi.derivative(x) * f, v_xx: f }
            }
            Profile::Traveling { t2, omega, sigma, length } => {
                let (s, sign) = dist_and_sign(x, length);
                let z = t2 + omega * s - t;
                let v = z.powf(-sigma);
                Jet {
                    v,
                    v_t: sigma * v / z,
                    v_x: -sign * sigma * omega * v / z,
                    v_xx: sigma * (sigma + 1.0) * omega * omega * v / (z * z),
                }
            }
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.jet(x, t).v
    }

    /// Quadrature breakpoints in `[0, L]` resolving the profile at time `t`.
    pub fn breakpoints(&self, t: f64, length: f64) -> Vec<f64> {
        let mut b = vec![0.0, 0.25 * length, 0.5 * length, 0.75 * length, length];
        let mut layer_pts = |scale: f64, end: f64| {
            let mut s = scale.max(1e-300);
            while s < end {
                b.push(s);
                b.push(length - s);
                s *= 2.0;
            }
            b.push(end);
            b.push(length - end);
        };
        match *self {
            Profile::BoundaryLayer { alpha, eps, omega, .. } => {
                let support = ((omega - eps) / alpha).clamp(0.0, 0.5 * length);
                layer_pts(eps / alpha, support);
            }
            Profile::Traveling { t2, omega, .. } => layer_pts(((t2 - t) / omega).max(0.0), 0.5 * length),
            _ => {}
        }
        b.retain(|v| v.is_finite() && (0.0..=length).contains(v));
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        b.dedup();
        b
    }
}

/// `f(t)` and `f'(t)` for `f' = f/s − s^{p-1} ĉ f^p`, through the closed form
/// `f = e^{t/s} Z^{1/(1-p)}`, `Z = (f₀ e^{-t₀/s})^{1-p} + (p−1) s^{p-1} ∫_{t₀}^t e^{(p-1)τ/s} ĉ dτ`.
pub(crate) fn bernoulli(t: f64, s: f64, c_hat: &TimeProfile, p: f64, t0: f64, f0: f64) -> (f64, f64) {
    let weighted = TimeProfile { rate: c_hat.rate + (p - 1.0) / s, ..*c_hat };
    let z = (f0 * (-t0 / s).exp()).powf(1.0 - p) + (p - 1.0) * s.powf(p - 1.0) * weighted.integral(t0, t);
    if z <= 0.0 || f0 <= 0.0 {
        return (0.0, 0.0);
    }
    let f = (t / s + z.ln() / (1.0 - p)).exp();
    (f, f / s - s.powf(p - 1.0) * c_hat.eval(t) * f.powf(p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub direction: Direction,
    pub profile: Profile,
    pub constants: BTreeMap<String, f64>,
    /// Time window `[t0, t1]` of the claim.
    pub window: (f64, f64),
    pub region: Region,
    pub initial_reference: InitialReference,
    /// Side conditions and caveats recorded by the builder.
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(kind: CertificateKind, direction: Direction, profile: Profile, window: (f64, f64)) -> Self {
        Certificate {
            kind,
            direction,
            profile,
            constants: BTreeMap::new(),
            window,
            region: Region::Whole,
            initial_reference: InitialReference::Datum,
            notes: Vec::new(),
        }
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    pub fn evaluate(&self, x: f64, t: f64) -> f64 {
        self.profile.eval(x, t)
    }

    /// Whether `x` lies in the region where the claim is made.
    pub fn covers(&self, x: f64, length: f64) -> bool {
        match self.region {
            Region::Whole => true,
            Region::Collar { width } => x.min(length - x) <= width,
        }
    }
}

fn sample_times(t0: f64, t1: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 })
}

/// Extremes of the declared coefficient bounds over a time window.
pub(crate) fn c_range_on(spec: &ProblemSpec, t0: f64, t1: f64) -> (f64, f64) {
    sample_times(t0, t1, 512).map(|t| spec.c.bounds_c(t)).fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
}

pub(crate) fn k_range_on(spec: &ProblemSpec, t0: f64, t1: f64) -> (f64, f64) {
    sample_times(t0, t1, 512).map(|t| spec.k.bounds_k(t)).fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
}
