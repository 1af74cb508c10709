//! Constructions of the explicit comparison functions, with the free constants
//! found by logarithmic scans. Feasibility, not tightness, is the goal.

use std::f64::consts::PI;

use super::{
    bernoulli, c_range_on, k_range_on, solve_psi, Certificate, CertificateError, CertificateKind, Direction, EigenPair,
    InitialReference, Profile, PsiSolution, Region,
};
use crate::problem::{ProblemSpec, TimeProfile};
use crate::quad;

type Result<T> = std::result::Result<T, CertificateError>;

/// Safety factor applied to every scanned inequality so the pointwise checker,
/// which samples other points, still sees a strict margin.
const MARGIN: f64 = 1.02;

fn hypothesis(msg: impl Into<String>) -> CertificateError {
    CertificateError::HypothesisNotMet(msg.into())
}

fn infeasible(msg: impl Into<String>) -> CertificateError {
    CertificateError::Infeasible(msg.into())
}

fn dense(length: f64) -> impl Iterator<Item = f64> {
    (0..=4096).map(move |i| length * i as f64 / 4096.0)
}

fn sup_u0(spec: &ProblemSpec) -> f64 {
    dense(spec.length()).map(|x| spec.u0.eval(x, spec.length())).fold(0.0, f64::max)
}

fn inf_u0(spec: &ProblemSpec) -> f64 {
    dense(spec.length()).map(|x| spec.u0.eval(x, spec.length())).fold(f64::INFINITY, f64::min)
}

/// Closed-family envelope `sup_x c(x,t)`, or the declared constant bound.
fn c_bar_profile(spec: &ProblemSpec) -> TimeProfile {
    match spec.coefficient_bounds() {
        Some(b) => b.c_bar,
        None => TimeProfile::constant(spec.c.bounds_c(0.0).1),
    }
}

fn c_under_profile(spec: &ProblemSpec) -> TimeProfile {
    match spec.coefficient_bounds() {
        Some(b) => b.c_under,
        None => TimeProfile::constant(spec.c.bounds_c(0.0).0),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..=n).map(move |i| (a + (b - a) * i as f64 / n as f64).exp())
}

/// `C e^{μt}/(aφ + 1)` for `l ≤ 1`, valid on `[0, horizon]`.
///
/// `a ≥ max{K ∫(φ+1)^{-l} / (π/L), 1}`, `C ≥ max{sup (aφ+1)u0, 1}`,
/// `μ = λ₁ + 2a² sup φ'²/(aφ+1)²` with `K = sup k` over the window.
pub fn build_eigen_supersolution(spec: &ProblemSpec, eig: &EigenPair, horizon: f64) -> Result<Certificate> {
    let l = spec.l;
    if l > 1.0 {
        return Err(hypothesis(format!("eigen supersolution needs l <= 1, got l = {l}")));
    }
    let len = eig.length;
    let kk = PI / len;
    let big_k = k_range_on(spec, 0.0, horizon).1;
    let f = |y: f64| ((kk * y).sin() + 1.0).powf(-l);
    let integral = quad::integrate_pieces(&f, &[0.0, 0.5 * len, len], 1e-13);
    let a = (big_k * integral / kk * (1.0 + 1e-9)).max(1.0);

    let n = eig.phi.len() - 1;
    let grad = (0..=n)
        .map(|i| {
            let x = len * i as f64 / n as f64;
            let d = kk * (kk * x).cos();
            d * d / (a * eig.phi[i] + 1.0).powi(2)
        })
        .fold(0.0, f64::max);
    let mu = eig.lambda1 + 2.0 * a * a * grad;
    let c = dense(len)
        .map(|x| (a * (kk * x).sin() + 1.0) * spec.u0.eval(x, len))
        .fold(1.0, f64::max)
        * (1.0 + 1e-12);

    let mut cert = Certificate::new(
        CertificateKind::EigenSuper,
        Direction::Super,
        Profile::Eigen { c, mu, a, length: len },
        (0.0, horizon),
    )
    .with_constant("a", a)
    .with_constant("C", c)
    .with_constant("mu", mu)
    .with_constant("K", big_k)
    .with_constant("lambda1", eig.lambda1);
    cert.notes.push(format!("K = sup k over [0, {horizon}]"));
    Ok(cert)
}

/// Boundary-layer supersolution `[(αs+ε)^{-γ} − ω^{-γ}]₊^{β/γ} + A` for
/// `1 < l < p` (and `l = p` with `inf c / sup k` large) when `inf c > 0`.
///
/// The interior inequality is scanned over `z = αs + ε` with `c ≥ inf c`, the
/// boundary inequality with the additive constant doubled, so the certificate
/// also holds at `2A`.
pub fn build_boundary_layer_supersolution(spec: &ProblemSpec, horizon: f64) -> Result<Certificate> {
    let (p, l) = (spec.p, spec.l);
    if !(l > 1.0 && l <= p) {
        return Err(hypothesis(format!("boundary layer needs 1 < l <= p, got p = {p}, l = {l}")));
    }
    let len = spec.length();
    let (c_inf, _) = c_range_on(spec, 0.0, horizon);
    if !(c_inf > 0.0) {
        return Err(hypothesis("boundary layer needs inf c > 0"));
    }
    let big_k = k_range_on(spec, 0.0, horizon).1;
    let equal = l == p;
    let (beta, alphas): (f64, Vec<f64>) = if equal {
        // scan α downward from large values; the interior needs α² ≲ c/β(β+1)
        (2.0 / (l - 1.0), (0..=64).map(|j| 2f64.powf(8.0 - j as f64 / 4.0)).collect())
    } else {
        let lo = (1.0 / l).max(2.0 / (p - 1.0));
        let hi = 2.0 / (l - 1.0);
        (lo + 0.1 * (hi - lo), vec![1.0])
    };
    let gamma = beta / 4.0;
    let a0 = sup_u0(spec).max(1.0);

    for &alpha in &alphas {
        let omega = alpha * len / 4.0;
        let interior_ok = |a: f64| {
            log_grid(1e-9, omega, 3000).all(|z| {
                let (f, _, d2) = super::layer(z, omega, beta, gamma);
                c_inf * (f + a).powf(p) >= MARGIN * alpha * alpha * d2
            })
        };
        let Some(a) = (0..60).map(|j| a0 * 2f64.powi(j)).find(|&a| interior_ok(a)) else {
            continue;
        };
        let boundary_ok = |eps: f64| {
            let (_, d1, _) = super::layer(eps, omega, beta, gamma);
            let normal = -alpha * d1;
            let profile = Profile::BoundaryLayer { alpha, eps, omega, beta, gamma, shift: 2.0 * a, length: len };
            let g = |s: f64| profile.eval(s, 0.0).powf(l);
            let breaks: Vec<f64> = profile.breakpoints(0.0, len).into_iter().filter(|&s| s <= 0.5 * len).collect();
            let flux = 2.0 * big_k * quad::integrate_pieces(&g, &breaks, 1e-10);
            normal >= MARGIN * flux
        };
        let mut eps = 0.5 * omega;
        while eps >= 1e-8 {
            if boundary_ok(eps) {
                let mut cert = Certificate::new(
                    CertificateKind::BoundaryLayerSuper,
                    Direction::Super,
                    Profile::BoundaryLayer { alpha, eps, omega, beta, gamma, shift: a, length: len },
                    (0.0, horizon),
                )
                .with_constant("alpha", alpha)
                .with_constant("eps", eps)
                .with_constant("omega", omega)
                .with_constant("beta", beta)
                .with_constant("gamma", gamma)
                .with_constant("A", a)
                .with_constant("K", big_k)
                .with_constant("c_inf", c_inf);
                cert.notes.push("boundary inequality verified with the additive constant doubled".into());
                return Ok(cert);
            }
            eps *= 0.5;
        }
    }
    Err(infeasible("no (alpha, A, eps) passed the boundary-layer scan"))
}

/// Spatially constant bounds and `ψ f` profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeBoundKind {
    /// `w' = −c̄ w^p`, `p ≤ 1`, from level `A ≤ inf u0` (default `inf u0`).
    SubLowP { amplitude: Option<f64>, horizon: f64 },
    /// `w = [(p−1)c₁(t+t₂)]^{-1/(p-1)}`, `l > p > 1`, with `w(0) = inf u0`.
    SubPowerLaw { horizon: f64 },
    /// `ψ f` with `f` extinct by `τ`, for `p < 1 < l` and `inf c(·,0) > 0`.
    SuperSmallData { tau: f64, additive_constant: f64, horizon: f64 },
    /// `ψ g` for `l > p > 1` when `k̄ c₂^{-(l-1)/(p-1)}` stays bounded.
    SuperBoundedRatio { horizon: f64 },
}

pub fn build_ode_bound(spec: &ProblemSpec, kind: OdeBoundKind) -> Result<Certificate> {
    let (p, l) = (spec.p, spec.l);
    let len = spec.length();
    match kind {
        OdeBoundKind::SubLowP { amplitude, horizon } => {
            if p > 1.0 {
                return Err(hypothesis(format!("needs p <= 1, got p = {p}")));
            }
            let floor = inf_u0(spec);
            let a = amplitude.unwrap_or(floor);
            if !(a > 0.0) || a > floor * (1.0 + 1e-12) {
                return Err(hypothesis(format!("needs 0 < A <= inf u0 = {floor}, got A = {a}")));
            }
            let c_bar = c_bar_profile(spec);
            let cert = Certificate::new(
                CertificateKind::OdeSub,
                Direction::Sub,
                Profile::OdeLowP { amplitude: a, p, c_bar },
                (0.0, horizon),
            )
            .with_constant("A", a);
            Ok(cert)
        }
        OdeBoundKind::SubPowerLaw { horizon } => {
            if !(l > p && p > 1.0) {
                return Err(hypothesis(format!("needs l > p > 1, got p = {p}, l = {l}")));
            }
            let c1 = c_range_on(spec, 0.0, horizon).1;
            let floor = inf_u0(spec);
            if !(c1 > 0.0 && floor > 0.0) {
                return Err(hypothesis("needs sup c > 0 and inf u0 > 0"));
            }
            let t2 = floor.powf(-(p - 1.0)) / ((p - 1.0) * c1);
            Ok(Certificate::new(
                CertificateKind::OdeSub,
                Direction::Sub,
                Profile::OdePower { c1, t2, p },
                (0.0, horizon),
            )
            .with_constant("c1", c1)
            .with_constant("t2", t2))
        }
        OdeBoundKind::SuperSmallData { tau, additive_constant, horizon } => {
            if !(p < 1.0 && l > 1.0) {
                return Err(hypothesis(format!("needs p < 1 < l, got p = {p}, l = {l}")));
            }
            if !(spec.c.bounds_c(0.0).0 > 0.0) {
                return Err(hypothesis("needs inf c(x, 0) > 0"));
            }
            let psi = solve_psi(len, additive_constant)?;
            let b = psi.b;
            // c ψ^{p-1} ≥ c₀ b^{p-1} on Ω needs c₀ ≤ inf c · (b / sup ψ)^{1-p}
            let c0 = c_range_on(spec, 0.0, tau).0 * (b / psi.sup_psi).powf(1.0 - p);
            if !(c0 > 0.0) {
                return Err(hypothesis("needs inf c > 0 on [0, tau]"));
            }
            let threshold = small_data_threshold(c0, b, p, tau);
            let big_k = k_range_on(spec, 0.0, tau).1;
            let boundary_bound = if big_k > 0.0 {
                (0.5 * len / (big_k * psi.integral_pow(l))).powf(1.0 / (l - 1.0))
            } else {
                f64::INFINITY
            };
            let upper = threshold.min(boundary_bound);
            let need = dense(len).map(|x| spec.u0.eval(x, len) / psi.eval(x)).fold(0.0, f64::max);
            if need >= upper {
                return Err(infeasible(format!("datum needs f(0) >= {need:.6e}, admissible f(0) < {upper:.6e}")));
            }
            let f0 = need.max(upper * (1.0 - 1e-3));
            let extinction = b / (p - 1.0) * (1.0 - f0.powf(1.0 - p) / (c0 * b.powf(p))).ln();
            let horizon = horizon.max(tau);
            let vanished = (0..=256).map(|i| tau + (horizon - tau) * i as f64 / 256.0).all(|t| small_data_f(t, f0, c0, b, p) == 0.0);
            if !vanished {
                return Err(infeasible("f does not vanish after tau"));
            }
            let mut cert = Certificate::new(
                CertificateKind::PsiProfileSuper,
                Direction::Super,
                Profile::PsiBernoulli { psi, scale: b, c_hat: TimeProfile::constant(c0), p, t_start: 0.0, f_start: f0 },
                (0.0, horizon),
            )
            .with_constant("f0", f0)
            .with_constant("threshold", threshold)
            .with_constant("boundary_bound", boundary_bound)
            .with_constant("c0", c0)
            .with_constant("b", b)
            .with_constant("sup_psi", psi.sup_psi)
            .with_constant("tau", tau)
            .with_constant("extinction_time", extinction);
            cert.notes.push("f(t) = 0 verified on a time grid over [tau, horizon]".into());
            Ok(cert)
        }
        OdeBoundKind::SuperBoundedRatio { horizon } => {
            if !(l > p && p > 1.0) {
                return Err(hypothesis(format!("needs l > p > 1, got p = {p}, l = {l}")));
            }
            let c2 = c_under_profile(spec);
            if !(c2.amplitude > 0.0) || c2.rate > 0.0 {
                return Err(hypothesis("needs c >= c2(t) > 0 with c2 not growing exponentially"));
            }
            let times: Vec<f64> = (0..=2000).map(|i| horizon * i as f64 / 2000.0).collect();
            let k_bar: Vec<f64> = times.iter().map(|&t| spec.k.bounds_k(t).1).collect();
            let b0 = len * len / 8.0;
            for j in -8..40 {
                let b = b0 * 2f64.powf(j as f64 / 2.0);
                let psi = PsiSolution::with_inf(len, b)?;
                let g0 = dense(len).map(|x| spec.u0.eval(x, len) / psi.eval(x)).fold(0.0, f64::max);
                if !(g0 > 0.0) {
                    return Err(hypothesis("needs a nontrivial datum"));
                }
                let ipsi = psi.integral_pow(l);
                let ok = times.iter().zip(&k_bar).all(|(&t, &k)| {
                    let (g, _) = bernoulli(t, b, &c2, p, 0.0, g0);
                    MARGIN * g.powf(l - 1.0) * k * ipsi <= 0.5 * len
                });
                if ok {
                    return Ok(Certificate::new(
                        CertificateKind::PsiProfileSuper,
                        Direction::Super,
                        Profile::PsiBernoulli { psi, scale: b, c_hat: c2, p, t_start: 0.0, f_start: g0 },
                        (0.0, horizon),
                    )
                    .with_constant("b", b)
                    .with_constant("g0", g0)
                    .with_constant("sup_psi", psi.sup_psi));
                }
            }
            Err(infeasible("no psi offset keeps the boundary inequality over the window; datum too large"))
        }
    }
}

/// `{c₀ b^p (1 − e^{(p−1)τ/b})}^{1/(1−p)}`: initial values below this give an
/// `f` that vanishes by `τ`.
pub fn small_data_threshold(c0: f64, b: f64, p: f64, tau: f64) -> f64 {
    (c0 * b.powf(p) * (1.0 - ((p - 1.0) * tau / b).exp())).powf(1.0 / (1.0 - p))
}

/// `f(t) = e^{t/b} {f₀^{1−p} − c₀ b^p (1 − e^{(p−1)t/b})}₊^{1/(1−p)}`.
pub fn small_data_f(t: f64, f0: f64, c0: f64, b: f64, p: f64) -> f64 {
    let z = f0.powf(1.0 - p) - c0 * b.powf(p) * (1.0 - ((p - 1.0) * t / b).exp());
    if z <= 0.0 {
        0.0
    } else {
        (t / b).exp() * z.powf(1.0 / (1.0 - p))
    }
}

/// `ψ f` subsolution for `l > p > 1` with `sup ψ = m` and
/// `f' = f/m − m^{p−1} c̄ f^p`, started at its quasi-equilibrium at `t₁`.
///
/// Scans `t₁ = 0, 1/2, 1, 2, …` until the boundary inequality holds over
/// `[t₁, t₁ + span]`. The reported `d1 = inf f c̄^{1/(p−1)}` is estimated on
/// that finite window only.
pub fn build_psi_profile_subsolution(spec: &ProblemSpec, span: f64) -> Result<Certificate> {
    let (p, l) = (spec.p, spec.l);
    if !(l > p && p > 1.0) {
        return Err(hypothesis(format!("needs l > p > 1, got p = {p}, l = {l}")));
    }
    let bounds = spec.coefficient_bounds().ok_or_else(|| hypothesis("needs closed-family coefficients"))?;
    let c1 = bounds.c_bar;
    if c1.is_zero() {
        return Err(hypothesis("needs c not identically zero"));
    }
    let len = spec.length();
    let m0 = len * len / 8.0;
    let m = if c1.rate < 0.0 {
        let cap = (p - 1.0) / -c1.rate;
        if cap <= m0 {
            return Err(hypothesis("absorption decays too fast for any admissible sup psi"));
        }
        (m0 * cap).sqrt()
    } else {
        2.0 * m0
    };
    let psi = solve_psi(len, m)?;
    let ipsi = psi.integral_pow(l);
    let k_under = bounds.k_under;

    let starts = std::iter::once(0.0).chain((0..12).map(|j| 0.5 * 2f64.powi(j)));
    for t1 in starts {
        let f1 = (m.powf(p) * c1.eval(t1)).powf(-1.0 / (p - 1.0));
        let times: Vec<f64> = (0..=1000).map(|i| t1 + span * i as f64 / 1000.0).collect();
        let ok = times.iter().all(|&t| {
            let (f, _) = bernoulli(t, m, &c1, p, t1, f1);
            f.powf(l - 1.0) * k_under.eval(t) * ipsi >= MARGIN * 0.5 * len
        });
        if ok {
            let d1 = times
                .iter()
                .map(|&t| bernoulli(t, m, &c1, p, t1, f1).0 * c1.eval(t).powf(1.0 / (p - 1.0)))
                .fold(f64::INFINITY, f64::min);
            let mut cert = Certificate::new(
                CertificateKind::PsiProfileSub,
                Direction::Sub,
                Profile::PsiBernoulli { psi, scale: m, c_hat: c1, p, t_start: t1, f_start: f1 },
                (t1, t1 + span),
            )
            .with_constant("m", m)
            .with_constant("t1", t1)
            .with_constant("f_t1", f1)
            .with_constant("d1", d1);
            cert.initial_reference = InitialReference::External;
            cert.notes.push(format!("d1 estimated on [{t1}, {}]; window-dependent", t1 + span));
            cert.notes.push(format!("comparison at t1 needs inf u(., t1) >= {:.6e}", f1 * m));
            return Ok(cert);
        }
    }
    Err(infeasible("boundary inequality never held on the scanned windows"))
}

/// Collar subsolution `(t₂ + ωs − t)^{-σ}` on `{s < γ}` starting at `t0`.
/// `level(γ)` is a lower bound for the solution on the collar of width `γ`
/// at `t0`.
///
/// For `l > max{1, p}` the profile uses `ω = 1` and `σ > 2/(l−1)` (with
/// `σ < 2/(p−1)` when `p > 1`); for `l = p > 1` it uses `σ = 2/(p−1)` and scans
/// `ω`. The lateral comparison at `s = γ` is left to the numeric run.
pub fn build_traveling_subsolution(spec: &ProblemSpec, t0: f64, level: impl Fn(f64) -> f64) -> Result<Certificate> {
    let (p, l) = (spec.p, spec.l);
    let len = spec.length();
    let (sigmas, omegas): (Vec<f64>, Vec<f64>) = if l > 1.0 && p <= 1.0 {
        ([1.25, 1.5, 2.0, 3.0, 4.0, 6.0].iter().map(|f| f * 2.0 / (l - 1.0)).collect(), vec![1.0])
    } else if l > p && p > 1.0 {
        let lo = (1.0 / (p - 1.0)).max(2.0 / (l - 1.0));
        let hi = 2.0 / (p - 1.0);
        ([0.25, 0.5, 0.75, 0.9].iter().map(|f| lo + f * (hi - lo)).collect(), vec![1.0])
    } else if l == p && p > 1.0 {
        (vec![2.0 / (p - 1.0)], (-24..=24).map(|j| 2f64.powf(j as f64 / 4.0)).collect())
    } else {
        return Err(hypothesis(format!("collar subsolution needs l > max(1, p) or l = p > 1, got p = {p}, l = {l}")));
    };

    for &sigma in &sigmas {
        for &omega in &omegas {
            let mut d: f64 = 1.0;
            while d > 1e-6 {
                let gamma = (0.5 * d).min(0.25 * len);
                let (k1, _) = k_range_on(spec, t0, t0 + d);
                let (_, c_bar) = c_range_on(spec, t0, t0 + d);
                let sl = sigma * l;
                let interior = log_grid(1e-9, d + omega * gamma, 400).all(|z| {
                    sigma * (sigma + 1.0) * omega * omega >= MARGIN * (sigma * z + c_bar * z.powf(sigma + 2.0 - sigma * p))
                });
                let flux = log_grid(1e-3 * d, d, 400).all(|z0| {
                    let lhs = sigma * omega * z0.powf(-sigma - 1.0);
                    let rhs = 2.0 * k1 * (z0.powf(1.0 - sl) - (z0 + omega * gamma).powf(1.0 - sl)) / (omega * (sl - 1.0));
                    MARGIN * lhs <= rhs
                });
                if interior && flux {
                    if level(gamma) < d.powf(-sigma) {
                        break;
                    }
                    let t2 = t0 + d;
                    let mut cert = Certificate::new(
                        CertificateKind::TravelingSub,
                        Direction::Sub,
                        Profile::Traveling { t2, omega, sigma, length: len },
                        (t0, t2 - 1e-3 * d),
                    )
                    .with_constant("sigma", sigma)
                    .with_constant("omega", omega)
                    .with_constant("gamma", gamma)
                    .with_constant("t0", t0)
                    .with_constant("t2", t2)
                    .with_constant("k1", k1)
                    .with_constant("c_bar", c_bar);
                    cert.region = Region::Collar { width: gamma };
                    cert.initial_reference = InitialReference::External;
                    cert.notes.push("lateral and initial comparisons are checked against a numeric run".into());
                    return Ok(cert);
                }
                d *= 0.8;
            }
        }
    }
    Err(infeasible(format!("no collar subsolution fits below the solution at t0 = {t0}")))
}
