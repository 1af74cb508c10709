//! Coefficient families for the absorption weight `c(x,t)` and the boundary
//! kernel `k(x,y,t)`.
//!
//! Closed families factor as a time profile `A e^{ρt} (1+t)^α ln^β(e+t)` times
//! a bounded spatial modulation. Products of profiles stay in the family, which
//! keeps the integral criteria of the regime classifier decidable.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::asymptotics::{IntegralGrowth, LogAsymptotic, Scale};
use crate::quad;

/// `A e^{ρt} (1+t)^α ln^β(e+t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeProfile {
    pub amplitude: f64,
    pub rate: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Which named family a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Constant,
    Exponential,
    PowerLog,
    Product,
}

impl TimeProfile {
    pub fn constant(amplitude: f64) -> Self {
        Self { amplitude, rate: 0.0, alpha: 0.0, beta: 0.0 }
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        Self { amplitude, rate, alpha: 0.0, beta: 0.0 }
    }

    pub fn power_log(amplitude: f64, alpha: f64, beta: f64) -> Self {
        Self { amplitude, rate: 0.0, alpha, beta }
    }

    pub fn kind(&self) -> ProfileKind {
        let exp = self.rate != 0.0;
        let pl = self.alpha != 0.0 || self.beta != 0.0;
        match (exp, pl) {
            (false, false) => ProfileKind::Constant,
            (true, false) => ProfileKind::Exponential,
            (false, true) => ProfileKind::PowerLog,
            (true, true) => ProfileKind::Product,
        }
    }

    pub fn product(&self, other: &TimeProfile) -> TimeProfile {
        TimeProfile {
            amplitude: self.amplitude * other.amplitude,
            rate: self.rate + other.rate,
            alpha: self.alpha + other.alpha,
            beta: self.beta + other.beta,
        }
    }

    pub fn scaled(&self, factor: f64) -> TimeProfile {
        TimeProfile { amplitude: self.amplitude * factor, ..*self }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let mut v = self.amplitude;
        if self.rate != 0.0 {
            v *= (self.rate * t).exp();
        }
        if self.alpha != 0.0 {
            v *= (1.0 + t).powf(self.alpha);
        }
        if self.beta != 0.0 {
            v *= (std::f64::consts::E + t).ln().powf(self.beta);
        }
        v
    }

    /// Logarithmic derivative `f'/f`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        let e = std::f64::consts::E;
        self.rate + self.alpha / (1.0 + t) + self.beta / ((e + t) * (e + t).ln())
    }

    /// `∫_a^b f`, closed form when the profile is exponential or constant.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if self.amplitude == 0.0 || a == b {
            return 0.0;
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            if self.rate == 0.0 {
                return self.amplitude * (b - a);
            }
            let r = self.rate;
            // A (e^{rb} - e^{ra}) / r, written to stay accurate for small r(b-a)
            return self.amplitude * (r * a).exp() * (r * (b - a)).exp_m1() / r;
        }
        let f = |t: f64| self.eval(t);
        let span = b - a;
        let pieces = 16usize.max((span / 1.0).ceil().min(4096.0) as usize);
        let breaks: Vec<f64> = (0..=pieces).map(|i| a + span * i as f64 / pieces as f64).collect();
        quad::integrate_pieces(&f, &breaks, 1e-13)
    }

    /// `ln f(t)` asymptotics.
    pub fn log_asymptotic(&self) -> LogAsymptotic {
        if self.amplitude == 0.0 {
            return LogAsymptotic::zero_function();
        }
        LogAsymptotic::constant()
            .with_term(Scale::T, self.rate)
            .with_term(Scale::LN, self.alpha)
            .with_term(Scale::LnLn, self.beta)
    }

    /// Growth class of `∫_0^t f` as `t → ∞`.
    pub fn integral_growth(&self) -> IntegralGrowth {
        let (r, a, b, amp) = (self.rate, self.alpha, self.beta, self.amplitude);
        if amp == 0.0 || r < 0.0 {
            return IntegralGrowth::Converges;
        }
        if r > 0.0 {
            return IntegralGrowth::Diverges { scale: Scale::Growth { rho: r, a, b }, coef: amp / r };
        }
        if a > -1.0 {
            return IntegralGrowth::Diverges { scale: Scale::Growth { rho: 0.0, a: a + 1.0, b }, coef: amp / (a + 1.0) };
        }
        if a < -1.0 {
            return IntegralGrowth::Converges;
        }
        if b > -1.0 {
            IntegralGrowth::Diverges { scale: Scale::Growth { rho: 0.0, a: 0.0, b: b + 1.0 }, coef: amp / (b + 1.0) }
        } else if b == -1.0 {
            IntegralGrowth::Diverges { scale: Scale::LnLn, coef: amp }
        } else {
            IntegralGrowth::Converges
        }
    }

    /// Asymptotics of `ln exp(-κ ∫_0^t f) = -κ ∫_0^t f`.
    pub fn damping_asymptotic(&self, kappa: f64) -> LogAsymptotic {
        match self.integral_growth() {
            IntegralGrowth::Converges => LogAsymptotic::constant(),
            IntegralGrowth::Diverges { scale, coef } => LogAsymptotic::constant().with_term(scale, -kappa * coef),
        }
    }

    /// Infimum and supremum over `[0, ∞)`, by dense log-spaced sampling plus
    /// the analytic limit at infinity.
    pub fn range_on_halfline(&self) -> (f64, f64) {
        if self.amplitude == 0.0 {
            return (0.0, 0.0);
        }
        let mut lo = self.eval(0.0);
        let mut hi = lo;
        for i in 0..=2400 {
            let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 2400.0);
            let v = self.eval(t);
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            } else {
                hi = f64::INFINITY;
            }
        }
        let asy = self.log_asymptotic();
        if asy.tends_to_infinity() {
            hi = f64::INFINITY;
        } else if matches!(asy.dominant(), Some((_, c)) if c < 0.0) {
            lo = 0.0;
        }
        (lo, hi)
    }

    /// Supremum over `[a, b]` by sampling (profiles are piecewise monotone).
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        (0..=512)
            .map(|i| self.eval(a + (b - a) * i as f64 / 512.0))
            .fold(0.0, f64::max)
    }

    /// Infimum over `[a, b]` by sampling.
    pub fn inf_on(&self, a: f64, b: f64) -> f64 {
        (0..=512)
            .map(|i| self.eval(a + (b - a) * i as f64 / 512.0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bounded spatial factor multiplying a time profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulation {
    #[default]
    Uniform,
    /// `1 + depth·cos(πx/L)`, `|depth| <= 1`.
    Cosine { depth: f64 },
    /// `1 + slope·x/L`, `slope >= -1`.
    Linear { slope: f64 },
}

impl Modulation {
    #[inline]
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            Modulation::Uniform => 1.0,
            Modulation::Cosine { depth } => 1.0 + depth * (std::f64::consts::PI * x / length).cos(),
            Modulation::Linear { slope } => 1.0 + slope * x / length,
        }
    }

    /// Known lower and upper bounds on `[0, L]`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Modulation::Uniform => (1.0, 1.0),
            Modulation::Cosine { depth } => (1.0 - depth.abs(), 1.0 + depth.abs()),
            Modulation::Linear { slope } => ((1.0 + slope).min(1.0), (1.0 + slope).max(1.0)),
        }
    }
}

/// User-supplied coefficient, `(x, y, t) ↦ value` (`y` is ignored for `c`).
#[derive(Clone)]
pub struct CustomCoefficient {
    pub name: String,
    pub f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    pub lower: f64,
    pub upper: f64,
}

impl fmt::Debug for CustomCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCoefficient")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

/// Coefficient in a closed family: `profile(t) · weight_b · modulation(·)`.
///
/// For `c` the modulation acts on `x` and the endpoint weights are unused.
/// For `k` the modulation acts on the integration variable `y` and
/// `endpoint_weights[0]`, `[1]` scale the kernel seen at `x = 0` and `x = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedCoefficient {
    pub profile: TimeProfile,
    pub modulation: Modulation,
    pub endpoint_weights: [f64; 2],
}

#[derive(Debug, Clone)]
pub enum CoefficientDescriptor {
    Closed(ClosedCoefficient),
    Custom(CustomCoefficient),
}

impl CoefficientDescriptor {
    pub fn constant(value: f64) -> Self {
        Self::from_profile(TimeProfile::constant(value))
    }

    pub fn from_profile(profile: TimeProfile) -> Self {
        CoefficientDescriptor::Closed(ClosedCoefficient {
            profile,
            modulation: Modulation::Uniform,
            endpoint_weights: [1.0, 1.0],
        })
    }

    pub fn with_modulation(self, modulation: Modulation) -> Self {
        match self {
            CoefficientDescriptor::Closed(c) => CoefficientDescriptor::Closed(ClosedCoefficient { modulation, ..c }),
            other => other,
        }
    }

    pub fn with_endpoint_weights(self, endpoint_weights: [f64; 2]) -> Self {
        match self {
            CoefficientDescriptor::Closed(c) => CoefficientDescriptor::Closed(ClosedCoefficient { endpoint_weights, ..c }),
            other => other,
        }
    }

    pub fn custom<F>(name: &str, lower: f64, upper: f64, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        CoefficientDescriptor::Custom(CustomCoefficient { name: name.to_string(), f: Arc::new(f), lower, upper })
    }

    pub fn closed(&self) -> Option<&ClosedCoefficient> {
        match self {
            CoefficientDescriptor::Closed(c) => Some(c),
            CoefficientDescriptor::Custom(_) => None,
        }
    }

    /// `c(x, t)`.
    #[inline]
    pub fn eval_c(&self, x: f64, t: f64, length: f64) -> f64 {
        match self {
            CoefficientDescriptor::Closed(c) => c.profile.eval(t) * c.modulation.eval(x, length),
            CoefficientDescriptor::Custom(c) => (c.f)(x, 0.0, t),
        }
    }

    /// `k(b, y, t)` for the boundary point with index `endpoint` (0 ↔ `x=0`).
    #[inline]
    pub fn eval_k(&self, endpoint: usize, y: f64, t: f64, length: f64) -> f64 {
        match self {
            CoefficientDescriptor::Closed(c) => {
                c.profile.eval(t) * c.endpoint_weights[endpoint] * c.modulation.eval(y, length)
            }
            CoefficientDescriptor::Custom(c) => (c.f)(endpoint as f64 * length, y, t),
        }
    }

    /// Declared `(lower, upper)` bounds of the spatial part times the profile
    /// at time `t`, for `c` (endpoint weights ignored).
    pub fn bounds_c(&self, t: f64) -> (f64, f64) {
        match self {
            CoefficientDescriptor::Closed(c) => {
                let (lo, hi) = c.modulation.bounds();
                let p = c.profile.eval(t);
                (p * lo, p * hi)
            }
            CoefficientDescriptor::Custom(c) => (c.lower, c.upper),
        }
    }

    /// Declared `(lower, upper)` bounds over `(x ∈ ∂Ω, y ∈ Ω)` for `k`.
    pub fn bounds_k(&self, t: f64) -> (f64, f64) {
        match self {
            CoefficientDescriptor::Closed(c) => {
                let (lo, hi) = c.modulation.bounds();
                let p = c.profile.eval(t);
                let wmin = c.endpoint_weights[0].min(c.endpoint_weights[1]);
                let wmax = c.endpoint_weights[0].max(c.endpoint_weights[1]);
                (p * lo * wmin, p * hi * wmax)
            }
            CoefficientDescriptor::Custom(c) => (c.lower, c.upper),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, CoefficientDescriptor::Closed(_))
    }
}

/// Time profiles of the extremal coefficient envelopes used by the regime
/// criteria, for closed families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientBounds {
    /// `sup_x c(x,t)`
    pub c_bar: TimeProfile,
    /// `inf_x c(x,t)`
    pub c_under: TimeProfile,
    /// `sup_{x,y} k(x,y,t)`
    pub k_bar: TimeProfile,
    /// `inf_{x,y} k(x,y,t)`
    pub k_under: TimeProfile,
    /// `inf_y k(b,y,t)` for each endpoint `b`
    pub k_under_at: [TimeProfile; 2],
    /// `k(b, y, t)` for `b, y ∈ ∂Ω`, as profiles indexed `[b][y]`
    pub k_boundary_pairs: [[TimeProfile; 2]; 2],
    /// `sup_{x ∈ ∂Ω} c(x, t)`
    pub c_boundary_sup: TimeProfile,
}

impl CoefficientBounds {
    pub fn from_closed(c: &ClosedCoefficient, k: &ClosedCoefficient) -> Self {
        let (clo, chi) = c.modulation.bounds();
        let (klo, khi) = k.modulation.bounds();
        let w = k.endpoint_weights;
        let wmin = w[0].min(w[1]);
        let wmax = w[0].max(w[1]);
        // modulation is evaluated on the unit interval; the bounds are scale free
        let m0 = k.modulation.eval(0.0, 1.0);
        let m1 = k.modulation.eval(1.0, 1.0);
        let cb = c.modulation.eval(0.0, 1.0).max(c.modulation.eval(1.0, 1.0));
        CoefficientBounds {
            c_bar: c.profile.scaled(chi),
            c_under: c.profile.scaled(clo),
            k_bar: k.profile.scaled(khi * wmax),
            k_under: k.profile.scaled(klo * wmin),
            k_under_at: [k.profile.scaled(klo * w[0]), k.profile.scaled(klo * w[1])],
            k_boundary_pairs: [
                [k.profile.scaled(w[0] * m0), k.profile.scaled(w[0] * m1)],
                [k.profile.scaled(w[1] * m0), k.profile.scaled(w[1] * m1)],
            ],
            c_boundary_sup: c.profile.scaled(cb),
        }
    }

    /// `k̄_c(t) = k̄(t) exp(-(l-1) ∫_0^t c̲)`.
    pub fn k_bar_c(&self, t: f64, l: f64) -> f64 {
        self.k_bar.eval(t) * (-(l - 1.0) * self.c_under.integral(0.0, t)).exp()
    }

    /// `k̲_c(b,t) = inf_y k(b,y,t) exp(-(l-1) ∫_0^t c̄)`.
    pub fn k_under_c(&self, endpoint: usize, t: f64, l: f64) -> f64 {
        self.k_under_at[endpoint].eval(t) * (-(l - 1.0) * self.c_bar.integral(0.0, t)).exp()
    }

    /// Asymptotics of `ln k̄_c`.
    pub fn k_bar_c_asymptotic(&self, l: f64) -> LogAsymptotic {
        self.k_bar.log_asymptotic().plus(&self.c_under.damping_asymptotic(l - 1.0))
    }

    /// `∫_∂Ω k̲_c(·, t) dS`, the sum over both endpoints.
    pub fn k_under_c_boundary_sum(&self, t: f64, l: f64) -> f64 {
        self.k_under_c(0, t, l) + self.k_under_c(1, t, l)
    }

    /// Asymptotics of `ln ∫_∂Ω k̲_c dS`.
    pub fn k_under_c_boundary_sum_asymptotic(&self, l: f64) -> LogAsymptotic {
        let sum = self.k_under_at[0].amplitude + self.k_under_at[1].amplitude;
        let profile = TimeProfile { amplitude: sum, ..self.k_under_at[0] };
        profile.log_asymptotic().plus(&self.c_bar.damping_asymptotic(l - 1.0))
    }
}
