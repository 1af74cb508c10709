//! Continuous problem description: exponents, coefficients, initial datum and
//! domain, plus validation and the regime classifier.

pub mod asymptotics;
pub mod coefficients;
pub mod regime;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use coefficients::{
    ClosedCoefficient, CoefficientBounds, CoefficientDescriptor, CustomCoefficient, Modulation, ProfileKind,
    TimeProfile,
};
pub use regime::{blowup_time_bound, classify_regime, classify_spec, Citation, RegimePrediction, Verdict};

use crate::quad;

/// The interval `Ω = (0, L)`. Its boundary is the two endpoints, so `|∂Ω| = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain1D {
    length: f64,
}

impl Domain1D {
    pub fn new(length: f64) -> Result<Self, ProblemError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ProblemError::InvalidDomain(length));
        }
        Ok(Self { length })
    }

    pub fn unit() -> Self {
        Self { length: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn volume(&self) -> f64 {
        self.length
    }

    /// Counting measure of `{0, L}`.
    pub fn boundary_measure(&self) -> f64 {
        2.0
    }
}

/// Which end of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Left,
    Right,
}

impl Endpoint {
    pub const BOTH: [Endpoint; 2] = [Endpoint::Left, Endpoint::Right];

    pub fn index(self) -> usize {
        match self {
            Endpoint::Left => 0,
            Endpoint::Right => 1,
        }
    }

    pub fn position(self, length: f64) -> f64 {
        match self {
            Endpoint::Left => 0.0,
            Endpoint::Right => length,
        }
    }

    /// Sign relating `∂/∂ν` to `∂/∂x`: `∂u/∂ν = sign · u_x`.
    pub fn normal_sign(self) -> f64 {
        match self {
            Endpoint::Left => -1.0,
            Endpoint::Right => 1.0,
        }
    }
}

/// Nonnegative `C¹` initial datum with a known derivative.
#[derive(Clone)]
pub enum InitialDatum {
    Constant(f64),
    /// `mean + amplitude·cos(πx/L)`
    Cosine { mean: f64, amplitude: f64 },
    /// `scale · ((x² − Lx)/2 + additive_constant)`
    PsiProfile { additive_constant: f64, scale: f64 },
    Custom {
        name: String,
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Constant(v) => write!(f, "Constant({v})"),
            InitialDatum::Cosine { mean, amplitude } => write!(f, "Cosine {{ mean: {mean}, amplitude: {amplitude} }}"),
            InitialDatum::PsiProfile { additive_constant, scale } => {
                write!(f, "PsiProfile {{ additive_constant: {additive_constant}, scale: {scale} }}")
            }
            InitialDatum::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl InitialDatum {
    pub fn custom<F, D>(name: &str, value: F, derivative: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        InitialDatum::Custom { name: name.to_string(), value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            InitialDatum::Constant(v) => *v,
            InitialDatum::Cosine { mean, amplitude } => mean + amplitude * (PI * x / length).cos(),
            InitialDatum::PsiProfile { additive_constant, scale } => {
                scale * ((x * x - length * x) / 2.0 + additive_constant)
            }
            InitialDatum::Custom { value, .. } => value(x),
        }
    }

    pub fn derivative(&self, x: f64, length: f64) -> f64 {
        match self {
            InitialDatum::Constant(_) => 0.0,
            InitialDatum::Cosine { amplitude, .. } => -amplitude * PI / length * (PI * x / length).sin(),
            InitialDatum::PsiProfile { scale, .. } => scale * (x - length / 2.0),
            InitialDatum::Custom { derivative, .. } => derivative(x),
        }
    }

    /// `(inf, sup)` on `[0, L]`.
    pub fn range(&self, length: f64) -> (f64, f64) {
        match self {
            InitialDatum::Constant(v) => (*v, *v),
            InitialDatum::Cosine { mean, amplitude } => (mean - amplitude.abs(), mean + amplitude.abs()),
            InitialDatum::PsiProfile { additive_constant, scale } => {
                let a = scale * (additive_constant - length * length / 8.0);
                let b = scale * additive_constant;
                (a.min(b), a.max(b))
            }
            InitialDatum::Custom { value, .. } => (0..=2000)
                .map(|i| value(length * i as f64 / 2000.0))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v))),
        }
    }

    /// `∫_Ω u0`.
    pub fn mass(&self, length: f64) -> f64 {
        match self {
            InitialDatum::Constant(v) => v * length,
            InitialDatum::Cosine { mean, .. } => mean * length,
            InitialDatum::PsiProfile { additive_constant, scale } => {
                scale * (additive_constant * length - length.powi(3) / 12.0)
            }
            InitialDatum::Custom { value, .. } => quad::integrate(&|x| value(x), 0.0, length, 1e-12),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("domain length must be positive and finite, got {0}")]
    InvalidDomain(f64),
    #[error("exponent {name} must be positive, got {value}")]
    NonPositiveExponent { name: &'static str, value: f64 },
    #[error("coefficient {name} is negative ({value} at x={x}, t={t})")]
    NegativeCoefficient { name: &'static str, value: f64, x: f64, t: f64 },
    #[error("initial datum is negative ({value} at x={x})")]
    NegativeInitialDatum { value: f64, x: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Complete description of one initial-boundary-value problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: f64,
    pub l: f64,
    pub c: CoefficientDescriptor,
    pub k: CoefficientDescriptor,
    pub u0: InitialDatum,
    pub domain: Domain1D,
}

impl ProblemSpec {
    /// Constant coefficients and datum on `(0, L)`.
    pub fn constant(p: f64, l: f64, c: f64, k: f64, u0: f64, length: f64) -> Self {
        ProblemSpec {
            p,
            l,
            c: CoefficientDescriptor::constant(c),
            k: CoefficientDescriptor::constant(k),
            u0: InitialDatum::Constant(u0),
            domain: Domain1D { length },
        }
    }

    pub fn with_u0(mut self, u0: InitialDatum) -> Self {
        self.u0 = u0;
        self
    }

    pub fn length(&self) -> f64 {
        self.domain.length
    }

    /// Closed-family envelopes, when both coefficients are closed.
    pub fn coefficient_bounds(&self) -> Option<CoefficientBounds> {
        match (self.c.closed(), self.k.closed()) {
            (Some(c), Some(k)) => Some(CoefficientBounds::from_closed(c, k)),
            _ => None,
        }
    }

    /// `∫_Ω k(b, y, t) u0(y)^l dy` by adaptive quadrature.
    pub fn initial_flux(&self, endpoint: Endpoint) -> f64 {
        let len = self.length();
        let f = |y: f64| self.k.eval_k(endpoint.index(), y, 0.0, len) * quad::pow_nonneg(self.u0.eval(y, len).max(0.0), self.l);
        quad::integrate_pieces(&f, &[0.0, 0.25 * len, 0.5 * len, 0.75 * len, len], 1e-12)
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `|∂u0/∂ν(b) − ∫ k(b,y,0) u0^l dy|` at `x = 0` and `x = L`.
    pub compatibility_residuals: [f64; 2],
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_compatible(&self, tol: f64) -> bool {
        self.compatibility_residuals.iter().all(|r| *r <= tol)
    }
}

const SIGN_SAMPLES: usize = 64;
const SIGN_TIMES: [f64; 6] = [0.0, 0.5, 1.0, 5.0, 20.0, 100.0];

/// Checks the standing hypotheses and reports the compatibility residuals.
/// Hard violations (signs, exponents) are errors; compatibility is a warning.
pub fn validate(spec: &ProblemSpec) -> Result<ValidationReport, ProblemError> {
    if !(spec.p > 0.0 && spec.p.is_finite()) {
        return Err(ProblemError::NonPositiveExponent { name: "p", value: spec.p });
    }
    if !(spec.l > 0.0 && spec.l.is_finite()) {
        return Err(ProblemError::NonPositiveExponent { name: "l", value: spec.l });
    }
    let len = spec.length();
    let mut warnings = Vec::new();

    for (name, desc) in [("c", &spec.c), ("k", &spec.k)] {
        if let CoefficientDescriptor::Closed(cc) = desc {
            if !(cc.profile.amplitude >= 0.0) {
                return Err(ProblemError::NegativeCoefficient { name, value: cc.profile.amplitude, x: 0.0, t: 0.0 });
            }
            let (lo, _) = cc.modulation.bounds();
            if lo < 0.0 {
                return Err(ProblemError::Invalid(format!("{name}: modulation lower bound {lo} is negative")));
            }
            if cc.endpoint_weights.iter().any(|w| !(*w >= 0.0)) {
                return Err(ProblemError::Invalid(format!("{name}: endpoint weights must be nonnegative")));
            }
        }
        for &t in &SIGN_TIMES {
            for i in 0..=SIGN_SAMPLES {
                let x = len * i as f64 / SIGN_SAMPLES as f64;
                let (vals, (lo, hi)) = if name == "c" {
                    (vec![desc.eval_c(x, t, len)], desc.bounds_c(t))
                } else {
                    (vec![desc.eval_k(0, x, t, len), desc.eval_k(1, x, t, len)], desc.bounds_k(t))
                };
                for v in vals {
                    if v < 0.0 || v.is_nan() {
                        return Err(ProblemError::NegativeCoefficient { name, value: v, x, t });
                    }
                    let slack = 1e-12 * hi.abs().max(1.0);
                    if v < lo - slack || v > hi + slack {
                        warnings.push(format!(
                            "{name}({x:.4}, t={t}) = {v} lies outside declared bounds [{lo}, {hi}]"
                        ));
                    }
                }
            }
        }
    }

    for i in 0..=4 * SIGN_SAMPLES {
        let x = len * i as f64 / (4 * SIGN_SAMPLES) as f64;
        let v = spec.u0.eval(x, len);
        if v < 0.0 || v.is_nan() {
            return Err(ProblemError::NegativeInitialDatum { value: v, x });
        }
    }

    let mut residuals = [0.0; 2];
    for b in Endpoint::BOTH {
        let x = b.position(len);
        let normal = b.normal_sign() * spec.u0.derivative(x, len);
        let r = (normal - spec.initial_flux(b)).abs();
        residuals[b.index()] = r;
        if r > 1e-8 {
            warnings.push(format!("compatibility residual {r:.3e} at {b:?} endpoint"));
        }
    }
    warnings.dedup();
    Ok(ValidationReport { compatibility_residuals: residuals, warnings })
}
