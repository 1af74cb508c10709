//! Regime classifier: maps `(p, l)` and the coefficient envelopes onto the
//! known global-existence and blow-up criteria.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::coefficients::{CoefficientBounds, TimeProfile};
use super::{Domain1D, ProblemSpec};
use crate::quad;

/// Qualitative verdict backed by a proven existence or blow-up criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum Verdict {
    /// Every nonnegative datum gives a global solution.
    GlobalAllData,
    /// Some (large) data blow up in finite time.
    BlowUpLargeData,
    /// Some (small) data give global solutions.
    SmallDataGlobal,
    /// Every nontrivial solution blows up in finite time.
    AllNontrivialBlowUp,
    /// `l = p > 1`: the outcome hinges on the ratio of `c` to `k`.
    ConditionalEigenRatio,
    Unknown,
}

impl Verdict {
    fn strength(self) -> u8 {
        match self {
            Verdict::AllNontrivialBlowUp | Verdict::GlobalAllData => 5,
            Verdict::BlowUpLargeData => 4,
            Verdict::SmallDataGlobal => 3,
            Verdict::ConditionalEigenRatio => 2,
            Verdict::Unknown => 0,
        }
    }

    /// Whether the verdict guarantees that some solution exists globally.
    pub fn is_global(self) -> bool {
        matches!(self, Verdict::GlobalAllData | Verdict::SmallDataGlobal)
    }

    pub fn is_blow_up(self) -> bool {
        matches!(self, Verdict::AllNontrivialBlowUp | Verdict::BlowUpLargeData)
    }
}

/// The criterion a finding rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Citation {
    /// `l ≤ 1`, or `1 < l < p` with `c > 0`: global for every datum.
    GlobalExistence,
    /// `l > max{1, p}` and `k > 0` on `∂Ω × ∂Ω`: large data blow up.
    LargeDataBlowUp,
    /// `p < 1 < l`, `inf c(·,0) > 0`: small data are global.
    SublinearAbsorptionSmallData,
    /// `p = 1 < l`, `∫∫ k̲_c = ∞`: all nontrivial solutions blow up by `T`.
    MassFunctionalBlowUp,
    /// `p = 1 < l`, `k̄_c` integrable with bounded windowed singular integral.
    LinearAbsorptionSmallData,
    /// `l > p > 1`, `k̲ c_1^{(1-l)/(p-1)} → ∞`: all nontrivial solutions blow up.
    SuperlinearAllBlowUp,
    /// `l > p > 1`, `k̄ ≤ K_c c_2^{(l-1)/(p-1)}`: small data are global.
    SuperlinearSmallData,
    /// `l = p > 1`: global when `inf c / sup k` is large.
    LowerEigenRatio,
    /// `l = p > 1`: blow-up exists when `sup c(·,0) / inf k(·,·,0)` is small.
    UpperEigenRatio,
}

impl fmt::Display for Citation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Citation::GlobalExistence => "global existence for all data (l<=1, or 1<l<p with c>0)",
            Citation::LargeDataBlowUp => "blow-up for large data (l>max{1,p}, k>0 on the boundary)",
            Citation::SublinearAbsorptionSmallData => "small-data global existence (p<1<l, inf c(x,0)>0)",
            Citation::MassFunctionalBlowUp => "blow-up of all nontrivial solutions (p=1<l, divergent k_c integral)",
            Citation::LinearAbsorptionSmallData => "bounded small-data solutions (p=1<l, integrable k_c)",
            Citation::SuperlinearAllBlowUp => "blow-up of all nontrivial solutions (l>p>1, k dominates c)",
            Citation::SuperlinearSmallData => "small-data global existence (l>p>1, k controlled by c)",
            Citation::LowerEigenRatio => "l=p>1 global when inf c / sup k is large",
            Citation::UpperEigenRatio => "l=p>1 blow-up when sup c(.,0) / inf k(.,.,0) is small",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub verdict: Verdict,
    pub citation: Citation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePrediction {
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    pub citations: Vec<Citation>,
    /// Upper bound on the blow-up time when every solution blows up and the
    /// datum mass was supplied.
    pub blow_up_time_bound: Option<f64>,
    /// `inf c / sup k` over all times (`l = p` case).
    pub lambda_lower: Option<f64>,
    /// `sup_{∂Ω} c(·,0) / inf_{∂Ω×∂Ω} k(·,·,0)` (`l = p` case).
    pub lambda_upper: Option<f64>,
    pub notes: Vec<String>,
}

impl RegimePrediction {
    fn from_findings(findings: Vec<Finding>, notes: Vec<String>) -> Self {
        let verdict = findings
            .iter()
            .map(|f| f.verdict)
            .max_by_key(|v| v.strength())
            .unwrap_or(Verdict::Unknown);
        let mut citations: Vec<Citation> = Vec::new();
        for f in &findings {
            if !citations.contains(&f.citation) {
                citations.push(f.citation);
            }
        }
        RegimePrediction {
            verdict,
            findings,
            citations,
            blow_up_time_bound: None,
            lambda_lower: None,
            lambda_upper: None,
            notes,
        }
    }

    pub fn unknown(note: &str) -> Self {
        Self::from_findings(Vec::new(), vec![note.to_string()])
    }

    pub fn has(&self, verdict: Verdict) -> bool {
        self.findings.iter().any(|f| f.verdict == verdict)
    }

    pub fn cites(&self, citation: Citation) -> bool {
        self.citations.contains(&citation)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegimeError {
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("no blow-up time bound: the k_c integral saturates at {saturation} below the target {target}")]
    NoSolution { saturation: f64, target: f64 },
}

/// Infimum of `sup ψ` over positive solutions of `Δψ = 1`, `∂ψ/∂ν = |Ω|/|∂Ω|`.
/// On `(0, L)` every solution is `(x² − Lx)/2 + C` with `C > L²/8`, so the
/// infimum `L²/8` is approached but never attained.
pub fn psi_sup_infimum(domain: Domain1D) -> f64 {
    domain.length().powi(2) / 8.0
}

/// Classifies a problem from its closed-form coefficients.
pub fn classify_spec(spec: &ProblemSpec) -> RegimePrediction {
    let bounds = spec.coefficient_bounds();
    let mass = spec.u0.mass(spec.length());
    classify_regime(spec.p, spec.l, bounds.as_ref(), spec.domain, Some(mass))
}

/// Strongest applicable verdicts for exponents `p`, `l` and the coefficient
/// envelopes. `bounds = None` stands for coefficients outside the closed
/// families; only the `l ≤ 1` criterion needs no coefficient information.
pub fn classify_regime(
    p: f64,
    l: f64,
    bounds: Option<&CoefficientBounds>,
    domain: Domain1D,
    u0_mass: Option<f64>,
) -> RegimePrediction {
    let mut findings = Vec::new();
    let mut notes = Vec::new();

    if l <= 1.0 {
        findings.push(Finding { verdict: Verdict::GlobalAllData, citation: Citation::GlobalExistence });
        return RegimePrediction::from_findings(findings, notes);
    }
    let Some(b) = bounds else {
        return RegimePrediction::unknown("coefficients outside the closed families");
    };

    let m0 = psi_sup_infimum(domain);

    if l < p {
        // c > 0 everywhere for a closed family iff its lower envelope is nonzero
        if !b.c_under.is_zero() {
            findings.push(Finding { verdict: Verdict::GlobalAllData, citation: Citation::GlobalExistence });
        } else {
            notes.push("1<l<p but c vanishes somewhere".to_string());
        }
        return RegimePrediction::from_findings(findings, notes);
    }

    if l == p {
        let (c_inf, _) = b.c_under.range_on_halfline();
        let (_, k_sup) = b.k_bar.range_on_halfline();
        let lambda_lower = if k_sup > 0.0 { c_inf / k_sup } else { f64::INFINITY };
        let k_bd_inf = b.k_boundary_pairs.iter().flatten().map(|pr| pr.eval(0.0)).fold(f64::INFINITY, f64::min);
        let c_bd_sup = b.c_boundary_sup.eval(0.0);
        let lambda_upper = if k_bd_inf > 0.0 { c_bd_sup / k_bd_inf } else { f64::INFINITY };
        findings.push(Finding { verdict: Verdict::ConditionalEigenRatio, citation: Citation::LowerEigenRatio });
        findings.push(Finding { verdict: Verdict::ConditionalEigenRatio, citation: Citation::UpperEigenRatio });
        let mut pred = RegimePrediction::from_findings(findings, notes);
        pred.lambda_lower = Some(lambda_lower);
        pred.lambda_upper = Some(lambda_upper);
        return pred;
    }

    // l > max{1, p}
    let boundary_pairs_positive_at = |t: f64| b.k_boundary_pairs.iter().flatten().all(|pr| pr.eval(t) > 0.0);
    // closed profiles are positive at every t or at none, so one time suffices
    if boundary_pairs_positive_at(0.0) {
        findings.push(Finding { verdict: Verdict::BlowUpLargeData, citation: Citation::LargeDataBlowUp });
    } else {
        notes.push("k vanishes on the boundary pairs; large-data blow-up criterion not met".to_string());
    }

    let mut time_bound = None;
    if p < 1.0 {
        if b.c_under.eval(0.0) > 0.0 {
            findings.push(Finding {
                verdict: Verdict::SmallDataGlobal,
                citation: Citation::SublinearAbsorptionSmallData,
            });
        }
    } else if p == 1.0 {
        let under = b.k_under_c_boundary_sum_asymptotic(l);
        let over = b.k_bar_c_asymptotic(l);
        if !under.is_vanishing() && !under.integrable() {
            findings.push(Finding { verdict: Verdict::AllNontrivialBlowUp, citation: Citation::MassFunctionalBlowUp });
            if let Some(mass) = u0_mass.filter(|m| *m > 0.0) {
                time_bound = blowup_time_bound_from_bounds(b, l, domain, mass).ok();
            }
        }
        // integrable closed profiles decay eventually, hence are bounded, which
        // bounds the windowed singular integral as well
        if over.integrable() && over.bounded_at_infinity() {
            findings.push(Finding { verdict: Verdict::SmallDataGlobal, citation: Citation::LinearAbsorptionSmallData });
            notes.push(format!(
                "windowed singular integral of k_bar_c over unit windows: sup {:.6e}",
                windowed_singular_sup(|t| b.k_bar_c(t, l), 1.0, 1.0, 50.0)
            ));
        }
    } else {
        // l > p > 1
        let kappa = (l - 1.0) / (p - 1.0);
        let threshold_rate = -(p - 1.0) / m0;
        let k_under = b.k_under.log_asymptotic();
        let blow_up = if k_under.is_vanishing() {
            false
        } else if !b.c_bar.is_zero() && b.c_bar.rate > threshold_rate {
            // c_1 = c̄ satisfies the growth-rate condition; test k̲ c_1^{-κ} → ∞
            k_under.plus(&b.c_bar.log_asymptotic().scaled(-kappa)).tends_to_infinity()
        } else {
            // any admissible c_1 ≥ c̄ grows at least like e^{ρ* t} with ρ* above
            // the threshold rate; the best such choice needs ρ_k > κ·threshold
            b.k_under.rate > kappa * threshold_rate
        };
        if blow_up {
            findings.push(Finding { verdict: Verdict::AllNontrivialBlowUp, citation: Citation::SuperlinearAllBlowUp });
        }
        let c2 = b.c_under;
        if !c2.is_zero() && c2.rate <= 0.0 {
            let ratio = b.k_bar.log_asymptotic().plus(&c2.log_asymptotic().scaled(-kappa));
            if ratio.bounded_at_infinity() {
                findings.push(Finding { verdict: Verdict::SmallDataGlobal, citation: Citation::SuperlinearSmallData });
            }
        }
    }

    let mut pred = RegimePrediction::from_findings(findings, notes);
    pred.blow_up_time_bound = time_bound;
    pred
}

/// `sup_{t ∈ [start, end]} ∫_{t-window}^t f(τ)/√(t-τ) dτ`, sampled on a
/// uniform grid of `t`. The substitution `τ = t − r²` removes the singularity.
pub fn windowed_singular_sup<F: Fn(f64) -> f64>(f: F, window: f64, start: f64, end: f64) -> f64 {
    let samples = 200;
    (0..=samples)
        .map(|i| {
            let t = start + (end - start) * i as f64 / samples as f64;
            let g = |r: f64| 2.0 * f(t - r * r);
            quad::integrate(&g, 0.0, window.sqrt(), 1e-10)
        })
        .fold(0.0, f64::max)
}

/// Upper bound `T` on the blow-up time for `p = 1 < l`: the solution of
/// `∫_0^T ∫_∂Ω k̲_c dS dt = (l−1)^{-1} (∫u0 / |Ω|)^{-(l-1)}`.
pub fn blowup_time_bound(spec: &ProblemSpec, u0_mass: f64) -> Result<f64, RegimeError> {
    if spec.p != 1.0 || spec.l <= 1.0 {
        return Err(RegimeError::HypothesisNotMet(format!("needs p = 1 < l, got p={}, l={}", spec.p, spec.l)));
    }
    let b = spec
        .coefficient_bounds()
        .ok_or_else(|| RegimeError::HypothesisNotMet("coefficients outside the closed families".into()))?;
    blowup_time_bound_from_bounds(&b, spec.l, spec.domain, u0_mass)
}

pub fn blowup_time_bound_from_bounds(
    b: &CoefficientBounds,
    l: f64,
    domain: Domain1D,
    u0_mass: f64,
) -> Result<f64, RegimeError> {
    if !(u0_mass > 0.0) {
        return Err(RegimeError::HypothesisNotMet("datum must have positive mass".into()));
    }
    let target = (u0_mass / domain.volume()).powf(-(l - 1.0)) / (l - 1.0);
    let amp = b.k_under_at[0].amplitude + b.k_under_at[1].amplitude;
    let k = TimeProfile { amplitude: amp, ..b.k_under_at[0] };
    if amp == 0.0 {
        return Err(RegimeError::NoSolution { saturation: 0.0, target });
    }

    let c = b.c_bar;
    let pure_exp = |p: &TimeProfile| p.alpha == 0.0 && p.beta == 0.0;
    if pure_exp(&k) && pure_exp(&c) && c.rate == 0.0 {
        // integrand K e^{r t} with r = ρ_k − (l−1) c̄
        let r = k.rate - (l - 1.0) * c.amplitude;
        if r == 0.0 {
            return Ok(target / k.amplitude);
        }
        let arg = 1.0 + r * target / k.amplitude;
        if arg <= 0.0 {
            return Err(RegimeError::NoSolution { saturation: -k.amplitude / r, target });
        }
        return Ok(arg.ln() / r);
    }

    let integrand = |t: f64| k.eval(t) * (-(l - 1.0) * c.integral(0.0, t)).exp();
    let cumulative = |t: f64| {
        let pieces = 8usize.max(t.ceil().min(2048.0) as usize);
        let breaks: Vec<f64> = (0..=pieces).map(|i| t * i as f64 / pieces as f64).collect();
        quad::integrate_pieces(&integrand, &breaks, 1e-12)
    };
    let mut hi = 1.0;
    let mut prev = 0.0;
    loop {
        let v = cumulative(hi);
        if v >= target {
            break;
        }
        if hi > 1e6 || (hi > 64.0 && (v - prev) <= 1e-12 * v.max(1e-300)) {
            return Err(RegimeError::NoSolution { saturation: v, target });
        }
        prev = v;
        hi *= 2.0;
    }
    Ok(quad::bisect_increasing(cumulative, 0.0, hi, target, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::coefficients::CoefficientDescriptor;

    fn bounds(c: CoefficientDescriptor, k: CoefficientDescriptor) -> CoefficientBounds {
        CoefficientBounds::from_closed(c.closed().unwrap(), k.closed().unwrap())
    }

    fn unit(c: f64, k: f64) -> CoefficientBounds {
        bounds(CoefficientDescriptor::constant(c), CoefficientDescriptor::constant(k))
    }

    #[test]
    fn sublinear_flux_is_global() {
        let pred = classify_regime(0.5, 0.8, Some(&unit(1.0, 1.0)), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::GlobalAllData);
        assert!(pred.cites(Citation::GlobalExistence));
    }

    #[test]
    fn strong_absorption_is_global() {
        let pred = classify_regime(2.0, 1.5, Some(&unit(1.0, 1.0)), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::GlobalAllData);
        let pred = classify_regime(2.0, 1.5, Some(&unit(0.0, 1.0)), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::Unknown);
    }

    #[test]
    fn no_absorption_linear_case_blows_up() {
        let pred = classify_regime(1.0, 2.0, Some(&unit(0.0, 1.0)), Domain1D::unit(), Some(1.0));
        assert_eq!(pred.verdict, Verdict::AllNontrivialBlowUp);
        assert!(pred.cites(Citation::MassFunctionalBlowUp));
        assert!((pred.blow_up_time_bound.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unit_absorption_linear_case_has_small_data_solutions() {
        let pred = classify_regime(1.0, 2.0, Some(&unit(1.0, 1.0)), Domain1D::unit(), Some(1.0));
        assert!(pred.has(Verdict::SmallDataGlobal));
        assert!(pred.cites(Citation::LinearAbsorptionSmallData));
        assert!(!pred.has(Verdict::AllNontrivialBlowUp));
    }

    #[test]
    fn sublinear_absorption_superlinear_flux() {
        let pred = classify_regime(0.5, 2.0, Some(&unit(1.0, 1.0)), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::BlowUpLargeData);
        assert!(pred.has(Verdict::SmallDataGlobal));
        let pred = classify_regime(0.5, 2.0, Some(&unit(0.0, 1.0)), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::BlowUpLargeData);
        assert!(!pred.has(Verdict::SmallDataGlobal));
    }

    #[test]
    fn equal_exponents_report_ratios() {
        let pred = classify_regime(2.0, 2.0, Some(&unit(3.0, 1.5)), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::ConditionalEigenRatio);
        assert!((pred.lambda_lower.unwrap() - 2.0).abs() < 1e-12);
        assert!((pred.lambda_upper.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn superlinear_growing_kernel_blows_up_everything() {
        // c ≡ 1, k = e^{t}: k̲ c^{-κ} = e^t → ∞
        let b = bounds(
            CoefficientDescriptor::constant(1.0),
            CoefficientDescriptor::from_profile(TimeProfile::exponential(1.0, 1.0)),
        );
        let pred = classify_regime(2.0, 3.0, Some(&b), Domain1D::unit(), None);
        assert_eq!(pred.verdict, Verdict::AllNontrivialBlowUp);
        assert!(!pred.has(Verdict::SmallDataGlobal));
        // constant kernel: bounded ratio, small data global
        let pred = classify_regime(2.0, 3.0, Some(&unit(1.0, 1.0)), Domain1D::unit(), None);
        assert!(pred.has(Verdict::SmallDataGlobal));
        assert!(!pred.has(Verdict::AllNontrivialBlowUp));
    }

    #[test]
    fn power_log_balance_follows_growth_exponent() {
        // c ~ t^a ln^b t, k ~ γ(t) (t^a ln^b t)^κ: blow-up iff γ → ∞
        let (p, l) = (2.0, 3.0);
        let kappa = (l - 1.0) / (p - 1.0);
        let c = TimeProfile::power_log(1.0, 0.5, 1.0);
        let balanced = TimeProfile::power_log(1.0, 0.5 * kappa, kappa);
        let boosted = balanced.product(&TimeProfile::power_log(1.0, 0.0, 0.5));
        let pb = classify_regime(p, l, Some(&bounds(CoefficientDescriptor::from_profile(c), CoefficientDescriptor::from_profile(balanced))), Domain1D::unit(), None);
        assert!(pb.has(Verdict::SmallDataGlobal) && !pb.has(Verdict::AllNontrivialBlowUp));
        let pg = classify_regime(p, l, Some(&bounds(CoefficientDescriptor::from_profile(c), CoefficientDescriptor::from_profile(boosted))), Domain1D::unit(), None);
        assert!(pg.has(Verdict::AllNontrivialBlowUp) && !pg.has(Verdict::SmallDataGlobal));
    }

    #[test]
    fn custom_coefficients_are_unknown_unless_flux_sublinear() {
        assert_eq!(classify_regime(2.0, 3.0, None, Domain1D::unit(), None).verdict, Verdict::Unknown);
        assert_eq!(classify_regime(2.0, 0.7, None, Domain1D::unit(), None).verdict, Verdict::GlobalAllData);
    }

    #[test]
    fn time_bound_examples() {
        let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 1.0, 1.0, 1.0);
        assert!((blowup_time_bound(&spec, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((blowup_time_bound(&spec, 2.0).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn time_bound_saturation_is_an_error() {
        // k̲_c = e^{-t}: total integral 2, target for tiny mass is huge
        let spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 1e-3, 1.0);
        assert!(matches!(blowup_time_bound(&spec, 1e-3), Err(RegimeError::NoSolution { .. })));
    }

    #[test]
    fn time_bound_numeric_path_matches_closed_form() {
        // k = (1+t)^0 ln^0 but forced through the quadrature by a zero-rate power-log factor
        let spec = ProblemSpec::constant(1.0, 2.0, 0.5, 1.0, 1.0, 1.0);
        let closed = blowup_time_bound(&spec, 1.0).unwrap();
        let mut b = spec.coefficient_bounds().unwrap();
        b.c_bar.beta = 1e-300; // numerically identical profile, different code path
        let numeric = blowup_time_bound_from_bounds(&b, 2.0, Domain1D::unit(), 1.0).unwrap();
        assert!((closed - numeric).abs() < 1e-9 * closed, "{closed} vs {numeric}");
    }
}
