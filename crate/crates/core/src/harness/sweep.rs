//! Parameter sweeps over `(p, l, c, k, u0)` on a worker pool, with a
//! manifest comparing predicted regimes to observed outcomes.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ConfigError, GridConfig, ProblemConfig, RunConfig, SCHEMA_VERSION};
use super::record::{execute, write_outputs};
use super::HarnessError;
use crate::problem::{RegimePrediction, Verdict};
use crate::timestepper::{OutcomeKind, StepControl};

/// Cartesian axes; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub p: Vec<f64>,
    pub l: Vec<f64>,
    /// Amplitudes of `c`.
    pub c: Vec<f64>,
    /// Amplitudes of `k`.
    pub k: Vec<f64>,
    /// Scale factors applied to the base datum.
    pub u0: Vec<f64>,
}

impl SweepAxes {
    fn is_empty(&self) -> bool {
        self.p.is_empty() && self.l.is_empty() && self.c.is_empty() && self.k.is_empty() && self.u0.is_empty()
    }
}

/// One explicitly listed point; unset fields keep the base value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepPoint {
    pub p: Option<f64>,
    pub l: Option<f64>,
    pub c: Option<f64>,
    pub k: Option<f64>,
    pub u0: Option<f64>,
    pub n: Option<usize>,
    pub horizon: Option<f64>,
    pub err_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub horizon: f64,
    pub base: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub axes: SweepAxes,
    #[serde(default)]
    pub points: Vec<SweepPoint>,
}

fn default_name() -> String {
    "sweep".to_string()
}

impl SweepPlan {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let plan: SweepPlan = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if plan.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion { found: plan.schema_version, expected: SCHEMA_VERSION });
        }
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    /// Cartesian points followed by listed points, deduplicated in order of
    /// first appearance.
    pub fn expand(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        if !self.axes.is_empty() {
            let axis = |v: &Vec<f64>| if v.is_empty() { vec![None] } else { v.iter().map(|&x| Some(x)).collect() };
            for &p in &axis(&self.axes.p) {
                for &l in &axis(&self.axes.l) {
                    for &c in &axis(&self.axes.c) {
                        for &k in &axis(&self.axes.k) {
                            for &u0 in &axis(&self.axes.u0) {
                                out.push(SweepPoint { p, l, c, k, u0, ..SweepPoint::default() });
                            }
                        }
                    }
                }
            }
        }
        out.extend(self.points.iter().copied());
        let mut seen = HashSet::new();
        out.retain(|pt| seen.insert(self.key(pt)));
        out
    }

    /// Resolved parameters as bit patterns, so equal points compare equal.
    fn key(&self, pt: &SweepPoint) -> [u64; 8] {
        let r = self.resolve(pt);
        let u0 = pt.u0.unwrap_or(1.0);
        [r.problem.p, r.problem.l, r.problem.c.amplitude, r.problem.k.amplitude, u0, r.grid.n as f64, r.horizon, r.control.err_tol]
            .map(f64::to_bits)
    }

    pub fn resolve(&self, pt: &SweepPoint) -> RunConfig {
        let mut problem = self.base;
        problem.p = pt.p.unwrap_or(problem.p);
        problem.l = pt.l.unwrap_or(problem.l);
        problem.c.amplitude = pt.c.unwrap_or(problem.c.amplitude);
        problem.k.amplitude = pt.k.unwrap_or(problem.k.amplitude);
        problem.u0 = problem.u0.scaled(pt.u0.unwrap_or(1.0));
        let n = pt.n.unwrap_or(self.grid.n);
        let horizon = pt.horizon.unwrap_or(self.horizon);
        let mut cfg = RunConfig::new(&point_name(&self.name, pt), problem, n, horizon);
        cfg.control = pt.err_tol.map_or(self.control, |tol| self.control.with_err_tol(tol));
        cfg.output.csv = false;
        cfg
    }
}

fn point_name(sweep: &str, pt: &SweepPoint) -> String {
    let f = |tag: &str, v: Option<f64>| v.map(|x| format!("_{tag}{x}")).unwrap_or_default();
    format!("{sweep}{}{}{}{}{}", f("p", pt.p), f("l", pt.l), f("c", pt.c), f("k", pt.k), f("u", pt.u0))
}

/// Whether an observed outcome agrees with the prediction; `None` when the
/// prediction is `Unknown` or the run failed.
///
/// Blow-up contradicts only `GlobalAllData`. Reaching the horizon is
/// consistent with every global verdict and contradicts only
/// `AllNontrivialBlowUp` when the horizon exceeds a known blow-up time bound.
pub fn consistent(prediction: &RegimePrediction, observed: Option<OutcomeKind>, horizon: f64) -> Option<bool> {
    let observed = observed?;
    match (prediction.verdict, observed) {
        (Verdict::Unknown, _) => None,
        (Verdict::GlobalAllData, OutcomeKind::BlowUp) => Some(false),
        (_, OutcomeKind::BlowUp) => Some(true),
        (Verdict::AllNontrivialBlowUp, OutcomeKind::GlobalToHorizon) => {
            Some(prediction.blow_up_time_bound.is_none_or(|t| horizon < t))
        }
        (_, OutcomeKind::GlobalToHorizon) => Some(true),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStatus {
    pub index: usize,
    pub name: String,
    pub p: f64,
    pub l: f64,
    pub c: f64,
    pub k: f64,
    pub u0_scale: f64,
    pub verdict: Verdict,
    pub observed: Option<OutcomeKind>,
    pub t_end: Option<f64>,
    pub t_star: Option<f64>,
    pub consistent: Option<bool>,
    pub error: Option<String>,
    pub record: Option<PathBuf>,
    pub trajectory_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub verdict: Verdict,
    pub global_to_horizon: usize,
    pub blow_up: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepManifest {
    pub name: String,
    pub points: Vec<PointStatus>,
    pub agreement: Vec<AgreementRow>,
    pub compared: usize,
    pub agreeing: usize,
    /// Indices of points whose outcome contradicts the prediction.
    pub contradictions: Vec<usize>,
    pub failures: Vec<usize>,
}

impl SweepManifest {
    fn build(name: &str, points: Vec<PointStatus>) -> Self {
        let mut agreement: Vec<AgreementRow> = Vec::new();
        for pt in &points {
            let row = match agreement.iter_mut().find(|r| r.verdict == pt.verdict) {
                Some(r) => r,
                None => {
                    agreement.push(AgreementRow { verdict: pt.verdict, global_to_horizon: 0, blow_up: 0, failed: 0 });
                    agreement.last_mut().unwrap()
                }
            };
            match pt.observed {
                Some(OutcomeKind::GlobalToHorizon) => row.global_to_horizon += 1,
                Some(OutcomeKind::BlowUp) => row.blow_up += 1,
                None => row.failed += 1,
            }
        }
        agreement.sort_by_key(|r| r.verdict);
        let compared = points.iter().filter(|p| p.consistent.is_some()).count();
        let agreeing = points.iter().filter(|p| p.consistent == Some(true)).count();
        let contradictions = points.iter().filter(|p| p.consistent == Some(false)).map(|p| p.index).collect();
        let failures = points.iter().filter(|p| p.error.is_some()).map(|p| p.index).collect();
        SweepManifest { name: name.to_string(), points, agreement, compared, agreeing, contradictions, failures }
    }
}

fn run_point(index: usize, pt: &SweepPoint, cfg: RunConfig, out: Option<&Path>) -> PointStatus {
    let spec = cfg.spec();
    let prediction = spec.as_ref().map(crate::problem::classify_spec).ok();
    let mut status = PointStatus {
        index,
        name: cfg.name.clone(),
        p: cfg.problem.p,
        l: cfg.problem.l,
        c: cfg.problem.c.amplitude,
        k: cfg.problem.k.amplitude,
        u0_scale: pt.u0.unwrap_or(1.0),
        verdict: prediction.as_ref().map_or(Verdict::Unknown, |p| p.verdict),
        observed: None,
        t_end: None,
        t_star: None,
        consistent: None,
        error: None,
        record: None,
        trajectory_hash: None,
    };
    match execute(&cfg) {
        Ok(exec) => {
            let o = &exec.record.outcome;
            status.observed = Some(o.kind);
            status.t_end = Some(o.t_end);
            status.t_star = o.t_star_estimate;
            status.consistent = consistent(&exec.record.prediction, Some(o.kind), cfg.horizon);
            status.trajectory_hash = Some(exec.record.trajectory_hash.clone());
            if let Some(dir) = out {
                match write_outputs(&exec, dir) {
                    Ok((json, _)) => status.record = Some(json),
                    Err(e) => status.error = Some(e.to_string()),
                }
            }
        }
        Err(e) => status.error = Some(e.to_string()),
    }
    status
}

/// Runs every point of `plan` on `parallelism` workers. Results are ordered
/// by point index and do not depend on scheduling. With `out`, per-point
/// records and `manifest.json` are written there.
pub fn run_sweep(plan: &SweepPlan, parallelism: usize, out: Option<&Path>) -> Result<SweepManifest, HarnessError> {
    let points = plan.expand();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::Internal(e.to_string()))?;
    let statuses: Vec<PointStatus> = pool.install(|| {
        points.par_iter().enumerate().map(|(i, pt)| run_point(i, pt, plan.resolve(pt), out)).collect()
    });
    let manifest = SweepManifest::build(&plan.name, statuses);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Internal(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), text).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(manifest)
}

/// The 18-point phase sweep: `p, l ∈ {0.5, 1, 2}`, `c ≡ k ≡ 1`, `u0 ∈ {1, 50}`.
pub fn phase_plan(n: usize, horizon: f64) -> SweepPlan {
    SweepPlan {
        schema_version: SCHEMA_VERSION,
        name: "phase".to_string(),
        horizon,
        base: ProblemConfig::constant(1.0, 1.0, 1.0, 1.0, 1.0),
        grid: GridConfig { n },
        control: StepControl::default(),
        axes: SweepAxes { p: vec![0.5, 1.0, 2.0], l: vec![0.5, 1.0, 2.0], c: vec![], k: vec![], u0: vec![1.0, 50.0] },
        points: vec![],
    }
}
