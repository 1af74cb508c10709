//! Executing a configuration: run, monitors, certificates, and the persisted
//! JSON record plus CSV series.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{CertificateRequest, ConfigError, RunConfig, SCHEMA_VERSION};
use super::HarnessError;
use crate::certificates::{
    build_boundary_layer_supersolution, build_eigen_supersolution, build_ode_bound, build_psi_profile_subsolution,
    build_traveling_subsolution, check_certificate, collar_comparison, sandwich_test, solve_eigenpair, Certificate,
    CertificateError, CollarReport, Direction, OdeBoundKind, ResidualReport, SandwichReport,
};
use crate::discretization::Grid;
use crate::monitors::{
    self, jensen_check, kaplan_check, localization_monitor, mass_identity, rate_monitor, FunctionalSeries, JensenReport,
    KaplanReport, LocalizationReport, LocalizationThresholds, MassReport, RateReport,
};
use crate::problem::{self, classify_spec, ProblemSpec, RegimePrediction, ValidationReport};
use crate::timestepper::{run, BlowUpLocation, OutcomeKind, RunOutcome, RunStats, Trajectory};

/// One CSV row; column names are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    #[serde(rename = "maxU")]
    pub max_u: f64,
    #[serde(rename = "uLeft")]
    pub u_left: f64,
    #[serde(rename = "uRight")]
    pub u_right: f64,
    #[serde(rename = "interiorMax")]
    pub interior_max: f64,
    #[serde(rename = "U")]
    pub mass: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub dt: f64,
}

pub fn series_rows(traj: &Trajectory) -> Vec<SeriesRow> {
    traj.samples
        .iter()
        .map(|s| SeriesRow {
            t: s.t,
            max_u: s.max_u,
            u_left: s.u_left,
            u_right: s.u_right,
            interior_max: s.interior_max,
            mass: s.mass,
            j: s.j,
            dt: s.dt,
        })
        .collect()
}

pub fn write_csv(path: &Path, rows: &[SeriesRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Io(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn read_csv(path: &Path) -> Result<Vec<SeriesRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Io(e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| HarnessError::Io(e.to_string()))).collect()
}

/// Keeps at most `max_rows` rows, evenly spaced by index, always including
/// the first and last.
pub fn downsample(rows: &[SeriesRow], max_rows: usize) -> Vec<SeriesRow> {
    if rows.len() <= max_rows || max_rows < 2 {
        return rows.to_vec();
    }
    let last = rows.len() - 1;
    let mut idx: Vec<usize> = (0..max_rows).map(|i| i * last / (max_rows - 1)).collect();
    idx.dedup();
    idx.into_iter().map(|i| rows[i]).collect()
}

/// SHA-256 over the bit patterns of every sample and the final state.
pub fn trajectory_hash(outcome: &RunOutcome) -> String {
    let mut h = Sha256::new();
    for s in &outcome.trajectory.samples {
        for v in [s.t, s.max_u, s.u_left, s.u_right, s.interior_max, s.mass, s.j, s.dt] {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.update(outcome.final_state.t.to_bits().to_le_bytes());
    for v in &outcome.final_state.u {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub kind: OutcomeKind,
    pub t_end: f64,
    pub t_star_estimate: Option<f64>,
    pub rate_exponent: Option<f64>,
    pub estimator_gap: Option<f64>,
    pub location: Option<BlowUpLocation>,
    pub final_max: f64,
    pub stats: RunStats,
}

impl OutcomeSummary {
    fn of(o: &RunOutcome) -> Self {
        OutcomeSummary {
            kind: o.kind,
            t_end: o.t_end,
            t_star_estimate: o.t_star_estimate,
            rate_exponent: o.rate_exponent,
            estimator_gap: o.estimator_gap,
            location: o.location,
            final_max: o.final_state.max(),
            stats: o.stats,
        }
    }
}

/// A monitor result or the reason it did not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitored<T> {
    Report(T),
    Skipped(String),
}

impl<T> Monitored<T> {
    pub fn report(&self) -> Option<&T> {
        match self {
            Monitored::Report(r) => Some(r),
            Monitored::Skipped(_) => None,
        }
    }
}

impl<T, E: std::fmt::Display> From<Result<T, E>> for Monitored<T> {
    fn from(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Monitored::Report(v),
            Err(e) => Monitored::Skipped(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorSummary {
    pub mass: MassReport,
    pub jensen: JensenReport,
    pub kaplan: Monitored<KaplanReport>,
    pub rate: Monitored<RateReport>,
    pub localization: Monitored<LocalizationReport>,
}

pub fn run_monitors(series: &FunctionalSeries, spec: &ProblemSpec, outcome: &RunOutcome, cfg: &RunConfig) -> MonitorSummary {
    fn not_blow_up<T>() -> Monitored<T> {
        Monitored::Skipped("run did not blow up".to_string())
    }
    let blow_up = outcome.t_star_estimate.filter(|_| outcome.is_blow_up());
    let resolution = monitors::terminal_resolution(outcome);
    MonitorSummary {
        mass: mass_identity(series),
        jensen: jensen_check(series),
        kaplan: kaplan_check(series, spec).into(),
        rate: match blow_up {
            Some(t_star) if spec.l > 1.0 => rate_monitor(series, t_star, spec.l, resolution).into(),
            Some(_) => Monitored::Skipped("rate bound needs l > 1".to_string()),
            None => not_blow_up(),
        },
        localization: match blow_up {
            Some(t_star) => {
                let th = LocalizationThresholds { ratio: cfg.monitors.localization_ratio, cap_fraction: 1e-2, u_cap: cfg.control.u_cap };
                localization_monitor(series, spec, t_star, resolution, &th).into()
            }
            None => not_blow_up(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub request: CertificateRequest,
    pub certificate: Option<Certificate>,
    pub error: Option<String>,
    pub residual: Option<ResidualReport>,
    pub sandwich: Option<SandwichReport>,
    pub collar: Option<CollarReport>,
}

impl CertificateReport {
    /// Built, verified, and consistent with the run where compared.
    pub fn pass(&self) -> bool {
        self.residual.as_ref().is_some_and(|r| r.pass)
            && self.sandwich.as_ref().is_none_or(|s| s.pass)
            && self.collar.as_ref().is_none_or(|c| c.pass())
    }
}

/// The builders whose hypotheses match `(p, l)`.
pub fn auto_requests(p: f64, l: f64) -> Vec<CertificateRequest> {
    use CertificateRequest::*;
    let mut out = Vec::new();
    if l <= 1.0 {
        out.push(Eigen);
    }
    if p <= 1.0 || (l > p && p > 1.0) {
        out.push(OdeSub);
    }
    if l > 1.0 && l <= p {
        out.push(BoundaryLayer);
    }
    if l > p && p > 1.0 {
        out.push(BoundedRatio);
    }
    if l > 1.0 && (p <= 1.0 || l >= p) {
        out.push(Traveling);
    }
    out
}

fn build(
    spec: &ProblemSpec,
    grid: &Grid,
    req: CertificateRequest,
    horizon: f64,
    traj: Option<&Trajectory>,
) -> Result<Certificate, CertificateError> {
    let (p, l) = (spec.p, spec.l);
    match req {
        CertificateRequest::Auto => unreachable!("expanded before building"),
        CertificateRequest::Eigen => build_eigen_supersolution(spec, &solve_eigenpair(grid), horizon),
        CertificateRequest::BoundaryLayer => build_boundary_layer_supersolution(spec, horizon),
        CertificateRequest::OdeSub if p <= 1.0 => build_ode_bound(spec, OdeBoundKind::SubLowP { amplitude: None, horizon }),
        CertificateRequest::OdeSub => build_ode_bound(spec, OdeBoundKind::SubPowerLaw { horizon }),
        CertificateRequest::SmallData { tau, additive_constant } => {
            build_ode_bound(spec, OdeBoundKind::SuperSmallData { tau, additive_constant, horizon })
        }
        CertificateRequest::BoundedRatio => build_ode_bound(spec, OdeBoundKind::SuperBoundedRatio { horizon }),
        CertificateRequest::PsiSub { span } => build_psi_profile_subsolution(spec, span),
        CertificateRequest::Traveling => {
            if l <= 1.0 {
                return Err(CertificateError::HypothesisNotMet("collar subsolution needs l > 1".into()));
            }
            let Some(traj) = traj else {
                let level = spec.u0.range(spec.length()).0;
                return build_traveling_subsolution(spec, 0.0, |_| level);
            };
            // start from the first stored state high enough on its collars
            let len = grid.length();
            let mut last = None;
            for snap in &traj.snapshots {
                let level = |gamma: f64| {
                    grid.nodes()
                        .iter()
                        .zip(&snap.u)
                        .filter(|(&x, _)| x.min(len - x) <= gamma)
                        .fold(f64::INFINITY, |m, (_, &u)| m.min(u))
                };
                match build_traveling_subsolution(spec, snap.t, level) {
                    Ok(cert) => return Ok(cert),
                    Err(e @ CertificateError::HypothesisNotMet(_)) => return Err(e),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.unwrap_or_else(|| CertificateError::Infeasible("no stored states".into())))
        }
    }
}

/// Builds, verifies, and (when a trajectory is given) compares each requested
/// certificate on `[0, horizon]`.
pub fn certify(
    spec: &ProblemSpec,
    grid: &Grid,
    horizon: f64,
    requests: &[CertificateRequest],
    traj: Option<&Trajectory>,
) -> Vec<CertificateReport> {
    let mut expanded = Vec::new();
    for &r in requests {
        if r == CertificateRequest::Auto {
            expanded.extend(auto_requests(spec.p, spec.l));
        } else {
            expanded.push(r);
        }
    }
    expanded.dedup();
    expanded
        .into_iter()
        .map(|req| match build(spec, grid, req, horizon, traj) {
            Err(e) => CertificateReport { request: req, certificate: None, error: Some(e.to_string()), residual: None, sandwich: None, collar: None },
            Ok(cert) => {
                let residual = check_certificate(&cert, spec, grid, cert.window, cert.direction);
                let (mut sandwich, mut collar) = (None, None);
                if let Some(traj) = traj {
                    if req == CertificateRequest::Traveling {
                        collar = Some(collar_comparison(&cert, traj, grid));
                    } else {
                        sandwich = Some(match cert.direction {
                            Direction::Super => sandwich_test(None, Some(&cert), traj, grid),
                            Direction::Sub => sandwich_test(Some(&cert), None, traj, grid),
                        });
                    }
                }
                CertificateReport { request: req, certificate: Some(cert), error: None, residual: Some(residual), sandwich, collar }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub wall_clock_seconds: f64,
    pub samples: usize,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: RunConfig,
    pub validation: ValidationReport,
    pub prediction: RegimePrediction,
    pub outcome: OutcomeSummary,
    pub series: Vec<SeriesRow>,
    pub monitors: MonitorSummary,
    pub certificates: Vec<CertificateReport>,
    pub metrics: Metrics,
    pub trajectory_hash: String,
}

/// Everything [`execute`] produces, including the full trajectory that the
/// record only summarizes.
#[derive(Debug)]
pub struct Execution {
    pub record: RunRecord,
    pub outcome: RunOutcome,
    pub spec: ProblemSpec,
    pub grid: Grid,
}

pub fn execute(cfg: &RunConfig) -> Result<Execution, HarnessError> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let grid = cfg.grid();
    let validation = problem::validate(&spec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let prediction = classify_spec(&spec);

    let start = Instant::now();
    let outcome = run(&spec, &grid, &cfg.control, cfg.horizon)?;
    let wall = start.elapsed().as_secs_f64();

    let series = monitors::track(&outcome.trajectory, &spec, &grid, cfg.monitors.m);
    let monitors = run_monitors(&series, &spec, &outcome, cfg);
    let window = if outcome.is_blow_up() { outcome.t_end } else { cfg.horizon };
    let certificates = certify(&spec, &grid, window, &cfg.certificates, Some(&outcome.trajectory));

    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        validation,
        prediction,
        outcome: OutcomeSummary::of(&outcome),
        series: downsample(&series_rows(&outcome.trajectory), cfg.output.max_series_rows),
        monitors,
        certificates,
        metrics: Metrics {
            wall_clock_seconds: wall,
            samples: outcome.trajectory.samples.len(),
            accepted_steps: outcome.stats.accepted,
            rejected_steps: outcome.stats.rejected,
        },
        trajectory_hash: trajectory_hash(&outcome),
    };
    Ok(Execution { record, outcome, spec, grid })
}

/// Output root: explicit flag, then the config, then `NLHEAT_OUTPUT_DIR`,
/// then `./nlheat-out`.
pub fn output_root(flag: Option<&Path>, cfg: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.map(Path::to_path_buf))
        .or_else(|| std::env::var_os("NLHEAT_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("nlheat-out"))
}

/// Writes `<name>.json` and, when enabled, `<name>.csv` under `dir`.
pub fn write_outputs(exec: &Execution, dir: &Path) -> Result<(PathBuf, Option<PathBuf>), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let name = &exec.record.config.name;
    let json = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&exec.record).map_err(|e| HarnessError::Internal(e.to_string()))?;
    fs::write(&json, text).map_err(|e| HarnessError::Io(format!("{}: {e}", json.display())))?;
    let csv = if exec.record.config.output.csv {
        let path = dir.join(format!("{name}.csv"));
        write_csv(&path, &series_rows(&exec.outcome.trajectory))?;
        Some(path)
    } else {
        None
    };
    Ok((json, csv))
}

/// Re-executes the configuration stored in a record and compares hashes.
pub fn replay(record_path: &Path) -> Result<bool, HarnessError> {
    let text = fs::read_to_string(record_path).map_err(|e| HarnessError::Io(e.to_string()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| HarnessError::Io(e.to_string()))?;
    let cfg: RunConfig = serde_json::from_value(value["config"].clone()).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let expected = value["trajectory_hash"].as_str().unwrap_or_default();
    Ok(execute(&cfg)?.record.trajectory_hash == expected)
}
