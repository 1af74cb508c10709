//! `nlheat` command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::config::{CertificateRequest, ConfigError, ProblemConfig, RunConfig};
use super::convergence::convergence_suite;
use super::record::{certify, execute, output_root, write_outputs, CertificateReport};
use super::sweep::{run_sweep, SweepPlan};
use super::HarnessError;
use crate::problem::{classify_spec, ProblemSpec};

/// Exit code of `certify` when a certificate fails its checks.
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nlheat", version, about = "Heat equation with nonlinear absorption and nonlocal boundary flux")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write its record and CSV series.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory (default: config, then $NLHEAT_OUTPUT_DIR, then ./nlheat-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep on a worker pool.
    Sweep {
        plan: PathBuf,
        /// Worker threads (default: available cores).
        #[arg(long, short)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the regime from the hypotheses alone.
    Classify {
        /// Read the problem from a run config instead of flags.
        #[arg(long, conflicts_with_all = ["p", "l"])]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        p: Option<f64>,
        #[arg(long, required_unless_present = "config")]
        l: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
    },
    /// Build and verify certificates, optionally comparing them with a run.
    Certify {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Only verify the certificate inequalities; skip the numeric run.
        #[arg(long)]
        no_run: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement studies: spatial and temporal order, blow-up time increments.
    Converge {
        /// Skip the blow-up time refinement.
        #[arg(long)]
        no_blowup: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    /// Grid intervals.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Step-doubling error tolerance.
    #[arg(long)]
    err_tol: Option<f64>,
    /// Largest time step.
    #[arg(long)]
    dt_max: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(n) = self.n {
            cfg.grid.n = n;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(tol) = self.err_tol {
            cfg.control.err_tol = tol;
        }
        if let Some(dt) = self.dt_max {
            cfg.control.dt_max = dt;
        }
        cfg.validate()
    }
}

fn load(path: &std::path::Path, overrides: &Overrides) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Internal(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| HarnessError::Io(e.to_string()))
}

fn write_json<T: Serialize>(dir: &std::path::Path, name: &str, value: &T) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Internal(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn certificate_line(r: &CertificateReport) -> String {
    let status = if r.pass() { "pass" } else { "FAIL" };
    let detail = match (&r.error, &r.residual) {
        (Some(e), _) => e.clone(),
        (None, Some(res)) => format!("interior min {:.3e}, boundary min {:.3e}", res.interior_min, res.boundary_min),
        _ => String::new(),
    };
    format!("{status:4}  {:?}  {detail}", r.request)
}

fn dispatch(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run { config, overrides, out } => {
            let cfg = load(&config, &overrides)?;
            let exec = execute(&cfg)?;
            let dir = output_root(out.as_deref(), cfg.output.dir.as_deref());
            let (json, csv) = write_outputs(&exec, &dir)?;
            let o = &exec.record.outcome;
            println!("{}: {:?} at t = {:.6e}", cfg.name, o.kind, o.t_end);
            if let Some(t) = o.t_star_estimate {
                println!("  blow-up time estimate {t:.9e}, rate exponent {:?}, location {:?}", o.rate_exponent, o.location);
            }
            println!("  predicted {:?}", exec.record.prediction.verdict);
            for r in &exec.record.certificates {
                println!("  {}", certificate_line(r));
            }
            println!("  record {}", json.display());
            if let Some(csv) = csv {
                println!("  series {}", csv.display());
            }
            Ok(0)
        }
        Command::Sweep { plan, jobs, out } => {
            let plan = SweepPlan::load(&plan)?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let dir = output_root(out.as_deref(), None).join(&plan.name);
            let manifest = run_sweep(&plan, jobs, Some(&dir))?;
            for pt in &manifest.points {
                let observed = pt.observed.map_or_else(|| "failed".to_string(), |k| format!("{k:?}"));
                let flag = match pt.consistent {
                    Some(true) => "agree",
                    Some(false) => "CONTRADICTS",
                    None => "-",
                };
                println!(
                    "{:3}  p={:<4} l={:<4} c={:<4} k={:<4} u0x{:<5} {:22} {:16} {flag}",
                    pt.index, pt.p, pt.l, pt.c, pt.k, pt.u0_scale, format!("{:?}", pt.verdict), observed
                );
            }
            println!(
                "{} points, {} compared, {} agree, {} contradictions, {} failures; manifest {}",
                manifest.points.len(),
                manifest.compared,
                manifest.agreeing,
                manifest.contradictions.len(),
                manifest.failures.len(),
                dir.join("manifest.json").display()
            );
            Ok(0)
        }
        Command::Classify { config, p, l, c, k, u0, length } => {
            let spec: ProblemSpec = match config {
                Some(path) => RunConfig::load(&path)?.spec()?,
                None => {
                    let mut pc = ProblemConfig::constant(p.unwrap_or_default(), l.unwrap_or_default(), c, k, u0);
                    pc.length = length;
                    pc.spec()?
                }
            };
            crate::problem::validate(&spec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            print_json(&classify_spec(&spec))?;
            Ok(0)
        }
        Command::Certify { config, overrides, no_run, out } => {
            let mut cfg = load(&config, &overrides)?;
            if cfg.certificates.is_empty() {
                cfg.certificates.push(CertificateRequest::Auto);
            }
            let reports = if no_run {
                certify(&cfg.spec()?, &cfg.grid(), cfg.horizon, &cfg.certificates, None)
            } else {
                execute(&cfg)?.record.certificates
            };
            for r in &reports {
                println!("{}", certificate_line(r));
            }
            let dir = output_root(out.as_deref(), cfg.output.dir.as_deref());
            let path = write_json(&dir, &format!("{}.certificates.json", cfg.name), &reports)?;
            println!("report {}", path.display());
            Ok(if reports.iter().all(CertificateReport::pass) { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Converge { no_blowup, out } => {
            let specs: Vec<(String, ProblemSpec)> = if no_blowup {
                Vec::new()
            } else {
                [(0.5, 2.0), (1.0, 2.0), (1.5, 3.0)]
                    .iter()
                    .map(|&(p, l)| (format!("p={p} l={l} u0=50"), ProblemSpec::constant(p, l, 1.0, 1.0, 50.0, 1.0)))
                    .collect()
            };
            let report = convergence_suite(&specs, &[(200, 1e-5), (400, 1e-6), (800, 1e-7)]);
            for s in [&report.spatial, &report.temporal, &report.zero] {
                let errs: Vec<String> = s.levels.iter().map(|l| format!("{:.3e}", l.error)).collect();
                let orders: Vec<String> = s.orders.iter().map(|o| format!("{o:.3}")).collect();
                println!("{}: errors [{}] orders [{}]", s.name, errs.join(", "), orders.join(", "));
            }
            for (name, study) in &report.blowup {
                match study {
                    Ok(s) => {
                        let t: Vec<String> = s.levels.iter().map(|l| format!("{:.9e}", l.t_star)).collect();
                        let r: Vec<String> = s.relative_increments.iter().map(|d| format!("{d:.2e}")).collect();
                        println!("{name}: t* [{}] relative increments [{}]", t.join(", "), r.join(", "));
                    }
                    Err(e) => println!("{name}: {e}"),
                }
            }
            let dir = output_root(out.as_deref(), None);
            let path = write_json(&dir, "convergence.json", &report)?;
            println!("report {}", path.display());
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the verb. Returns the
/// process exit code: 0 success, 2 configuration or usage error, 3
/// non-convergence, 4 failed certificate check, 1 anything else.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
