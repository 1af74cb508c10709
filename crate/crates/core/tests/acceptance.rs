//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the report is printed even when every
//! criterion passes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nlheat::certificates::{
    build_boundary_layer_supersolution, build_eigen_supersolution, build_ode_bound, build_psi_profile_subsolution,
    build_traveling_subsolution, check_certificate, sandwich_test, small_data_f, small_data_threshold, solve_eigenpair,
    Certificate, CertificateError, CertificateKind, Direction, Inequality, OdeBoundKind, Profile,
};
use nlheat::discretization::{discrete_laplacian, Grid};
use nlheat::harness::convergence::{spatial_study, temporal_study};
use nlheat::harness::sweep::{run_sweep, SweepPlan};
use nlheat::monitors::{localization_monitor, rate_monitor, track, LocalizationThresholds, terminal_resolution};
use nlheat::problem::{blowup_time_bound, CoefficientDescriptor, InitialDatum, ProblemSpec, TimeProfile};
use nlheat::timestepper::{run, OutcomeKind, RunOutcome, StepControl};

type Verdict = Result<String, String>;

fn control(err_tol: f64) -> StepControl {
    StepControl::default().with_err_tol(err_tol)
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Σ w_i (Δ_h u)_i = g0 + gL for random states and fluxes.
fn green_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(8..400);
        let grid = Grid::new(n, rng.gen_range(0.1..10.0));
        let u: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let (g0, gl) = (rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        let lap = discrete_laplacian(&u, g0, gl, &grid);
        let lhs = grid.integrate(&lap);
        let scale = lap.iter().zip(grid.weights()).map(|(v, w)| (v * w).abs()).sum::<f64>().max((g0 + gl).abs());
        worst = worst.max((lhs - (g0 + gl)).abs() / scale);
    }
    check(worst <= 1e-12, format!("100 random states, worst relative defect {worst:.2e}"))
}

fn convergence() -> Verdict {
    let s = spatial_study(&[100, 200, 400], 0.1);
    let t = temporal_study(32, &[400, 800, 1600, 3200], 0.1);
    let ok = s.orders.iter().all(|o| (1.8..=2.2).contains(o)) && t.orders.iter().all(|o| (0.8..=1.2).contains(o));
    check(ok, format!("spatial orders {:.3?}, temporal orders {:.3?}", s.orders, t.orders))
}

/// Global existence for `l ≤ 1` or `p ≥ l`, with the eigen supersolution
/// above every `l ≤ 1` run.
fn global_existence() -> Verdict {
    let cases: Vec<(f64, f64, f64)> =
        [(0.5, 0.5), (2.0, 1.5), (3.0, 1.2)].iter().flat_map(|&(p, l)| [(p, l, 1.0), (p, l, 50.0)]).collect();
    let results: Vec<(bool, String)> = cases
        .par_iter()
        .map(|&(p, l, u0)| {
            let spec = ProblemSpec::constant(p, l, 1.0, 1.0, u0, 1.0);
            let grid = Grid::new(100, 1.0);
            let out = match run(&spec, &grid, &control(1e-8), 10.0) {
                Ok(o) => o,
                Err(e) => return (false, format!("({p},{l},{u0}): {e}")),
            };
            let mut ok = out.kind == OutcomeKind::GlobalToHorizon;
            let mut note = format!("({p},{l},u0={u0}) {:?} max {:.3}", out.kind, out.final_state.max());
            if l <= 1.0 {
                match build_eigen_supersolution(&spec, &solve_eigenpair(&grid), 10.0) {
                    Ok(cert) => {
                        let r = sandwich_test(None, Some(&cert), &out.trajectory, &grid);
                        ok &= r.pass && r.snapshots_checked > 0;
                        note += &format!(" sandwich {}", if r.pass { "ok" } else { "violated" });
                    }
                    Err(e) => {
                        ok = false;
                        note += &format!(" eigen: {e}");
                    }
                }
            }
            (ok, note)
        })
        .collect();
    check(results.iter().all(|r| r.0), results.into_iter().map(|r| r.1).collect::<Vec<_>>().join("; "))
}

struct BlowUpRun {
    spec: ProblemSpec,
    grid: Grid,
    out: RunOutcome,
}

fn blowup_runs() -> Vec<Result<BlowUpRun, String>> {
    let cases: Vec<(f64, f64, usize)> =
        [(0.5, 2.0), (1.0, 2.0), (1.5, 3.0)].iter().flat_map(|&(p, l)| [(p, l, 400), (p, l, 800)]).collect();
    cases
        .par_iter()
        .map(|&(p, l, n)| {
            let spec = ProblemSpec::constant(p, l, 1.0, 1.0, 50.0, 1.0);
            let grid = Grid::new(n, 1.0);
            let out = run(&spec, &grid, &control(1e-8), 1.0).map_err(|e| format!("({p},{l}) n={n}: {e}"))?;
            Ok(BlowUpRun { spec, grid, out })
        })
        .collect()
}

fn t_star(r: &BlowUpRun) -> f64 {
    r.out.t_star_estimate.unwrap_or(r.out.t_end)
}

fn label(r: &BlowUpRun) -> String {
    format!("({},{}) n={}", r.spec.p, r.spec.l, r.grid.n())
}

/// Blow-up for `l > max(1, p)`, above the ODE subsolution, with converging
/// blow-up time.
fn blowup(runs: &[Result<BlowUpRun, String>]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                notes.push(e.clone());
                continue;
            }
        };
        ok &= r.out.is_blow_up();
        let kind = if r.spec.p <= 1.0 {
            OdeBoundKind::SubLowP { amplitude: None, horizon: r.out.t_end }
        } else {
            OdeBoundKind::SubPowerLaw { horizon: r.out.t_end }
        };
        match build_ode_bound(&r.spec, kind) {
            Ok(w) => {
                let s = sandwich_test(Some(&w), None, &r.out.trajectory, &r.grid);
                let last = &r.out.final_state;
                let tol = 1e-6 + r.grid.h().powi(2) * last.max();
                let last_ok = r.grid.nodes().iter().zip(&last.u).all(|(&x, &u)| u >= w.evaluate(x, last.t) - tol);
                ok &= s.pass && last_ok;
                if !(s.pass && last_ok) {
                    notes.push(format!("{} below w(t)", label(r)));
                }
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{}: {e}", label(r)));
            }
        }
    }
    for pair in runs.chunks(2) {
        if let [Ok(a), Ok(b)] = pair {
            let inc = (t_star(b) - t_star(a)).abs() / t_star(b);
            ok &= inc <= 0.05;
            notes.push(format!("({},{}) t* {:.6e} -> {:.6e} increment {:.2}%", a.spec.p, a.spec.l, t_star(a), t_star(b), 100.0 * inc));
        }
    }
    check(ok, notes.join("; "))
}

/// Observed blow-up time below the analytic bound for `c ≡ 0`, `p = 1`, `l = 2`.
fn time_bound() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (u0, expected) in [(1.0, 0.5), (2.0, 0.25)] {
        let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 1.0, u0, 1.0);
        let bound = blowup_time_bound(&spec, spec.u0.mass(1.0)).unwrap_or(f64::NAN);
        let out = run(&spec, &Grid::new(400, 1.0), &control(1e-8), 1.0);
        match out {
            Ok(o) if o.is_blow_up() => {
                let t = o.t_star_estimate.unwrap_or(o.t_end);
                ok &= (bound - expected).abs() < 1e-12 && t <= bound;
                notes.push(format!("u0={u0}: t* {t:.6} <= T {bound:.6}"));
            }
            other => {
                ok = false;
                notes.push(format!("u0={u0}: no blow-up ({other:?})"));
            }
        }
    }
    check(ok, notes.join("; "))
}

/// Small data with `p = 1 < l` decay: global, max u non-increasing once the
/// first 5% of the horizon has passed.
fn small_data_decay() -> Verdict {
    let spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 0.01, 1.0);
    let out = match run(&spec, &Grid::new(100, 1.0), &control(1e-8), 20.0) {
        Ok(o) => o,
        Err(e) => return Err(e.to_string()),
    };
    let tail: Vec<f64> = out.trajectory.samples.iter().filter(|s| s.t >= 1.0).map(|s| s.max_u).collect();
    let rises = tail.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
    check(
        out.kind == OutcomeKind::GlobalToHorizon && rises == 0 && tail.len() > 100,
        format!("{:?}, max u {:.3e} -> {:.3e}, {rises} rises in {} samples", out.kind, tail[0], tail[tail.len() - 1], tail.len()),
    )
}

/// Small data for `p < 1 < l`: below the ψf supersolution, which vanishes
/// from τ on.
fn small_data_certificate() -> Verdict {
    let (tau, a, horizon) = (1.0, 0.25, 2.0);
    let kind = OdeBoundKind::SuperSmallData { tau, additive_constant: a, horizon };
    let base = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
    let probe = build_ode_bound(&base.clone().with_u0(InitialDatum::Constant(0.0)), kind).map_err(|e| e.to_string())?;
    let f0 = probe.constant("f0").unwrap_or(f64::NAN);
    let spec = base.with_u0(InitialDatum::PsiProfile { additive_constant: a, scale: 0.5 * f0 });
    let cert = build_ode_bound(&spec, kind).map_err(|e| e.to_string())?;
    let grid = Grid::new(400, 1.0);
    let residual = check_certificate(&cert, &spec, &grid, cert.window, Direction::Super);
    let out = run(&spec, &grid, &control(1e-8), horizon).map_err(|e| e.to_string())?;
    let sandwich = sandwich_test(None, Some(&cert), &out.trajectory, &grid);

    let c = |k: &str| cert.constant(k).unwrap_or(f64::NAN);
    let (f0, c0, b) = (c("f0"), c("c0"), c("b"));
    let threshold = small_data_threshold(c0, b, 0.5, tau);
    let vanishes = (0..=100).map(|i| tau + (horizon - tau) * i as f64 / 100.0).all(|t| small_data_f(t, f0, c0, b, 0.5) == 0.0);
    let ok = out.kind == OutcomeKind::GlobalToHorizon
        && residual.pass
        && sandwich.pass
        && f0 < threshold
        && c("extinction_time") <= tau
        && vanishes;
    check(
        ok,
        format!(
            "{:?}, f0 {f0:.4e} < threshold {threshold:.4e}, extinction at {:.4}, residual {}, sandwich {} over {} snapshots",
            out.kind,
            c("extinction_time"),
            if residual.pass { "ok" } else { "violated" },
            if sandwich.pass { "ok" } else { "violated" },
            sandwich.snapshots_checked
        ),
    )
}

fn resolution(r: &BlowUpRun) -> f64 {
    terminal_resolution(&r.out)
}

/// `Q = J (t* − t)^{1/(l−1)}` shows no increasing trend in the final decade.
fn rate_bound(runs: &[Result<BlowUpRun, String>]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs.iter().flatten().filter(|r| r.out.is_blow_up()) {
        let series = track(&r.out.trajectory, &r.spec, &r.grid, None);
        match rate_monitor(&series, t_star(r), r.spec.l, resolution(r)) {
            Ok(rep) => {
                ok &= rep.bounded;
                notes.push(format!("{} Z={:.2} over {} samples", label(r), rep.trend.z, rep.window.len()));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{}: {e}", label(r)));
            }
        }
    }
    check(ok && !notes.is_empty(), notes.join("; "))
}

/// Interior stays bounded while the boundary blows up.
fn localization(runs: &[Result<BlowUpRun, String>]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs.iter().flatten().filter(|r| r.out.is_blow_up()) {
        let series = track(&r.out.trajectory, &r.spec, &r.grid, None);
        match localization_monitor(&series, &r.spec, t_star(r), resolution(r), &LocalizationThresholds::default()) {
            Ok(rep) => {
                let ratio = rep.interior_max / rep.boundary_max;
                ok &= ratio <= 0.1 && rep.envelope_bounded;
                notes.push(format!("{} interior/boundary {ratio:.1e} c1 {:.3e}", label(r), rep.envelope_c1));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{}: {e}", label(r)));
            }
        }
    }
    check(ok && !notes.is_empty(), notes.join("; "))
}

/// Every builder certificate verifies; three broken ones fail at the right place.
fn certificate_self_validation() -> Verdict {
    let grid = Grid::new(100, 1.0);
    let mut built: Vec<(String, ProblemSpec, Result<Certificate, CertificateError>)> = Vec::new();
    let mut push = |name: &str, spec: &ProblemSpec, cert| built.push((name.to_string(), spec.clone(), cert));

    let mut growing_k = ProblemSpec::constant(0.5, 0.8, 1.0, 1.0, 2.0, 1.0);
    growing_k.k = CoefficientDescriptor::from_profile(TimeProfile::exponential(1.0, 0.5));
    for spec in [ProblemSpec::constant(0.5, 0.5, 1.0, 1.0, 1.0, 1.0), growing_k] {
        push("eigen", &spec, build_eigen_supersolution(&spec, &solve_eigenpair(&grid), 2.0));
    }
    for (p, l) in [(3.0, 2.0), (2.0, 1.5)] {
        let spec = ProblemSpec::constant(p, l, 1.0, 1.0, 1.0, 1.0);
        push("boundary layer", &spec, build_boundary_layer_supersolution(&spec, 2.0));
    }
    let sub_low = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 1.0, 1.0);
    push("ode sub p<1", &sub_low, build_ode_bound(&sub_low, OdeBoundKind::SubLowP { amplitude: None, horizon: 2.0 }));
    let sub_pow = ProblemSpec::constant(1.5, 3.0, 1.0, 1.0, 1.0, 1.0);
    push("ode sub p>1", &sub_pow, build_ode_bound(&sub_pow, OdeBoundKind::SubPowerLaw { horizon: 2.0 }));
    let small = ProblemSpec::constant(0.5, 2.0, 1.0, 1.0, 1.0, 1.0).with_u0(InitialDatum::Constant(0.0));
    let kind = OdeBoundKind::SuperSmallData { tau: 1.0, additive_constant: 0.25, horizon: 2.0 };
    push("small data", &small, build_ode_bound(&small, kind));
    let ratio = ProblemSpec::constant(2.0, 3.0, 1.0, 1.0, 0.01, 1.0);
    push("bounded ratio", &ratio, build_ode_bound(&ratio, OdeBoundKind::SuperBoundedRatio { horizon: 5.0 }));
    let psi = ProblemSpec::constant(2.0, 3.0, 1.0, 1.0, 1.0, 1.0);
    push("psi sub", &psi, build_psi_profile_subsolution(&psi, 2.0));
    for (p, l) in [(0.5, 2.0), (1.5, 3.0)] {
        let spec = ProblemSpec::constant(p, l, 1.0, 1.0, 1e4, 1.0);
        push("collar", &spec, build_traveling_subsolution(&spec, 0.0, |_| 1e4));
    }

    let mut ok = true;
    let mut notes = Vec::new();
    for (name, spec, cert) in &built {
        let cert = match cert {
            Ok(c) => c,
            Err(e) => {
                ok = false;
                notes.push(format!("{name} not built: {e}"));
                continue;
            }
        };
        let r = check_certificate(cert, spec, &grid, cert.window, cert.direction);
        if !r.pass {
            ok = false;
            notes.push(format!("{name} failed: {:?}", r.worst));
        }
    }
    notes.push(format!("{} builder certificates verified", built.len()));

    // wrong sign: e^t offered as a subsolution of pure decay
    let spec = ProblemSpec::constant(1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
    let cert = Certificate::new(CertificateKind::OdeSub, Direction::Sub, Profile::Exponential { amplitude: 1.0, rate: 1.0 }, (0.0, 1.0));
    let r = check_certificate(&cert, &spec, &grid, cert.window, Direction::Sub);
    let sign_ok = !r.pass && r.worst.is_some_and(|w| w.inequality == Inequality::Interior && w.t == 1.0);
    notes.push(format!("wrong sign -> {:?}", r.worst.map(|w| (w.inequality, w.x, w.t))));

    // wrong constant: a below its lower bound for k ≡ 5
    let spec = ProblemSpec::constant(1.0, 1.0, 1.0, 5.0, 1.0, 1.0);
    let mut cert = build_eigen_supersolution(&spec, &solve_eigenpair(&grid), 1.0).map_err(|e| e.to_string())?;
    if let Profile::Eigen { ref mut a, .. } = cert.profile {
        *a = 0.5;
    }
    let r = check_certificate(&cert, &spec, &grid, cert.window, Direction::Super);
    let constant_ok = !r.pass && r.worst.is_some_and(|w| w.inequality == Inequality::Boundary && (w.x == 0.0 || w.x == 1.0));
    notes.push(format!("wrong constant -> {:?}", r.worst.map(|w| (w.inequality, w.x, w.t))));

    // wrong window: built for k = e^t on [0, 1], checked on [0, 3]
    let mut spec = ProblemSpec::constant(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    spec.k = CoefficientDescriptor::from_profile(TimeProfile::exponential(1.0, 1.0));
    let cert = build_eigen_supersolution(&spec, &solve_eigenpair(&grid), 1.0).map_err(|e| e.to_string())?;
    let inside = check_certificate(&cert, &spec, &grid, (0.0, 1.0), Direction::Super).pass;
    let r = check_certificate(&cert, &spec, &grid, (0.0, 3.0), Direction::Super);
    let window_ok = inside && !r.pass && r.worst.is_some_and(|w| w.inequality == Inequality::Boundary && w.t > 1.0);
    notes.push(format!("wrong window -> {:?}", r.worst.map(|w| (w.inequality, w.x, w.t))));

    check(ok && sign_ok && constant_ok && window_ok, notes.join("; "))
}

/// The bundled 18-point phase sweep has no contradictions.
fn classifier_audit() -> Verdict {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/phase_sweep.toml");
    let plan = SweepPlan::load(&path).map_err(|e| e.to_string())?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let m = run_sweep(&plan, jobs, None).map_err(|e| e.to_string())?;
    check(
        m.points.len() == 18 && m.contradictions.is_empty() && m.failures.is_empty(),
        format!(
            "{} points, {} compared, {} agree, contradictions {:?}, failures {:?}",
            m.points.len(),
            m.compared,
            m.agreeing,
            m.contradictions,
            m.failures
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters from libtest do not apply here
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let runs = blowup_runs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + Sync + '_>)> = vec![
        ("1 discrete Green identity", Box::new(green_identity)),
        ("2 convergence orders", Box::new(convergence)),
        ("3 global existence and eigen sandwich", Box::new(global_existence)),
        ("4 blow-up, ODE subsolution, t* increment", Box::new(|| blowup(&runs))),
        ("5 blow-up time bound", Box::new(time_bound)),
        ("6 small-data decay", Box::new(small_data_decay)),
        ("7 small-data certificate", Box::new(small_data_certificate)),
        ("8 blow-up rate", Box::new(|| rate_bound(&runs))),
        ("9 boundary localization", Box::new(|| localization(&runs))),
        ("10 certificate self-validation", Box::new(certificate_self_validation)),
        ("11 classifier audit", Box::new(classifier_audit)),
    ];
    let results: Vec<(Verdict, f64)> = criteria
        .par_iter()
        .map(|(_, f)| {
            let t = Instant::now();
            (f(), t.elapsed().as_secs_f64())
        })
        .collect();
    let mut failed = 0;
    for ((name, _), (verdict, secs)) in criteria.iter().zip(&results) {
        match verdict {
            Ok(d) => println!("PASS  {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", criteria.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
