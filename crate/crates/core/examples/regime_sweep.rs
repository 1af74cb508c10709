//! A small parameter sweep on a worker pool, comparing each observed outcome
//! with the regime predicted from the hypotheses.

use nlheat::harness::{run_sweep, SweepPlan};

const PLAN: &str = r#"
schema_version = 1
name = "small_phase"
horizon = 5.0

[base]
p = 1.0
l = 1.0
c = { amplitude = 1.0 }
k = { amplitude = 1.0 }
u0 = { kind = "constant", value = 1.0 }

[grid]
n = 50

[axes]
p = [0.5, 2.0]
l = [0.5, 2.0]
u0 = [1.0, 20.0]
"#;

fn main() {
    let plan = SweepPlan::from_toml_str(PLAN).expect("valid plan");
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let m = run_sweep(&plan, jobs, None).expect("sweep");
    for pt in &m.points {
        let observed = pt.observed.map_or("failed".to_string(), |k| format!("{k:?}"));
        println!(
            "p={:<4} l={:<4} u0 x{:<5} predicted {:22} observed {:16} consistent {:?}",
            pt.p, pt.l, pt.u0_scale, format!("{:?}", pt.verdict), observed, pt.consistent
        );
    }
    println!("{} compared, {} agree, contradictions {:?}", m.compared, m.agreeing, m.contradictions);
}
