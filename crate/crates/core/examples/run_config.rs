//! A run described in TOML: execute it, write the JSON record and CSV series,
//! then replay the record and compare trajectory hashes.

use nlheat::harness::{execute, replay, write_outputs, RunConfig};

const CONFIG: &str = r#"
schema_version = 1
name = "quadratic_flux"
horizon = 1.0

[problem]
p = 1.0
l = 2.0
c = { amplitude = 1.0 }
k = { amplitude = 1.0 }
u0 = { kind = "constant", value = 5.0 }

[grid]
n = 200

[control]
err_tol = 1e-7

[[certificates]]
kind = "auto"
"#;

fn main() {
    let cfg = RunConfig::from_toml_str(CONFIG).expect("valid config");
    let exec = execute(&cfg).expect("run");
    let rec = &exec.record;
    println!("predicted {:?}, observed {:?} at t = {:.6e}", rec.prediction.verdict, rec.outcome.kind, rec.outcome.t_end);
    for c in &rec.certificates {
        println!("certificate {:?}: pass {}", c.request, c.pass());
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let (json, csv) = write_outputs(&exec, dir.path()).expect("write");
    println!("record {} ({} series rows)", json.display(), rec.series.len());
    if let Some(csv) = csv {
        let header = std::fs::read_to_string(&csv).expect("csv").lines().next().unwrap_or_default().to_string();
        println!("series {} with columns {header}", csv.display());
    }
    println!("hash {}", rec.trajectory_hash);
    println!("replay reproduces the hash: {}", replay(&json).expect("replay"));
}
