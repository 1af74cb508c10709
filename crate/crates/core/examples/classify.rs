//! Regime prediction from the exponents and coefficients alone, no simulation.

use nlheat::problem::{classify_spec, CoefficientDescriptor, ProblemSpec, TimeProfile};

fn main() {
    let cases = [(0.5, 0.5), (2.0, 1.5), (0.5, 2.0), (1.0, 2.0), (2.0, 3.0), (2.0, 2.0)];
    for (p, l) in cases {
        let pred = classify_spec(&ProblemSpec::constant(p, l, 1.0, 1.0, 1.0, 1.0));
        println!("p={p:<4} l={l:<4} {:?}", pred.verdict);
        for f in &pred.findings {
            println!("    {:?}: {}", f.verdict, f.citation);
        }
    }

    // p = 1 < l without absorption: every nontrivial datum blows up, with a
    // time bound from the datum mass
    let spec = ProblemSpec::constant(1.0, 2.0, 0.0, 1.0, 1.0, 1.0);
    let pred = classify_spec(&spec);
    println!("c=0, p=1, l=2: {:?}, blow-up by {:?}", pred.verdict, pred.blow_up_time_bound);

    // a decaying flux coefficient turns the same exponents into small-data global
    let mut spec = ProblemSpec::constant(1.0, 2.0, 1.0, 1.0, 1.0, 1.0);
    spec.k = CoefficientDescriptor::from_profile(TimeProfile::exponential(1.0, -1.0));
    let pred = classify_spec(&spec);
    println!("k = e^(-t), p=1, l=2: {:?}", pred.verdict);
    for note in &pred.notes {
        println!("    note: {note}");
    }
}
