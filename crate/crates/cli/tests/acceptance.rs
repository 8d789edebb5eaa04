//! Runs every verification criterion on the reference problem and prints one
//! line per criterion. Exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use gmlab::config::ExperimentConfig;
use gmlab::presets::preset;
use gmlab::verify::Verifier;

fn main() -> ExitCode {
    let raw = preset("case-a").expect("bundled preset");
    let cfg = ExperimentConfig::from_raw(&raw).expect("preset validates");
    let verifier = Verifier::new(cfg.solver, cfg.analysis);
    let start = Instant::now();
    let results = verifier.run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/{} criteria passed in {:.1} s", results.len(), start.elapsed().as_secs_f64());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
