//! Runs a JSON scenario through the library harness and prints the result records.
//!
//! `cargo run --example scenario_runner -- crates/core/tests/golden/scalar.json`

use tensor_heston::harness::{load_config, run_scenario, validate_all, RunOptions};

fn main() -> tensor_heston::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/scalar.json").into());
    let config = load_config(path.as_ref())?;
    for record in run_scenario(&config, RunOptions::default())? {
        match &record.error {
            Some(e) => println!("{:<12} error: {e}", record.name),
            None => println!("{:<12} {} ({:.1} ms)", record.name, record.value, record.wall_ms),
        }
    }
    let report = validate_all(&config);
    for c in &report.checks {
        println!("{} {}", if c.passed { "pass" } else { "FAIL" }, c.name);
    }
    Ok(())
}
