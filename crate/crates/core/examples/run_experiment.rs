//! Load an experiment config, run it, and print the verdict with its checks
//! and sweep fits. Pass a config path, or get the bundled bilinear one.

use std::path::PathBuf;

use maxharm::verification::{parse_config, run_experiment};

fn main() -> maxharm::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/theorem15.json")
    });
    let cfg = parse_config(&path)?;
    let report = run_experiment(&cfg)?;
    println!("{}", maxharm::cli::summary(&report));
    for c in &report.checks {
        println!("  check {}: {:.4e} (limit {:.3e}) pass = {}", c.name, c.value, c.limit, c.pass);
    }
    for s in &report.slopes {
        println!("  slope {}: {:.4} (limit {}) pass = {}", s.name, s.fit.slope, s.slope_limit, s.pass);
    }
    Ok(())
}
