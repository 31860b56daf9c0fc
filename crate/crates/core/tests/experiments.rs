//! Cross-experiment consistency and bundled-config checks.

use std::path::PathBuf;

use serde_json::{json, Value};

use maxharm::verification::{parse_config, parse_config_str, run_experiment};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn multilinear_runner_at_one_slot_matches_linear_runner() {
    let base = |id: &str| {
        json!({
            "schema_version": 1,
            "experiment": id,
            "seed": 3,
            "grid": {"dim": 1, "side": 4, "points": 256},
            "symbol": {"family": "dyadic_modulation", "linearity": 1, "rho": 0.5, "order": -0.25},
            "corpus": {
                "profiles": ["gaussian"],
                "dilations": [-1, -1.5, -2],
                "translations": [0, 0.3],
                "modulations": [0, 1],
                "size": 4
            },
            "exponents": {"r": 2}
        })
    };
    let run = |v: Value| run_experiment(&parse_config_str(&v.to_string()).unwrap()).unwrap();
    let linear = run(base("theorem11"));
    let multi = run(base("theorem14"));
    assert_eq!(linear.cases.len(), multi.cases.len());
    assert!(!linear.cases.is_empty());
    for (a, b) in linear.cases.iter().zip(&multi.cases) {
        assert_eq!(a.sweep_k, b.sweep_k);
        for (x, y) in [(a.lhs, b.lhs), (a.rhs, b.rhs), (a.ratio, b.ratio)] {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{}: {x} vs {y}", a.case_id);
        }
    }
}

#[test]
fn bundled_configs_parse_with_their_declared_values() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let raw: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let cfg = parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg.experiment.to_string(), raw["experiment"].as_str().unwrap());
        assert_eq!(cfg.seed, raw["seed"].as_u64().unwrap());
        assert_eq!(cfg.grid.len() as u64, raw["grid"]["points"].as_u64().unwrap());
        // resolution is deterministic
        let again = serde_json::to_value(&cfg).unwrap();
        assert_eq!(again, serde_json::to_value(&parse_config(&path).unwrap()).unwrap());
        n += 1;
    }
    assert!(n >= 7);
}
