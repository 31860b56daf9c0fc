//! Runner plumbing behind the `maxharm` binary: manifests, thread pools,
//! output files and exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::verification::{
    parse_config_with_seed, run_experiment, ExperimentConfig, ExperimentId, RatioReport, Verdict,
};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "MAXHARM_THREADS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Everything a run needs, resolved up front.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config: ExperimentConfig,
    pub version: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub budget_secs: f64,
    /// Worker threads; 0 lets rayon choose.
    pub threads: usize,
}

impl RunManifest {
    pub fn new(config_path: impl AsRef<Path>, out_dir: impl AsRef<Path>, seed: Option<u64>, threads: usize) -> Result<Self> {
        let config = parse_config_with_seed(config_path.as_ref(), seed)?;
        Ok(Self {
            config_path: config_path.as_ref().to_path_buf(),
            seed: config.seed,
            budget_secs: config.budget_secs,
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            out_dir: out_dir.as_ref().to_path_buf(),
            threads,
        })
    }
}

/// `--threads` if given, else `MAXHARM_THREADS`, else 0 (auto).
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Runs `f` inside a dedicated rayon pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Pass | Verdict::Exploratory => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Incomplete => EXIT_BUDGET,
    }
}

/// Runs the manifest's experiment and writes its outputs.
pub fn execute(manifest: &RunManifest) -> Result<RatioReport> {
    let report = with_threads(manifest.threads, || run_experiment(&manifest.config))??;
    write_outputs(&report, &manifest.out_dir)?;
    let runtime = RuntimeRecord {
        manifest,
        runtime_secs: report.runtime.as_secs_f64(),
        verdict: report.verdict,
    };
    fs::write(manifest.out_dir.join("manifest.json"), to_pretty(&runtime)?)?;
    Ok(report)
}

/// Runs the manifest and maps the outcome to an exit code, printing a
/// one-line summary or the error.
pub fn run(manifest: &RunManifest) -> i32 {
    match execute(manifest) {
        Ok(report) => {
            println!("{}", summary(&report));
            exit_code(report.verdict)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[derive(Serialize)]
struct RuntimeRecord<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest,
    runtime_secs: f64,
    verdict: Verdict,
}

fn to_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes `report.json`, `ratios.csv` and `slopes.csv` into `dir`.
pub fn write_outputs(report: &RatioReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), to_pretty(report)?)?;
    fs::write(dir.join("ratios.csv"), ratios_csv(report)?)?;
    fs::write(dir.join("slopes.csv"), slopes_csv(report)?)?;
    Ok(())
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

/// Case table: a provenance comment line, then
/// `case_id,sweep_k,lhs,rhs,ratio`.
pub fn ratios_csv(report: &RatioReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case_id", "sweep_k", "lhs", "rhs", "ratio"]).map_err(csv_err)?;
    for c in &report.cases {
        w.write_record([
            c.case_id.clone(),
            c.sweep_k.to_string(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.ratio.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let header = format!(
        "# maxharm {} experiment={} seed={}\n",
        report.version, report.experiment, report.seed
    );
    Ok(header + &finish(w)?)
}

/// One row per sweep fit.
pub fn slopes_csv(report: &RatioReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "name",
        "slope",
        "intercept",
        "slope_band",
        "residual_band",
        "points",
        "slope_limit",
        "residual_limit",
        "pass",
        "seed",
    ])
    .map_err(csv_err)?;
    for s in &report.slopes {
        w.write_record([
            s.name.clone(),
            s.fit.slope.to_string(),
            s.fit.intercept.to_string(),
            s.fit.slope_band.to_string(),
            s.fit.residual_band.to_string(),
            s.fit.points.to_string(),
            s.slope_limit.to_string(),
            s.residual_limit.map(|r| r.to_string()).unwrap_or_default(),
            s.pass.to_string(),
            report.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn summary(report: &RatioReport) -> String {
    let mut s = format!(
        "{}: {:?} (sup ratio {:.6}, {} cases, {:.1}s)",
        report.experiment,
        report.verdict,
        report.sup_ratio,
        report.cases.len(),
        report.runtime.as_secs_f64()
    );
    for c in report.checks.iter().filter(|c| c.asserted && !c.pass) {
        let _ = write!(s, "\n  failed check {}: {} > {}", c.name, c.value, c.limit);
    }
    for f in report.slopes.iter().filter(|f| !f.pass) {
        let _ = write!(
            s,
            "\n  failed slope {}: {:.4} (limit {}), residual {:.4}",
            f.name, f.fit.slope, f.slope_limit, f.fit.residual_band
        );
    }
    if report.diagnostics.budget_exceeded {
        let _ = write!(s, "\n  budget of {}s exceeded; report is partial", report.config.budget_secs);
    }
    s
}

/// Experiment ids with the statement each checks and the keys it reads.
pub fn list_experiments() -> String {
    let mut out = String::from("required keys: schema_version, experiment\n");
    for id in ExperimentId::ALL {
        let _ = writeln!(out, "{id}\n  {}\n  keys: {}", id.statement(), id.keys().join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lists_every_id() {
        let text = list_experiments();
        for id in [
            "theorem11",
            "theorem14",
            "bmo_corollary",
            "theorem15",
            "lebesgue_bounds",
            "kernel_decay",
            "trace",
        ] {
            assert!(text.lines().any(|l| l == id), "{id} missing");
        }
        assert_eq!(text, list_experiments());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(Verdict::Pass), 0);
        assert_eq!(exit_code(Verdict::Exploratory), 0);
        assert_eq!(exit_code(Verdict::Fail), 2);
        assert_eq!(exit_code(Verdict::Incomplete), 3);
    }

    #[test]
    fn explicit_threads_win() {
        assert_eq!(resolve_threads(Some(3)).unwrap(), 3);
    }
}
