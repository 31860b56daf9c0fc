//! Ratio reports, slope fits and verdicts.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

/// One evaluated case: both sides of an inequality and their ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub sweep_k: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Grid points dropped because the right-hand side underflowed.
    #[serde(default)]
    pub excluded_points: usize,
}

/// Least-squares fit of `log2(value)` against the sweep index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub slope_band: f64,
    /// Largest absolute residual in `log2` units.
    pub residual_band: f64,
    pub points: usize,
}

/// Fits `log2(value) = slope * k + intercept`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::param(
            "points",
            format!("need at least 3 points, got {}", points.len()),
        ));
    }
    if let Some(&(k, v)) = points.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::param(
            "points",
            format!("values must be positive and finite, got {v} at k = {k}"),
        ));
    }
    let n = points.len() as f64;
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.log2()).collect();
    let kbar = points.iter().map(|(k, _)| k).sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(k, _)| (k - kbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "sweep indices are all equal"));
    }
    let sxy: f64 = points.iter().zip(&ys).map(|((k, _), y)| (k - kbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * kbar;
    let residuals: Vec<f64> = points
        .iter()
        .zip(&ys)
        .map(|((k, _), y)| y - (slope * k + intercept))
        .collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - 2.0;
    let slope_band = if dof > 0.0 {
        let t = StudentsT::new(0.0, 1.0, dof)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        t * (sse / dof / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        slope_band,
        residual_band: residuals.iter().fold(0.0, |a, e| a.max(e.abs())),
        points: points.len(),
    })
}

/// A named sweep fit with its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub name: String,
    #[serde(flatten)]
    pub fit: SlopeFit,
    /// Slope bound; the fit passes iff `slope <= slope_limit`.
    pub slope_limit: f64,
    /// Residual bound, when one is asserted.
    pub residual_limit: Option<f64>,
    pub pass: bool,
    /// Sweep points `(k, value)` the fit used.
    pub series: Vec<(f64, f64)>,
}

impl SlopeRecord {
    pub fn new(name: impl Into<String>, series: Vec<(f64, f64)>, slope_limit: f64, residual_limit: Option<f64>) -> Result<Self> {
        let fit = fit_log_slope(&series)?;
        let pass = fit.slope <= slope_limit && residual_limit.is_none_or(|r| fit.residual_band <= r);
        Ok(Self {
            name: name.into(),
            fit,
            slope_limit,
            residual_limit,
            pass,
            series,
        })
    }
}

/// A scalar assertion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
    /// Exploratory checks are reported but never affect the verdict.
    pub asserted: bool,
}

impl Check {
    /// Passes iff `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value.is_finite() && value <= limit,
            asserted: true,
        }
    }

    /// Passes iff `value` is finite.
    pub fn finite(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: f64::MAX,
            pass: value.is_finite(),
            asserted: true,
        }
    }

    pub fn exploratory(mut self) -> Self {
        self.asserted = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Only exploratory checks were run.
    Exploratory,
    /// The wall-clock budget ran out; the report is partial.
    Incomplete,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_tail_mass: f64,
    pub excluded_points: usize,
    pub evaluated_points: usize,
    pub skipped_cases: Vec<String>,
    pub seminorm_max: Option<f64>,
    pub seminorm_ceiling: Option<f64>,
    pub budget_exceeded: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub cases: Vec<CaseRecord>,
    pub sup_ratio: f64,
    pub slopes: Vec<SlopeRecord>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub runtime: Duration,
}

impl RatioReport {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.as_str().to_string(),
            seed: config.seed,
            config: config.clone(),
            cases: Vec::new(),
            sup_ratio: 0.0,
            slopes: Vec::new(),
            checks: Vec::new(),
            verdict: Verdict::Exploratory,
            diagnostics: Diagnostics::default(),
            runtime: Duration::ZERO,
        }
    }

    /// Recomputes `sup_ratio` and the verdict from the recorded fields.
    pub(crate) fn finalize(&mut self, exploratory: bool) {
        self.sup_ratio = self.cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
        if exploratory {
            self.checks.iter_mut().for_each(|c| c.asserted = false);
        }
        self.verdict = self.derived_verdict(exploratory);
    }

    /// The verdict implied by the checks, slopes and budget flag.
    pub fn derived_verdict(&self, exploratory: bool) -> Verdict {
        if self.diagnostics.budget_exceeded {
            return Verdict::Incomplete;
        }
        if exploratory {
            return Verdict::Exploratory;
        }
        let asserted = self.checks.iter().filter(|c| c.asserted).count() + self.slopes.len();
        if asserted == 0 {
            return Verdict::Exploratory;
        }
        let ok = self.checks.iter().filter(|c| c.asserted).all(|c| c.pass) && self.slopes.iter().all(|s| s.pass);
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn slope(&self, name: &str) -> Option<&SlopeRecord> {
        self.slopes.iter().find(|s| s.name == name)
    }

    /// Largest ratio per sweep index, in sweep order.
    pub fn sup_by_sweep(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for c in &self.cases {
            match out.iter_mut().find(|(k, _)| *k == c.sweep_k) {
                Some(e) => e.1 = e.1.max(c.ratio),
                None => out.push((c.sweep_k, c.ratio)),
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }
}
