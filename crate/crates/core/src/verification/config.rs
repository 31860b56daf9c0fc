//! Experiment configuration: the raw JSON schema, per-experiment defaults and
//! eager validation into an [`ExperimentConfig`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Profile};
use crate::maximal::CubeFamily;
use crate::symbols::{critical_order, max_modulation_k};
use crate::weights::{multilinear_ap_constant, power_weight, WeightTuple};

use super::corpus::Corpus;

/// Only schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Theorem11,
    Theorem14,
    BmoCorollary,
    Theorem15,
    LebesgueBounds,
    KernelDecay,
    Trace,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Theorem11,
        ExperimentId::Theorem14,
        ExperimentId::BmoCorollary,
        ExperimentId::Theorem15,
        ExperimentId::LebesgueBounds,
        ExperimentId::KernelDecay,
        ExperimentId::Trace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Theorem11 => "theorem11",
            ExperimentId::Theorem14 => "theorem14",
            ExperimentId::BmoCorollary => "bmo_corollary",
            ExperimentId::Theorem15 => "theorem15",
            ExperimentId::LebesgueBounds => "lebesgue_bounds",
            ExperimentId::KernelDecay => "kernel_decay",
            ExperimentId::Trace => "trace",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }

    /// The statement the experiment turns into a ratio test.
    pub fn statement(self) -> &'static str {
        match self {
            ExperimentId::Theorem11 => {
                "pointwise bound M#_r(T_sigma f) <= C M_r f for sigma in S^m_{rho,rho}, m = -(n/r)(1-rho), 1 < r <= 2"
            }
            ExperimentId::Theorem14 => {
                "multilinear bound M#_{r/l}(T_sigma(f_1..f_l)) <= C M_r(f_1..f_l) at m = -(nl/r)(1-rho)"
            }
            ExperimentId::BmoCorollary => {
                "L^inf x ... x L^inf -> BMO estimate at m = -(nl/2)(1-rho), BMO measured with exponent 2/l"
            }
            ExperimentId::Theorem15 => {
                "weighted bound ||T_sigma(f)||_{L^p(v_w)} <= C prod ||f_j||_{L^{p_j}(w_j)} for w in A_{p/r}, with the weighted M_r inequality"
            }
            ExperimentId::LebesgueBounds => {
                "L^r x ... x L^r -> L^{r/(l rho)} for rho < r/(2l); per-piece L^{r(1-lambda)/(l(rho-lambda))} bounds with growth 2^{lambda n k l(1-rho)/(r(1-lambda))} otherwise"
            }
            ExperimentId::KernelDecay => {
                "weighted L^{r'} kernel norms of Littlewood-Paley pieces decay like 2^{k(m + nl/r)} (+rho for y-gradients, +1 for u-gradients)"
            }
            ExperimentId::Trace => "trace inequality ||G(x,..,x)||_{L^2_s} <= C ||G||_{L^2_{s+(l-1)n/2}}",
        }
    }

    /// Config keys the experiment reads beyond the common ones.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentId::Theorem11 => &["grid", "symbol", "corpus", "exponents.r", "cubes", "tolerances"],
            ExperimentId::Theorem14 => &["grid", "symbol", "corpus", "exponents.r", "cubes", "tolerances"],
            ExperimentId::BmoCorollary => &["grid", "symbol", "corpus", "cubes", "tolerances"],
            ExperimentId::Theorem15 => &[
                "grid",
                "symbol",
                "corpus",
                "exponents.r",
                "exponents.p",
                "exponents.t",
                "weights",
                "cubes",
                "tolerances",
            ],
            ExperimentId::LebesgueBounds => &["grid", "symbol", "corpus", "exponents.r", "exponents.lambda", "tolerances"],
            ExperimentId::KernelDecay => &["grid", "symbol", "exponents.r", "kernel", "tolerances"],
            ExperimentId::Trace => &["grid", "trace", "tolerances"],
        }
    }

    fn uses_symbol(self) -> bool {
        self != ExperimentId::Trace
    }

    fn uses_corpus(self) -> bool {
        !matches!(self, ExperimentId::Trace | ExperimentId::KernelDecay)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolFamily {
    /// Sum of modulated dyadic annuli, x-dependent.
    DyadicModulation,
    /// `sigma = 1`.
    Identity,
    /// x-independent oscillatory multiplier (linear only).
    Oscillatory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeKind {
    Standard,
    Dense,
    Dyadic,
}

impl CubeKind {
    pub fn family(self, spec: &GridSpec) -> CubeFamily {
        match self {
            CubeKind::Standard => CubeFamily::standard(spec),
            CubeKind::Dense => CubeFamily::dense(spec),
            CubeKind::Dyadic => CubeFamily::dyadic(spec),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LebesgueMode {
    /// `rho < r/(2l)`: one `L^r x .. -> L^{r/(l rho)}` ratio.
    Direct,
    /// `rho >= r/(2l)`: per-piece bounds through the dilation with `lambda`.
    Dilated,
}

/// A point in `R^n`; plain numbers are accepted for `n = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawPoint {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl RawPoint {
    fn into_vec(self) -> Vec<f64> {
        match self {
            RawPoint::Scalar(x) => vec![x],
            RawPoint::Vector(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub dim: Option<usize>,
    pub side: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSymbol {
    pub family: Option<SymbolFamily>,
    pub order: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub linearity: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
    pub seminorm_ceiling: Option<f64>,
    pub seminorm_x_stride: Option<usize>,
    pub exploratory: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCorpus {
    pub profiles: Option<Vec<Profile>>,
    pub dilations: Option<Vec<f64>>,
    pub translations: Option<Vec<RawPoint>>,
    pub modulations: Option<Vec<RawPoint>>,
    pub size: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExponents {
    pub r: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `|x|^a`.
    Power { a: f64 },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTolerances {
    pub slope: Option<f64>,
    pub residual_band: Option<f64>,
    pub ratio_ceiling: Option<f64>,
    pub refinement: Option<f64>,
    pub ap_ceiling: Option<f64>,
    pub kernel_margin: Option<f64>,
    pub trace_spread: Option<f64>,
    pub max_excluded_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKernel {
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub base_points: Option<usize>,
    pub decay: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTrace {
    pub linearity: Option<usize>,
    pub s: Option<f64>,
    pub anisotropies: Option<Vec<f64>>,
    pub modulations: Option<Vec<Vec<f64>>>,
}

/// Config file as written; every field optional except the schema version
/// and experiment id.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: Option<u32>,
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub budget_secs: Option<f64>,
    pub grid: Option<RawGrid>,
    pub symbol: Option<RawSymbol>,
    pub corpus: Option<RawCorpus>,
    pub exponents: Option<RawExponents>,
    pub cubes: Option<CubeKind>,
    pub weights: Option<Vec<WeightSpec>>,
    pub tolerances: Option<RawTolerances>,
    pub kernel: Option<RawKernel>,
    pub trace: Option<RawTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolConfig {
    pub family: SymbolFamily,
    pub order: f64,
    pub rho: f64,
    pub delta: f64,
    pub linearity: usize,
    pub k_max: usize,
    pub seed: u64,
    pub seminorm_ceiling: f64,
    pub seminorm_x_stride: usize,
    pub exploratory: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub profiles: Vec<Profile>,
    /// Dilation exponents `lambda_k`, one per sweep index `k`.
    pub dilations: Vec<f64>,
    pub translations: Vec<Vec<f64>>,
    pub modulations: Vec<Vec<f64>>,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub r: f64,
    pub p: Vec<f64>,
    pub t: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub slope: f64,
    pub residual_band: f64,
    /// `None`: the sup ratio only has to be finite.
    pub ratio_ceiling: Option<f64>,
    pub refinement: f64,
    pub ap_ceiling: f64,
    pub kernel_margin: f64,
    pub trace_spread: f64,
    pub max_excluded_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub base_points: usize,
    pub decay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub linearity: usize,
    pub s: f64,
    pub anisotropies: Vec<f64>,
    pub modulations: Vec<Vec<f64>>,
}

/// Fully resolved and validated experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    pub seed: u64,
    pub budget_secs: f64,
    pub grid: GridSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusConfig>,
    pub exponents: Exponents,
    pub cubes: CubeKind,
    pub weights: Vec<WeightSpec>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceConfig>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_config_with_seed(path, None)
}

/// [`parse_config`] with an optional seed replacing the file's `seed`.
pub fn parse_config_with_seed(path: impl AsRef<Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    let resolved = parse_raw(&text).and_then(|mut raw| {
        if seed.is_some() {
            raw.seed = seed;
        }
        resolve(raw)
    });
    resolved.map_err(|e| match e {
        Error::Config(msg) => cfg_err(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses JSON text into a raw config, reporting syntax errors with their
/// line and column.
pub fn parse_raw(text: &str) -> Result<RawConfig> {
    serde_json::from_str(text).map_err(|e| {
        cfg_err(format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    resolve(parse_raw(text)?)
}

struct Defaults {
    grid: (usize, f64, usize),
    linearity: usize,
    rho: f64,
    r: f64,
    corpus: Option<CorpusConfig>,
    budget_secs: f64,
}

fn points1(xs: &[f64]) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![x]).collect()
}

fn defaults(id: ExperimentId) -> Defaults {
    let spreading = CorpusConfig {
        profiles: vec![Profile::Gaussian, Profile::Modulated],
        dilations: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25],
        translations: points1(&[-2.0, 0.0, 3.0]),
        modulations: points1(&[0.0, 0.5, -1.0, 1.5]),
        size: 24,
    };
    let compact = CorpusConfig {
        profiles: vec![Profile::Gaussian, Profile::Modulated],
        dilations: vec![-1.0, -1.25, -1.5, -1.75, -2.0],
        translations: points1(&[-0.25, 0.0, 0.3]),
        modulations: points1(&[0.0, 1.0, -2.0, 3.0]),
        size: 24,
    };
    match id {
        ExperimentId::Theorem11 => Defaults {
            grid: (1, 32.0, 512),
            linearity: 1,
            rho: 0.5,
            r: 2.0,
            corpus: Some(spreading),
            budget_secs: 300.0,
        },
        ExperimentId::Theorem14 | ExperimentId::BmoCorollary => Defaults {
            grid: (1, 4.0, 256),
            linearity: 2,
            rho: 0.5,
            r: 2.0,
            corpus: Some(compact),
            budget_secs: 600.0,
        },
        ExperimentId::Theorem15 => Defaults {
            grid: (1, 4.0, 128),
            linearity: 2,
            rho: 0.5,
            r: 2.0,
            corpus: Some(CorpusConfig {
                profiles: vec![Profile::Gaussian, Profile::Modulated],
                dilations: vec![-0.5, -1.0, -1.5],
                translations: points1(&[0.0, 0.25, -0.3]),
                modulations: points1(&[0.0, 1.0, -2.0]),
                size: 18,
            }),
            budget_secs: 600.0,
        },
        ExperimentId::LebesgueBounds => Defaults {
            grid: (1, 4.0, 256),
            linearity: 2,
            rho: 0.125,
            r: 2.0,
            corpus: Some(CorpusConfig {
                profiles: vec![Profile::Gaussian, Profile::Modulated],
                dilations: vec![-1.0, -1.5, -2.0],
                translations: points1(&[0.0, 0.3]),
                modulations: points1(&[0.0, 2.0, -3.0]),
                size: 12,
            }),
            budget_secs: 300.0,
        },
        ExperimentId::KernelDecay => Defaults {
            grid: (1, 8.0, 4096),
            linearity: 1,
            rho: 0.5,
            r: 2.0,
            corpus: None,
            budget_secs: 120.0,
        },
        ExperimentId::Trace => Defaults {
            grid: (1, 16.0, 512),
            linearity: 2,
            rho: 0.5,
            r: 2.0,
            corpus: None,
            budget_secs: 120.0,
        },
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(cfg_err(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Largest family `K` the grid supports with exact Littlewood-Paley
/// reconstruction.
pub fn default_family_k(rho: f64, grid: &GridSpec) -> usize {
    let k_partition = (grid.nyquist().log2().floor() as i64 - 2).max(1) as usize;
    max_modulation_k(rho, grid).min(k_partition).max(1)
}

/// Fills defaults and checks every precondition of the chosen experiment.
pub fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let schema_version = raw
        .schema_version
        .ok_or_else(|| cfg_err("missing schema_version"))?;
    if schema_version != SCHEMA_VERSION {
        return Err(cfg_err(format!(
            "unsupported schema_version {schema_version}, expected {SCHEMA_VERSION}"
        )));
    }
    let id_text = raw.experiment.ok_or_else(|| cfg_err("missing experiment"))?;
    let experiment = ExperimentId::parse(&id_text).ok_or_else(|| {
        let known: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.as_str()).collect();
        cfg_err(format!("unknown experiment \"{id_text}\"; known: {}", known.join(", ")))
    })?;
    let d = defaults(experiment);
    let seed = raw.seed.unwrap_or(7);
    let budget_secs = positive("budget_secs", raw.budget_secs.unwrap_or(d.budget_secs))?;

    let rg = raw.grid.unwrap_or_default();
    let grid = GridSpec::new(
        rg.dim.unwrap_or(d.grid.0),
        rg.side.unwrap_or(d.grid.1),
        rg.points.unwrap_or(d.grid.2),
    )
    .map_err(|e| cfg_err(format!("grid: {e}")))?;
    let n = grid.dim();

    let re = raw.exponents.unwrap_or_default();
    let rs = raw.symbol.unwrap_or_default();
    let linearity = match experiment {
        ExperimentId::Trace => raw.trace.as_ref().and_then(|t| t.linearity).unwrap_or(d.linearity),
        _ => rs.linearity.unwrap_or(d.linearity),
    };
    let r = re.r.unwrap_or(d.r);
    match experiment {
        ExperimentId::KernelDecay => {
            if !(1.0..=2.0).contains(&r) {
                return Err(cfg_err(format!("r ∈ [1,2] required, got {r}")));
            }
        }
        ExperimentId::BmoCorollary => {
            if r != 2.0 {
                return Err(cfg_err(format!("r must be 2 for experiment bmo_corollary, got {r}")));
            }
        }
        ExperimentId::Trace => {}
        _ => {
            if !(r > 1.0 && r <= 2.0) {
                return Err(cfg_err(format!("r ∈ (1,2] required, got {r}")));
            }
        }
    }
    let allowed: std::ops::RangeInclusive<usize> = match experiment {
        ExperimentId::Theorem11 => 1..=1,
        ExperimentId::Trace => 2..=crate::trace::MAX_FACTORS,
        _ => 1..=2,
    };
    if !allowed.contains(&linearity) {
        return Err(cfg_err(format!(
            "linearity must be in {}..={} for experiment {experiment}, got {linearity}",
            allowed.start(),
            allowed.end()
        )));
    }
    if (linearity > 1 || experiment == ExperimentId::Trace) && n != 1 {
        return Err(cfg_err(format!(
            "experiment {experiment} with l = {linearity} needs a one-dimensional grid"
        )));
    }

    let symbol = if experiment.uses_symbol() {
        Some(resolve_symbol(experiment, rs, &grid, linearity, r, seed, d.rho)?)
    } else {
        None
    };

    let p = match re.p {
        Some(p) => p,
        None if experiment == ExperimentId::Theorem15 => vec![4.0; linearity],
        None => vec![],
    };
    let mut exponents = Exponents {
        r,
        p,
        t: re.t,
        lambda: re.lambda,
    };

    let rt = raw.tolerances.unwrap_or_default();
    let tolerances = Tolerances {
        slope: rt.slope.unwrap_or(if experiment == ExperimentId::LebesgueBounds { 0.15 } else { 0.1 }),
        residual_band: positive("tolerances.residual_band", rt.residual_band.unwrap_or(0.2))?,
        ratio_ceiling: rt.ratio_ceiling.map(|c| positive("tolerances.ratio_ceiling", c)).transpose()?,
        refinement: positive("tolerances.refinement", rt.refinement.unwrap_or(0.2))?,
        ap_ceiling: positive("tolerances.ap_ceiling", rt.ap_ceiling.unwrap_or(10.0))?,
        kernel_margin: rt.kernel_margin.unwrap_or(0.15),
        trace_spread: positive("tolerances.trace_spread", rt.trace_spread.unwrap_or(10.0))?,
        max_excluded_fraction: rt.max_excluded_fraction.unwrap_or(0.5),
    };
    if !(0.0..=1.0).contains(&tolerances.max_excluded_fraction) {
        return Err(cfg_err("tolerances.max_excluded_fraction must lie in [0, 1]"));
    }

    let corpus = if experiment.uses_corpus() {
        let rc = raw.corpus.unwrap_or_default();
        let dc = d.corpus.expect("corpus experiments have corpus defaults");
        let to_vecs = |pts: Option<Vec<RawPoint>>, dflt: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            pts.map(|v| v.into_iter().map(RawPoint::into_vec).collect()).unwrap_or(dflt)
        };
        let translations = to_vecs(rc.translations, dc.translations);
        let modulations = to_vecs(rc.modulations, dc.modulations);
        let profiles = rc.profiles.unwrap_or(dc.profiles);
        let combos = profiles.len() * translations.len() * modulations.len();
        let size = rc.size.unwrap_or(dc.size.min(combos));
        Some(CorpusConfig {
            profiles,
            dilations: rc.dilations.unwrap_or(dc.dilations),
            translations,
            modulations,
            size,
        })
    } else {
        None
    };

    let weights = raw.weights.unwrap_or_else(|| {
        if experiment == ExperimentId::Theorem15 {
            let mut w = vec![WeightSpec::Power { a: 0.25 }];
            w.extend((1..linearity).map(|_| WeightSpec::Power { a: -0.25 }));
            w
        } else {
            vec![]
        }
    });

    let kernel = if experiment == ExperimentId::KernelDecay {
        let rk = raw.kernel.unwrap_or_default();
        let family_k = symbol.as_ref().map(|s| s.k_max).unwrap_or(1);
        let axes = (n * linearity) as f64;
        Some(KernelConfig {
            k_min: rk.k_min.unwrap_or(1),
            k_max: rk.k_max.unwrap_or(family_k),
            base_points: rk.base_points.unwrap_or(4),
            decay: rk.decay.unwrap_or(axes / r + 1.0),
        })
    } else {
        None
    };

    let trace = if experiment == ExperimentId::Trace {
        let rt = raw.trace.unwrap_or_default();
        let (anis, mods) = if linearity == 2 {
            (
                (0..10).map(|i| (-3.0 + 6.0 * i as f64 / 9.0).exp2()).collect(),
                (0..5).map(|j| vec![0.25 * (j as f64).exp2(), 0.125 * (j as f64).exp2()]).collect(),
            )
        } else {
            (
                (0..5).map(|i| (-1.0 + 0.5 * i as f64).exp2()).collect(),
                (0..3)
                    .map(|j| {
                        let s = (j as f64).exp2();
                        let mut v = vec![0.25 * s];
                        v.extend(std::iter::repeat_n(0.125 * s, linearity - 1));
                        v
                    })
                    .collect(),
            )
        };
        Some(TraceConfig {
            linearity,
            s: rt.s.unwrap_or(0.5),
            anisotropies: rt.anisotropies.unwrap_or(anis),
            modulations: rt.modulations.unwrap_or(mods),
        })
    } else {
        None
    };

    if experiment == ExperimentId::BmoCorollary && exponents.t.is_none() {
        exponents.t = Some(2.0 / linearity as f64);
    }
    if experiment == ExperimentId::Theorem15 && exponents.t.is_none() {
        exponents.t = Some(0.5);
    }

    let cfg = ExperimentConfig {
        schema_version,
        experiment,
        seed,
        budget_secs,
        grid,
        symbol,
        corpus,
        exponents,
        cubes: raw.cubes.unwrap_or(CubeKind::Standard),
        weights,
        tolerances,
        kernel,
        trace,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn resolve_symbol(
    experiment: ExperimentId,
    rs: RawSymbol,
    grid: &GridSpec,
    linearity: usize,
    r: f64,
    seed: u64,
    default_rho: f64,
) -> Result<SymbolConfig> {
    let n = grid.dim();
    let family = rs.family.unwrap_or(SymbolFamily::DyadicModulation);
    let rho = rs.rho.unwrap_or(default_rho);
    if !(rho > 0.0 && rho < 1.0) {
        return Err(cfg_err(format!("ρ ∈ (0,1) required, got rho = {rho}")));
    }
    let exploratory = rs.exploratory.unwrap_or(false);
    // the BMO corollary is the r = 2 endpoint
    let r_crit = if experiment == ExperimentId::BmoCorollary { 2.0 } else { r };
    let critical = critical_order(n, linearity, r_crit, rho);
    let order = match family {
        SymbolFamily::Identity => {
            let m = rs.order.unwrap_or(0.0);
            if m != 0.0 {
                return Err(cfg_err(format!("the identity symbol has order 0, got {m}")));
            }
            m
        }
        _ => {
            let m = rs.order.unwrap_or(critical);
            if !exploratory && (m - critical).abs() > 1e-12 {
                return Err(cfg_err(format!(
                    "m must equal −(nl/r)(1−ρ) = {critical} for experiment {experiment} \
                     (n = {n}, l = {linearity}, r = {r_crit}, ρ = {rho}), got {m}"
                )));
            }
            m
        }
    };
    let delta = match family {
        SymbolFamily::Oscillatory => rs.delta.unwrap_or(0.0),
        _ => rs.delta.unwrap_or(rho),
    };
    if !(0.0..=rho).contains(&delta) {
        return Err(cfg_err(format!("delta must lie in [0, rho] = [0, {rho}], got {delta}")));
    }
    if family == SymbolFamily::Oscillatory && linearity != 1 {
        return Err(cfg_err("the oscillatory family is linear (l = 1) only"));
    }
    let admissible = max_modulation_k(rho, grid);
    let k_max = match family {
        SymbolFamily::DyadicModulation => {
            let k = rs.k_max.unwrap_or_else(|| default_family_k(rho, grid));
            if k == 0 || k > admissible {
                return Err(cfg_err(format!(
                    "symbol.k_max must lie in 1..={admissible} on this grid, got {k}"
                )));
            }
            k
        }
        _ => rs.k_max.unwrap_or(0),
    };
    let seminorm_ceiling = positive(
        "symbol.seminorm_ceiling",
        rs.seminorm_ceiling
            .unwrap_or(if linearity == 1 { crate::symbols::DEFAULT_SEMINORM_CEILING } else { 1e4 }),
    )?;
    let seminorm_x_stride = rs.seminorm_x_stride.unwrap_or(if linearity == 1 { 1 } else { 4 });
    if seminorm_x_stride == 0 {
        return Err(cfg_err("symbol.seminorm_x_stride must be at least 1"));
    }
    Ok(SymbolConfig {
        family,
        order,
        rho,
        delta,
        linearity,
        k_max,
        seed: rs.seed.unwrap_or(seed),
        seminorm_ceiling,
        seminorm_x_stride,
        exploratory,
    })
}

/// Admissible open interval for the dilation parameter `lambda`.
pub fn lambda_interval(rho: f64, r: f64, linearity: usize) -> (f64, f64) {
    let l = linearity as f64;
    ((2.0 * rho * l - r) / (2.0 * l - r), rho)
}

impl ExperimentConfig {
    pub fn symbol(&self) -> Result<&SymbolConfig> {
        self.symbol
            .as_ref()
            .ok_or_else(|| cfg_err(format!("experiment {} has no symbol section", self.experiment)))
    }

    pub fn linearity(&self) -> usize {
        match (&self.symbol, &self.trace) {
            (Some(s), _) => s.linearity,
            (None, Some(t)) => t.linearity,
            _ => 1,
        }
    }

    /// Which regime the Lebesgue-bounds experiment runs in.
    pub fn lebesgue_mode(&self) -> Result<LebesgueMode> {
        let s = self.symbol()?;
        let threshold = self.exponents.r / (2.0 * s.linearity as f64);
        if s.rho < threshold {
            return Ok(LebesgueMode::Direct);
        }
        let (lo, hi) = lambda_interval(s.rho, self.exponents.r, s.linearity);
        if self.exponents.r >= 2.0 * s.linearity as f64 {
            return Err(cfg_err("need r < 2l for the dilated regime"));
        }
        match self.exponents.lambda {
            Some(lam) if lam > lo && lam < hi => Ok(LebesgueMode::Dilated),
            Some(lam) => Err(cfg_err(format!(
                "lambda = {lam} outside the admissible interval ({lo}, {hi}) for rho = {} >= r/(2l) = {threshold}",
                s.rho
            ))),
            None => Err(cfg_err(format!(
                "rho = {} >= r/(2l) = {threshold} requires exponents.lambda in ({lo}, {hi})",
                s.rho
            ))),
        }
    }

    pub fn weight_tuple(&self, spec: &GridSpec, scale: f64) -> Result<WeightTuple> {
        let ws = self
            .weights
            .iter()
            .map(|w| match w {
                WeightSpec::Power { a } => power_weight(*a, spec),
            })
            .collect::<Result<Vec<_>>>()?;
        let ex = self.exponents.p.iter().map(|p| p / scale).collect();
        WeightTuple::new(ws, ex)
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let l = cfg.linearity();
    if let Some(c) = &cfg.corpus {
        Corpus::new(c, &cfg.grid).map_err(|e| cfg_err(format!("corpus: {e}")))?;
        if cfg.experiment != ExperimentId::LebesgueBounds && c.dilations.len() < 3 && cfg.experiment != ExperimentId::Theorem15 {
            return Err(cfg_err("corpus.dilations needs at least 3 sweep points for a slope fit"));
        }
    }
    match cfg.experiment {
        ExperimentId::Theorem15 => {
            let r = cfg.exponents.r;
            if cfg.exponents.p.len() != l || cfg.weights.len() != l {
                return Err(cfg_err(format!("need {l} exponents p_j and {l} weights")));
            }
            if let Some(&pj) = cfg.exponents.p.iter().find(|&&pj| pj <= r || !pj.is_finite()) {
                return Err(cfg_err(format!("need r < p_j < inf, got p_j = {pj} with r = {r}")));
            }
            let t = cfg.exponents.t.unwrap_or(0.5);
            if !(t > 0.0 && t <= 1.0) {
                return Err(cfg_err(format!("exponents.t must lie in (0, 1], got {t}")));
            }
            let tuple = cfg
                .weight_tuple(&cfg.grid, r)
                .map_err(|e| cfg_err(format!("weights: {e}")))?;
            let fam = cfg.cubes.family(&cfg.grid);
            let constant = multilinear_ap_constant(&tuple, &fam)?;
            if constant > cfg.tolerances.ap_ceiling {
                return Err(cfg_err(format!(
                    "multilinear A_(p/r) constant {constant:.4} exceeds tolerances.ap_ceiling {}",
                    cfg.tolerances.ap_ceiling
                )));
            }
        }
        ExperimentId::LebesgueBounds => {
            cfg.lebesgue_mode()?;
        }
        ExperimentId::KernelDecay => {
            let k = cfg.kernel.as_ref().expect("resolved");
            let s = cfg.symbol()?;
            if k.k_min == 0 || k.k_max < k.k_min + 2 {
                return Err(cfg_err(format!(
                    "kernel k range {}..={} has fewer than 3 points",
                    k.k_min, k.k_max
                )));
            }
            if s.family == SymbolFamily::DyadicModulation && k.k_max > s.k_max {
                return Err(cfg_err(format!("kernel.k_max {} exceeds the family's K = {}", k.k_max, s.k_max)));
            }
            let top = crate::littlewood_paley::piece_support(k.k_max).1;
            if top > cfg.grid.nyquist() {
                return Err(cfg_err(format!("piece {} reaches |xi| = {top} beyond Nyquist {}", k.k_max, cfg.grid.nyquist())));
            }
            if k.base_points == 0 || !(k.decay.is_finite() && k.decay >= 0.0) {
                return Err(cfg_err("kernel.base_points >= 1 and kernel.decay >= 0 required"));
            }
        }
        ExperimentId::Trace => {
            let t = cfg.trace.as_ref().expect("resolved");
            if !(t.s.is_finite() && t.s > 0.0) {
                return Err(cfg_err(format!("trace.s must be positive, got {}", t.s)));
            }
            if t.modulations.len() < 3 {
                return Err(cfg_err("trace.modulations needs at least 3 entries for a slope fit"));
            }
            if t.anisotropies.is_empty() || t.anisotropies.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(cfg_err("trace.anisotropies must be positive"));
            }
            if let Some(v) = t.modulations.iter().find(|v| v.len() != t.linearity) {
                return Err(cfg_err(format!("trace modulation {v:?} needs {} components", t.linearity)));
            }
            if cfg.grid.points().pow(t.linearity as u32) > 1 << 24 {
                return Err(cfg_err("product grid exceeds 2^24 samples"));
            }
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_theorem11_gets_defaults() {
        let cfg = parse_config_str(r#"{"schema_version": 1, "experiment": "theorem11"}"#).unwrap();
        assert_eq!(cfg.grid.points(), 512);
        assert_eq!(cfg.grid.side(), 32.0);
        assert_eq!(cfg.corpus.as_ref().unwrap().size, 24);
        let s = cfg.symbol().unwrap();
        assert_eq!(s.order, critical_order(1, 1, 2.0, 0.5));
    }

    #[test]
    fn rho_one_rejected() {
        let err = parse_config_str(r#"{"schema_version": 1, "experiment": "theorem11", "symbol": {"rho": 1.0}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("ρ ∈ (0,1) required"), "{err}");
    }

    #[test]
    fn wrong_order_reports_expected_value() {
        let err = parse_config_str(
            r#"{"schema_version": 1, "experiment": "theorem14",
                "symbol": {"order": -1.0, "rho": 0.5, "linearity": 2}, "exponents": {"r": 2}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("-0.5"), "{err}");
        assert!(err.contains("theorem14"), "{err}");
    }

    #[test]
    fn unknown_keys_and_ids() {
        assert!(parse_config_str(r#"{"schema_version": 1, "experiment": "theorem11", "bogus": 1}"#).is_err());
        assert!(parse_config_str(r#"{"schema_version": 1, "experiment": "theorem11", "grid": {"size": 3}}"#).is_err());
        let err = parse_config_str(r#"{"schema_version": 1, "experiment": "unknown"}"#).unwrap_err().to_string();
        assert!(err.contains("unknown experiment"));
        assert!(parse_config_str(r#"{"experiment": "theorem11"}"#).is_err());
        assert!(parse_config_str(r#"{"schema_version": 2, "experiment": "theorem11"}"#).is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_config_str("{\n  \"schema_version\": 1,\n  \"experiment\": theorem11\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("column"), "{err}");
    }

    #[test]
    fn lambda_interval_arithmetic() {
        let (lo, hi) = lambda_interval(0.75, 2.0, 2);
        assert_eq!(lo, 0.5);
        assert_eq!(hi, 0.75);
        let bad = parse_config_str(
            r#"{"schema_version": 1, "experiment": "lebesgue_bounds",
                "symbol": {"rho": 0.75}, "exponents": {"r": 2, "lambda": 0.4}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(bad.contains("(0.5, 0.75)"), "{bad}");
    }

    #[test]
    fn every_experiment_has_valid_defaults() {
        for id in ExperimentId::ALL {
            let text = format!(r#"{{"schema_version": 1, "experiment": "{id}"}}"#);
            let mut raw = parse_raw(&text).unwrap();
            if id == ExperimentId::LebesgueBounds {
                raw.symbol = Some(RawSymbol {
                    rho: Some(0.125),
                    ..Default::default()
                });
            }
            resolve(raw).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }
}
