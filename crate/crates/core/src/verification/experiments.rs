//! The experiment runners. Each turns one boundedness statement into a table
//! of case ratios plus slope fits and scalar checks.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, sobolev_norm, Domain, GridFunction, GridSpec};
use crate::littlewood_paley::build_partition;
use crate::maximal::{
    bmo_seminorm, dyadic_maximal, hl_maximal, multisublinear_maximal, sharp_maximal_homogeneous,
    sharp_maximal_inhomogeneous, sharp_power_embedding, CubeFamily,
};
use crate::operators::{
    apply_linear_table, apply_multilinear_table, kernel_of_piece, kernel_weighted_norm,
    predicted_kernel_exponent, KernelVariant,
};
use crate::symbols::{
    dyadic_modulation_symbol, estimate_seminorms, lp_pieces, oscillatory_symbol, SeminormOptions,
    SeminormReport, Symbol, SymbolClassParams, SymbolTable,
};
use crate::trace::{collapse_last, diagonal_restrict, ProductGridFunction};
use crate::weights::{ap_constant, product_weight};

use super::config::{ExperimentConfig, ExperimentId, LebesgueMode, SymbolConfig, SymbolFamily};
use super::corpus::Corpus;
use super::report::{CaseRecord, Check, RatioReport, SlopeRecord};

/// Right-hand sides below this fraction of the input scale are masked.
pub const MASK_THRESHOLD: f64 = 1e-8;
/// Pointwise ratios are taken where every coordinate satisfies
/// `|x_i| <= EVAL_WINDOW * L / 2`; outside, cubes of side at most `L/2`
/// cannot reach inputs centred near the origin and the box stops
/// resembling the whole space.
pub const EVAL_WINDOW: f64 = 0.5;
/// Relative slack allowed in the sample-exact power-embedding check.
pub const EMBEDDING_SLACK: f64 = 1e-12;

/// Runs the experiment named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let start = Instant::now();
    let mut report = match cfg.experiment {
        ExperimentId::Theorem11 => run_linear_sharp(cfg),
        ExperimentId::Theorem14 => run_multilinear_sharp(cfg),
        ExperimentId::BmoCorollary => run_bmo_corollary(cfg),
        ExperimentId::Theorem15 => run_weighted(cfg),
        ExperimentId::LebesgueBounds => run_lebesgue_bounds(cfg),
        ExperimentId::KernelDecay => run_kernel_decay(cfg),
        ExperimentId::Trace => run_trace(cfg),
    }?;
    report.runtime = start.elapsed();
    Ok(report)
}

struct Clock {
    start: Instant,
    budget: f64,
}

impl Clock {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            start: Instant::now(),
            budget: cfg.budget_secs,
        }
    }

    fn expired(&self) -> bool {
        self.start.elapsed().as_secs_f64() > self.budget
    }
}

/// The symbol described by `s`, built on `grid`.
pub fn build_symbol(s: &SymbolConfig, grid: &GridSpec) -> Result<Symbol> {
    let params = SymbolClassParams::new(s.order, s.rho, s.delta, s.linearity, grid.dim())?;
    match s.family {
        SymbolFamily::DyadicModulation => dyadic_modulation_symbol(params, grid, s.k_max, s.seed),
        SymbolFamily::Identity => Ok(Symbol::constant(params, Complex64::new(1.0, 0.0))),
        SymbolFamily::Oscillatory => oscillatory_symbol(s.order, s.rho, grid.dim()),
    }
}

/// Certifies `sigma` against its declared class; an uncertified symbol is
/// an error.
pub fn certify(sigma: &Symbol, s: &SymbolConfig, grid: &GridSpec) -> Result<SeminormReport> {
    let options = SeminormOptions {
        max_order: 2,
        ceiling: s.seminorm_ceiling,
        x_stride: s.seminorm_x_stride,
    };
    let rep = estimate_seminorms(sigma, sigma.params(), grid, options)?;
    if !rep.pass {
        return Err(Error::Uncertified(format!(
            "largest seminorm {:.4} exceeds the ceiling {}",
            rep.max_entry, rep.ceiling
        )));
    }
    Ok(rep)
}

/// A symbol sampled once and applied to many inputs.
struct Operator {
    table: SymbolTable,
}

impl Operator {
    fn new(sigma: &Symbol, grid: &GridSpec) -> Result<Self> {
        Ok(Self {
            table: SymbolTable::build(sigma, grid)?,
        })
    }

    fn apply(&self, fs: &[&GridFunction]) -> Result<GridFunction> {
        if self.table.linearity() == 1 {
            apply_linear_table(&self.table, fs[0])
        } else {
            apply_multilinear_table(&self.table, fs)
        }
    }
}

/// Symbol, certificate and operator for a run; records the certificate.
fn prepare(cfg: &ExperimentConfig, report: &mut RatioReport) -> Result<(Symbol, Operator)> {
    let s = cfg.symbol()?;
    let sigma = build_symbol(s, &cfg.grid)?;
    let cert = certify(&sigma, s, &cfg.grid)?;
    report.diagnostics.seminorm_max = Some(cert.max_entry);
    report.diagnostics.seminorm_ceiling = Some(cert.ceiling);
    let op = Operator::new(&sigma, &cfg.grid)?;
    Ok((sigma, op))
}

struct PointRatio {
    ratio: f64,
    lhs: f64,
    rhs: f64,
    excluded: usize,
}

fn in_window(grid: &GridSpec, flat: usize) -> bool {
    let half = EVAL_WINDOW * grid.side() / 2.0;
    grid.point(flat)[..grid.dim()].iter().all(|c| c.abs() <= half + 1e-12)
}

/// `max_x lhs/rhs` over window points where `rhs >= MASK_THRESHOLD * scale`.
fn pointwise_ratio(grid: &GridSpec, lhs: &[f64], rhs: &[f64], scale: f64, max_excluded: f64) -> Result<PointRatio> {
    let floor = MASK_THRESHOLD * scale;
    let mut best = PointRatio {
        ratio: 0.0,
        lhs: 0.0,
        rhs: 0.0,
        excluded: 0,
    };
    let mut kept = 0usize;
    let mut window = 0usize;
    for (i, (&a, &b)) in lhs.iter().zip(rhs).enumerate() {
        if !in_window(grid, i) {
            continue;
        }
        window += 1;
        if b < floor || b <= 0.0 {
            best.excluded += 1;
            continue;
        }
        kept += 1;
        let q = a / b;
        if q > best.ratio {
            best.ratio = q;
            best.lhs = a;
            best.rhs = b;
        }
    }
    if kept == 0 {
        return Err(Error::Degenerate("right-hand side below the mask everywhere".into()));
    }
    let frac = best.excluded as f64 / window as f64;
    if frac > max_excluded {
        return Err(Error::Degenerate(format!(
            "{:.1}% of points masked (limit {:.1}%)",
            100.0 * frac,
            100.0 * max_excluded
        )));
    }
    Ok(best)
}

fn input_scale(fs: &[GridFunction]) -> f64 {
    fs.iter().map(|f| f.sup_norm()).product()
}

fn refs(fs: &[GridFunction]) -> Vec<&GridFunction> {
    fs.iter().collect()
}

/// Outcome of one corpus case: a record, or the reason it was skipped.
enum CaseOutcome {
    Done(CaseRecord),
    Skipped(String),
}

/// Evaluates `eval` on every corpus case at every sweep index, sweep levels
/// in order and cases in parallel; stops early when the budget runs out.
fn sweep_cases(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    report: &mut RatioReport,
    clock: &Clock,
    eval: impl Fn(&[GridFunction], &str, usize) -> Result<CaseOutcome> + Sync,
) -> Result<()> {
    let l = cfg.linearity();
    let window = (0..cfg.grid.len()).filter(|&i| in_window(&cfg.grid, i)).count();
    for k in 0..corpus.dilations().len() {
        if clock.expired() {
            report.diagnostics.budget_exceeded = true;
            break;
        }
        let outcomes: Vec<Result<CaseOutcome>> = (0..corpus.len())
            .into_par_iter()
            .map(|c| {
                let fs = corpus
                    .slots(c, l)
                    .into_iter()
                    .map(|m| corpus.function(m, k))
                    .collect::<Result<Vec<_>>>()?;
                let id = format!("{}@k{k}", corpus.case_label(c, l));
                eval(&fs, &id, k)
            })
            .collect();
        for o in outcomes {
            match o? {
                CaseOutcome::Done(rec) => {
                    report.diagnostics.excluded_points += rec.excluded_points;
                    report.diagnostics.evaluated_points += window;
                    report.cases.push(rec);
                }
                CaseOutcome::Skipped(id) => report.diagnostics.skipped_cases.push(id),
            }
        }
    }
    report.diagnostics.max_tail_mass = corpus.max_tail_mass();
    Ok(())
}

/// Slope of the per-sweep sup ratio, asserted with the configured bounds.
fn sweep_slope(cfg: &ExperimentConfig, report: &mut RatioReport, name: &str, residual: bool) -> Result<()> {
    let series: Vec<(f64, f64)> = report
        .sup_by_sweep()
        .into_iter()
        .map(|(k, v)| (k as f64, v))
        .collect();
    if series.len() < 3 {
        report
            .diagnostics
            .notes
            .push(format!("{name}: only {} sweep points, no slope fit", series.len()));
        return Ok(());
    }
    let rec = SlopeRecord::new(
        name,
        series,
        cfg.tolerances.slope,
        residual.then_some(cfg.tolerances.residual_band),
    )?;
    report.slopes.push(rec);
    Ok(())
}

fn sup_checks(cfg: &ExperimentConfig, report: &mut RatioReport) {
    let sup = report.cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let all_finite = report.cases.iter().all(|c| c.ratio.is_finite());
    report.checks.push(Check::finite("sup_ratio_finite", if all_finite { sup } else { f64::INFINITY }));
    if let Some(ceiling) = cfg.tolerances.ratio_ceiling {
        report.checks.push(Check::at_most("sup_ratio_ceiling", sup, ceiling));
    }
}

fn exploratory(cfg: &ExperimentConfig) -> bool {
    cfg.symbol.as_ref().is_some_and(|s| s.exploratory)
}

/// `M#_r(T f) <= C M_r f` pointwise over the corpus and sweep.
pub fn run_linear_sharp(cfg: &ExperimentConfig) -> Result<RatioReport> {
    if cfg.linearity() != 1 {
        return Err(Error::param("linearity", "the linear sharp experiment needs l = 1"));
    }
    run_sharp(cfg, false)
}

/// `M#_{r/l}(T(f_1..f_l)) <= C M_r(f_1..f_l)` pointwise over the corpus and
/// sweep. With `l = 1` this reproduces [`run_linear_sharp`].
pub fn run_multilinear_sharp(cfg: &ExperimentConfig) -> Result<RatioReport> {
    run_sharp(cfg, true)
}

fn run_sharp(cfg: &ExperimentConfig, multilinear: bool) -> Result<RatioReport> {
    let clock = Clock::new(cfg);
    let mut report = RatioReport::new(cfg);
    let (_, op) = prepare(cfg, &mut report)?;
    let corpus = Corpus::new(cfg.corpus.as_ref().expect("resolved"), &cfg.grid)?;
    let fam = cfg.cubes.family(&cfg.grid);
    let r = cfg.exponents.r;
    let l = cfg.linearity();
    let t = r / l as f64;
    let max_excluded = cfg.tolerances.max_excluded_fraction;
    sweep_cases(cfg, &corpus, &mut report, &clock, |fs, id, k| {
        let scale = input_scale(fs);
        if scale == 0.0 {
            return Ok(CaseOutcome::Skipped(id.to_string()));
        }
        let g = op.apply(&refs(fs))?;
        let lhs = sharp_maximal_inhomogeneous(&g, t, &fam)?;
        let rhs = if multilinear {
            multisublinear_maximal(&refs(fs), r, &fam)?
        } else {
            hl_maximal(&fs[0], r, &fam)?
        };
        let pr = pointwise_ratio(&cfg.grid, lhs.values(), rhs.values(), scale, max_excluded)?;
        Ok(CaseOutcome::Done(CaseRecord {
            case_id: id.to_string(),
            sweep_k: k as i64,
            lhs: pr.lhs,
            rhs: pr.rhs,
            ratio: pr.ratio,
            excluded_points: pr.excluded,
        }))
    })?;
    sup_checks(cfg, &mut report);
    sweep_slope(cfg, &mut report, "sup_ratio_vs_k", true)?;
    report.finalize(exploratory(cfg));
    Ok(report)
}

/// `BMO_t(T(f_1..f_l)) / prod ||f_j||_inf` with `t = 2/l`.
pub fn run_bmo_corollary(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let clock = Clock::new(cfg);
    let mut report = RatioReport::new(cfg);
    let (_, op) = prepare(cfg, &mut report)?;
    let corpus = Corpus::new(cfg.corpus.as_ref().expect("resolved"), &cfg.grid)?;
    let fam = cfg.cubes.family(&cfg.grid);
    let t = cfg.exponents.t.unwrap_or(2.0 / cfg.linearity() as f64);
    sweep_cases(cfg, &corpus, &mut report, &clock, |fs, id, k| {
        let rhs = input_scale(fs);
        if rhs == 0.0 {
            return Ok(CaseOutcome::Skipped(id.to_string()));
        }
        let g = op.apply(&refs(fs))?;
        let lhs = bmo_seminorm(&g, &fam, t)?;
        Ok(CaseOutcome::Done(CaseRecord {
            case_id: id.to_string(),
            sweep_k: k as i64,
            lhs,
            rhs,
            ratio: lhs / rhs,
            excluded_points: 0,
        }))
    })?;
    sup_checks(cfg, &mut report);
    sweep_slope(cfg, &mut report, "sup_ratio_vs_k", true)?;
    report.finalize(exploratory(cfg));
    Ok(report)
}

/// Per-grid sup ratios of the weighted operator and maximal inequalities.
struct WeightedPass {
    operator_sup: f64,
    maximal_sup: f64,
    cases: Vec<CaseRecord>,
}

fn weighted_pass(cfg: &ExperimentConfig, grid: &GridSpec, corpus: &Corpus, clock: &Clock) -> Result<Option<WeightedPass>> {
    let s = cfg.symbol()?;
    let sigma = build_symbol(s, grid)?;
    let op = Operator::new(&sigma, grid)?;
    let fam = cfg.cubes.family(grid);
    let r = cfg.exponents.r;
    let tuple = cfg.weight_tuple(grid, 1.0)?;
    let v = product_weight(&tuple)?;
    let p = tuple.p();
    let l = cfg.linearity();
    let mut cases = Vec::new();
    for k in 0..corpus.dilations().len() {
        if clock.expired() {
            return Ok(None);
        }
        let level: Vec<Result<[CaseRecord; 2]>> = (0..corpus.len())
            .into_par_iter()
            .map(|c| {
                let fs = corpus
                    .slots(c, l)
                    .into_iter()
                    .map(|m| corpus.function(m, k))
                    .collect::<Result<Vec<_>>>()?;
                let mut rhs = 1.0;
                for (f, (w, pj)) in fs.iter().zip(tuple.weights().iter().zip(tuple.exponents())) {
                    rhs *= lp_norm(f, *pj, Some(w))?;
                }
                let g = op.apply(&refs(&fs))?;
                let lhs_op = lp_norm(&g, p, Some(&v))?;
                let mr = multisublinear_maximal(&refs(&fs), r, &fam)?.to_grid_function();
                let lhs_max = lp_norm(&mr, p, Some(&v))?;
                let id = format!("{}@k{k}", corpus.case_label(c, l));
                Ok([
                    CaseRecord {
                        case_id: format!("operator:{id}"),
                        sweep_k: k as i64,
                        lhs: lhs_op,
                        rhs,
                        ratio: lhs_op / rhs,
                        excluded_points: 0,
                    },
                    CaseRecord {
                        case_id: format!("maximal:{id}"),
                        sweep_k: k as i64,
                        lhs: lhs_max,
                        rhs,
                        ratio: lhs_max / rhs,
                        excluded_points: 0,
                    },
                ])
            })
            .collect();
        for pair in level {
            cases.extend(pair?);
        }
    }
    let sup = |prefix: &str| {
        cases
            .iter()
            .filter(|c| c.case_id.starts_with(prefix))
            .map(|c| c.ratio)
            .fold(0.0, f64::max)
    };
    Ok(Some(WeightedPass {
        operator_sup: sup("operator:"),
        maximal_sup: sup("maximal:"),
        cases,
    }))
}

/// Largest relative excess of `lhs` over `rhs` (zero when `lhs <= rhs`
/// everywhere).
fn embedding_excess(f: &GridFunction, t: f64, fam: &CubeFamily) -> Result<f64> {
    let (lhs, rhs) = sharp_power_embedding(f, t, fam)?;
    Ok(lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| if a <= b { 0.0 } else { (a - b) / b.max(f64::MIN_POSITIVE) })
        .fold(0.0, f64::max))
}

/// Weighted operator and maximal inequalities for a power-weight tuple,
/// stability under one refinement, and the sharp-function sub-checks.
pub fn run_weighted(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let clock = Clock::new(cfg);
    let mut report = RatioReport::new(cfg);
    let (_, op) = prepare(cfg, &mut report)?;
    let grid = cfg.grid;
    let fine = grid.refined()?;
    let corpus = Corpus::new(cfg.corpus.as_ref().expect("resolved"), &grid)?;
    let fine_corpus = corpus.on_grid(&fine)?;
    let r = cfg.exponents.r;
    let l = cfg.linearity();
    let fam = cfg.cubes.family(&grid);

    let tuple_r = cfg.weight_tuple(&grid, r)?;
    let constant = crate::weights::multilinear_ap_constant(&tuple_r, &fam)?;
    report.checks.push(Check::at_most("tuple_constant_p_over_r", constant, cfg.tolerances.ap_ceiling));
    let v = product_weight(&cfg.weight_tuple(&grid, 1.0)?)?;
    let lp_over_r = l as f64 * cfg.weight_tuple(&grid, 1.0)?.p() / r;
    let v_constant = ap_constant(&v, lp_over_r, &fam)?;
    report
        .checks
        .push(Check::finite("product_weight_ap_constant", v_constant).exploratory());

    let coarse = weighted_pass(cfg, &grid, &corpus, &clock)?;
    let refined = match coarse {
        Some(_) => weighted_pass(cfg, &fine, &fine_corpus, &clock)?,
        None => None,
    };
    match (coarse, refined) {
        (Some(c), Some(f)) => {
            report.cases = c.cases;
            report.checks.push(Check::finite("operator_sup_ratio", c.operator_sup));
            report.checks.push(Check::finite("maximal_sup_ratio", c.maximal_sup));
            let drift = |a: f64, b: f64| (b / a - 1.0).abs();
            report.checks.push(Check::at_most(
                "operator_refinement_drift",
                drift(c.operator_sup, f.operator_sup),
                cfg.tolerances.refinement,
            ));
            report.checks.push(Check::at_most(
                "maximal_refinement_drift",
                drift(c.maximal_sup, f.maximal_sup),
                cfg.tolerances.refinement,
            ));
            report.diagnostics.notes.push(format!(
                "refined grid N = {}: operator sup {:.6}, maximal sup {:.6}",
                fine.points(),
                f.operator_sup,
                f.maximal_sup
            ));
        }
        (Some(c), None) => {
            report.cases = c.cases;
            report.diagnostics.budget_exceeded = true;
        }
        _ => report.diagnostics.budget_exceeded = true,
    }
    report.diagnostics.max_tail_mass = corpus.max_tail_mass().max(fine_corpus.max_tail_mass());

    if !report.diagnostics.budget_exceeded {
        // sub-checks on the first sweep level
        let t = cfg.exponents.t.unwrap_or(0.5);
        let power = r / l as f64;
        let dyadic = CubeFamily::dyadic(&grid);
        let q = cfg.weight_tuple(&grid, 1.0)?.p() * l as f64 / r;
        let subs: Vec<Result<(f64, f64)>> = (0..corpus.len())
            .into_par_iter()
            .map(|c| {
                let fs = corpus
                    .slots(c, l)
                    .into_iter()
                    .map(|m| corpus.function(m, 0))
                    .collect::<Result<Vec<_>>>()?;
                let g = op.apply(&refs(&fs))?;
                let excess = embedding_excess(&g, t, &fam)?;
                let gp: Vec<Complex64> = g
                    .samples()
                    .iter()
                    .map(|z| Complex64::new(z.norm().powf(power), 0.0))
                    .collect();
                let gp = GridFunction::new(grid, gp, Domain::Spatial)?;
                let md = dyadic_maximal(&gp, &dyadic)?.to_grid_function();
                let ms = sharp_maximal_homogeneous(&gp, &fam)?.to_grid_function();
                let ratio = lp_norm(&md, q, Some(&v))? / lp_norm(&ms, q, Some(&v))?;
                Ok((excess, ratio))
            })
            .collect();
        let mut excess = 0.0f64;
        let mut domination = 0.0f64;
        for s in subs {
            let (e, d) = s?;
            excess = excess.max(e);
            domination = domination.max(d);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let noise: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let noise = GridFunction::new(grid, noise, Domain::Spatial)?;
        excess = excess.max(embedding_excess(&noise, t, &fam)?);
        report.checks.push(Check::at_most("power_embedding_excess", excess, EMBEDDING_SLACK));
        report.checks.push(Check::finite("dyadic_domination_ratio", domination));
    }
    report.finalize(exploratory(cfg));
    Ok(report)
}

/// Unweighted Lebesgue bounds: one `L^r x .. -> L^{r/(l rho)}` ratio with
/// a refinement check, or per-piece bounds normalised by the predicted
/// growth and fitted against the piece index.
pub fn run_lebesgue_bounds(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let clock = Clock::new(cfg);
    let mut report = RatioReport::new(cfg);
    let (sigma, op) = prepare(cfg, &mut report)?;
    let s = cfg.symbol()?;
    let corpus = Corpus::new(cfg.corpus.as_ref().expect("resolved"), &cfg.grid)?;
    report.diagnostics.max_tail_mass = corpus.max_tail_mass();
    let r = cfg.exponents.r;
    let l = cfg.linearity();
    let n = cfg.grid.dim() as f64;
    let rho = s.rho;
    let all_cases: Vec<(usize, usize)> = (0..corpus.dilations().len())
        .flat_map(|k| (0..corpus.len()).map(move |c| (c, k)))
        .collect();
    let inputs = |corpus: &Corpus, c: usize, k: usize| -> Result<(Vec<GridFunction>, f64)> {
        let fs = corpus
            .slots(c, l)
            .into_iter()
            .map(|m| corpus.function(m, k))
            .collect::<Result<Vec<_>>>()?;
        let mut rhs = 1.0;
        for f in &fs {
            rhs *= lp_norm(f, r, None)?;
        }
        Ok((fs, rhs))
    };

    match cfg.lebesgue_mode()? {
        LebesgueMode::Direct => {
            let q = r / (l as f64 * rho);
            let run = |corpus: &Corpus, op: &Operator| -> Result<Vec<CaseRecord>> {
                all_cases
                    .par_iter()
                    .map(|&(c, k)| {
                        let (fs, rhs) = inputs(corpus, c, k)?;
                        let lhs = lp_norm(&op.apply(&refs(&fs))?, q, None)?;
                        Ok(CaseRecord {
                            case_id: format!("{}@k{k}", corpus.case_label(c, l)),
                            sweep_k: k as i64,
                            lhs,
                            rhs,
                            ratio: lhs / rhs,
                            excluded_points: 0,
                        })
                    })
                    .collect()
            };
            report.cases = run(&corpus, &op)?;
            let sup = report.cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
            report.checks.push(Check::finite("sup_ratio_finite", sup));
            if clock.expired() {
                report.diagnostics.budget_exceeded = true;
            } else {
                let fine = cfg.grid.refined()?;
                let fine_op = Operator::new(&build_symbol(s, &fine)?, &fine)?;
                let fine_cases = run(&corpus.on_grid(&fine)?, &fine_op)?;
                let fine_sup = fine_cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
                report.checks.push(Check::at_most(
                    "refinement_drift",
                    (fine_sup / sup - 1.0).abs(),
                    cfg.tolerances.refinement,
                ));
                report
                    .diagnostics
                    .notes
                    .push(format!("target exponent q = {q}; refined sup ratio {fine_sup:.6}"));
            }
        }
        LebesgueMode::Dilated => {
            let lambda = cfg.exponents.lambda.expect("validated");
            let q = r * (1.0 - lambda) / (l as f64 * (rho - lambda));
            let growth = lambda * n * l as f64 * (1.0 - rho) / (r * (1.0 - lambda));
            let partition = build_partition(&cfg.grid, cfg.grid.dim() * l)?;
            let pieces = lp_pieces(&sigma, &partition)?;
            let top = partition.k_max().min(s.k_max);
            let mut series = Vec::new();
            for (k, piece) in pieces.iter().enumerate().take(top + 1).skip(1) {
                if clock.expired() {
                    report.diagnostics.budget_exceeded = true;
                    break;
                }
                let piece_op = Operator::new(piece, &cfg.grid)?;
                let norm = (growth * k as f64).exp2();
                let recs: Vec<CaseRecord> = all_cases
                    .par_iter()
                    .map(|&(c, j)| {
                        let (fs, rhs) = inputs(&corpus, c, j)?;
                        let lhs = lp_norm(&piece_op.apply(&refs(&fs))?, q, None)?;
                        Ok(CaseRecord {
                            case_id: format!("piece{k}:{}@k{j}", corpus.case_label(c, l)),
                            sweep_k: k as i64,
                            lhs,
                            rhs: rhs * norm,
                            ratio: lhs / (rhs * norm),
                            excluded_points: 0,
                        })
                    })
                    .collect::<Result<_>>()?;
                let sup = recs.iter().map(|c| c.ratio).fold(0.0, f64::max);
                series.push((k as f64, sup));
                report.cases.extend(recs);
            }
            report
                .diagnostics
                .notes
                .push(format!("lambda = {lambda}, q = {q}, predicted growth exponent {growth}"));
            let sup = report.cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
            report.checks.push(Check::finite("sup_ratio_finite", sup));
            if series.len() >= 3 {
                report.slopes.push(SlopeRecord::new(
                    "normalised_piece_norm_vs_k",
                    series,
                    cfg.tolerances.slope,
                    None,
                )?);
            }
        }
    }
    report.finalize(exploratory(cfg));
    Ok(report)
}

/// Weighted kernel norms of the Littlewood-Paley pieces against `k`, for
/// every variant at several seeded base points.
pub fn run_kernel_decay(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let clock = Clock::new(cfg);
    let mut report = RatioReport::new(cfg);
    let (sigma, _) = prepare(cfg, &mut report)?;
    let s = cfg.symbol()?;
    let kc = cfg.kernel.as_ref().expect("resolved");
    let grid = cfg.grid;
    let l = cfg.linearity();
    let r = cfg.exponents.r;
    let partition = build_partition(&grid, grid.dim() * l)?;
    let pieces = lp_pieces(&sigma, &partition)?;
    if kc.k_max > partition.k_max() {
        return Err(Error::param(
            "kernel.k_max",
            format!("exceeds the partition's K_max = {}", partition.k_max()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ys: Vec<usize> = (0..kc.base_points).map(|_| rng.gen_range(0..grid.len())).collect();
    let ks: Vec<usize> = (kc.k_min..=kc.k_max).collect();
    // values[(y, variant)] = [(k, norm)]
    let mut values: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ys.len() * KernelVariant::ALL.len()];
    for &k in &ks {
        if clock.expired() {
            report.diagnostics.budget_exceeded = true;
            break;
        }
        let rows: Vec<Result<Vec<f64>>> = ys
            .par_iter()
            .map(|&y| {
                let kernel = kernel_of_piece(&pieces[k], &grid, y)?;
                KernelVariant::ALL
                    .iter()
                    .map(|&v| kernel_weighted_norm(&kernel, kc.decay, r, s.rho, v))
                    .collect()
            })
            .collect();
        for (yi, row) in rows.into_iter().enumerate() {
            for (vi, val) in row?.into_iter().enumerate() {
                let variant = KernelVariant::ALL[vi];
                let pred = predicted_kernel_exponent(s.order, grid.dim(), l, r, s.rho, variant);
                let rhs = (pred * k as f64).exp2();
                report.cases.push(CaseRecord {
                    case_id: format!("{}@y{}", variant.name(), ys[yi]),
                    sweep_k: k as i64,
                    lhs: val,
                    rhs,
                    ratio: val / rhs,
                    excluded_points: 0,
                });
                values[yi * KernelVariant::ALL.len() + vi].push((k as f64, val));
            }
        }
    }
    if !report.diagnostics.budget_exceeded {
        for (yi, &y) in ys.iter().enumerate() {
            for (vi, &variant) in KernelVariant::ALL.iter().enumerate() {
                let pred = predicted_kernel_exponent(s.order, grid.dim(), l, r, s.rho, variant);
                report.slopes.push(SlopeRecord::new(
                    format!("{}@y{y}", variant.name()),
                    values[yi * KernelVariant::ALL.len() + vi].clone(),
                    pred + cfg.tolerances.kernel_margin,
                    None,
                )?);
            }
        }
    }
    report.diagnostics.notes.push(format!("decay exponent N = {}", kc.decay));
    report.finalize(exploratory(cfg));
    Ok(report)
}

/// Modulated anisotropic Gaussian on `(R^1)^l`.
fn trace_member(grid: &GridSpec, l: usize, a: f64, v: &[f64]) -> Result<ProductGridFunction> {
    let v = v.to_vec();
    ProductGridFunction::from_fn(*grid, l, move |x| {
        let mut q = a * x[0] * x[0] + x[1] * x[1] / a;
        for c in &x[2..] {
            q += c * c;
        }
        let phase: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        Complex64::from_polar((-PI * q).exp(), 2.0 * PI * phase)
    })?
    .checked()
}

/// Trace ratios over an anisotropy-by-modulation corpus, their spread, the
/// modulation-sweep slope, and collapse-versus-restriction agreement.
pub fn run_trace(cfg: &ExperimentConfig) -> Result<RatioReport> {
    let clock = Clock::new(cfg);
    let mut report = RatioReport::new(cfg);
    let tc = cfg.trace.as_ref().expect("resolved");
    let grid = cfg.grid;
    let l = tc.linearity;
    let top_s = tc.s + 0.5 * (l as f64 - 1.0) * grid.dim() as f64;
    let mut worst_tail = 0.0f64;
    for (j, v) in tc.modulations.iter().enumerate() {
        if clock.expired() {
            report.diagnostics.budget_exceeded = true;
            break;
        }
        let recs: Vec<Result<(CaseRecord, f64)>> = tc
            .anisotropies
            .par_iter()
            .map(|&a| {
                let g = trace_member(&grid, l, a, v)?;
                let lhs = sobolev_norm(&diagonal_restrict(&g), tc.s)?;
                let rhs = g.sobolev_norm(top_s);
                if rhs <= 0.0 {
                    return Err(Error::Degenerate("zero Sobolev norm".into()));
                }
                let vs: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
                Ok((
                    CaseRecord {
                        case_id: format!("aniso={a:.6};v={}", vs.join(",")),
                        sweep_k: j as i64,
                        lhs,
                        rhs,
                        ratio: lhs / rhs,
                        excluded_points: 0,
                    },
                    g.tail_mass(),
                ))
            })
            .collect();
        for rec in recs {
            let (rec, tail) = rec?;
            worst_tail = worst_tail.max(tail);
            report.cases.push(rec);
        }
    }
    report.diagnostics.max_tail_mass = worst_tail;
    let max = report.cases.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let min = report.cases.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    report.checks.push(Check::at_most("trace_ratio_spread", max / min, cfg.tolerances.trace_spread));

    // iterated collapse against direct restriction on a tensor of distinct factors
    let parts: Vec<GridFunction> = (0..l)
        .map(|i| {
            GridFunction::from_fn(grid, |x| {
                let c = 0.2 * i as f64 - 0.1;
                Complex64::from_polar((-PI * (1.0 + i as f64) * (x[0] - c).powi(2)).exp(), 2.0 * PI * 0.25 * i as f64 * x[0])
            })
        })
        .collect::<Result<_>>()?;
    let tensor = ProductGridFunction::tensor(&parts.iter().collect::<Vec<_>>())?;
    let mut h = tensor.clone();
    while h.factors() > 1 {
        h = collapse_last(&h)?;
    }
    let direct = diagonal_restrict(&tensor);
    let diff = h
        .samples()
        .iter()
        .zip(direct.samples())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    report.checks.push(Check::at_most("collapse_vs_diagonal", diff, 1e-12));

    if !report.diagnostics.budget_exceeded {
        sweep_slope(cfg, &mut report, "sup_ratio_vs_modulation", false)?;
    }
    report.finalize(false);
    Ok(report)
}
