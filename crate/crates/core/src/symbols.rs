//! Symbols `sigma(x, xi_1, ..., xi_l)` with declared Hörmander class
//! parameters, the two concrete families used by the experiments, their
//! Littlewood-Paley pieces and dilates, and a finite-difference estimator of
//! the class seminorms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{unravel, GridSpec, MAX_AXES};
use crate::littlewood_paley::{euclid, phi_hat, piece_support, psi_hat, LpPartition};

pub type SpatialFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
pub type FrequencyFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
pub type JointFn = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;

/// Class parameters `(m, rho, delta, l, n)` of `M_l S^m_{rho,delta}(R^n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClassParams {
    pub order: f64,
    pub rho: f64,
    pub delta: f64,
    pub linearity: usize,
    pub dim: usize,
}

impl SymbolClassParams {
    pub fn new(order: f64, rho: f64, delta: f64, linearity: usize, dim: usize) -> Result<Self> {
        if !order.is_finite() {
            return Err(Error::param("order", "must be finite"));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::param("rho", format!("need 0 <= rho < 1, got {rho}")));
        }
        if !(0.0..=rho).contains(&delta) {
            return Err(Error::param(
                "delta",
                format!("need 0 <= delta <= rho, got {delta}"),
            ));
        }
        if linearity == 0 {
            return Err(Error::param("linearity", "need l >= 1"));
        }
        if !(1..=2).contains(&dim) || dim * linearity > MAX_AXES {
            return Err(Error::param("dim", format!("unsupported n = {dim}, l = {linearity}")));
        }
        Ok(Self {
            order,
            rho,
            delta,
            linearity,
            dim,
        })
    }

    /// `S^m_{rho,rho}` with `l` slots.
    pub fn exotic(order: f64, rho: f64, linearity: usize, dim: usize) -> Result<Self> {
        Self::new(order, rho, rho, linearity, dim)
    }

    /// Number of frequency axes `n l`.
    pub fn frequency_axes(&self) -> usize {
        self.dim * self.linearity
    }

    /// Parameters of `sigma_k(2^{-lambda k} x, 2^{lambda k} xi)`:
    /// `(m / (1 - lambda), (rho - lambda) / (1 - lambda))` for both exotic
    /// indices.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        let rho = (self.rho - lambda) / (1.0 - lambda);
        Self::new(self.order / (1.0 - lambda), rho, rho, self.linearity, self.dim)
    }
}

/// Critical order `-(n l / r)(1 - rho)`.
pub fn critical_order(dim: usize, linearity: usize, r: f64, rho: f64) -> f64 {
    -((dim * linearity) as f64 / r) * (1.0 - rho)
}

/// Reproducible description of how a symbol was built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolDescriptor {
    pub family: String,
    pub params: SymbolClassParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Piece extraction and dilation steps applied after construction.
    #[serde(default)]
    pub transforms: Vec<String>,
}

/// One summand of a symbol.
#[derive(Clone)]
pub enum SymbolTerm {
    /// `a(x) b(xi)`; `spatial = None` means `a == 1`.
    Separable {
        spatial: Option<SpatialFn>,
        frequency: FrequencyFn,
    },
    Joint(JointFn),
}

impl fmt::Debug for SymbolTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolTerm::Separable { spatial, .. } => f
                .debug_struct("Separable")
                .field("x_dependent", &spatial.is_some())
                .finish_non_exhaustive(),
            SymbolTerm::Joint(_) => f.write_str("Joint(..)"),
        }
    }
}

impl SymbolTerm {
    fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        match self {
            SymbolTerm::Separable { spatial, frequency } => {
                let b = frequency(xi);
                match spatial {
                    Some(a) => a(x) * b,
                    None => b,
                }
            }
            SymbolTerm::Joint(g) => g(x, xi),
        }
    }

    fn map_frequency(&self, g: impl Fn(&[f64], Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        let g = Arc::new(g);
        match self {
            SymbolTerm::Separable { spatial, frequency } => {
                let frequency = frequency.clone();
                SymbolTerm::Separable {
                    spatial: spatial.clone(),
                    frequency: Arc::new(move |xi| g(xi, frequency(xi))),
                }
            }
            SymbolTerm::Joint(j) => {
                let j = j.clone();
                SymbolTerm::Joint(Arc::new(move |x, xi| g(xi, j(x, xi))))
            }
        }
    }

    fn rescaled_arguments(&self, x_scale: f64, xi_scale: f64) -> Self {
        match self {
            SymbolTerm::Separable { spatial, frequency } => {
                let frequency = frequency.clone();
                let spatial = spatial.clone().map(|a| -> SpatialFn {
                    Arc::new(move |x: &[f64]| {
                        let mut y = [0.0; MAX_AXES];
                        for (yi, xv) in y.iter_mut().zip(x) {
                            *yi = x_scale * xv;
                        }
                        a(&y[..x.len()])
                    })
                });
                SymbolTerm::Separable {
                    spatial,
                    frequency: Arc::new(move |xi: &[f64]| {
                        let mut e = [0.0; MAX_AXES];
                        for (ei, v) in e.iter_mut().zip(xi) {
                            *ei = xi_scale * v;
                        }
                        frequency(&e[..xi.len()])
                    }),
                }
            }
            SymbolTerm::Joint(j) => {
                let j = j.clone();
                SymbolTerm::Joint(Arc::new(move |x: &[f64], xi: &[f64]| {
                    let mut y = [0.0; MAX_AXES];
                    let mut e = [0.0; MAX_AXES];
                    for (yi, xv) in y.iter_mut().zip(x) {
                        *yi = x_scale * xv;
                    }
                    for (ei, v) in e.iter_mut().zip(xi) {
                        *ei = xi_scale * v;
                    }
                    j(&y[..x.len()], &e[..xi.len()])
                }))
            }
        }
    }
}

/// A symbol with declared class parameters.
#[derive(Clone, Debug)]
pub struct Symbol {
    params: SymbolClassParams,
    descriptor: SymbolDescriptor,
    terms: Vec<SymbolTerm>,
    /// Radial interval in `|xi|` outside which the symbol vanishes, when known.
    support: Option<(f64, f64)>,
    /// Index of the Littlewood-Paley piece this symbol is, if it is one.
    piece: Option<usize>,
}

impl Symbol {
    pub fn from_terms(params: SymbolClassParams, family: &str, terms: Vec<SymbolTerm>) -> Self {
        Self {
            params,
            descriptor: SymbolDescriptor {
                family: family.to_string(),
                params,
                k_max: None,
                seed: None,
                transforms: Vec::new(),
            },
            terms,
            support: None,
            piece: None,
        }
    }

    /// `sigma == c`.
    pub fn constant(params: SymbolClassParams, c: Complex64) -> Self {
        Self::multiplier(params, "constant", move |_| c)
    }

    /// x-independent symbol `sigma(x, xi) = b(xi)`.
    pub fn multiplier(
        params: SymbolClassParams,
        family: &str,
        b: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_terms(
            params,
            family,
            vec![SymbolTerm::Separable {
                spatial: None,
                frequency: Arc::new(b),
            }],
        )
    }

    pub fn separable(
        params: SymbolClassParams,
        family: &str,
        a: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
        b: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_terms(
            params,
            family,
            vec![SymbolTerm::Separable {
                spatial: Some(Arc::new(a)),
                frequency: Arc::new(b),
            }],
        )
    }

    pub fn from_fn(
        params: SymbolClassParams,
        family: &str,
        f: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_terms(params, family, vec![SymbolTerm::Joint(Arc::new(f))])
    }

    pub fn params(&self) -> &SymbolClassParams {
        &self.params
    }

    pub fn descriptor(&self) -> &SymbolDescriptor {
        &self.descriptor
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn linearity(&self) -> usize {
        self.params.linearity
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn piece_index(&self) -> Option<usize> {
        self.piece
    }

    pub fn with_params(mut self, params: SymbolClassParams) -> Self {
        self.params = params;
        self.descriptor.params = params;
        self
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some((lo, hi));
        self
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        self.terms.iter().map(|t| t.eval(x, xi)).sum()
    }

    pub fn is_x_independent(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t, SymbolTerm::Separable { spatial: None, .. }))
    }

    pub fn is_separable(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t, SymbolTerm::Separable { .. }))
    }

    /// Sum of two symbols on the same slots; parameters of `self` are kept.
    pub fn plus(&self, other: &Symbol) -> Result<Symbol> {
        if self.linearity() != other.linearity() || self.dim() != other.dim() {
            return Err(Error::param("other", "slot structure differs"));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.support = None;
        out.piece = None;
        out.descriptor.transforms.push(format!("plus {}", other.descriptor.family));
        Ok(out)
    }
}

/// Dyadic modulation family
/// `sigma(x, xi) = sum_{k=1}^{K} c_k 2^{k m} psi(2^{-k} |xi|) e^{2 pi i <v_k, x>}`
/// with `|v_k| = 2^{k rho} / (2 pi)` and unimodular seeded `c_k`.
///
/// For `l > 1` the annular profile is radial in `xi = (xi_1, ..., xi_l)`.
pub fn dyadic_modulation_symbol(
    params: SymbolClassParams,
    grid: &GridSpec,
    k_max: usize,
    seed: u64,
) -> Result<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients: Vec<Complex64> = (0..k_max)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let directions: Vec<[f64; 2]> = (0..k_max)
        .map(|_| {
            if params.dim == 1 {
                [if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0]
            } else {
                let a = rng.gen_range(0.0..2.0 * PI);
                [a.cos(), a.sin()]
            }
        })
        .collect();
    let mut sym = dyadic_modulation_with(params, grid, &coefficients, &directions)?;
    sym.descriptor.seed = Some(seed);
    Ok(sym)
}

/// Dyadic modulation family with explicit coefficients `c_1..c_K`, all
/// modulations pointing along `+x_1`.
pub fn dyadic_modulation_from_coefficients(
    params: SymbolClassParams,
    grid: &GridSpec,
    coefficients: &[Complex64],
) -> Result<Symbol> {
    let directions = vec![[1.0, 0.0]; coefficients.len()];
    dyadic_modulation_with(params, grid, coefficients, &directions)
}

fn dyadic_modulation_with(
    params: SymbolClassParams,
    grid: &GridSpec,
    coefficients: &[Complex64],
    directions: &[[f64; 2]],
) -> Result<Symbol> {
    if grid.dim() != params.dim {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs symbol dimension {}",
            grid.dim(),
            params.dim
        )));
    }
    let k_top = coefficients.len();
    if k_top == 0 {
        return Err(Error::param("k_max", "need at least one annulus"));
    }
    let admissible = max_modulation_k(params.rho, grid);
    if k_top > admissible {
        return Err(Error::ModulationTooHigh { max_k: admissible });
    }
    let m = params.order;
    let rho = params.rho;
    let terms = coefficients
        .iter()
        .zip(directions)
        .enumerate()
        .map(|(i, (&c, dir))| {
            let k = (i + 1) as f64;
            let amp = c * (k * m).exp2();
            let speed = (k * rho).exp2() / (2.0 * PI);
            let v = [speed * dir[0], speed * dir[1]];
            let shrink = (-k).exp2();
            SymbolTerm::Separable {
                spatial: Some(Arc::new(move |x: &[f64]| {
                    let phase: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
                    Complex64::from_polar(1.0, 2.0 * PI * phase)
                })),
                frequency: Arc::new(move |xi: &[f64]| amp * psi_hat(shrink * euclid(xi))),
            }
        })
        .collect();
    let mut sym = Symbol::from_terms(params, "dyadic_modulation", terms)
        .with_support(0.5, (k_top as f64 + 1.0).exp2());
    sym.descriptor.k_max = Some(k_top);
    Ok(sym)
}

/// Largest `K` for which the dyadic modulation family fits on `grid`: annulus
/// `K` inside the Nyquist band and `|v_K| = 2^{K rho}/(2 pi)` resolvable.
pub fn max_modulation_k(rho: f64, grid: &GridSpec) -> usize {
    let nyq = grid.nyquist();
    let mut k = 0;
    while ((k + 2) as f64).exp2() <= nyq
        && (((k + 1) as f64) * rho).exp2() / (2.0 * PI) <= nyq
    {
        k += 1;
    }
    k
}

/// x-independent exotic symbol
/// `sigma(xi) = (1 - phi(xi)) (1 + |xi|^2)^{m/2} e^{i |xi|^{1 - rho}}`,
/// a member of `S^m_{rho,0}` and hence of `S^m_{rho,rho}`.
pub fn oscillatory_symbol(order: f64, rho: f64, dim: usize) -> Result<Symbol> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param("rho", format!("need 0 < rho < 1, got {rho}")));
    }
    let params = SymbolClassParams::new(order, rho, 0.0, 1, dim)?;
    Ok(Symbol::multiplier(params, "oscillatory", move |xi| {
        let r = euclid(xi);
        let amp = (1.0 - phi_hat(r)) * (1.0 + r * r).powf(0.5 * order);
        Complex64::from_polar(amp, r.powf(1.0 - rho))
    }))
}

/// Littlewood-Paley pieces `sigma_0, ..., sigma_{K_max}` with
/// `sigma_k = sigma * psi_k` (`sigma_0 = sigma * phi`).
///
/// The pieces sum to `sigma` wherever `|xi| <= 2^{K_max}`, hence everywhere
/// for symbols supported in that ball.
pub fn lp_pieces(sigma: &Symbol, partition: &LpPartition) -> Result<Vec<Symbol>> {
    if partition.total_dimension() != sigma.params.frequency_axes() {
        return Err(Error::param(
            "partition",
            format!(
                "partition acts on {} axes, symbol has {}",
                partition.total_dimension(),
                sigma.params.frequency_axes()
            ),
        ));
    }
    let shared = Arc::new(partition.clone());
    Ok((0..=partition.k_max())
        .map(|k| {
            let p = shared.clone();
            let terms = sigma
                .terms
                .iter()
                .map(|t| {
                    let p = p.clone();
                    t.map_frequency(move |xi, v| v * p.piece(k, xi))
                })
                .collect();
            let (lo, hi) = piece_support(k);
            let mut piece = sigma.clone();
            piece.terms = terms;
            piece.support = Some((lo, hi));
            piece.piece = Some(k);
            piece.descriptor.transforms.push(format!("piece {k}"));
            piece
        })
        .collect())
}

/// `tau_k(x, xi) = sigma_k(2^{-lambda k} x, 2^{lambda k} xi)` with the
/// transformed class `(m/(1-lambda), (rho-lambda)/(1-lambda))`.
///
/// `target` is the grid the dilate will be applied on; the dilated support
/// must stay inside its Nyquist band.
pub fn dilate_symbol(
    sigma_k: &Symbol,
    lambda: f64,
    k: usize,
    target: &GridSpec,
) -> Result<Symbol> {
    let rho = sigma_k.params.rho;
    if !(lambda >= 0.0 && lambda <= rho) {
        return Err(Error::param(
            "lambda",
            format!("need 0 <= lambda <= rho = {rho}, got {lambda}"),
        ));
    }
    if lambda == 0.0 {
        return Ok(sigma_k.clone());
    }
    let stretch = (lambda * k as f64).exp2();
    let support = sigma_k.support.map(|(lo, hi)| (lo / stretch, hi / stretch));
    if let Some((_, hi)) = support {
        if hi > target.nyquist() * (1.0 + 1e-12) {
            return Err(Error::SupportViolation(format!(
                "dilated support reaches |xi| = {hi}, beyond Nyquist {}",
                target.nyquist()
            )));
        }
    }
    let params = sigma_k.params.dilated(lambda)?;
    let mut out = sigma_k.clone().with_params(params);
    out.terms = sigma_k
        .terms
        .iter()
        .map(|t| t.rescaled_arguments(1.0 / stretch, stretch))
        .collect();
    out.support = support;
    out.descriptor
        .transforms
        .push(format!("dilate lambda={lambda} k={k}"));
    Ok(out)
}

/// Memoized samples of a symbol on `x-grid x (xi-grid)^l`.
pub struct SymbolTable {
    grid: GridSpec,
    linearity: usize,
    /// `(a(x) table or None, b(xi) table)` per separable term.
    separable: Vec<(Option<Vec<Complex64>>, Vec<Complex64>)>,
    /// Sum of all joint terms, indexed `[ix * n_freq + ixi]`.
    joint: Option<Vec<Complex64>>,
    n_freq: usize,
}

impl SymbolTable {
    pub fn build(sigma: &Symbol, grid: &GridSpec) -> Result<Self> {
        if grid.dim() != sigma.dim() {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} vs symbol dimension {}",
                grid.dim(),
                sigma.dim()
            )));
        }
        let axes = sigma.params.frequency_axes();
        let n_freq = grid.points().pow(axes as u32);
        let n_x = grid.len();
        let xs: Vec<[f64; 2]> = (0..n_x).map(|i| grid.point(i)).collect();
        let freq_point = |flat: usize| {
            let idx = unravel(flat, grid.points(), axes);
            let mut xi = [0.0; MAX_AXES];
            for a in 0..axes {
                xi[a] = grid.freq(idx[a]);
            }
            xi
        };
        let n = grid.dim();
        let mut separable = Vec::new();
        let mut joint: Option<Vec<Complex64>> = None;
        for term in &sigma.terms {
            match term {
                SymbolTerm::Separable { spatial, frequency } => {
                    let a = spatial
                        .as_ref()
                        .map(|a| xs.iter().map(|x| a(&x[..n])).collect::<Vec<_>>());
                    let b: Vec<Complex64> = (0..n_freq)
                        .into_par_iter()
                        .map(|f| frequency(&freq_point(f)[..axes]))
                        .collect();
                    separable.push((a, b));
                }
                SymbolTerm::Joint(g) => {
                    let table = joint.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); n_x * n_freq]);
                    table
                        .par_chunks_mut(n_freq)
                        .enumerate()
                        .for_each(|(ix, row)| {
                            for (f, slot) in row.iter_mut().enumerate() {
                                *slot += g(&xs[ix][..n], &freq_point(f)[..axes]);
                            }
                        });
                }
            }
        }
        let all = separable
            .iter()
            .flat_map(|(a, b)| a.iter().flatten().chain(b.iter()))
            .chain(joint.iter().flatten());
        for z in all {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite("symbol table"));
            }
        }
        Ok(Self {
            grid: *grid,
            linearity: sigma.linearity(),
            separable,
            joint,
            n_freq,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn linearity(&self) -> usize {
        self.linearity
    }

    pub fn frequency_len(&self) -> usize {
        self.n_freq
    }

    #[inline]
    pub fn at(&self, ix: usize, ixi: usize) -> Complex64 {
        let mut acc = match &self.joint {
            Some(t) => t[ix * self.n_freq + ixi],
            None => Complex64::new(0.0, 0.0),
        };
        for (a, b) in &self.separable {
            acc += match a {
                Some(a) => a[ix] * b[ixi],
                None => b[ixi],
            };
        }
        acc
    }

    /// Separable terms as `(a table, b table)` pairs; `None` if any term is
    /// joint.
    pub(crate) fn separable_terms(&self) -> Option<&[(Option<Vec<Complex64>>, Vec<Complex64>)]> {
        if self.joint.is_some() {
            None
        } else {
            Some(&self.separable)
        }
    }
}

/// Options for [`estimate_seminorms`].
#[derive(Clone, Copy, Debug)]
pub struct SeminormOptions {
    /// Highest derivative order per variable group (capped at 2).
    pub max_order: usize,
    /// Pass iff every entry is at most this value.
    pub ceiling: f64,
    /// Only every `x_stride`-th spatial grid point enters the supremum.
    pub x_stride: usize,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        Self {
            max_order: 2,
            ceiling: DEFAULT_SEMINORM_CEILING,
            x_stride: 1,
        }
    }
}

/// Seminorm ceiling used when certifying the crate's symbol families.
pub const DEFAULT_SEMINORM_CEILING: f64 = 64.0;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeminormEntry {
    /// Derivative orders in `x`, one per spatial axis.
    pub alpha: Vec<usize>,
    /// Derivative orders in `xi_1, ..., xi_l`, flattened over `n l` axes.
    pub beta: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeminormReport {
    pub declared: SymbolClassParams,
    pub entries: Vec<SeminormEntry>,
    pub max_entry: f64,
    pub ceiling: f64,
    pub pass: bool,
}

impl SeminormReport {
    pub fn entry(&self, alpha: &[usize], beta: &[usize]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.alpha == alpha && e.beta == beta)
            .map(|e| e.value)
    }
}

/// All multi-indices on `axes` axes with total order at most `max_order`.
fn multi_indices(axes: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..axes {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                let used: usize = prefix.iter().sum();
                (0..=max_order - used).map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect();
    }
    out
}

/// Central-difference stencil of order 0, 1 or 2 with step `d`.
fn stencil(order: usize, d: f64) -> &'static [(i32, f64)] {
    // Weights are scaled by the caller; see `stencil_weight`.
    let _ = d;
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        _ => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    }
}

/// Finite-difference derivative `partial^orders f(at)` with steps `steps`.
fn finite_difference(
    f: &dyn Fn(&[f64]) -> Complex64,
    at: &[f64],
    orders: &[usize],
    steps: &[f64],
) -> Complex64 {
    let axes = at.len();
    let stencils: Vec<&[(i32, f64)]> = orders.iter().map(|&o| stencil(o, 0.0)).collect();
    let scale: f64 = orders
        .iter()
        .zip(steps)
        .map(|(&o, &d)| d.powi(-(o as i32)))
        .product();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut counter = vec![0usize; axes];
    let mut point = [0.0; 2 * MAX_AXES];
    loop {
        let mut w = 1.0;
        for a in 0..axes {
            let (shift, wa) = stencils[a][counter[a]];
            w *= wa;
            point[a] = at[a] + shift as f64 * steps[a];
        }
        acc += f(&point[..axes]) * w;
        let mut a = 0;
        loop {
            if a == axes {
                return acc * scale;
            }
            counter[a] += 1;
            if counter[a] < stencils[a].len() {
                break;
            }
            counter[a] = 0;
            a += 1;
        }
    }
}

/// Finite-difference estimate of
/// `C_{alpha,beta} = sup |d_x^alpha d_xi^beta sigma| / (1 + sum_j |xi_j|)^{m + delta|alpha| - rho|beta|}`
/// over the grid, for `|alpha| <= max_order` and `|beta_j| <= max_order`.
pub fn estimate_seminorms(
    sigma: &Symbol,
    declared: &SymbolClassParams,
    grid: &GridSpec,
    options: SeminormOptions,
) -> Result<SeminormReport> {
    if grid.dim() != sigma.dim() || declared.dim != sigma.dim() {
        return Err(Error::GridMismatch("symbol, declared class and grid dimensions differ".into()));
    }
    let max_order = options.max_order.min(2);
    let n = sigma.dim();
    let l = sigma.linearity();
    let axes = n * l;
    let h = grid.spacing();
    let dxi = grid.freq_spacing();
    let n_freq = grid.points().pow(axes as u32);
    let stride = options.x_stride.max(1);
    let x_indices: Vec<usize> = (0..grid.len()).step_by(stride).collect();
    let xs: Vec<[f64; 2]> = x_indices.iter().map(|&i| grid.point(i)).collect();
    let freq_point = |flat: usize| {
        let idx = unravel(flat, grid.points(), axes);
        let mut xi = [0.0; MAX_AXES];
        for a in 0..axes {
            xi[a] = grid.freq(idx[a]);
        }
        xi
    };
    let weight_base: Vec<f64> = (0..n_freq)
        .map(|f| {
            let xi = freq_point(f);
            1.0 + (0..l).map(|j| euclid(&xi[j * n..(j + 1) * n])).sum::<f64>()
        })
        .collect();

    let alphas = multi_indices(n, max_order);
    let beta_slot = multi_indices(n, max_order);
    let mut betas: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..l {
        betas = betas
            .into_iter()
            .flat_map(|p| {
                beta_slot.iter().map(move |b| {
                    let mut q = p.clone();
                    q.extend_from_slice(b);
                    q
                })
            })
            .collect();
    }
    let x_steps = vec![h; n];
    let xi_steps = vec![dxi; axes];

    let mut entries = Vec::with_capacity(alphas.len() * betas.len());
    for alpha in &alphas {
        // spatial derivative tables per term (None = constant factor)
        let a_tables: Vec<Option<Vec<Complex64>>> = sigma
            .terms
            .iter()
            .map(|t| match t {
                SymbolTerm::Separable { spatial: Some(a), .. } => Some(
                    xs.iter()
                        .map(|x| finite_difference(&|p| a(p), &x[..n], alpha, &x_steps))
                        .collect(),
                ),
                SymbolTerm::Separable { spatial: None, .. } => {
                    let zero = alpha.iter().sum::<usize>() == 0;
                    let v = if zero { 1.0 } else { 0.0 };
                    Some(vec![Complex64::new(v, 0.0); 1])
                }
                SymbolTerm::Joint(_) => None,
            })
            .collect();
        for beta in &betas {
            let exponent = declared.order + declared.delta * alpha.iter().sum::<usize>() as f64
                - declared.rho * beta.iter().sum::<usize>() as f64;
            let b_tables: Vec<Option<Vec<Complex64>>> = sigma
                .terms
                .iter()
                .map(|t| match t {
                    SymbolTerm::Separable { frequency, .. } => Some(
                        (0..n_freq)
                            .into_par_iter()
                            .map(|f| {
                                let xi = freq_point(f);
                                finite_difference(&|p| frequency(p), &xi[..axes], beta, &xi_steps)
                            })
                            .collect(),
                    ),
                    SymbolTerm::Joint(_) => None,
                })
                .collect();
            let value = (0..n_freq)
                .into_par_iter()
                .map(|f| {
                    let xi = freq_point(f);
                    let w = weight_base[f].powf(exponent);
                    let mut best = 0.0f64;
                    for (ixs, x) in xs.iter().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (ti, term) in sigma.terms.iter().enumerate() {
                            match term {
                                SymbolTerm::Separable { .. } => {
                                    let a = a_tables[ti].as_ref().unwrap();
                                    let av = if a.len() == 1 { a[0] } else { a[ixs] };
                                    acc += av * b_tables[ti].as_ref().unwrap()[f];
                                }
                                SymbolTerm::Joint(g) => {
                                    let mut orders = alpha.clone();
                                    orders.extend_from_slice(beta);
                                    let mut at = [0.0; 2 * MAX_AXES];
                                    at[..n].copy_from_slice(&x[..n]);
                                    at[n..n + axes].copy_from_slice(&xi[..axes]);
                                    let mut steps = x_steps.clone();
                                    steps.extend_from_slice(&xi_steps);
                                    acc += finite_difference(
                                        &|p| g(&p[..n], &p[n..]),
                                        &at[..n + axes],
                                        &orders,
                                        &steps,
                                    );
                                }
                            }
                        }
                        best = best.max(acc.norm() / w);
                    }
                    best
                })
                .reduce(|| 0.0, f64::max);
            if !value.is_finite() {
                return Err(Error::NonFinite("seminorm difference quotient"));
            }
            entries.push(SeminormEntry {
                alpha: alpha.clone(),
                beta: beta.clone(),
                value,
            });
        }
    }
    let max_entry = entries.iter().map(|e| e.value).fold(0.0, f64::max);
    Ok(SeminormReport {
        declared: *declared,
        entries,
        max_entry,
        ceiling: options.ceiling,
        pass: max_entry <= options.ceiling,
    })
}

/// `sup |sigma_k| / 2^{k m}` over the grid: the undifferentiated piece bound.
pub fn piece_amplitude(sigma_k: &Symbol, k: usize, grid: &GridSpec) -> Result<f64> {
    let table = SymbolTable::build(sigma_k, grid)?;
    let norm = (k as f64 * sigma_k.params.order).exp2();
    let mut best = 0.0f64;
    for ix in 0..grid.len() {
        for f in 0..table.frequency_len() {
            best = best.max(table.at(ix, f).norm());
        }
    }
    Ok(best / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::build_partition;

    fn line(side: f64, points: usize) -> GridSpec {
        GridSpec::line(side, points).unwrap()
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(1, 2).len(), 3);
        assert_eq!(multi_indices(2, 2).len(), 6);
    }

    #[test]
    fn params_validation() {
        assert!(SymbolClassParams::new(0.0, 1.0, 0.0, 1, 1).is_err());
        assert!(SymbolClassParams::new(0.0, 0.5, 0.6, 1, 1).is_err());
        assert!(SymbolClassParams::new(0.0, 0.5, 0.5, 0, 1).is_err());
        let p = SymbolClassParams::exotic(-0.5, 0.5, 1, 1).unwrap();
        let d = p.dilated(0.5).unwrap();
        assert_eq!(d.rho, 0.0);
        assert!((d.order + 1.0).abs() < 1e-15);
    }

    #[test]
    fn critical_order_arithmetic() {
        assert_eq!(critical_order(1, 2, 2.0, 0.5), -0.5);
        assert_eq!(critical_order(1, 1, 2.0, 0.5), -0.25);
    }

    #[test]
    fn family_is_deterministic() {
        let g = line(16.0, 512);
        let p = SymbolClassParams::exotic(-0.25, 0.5, 1, 1).unwrap();
        let a = SymbolTable::build(&dyadic_modulation_symbol(p, &g, 3, 7).unwrap(), &g).unwrap();
        let b = SymbolTable::build(&dyadic_modulation_symbol(p, &g, 3, 7).unwrap(), &g).unwrap();
        for ix in (0..512).step_by(17) {
            for f in 0..512 {
                assert_eq!(a.at(ix, f), b.at(ix, f));
            }
        }
    }

    #[test]
    fn modulation_beyond_band_rejected() {
        let g = line(32.0, 512);
        let p = SymbolClassParams::exotic(0.0, 0.5, 1, 1).unwrap();
        match dyadic_modulation_symbol(p, &g, 5, 1) {
            Err(Error::ModulationTooHigh { max_k }) => assert_eq!(max_k, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oscillatory_symbol_values() {
        assert!(oscillatory_symbol(0.0, 1.0, 1).is_err());
        assert!(oscillatory_symbol(0.0, 0.0, 1).is_err());
        let s = oscillatory_symbol(0.0, 0.5, 1).unwrap();
        assert_eq!(s.eval(&[0.0], &[0.0]).norm(), 0.0);
        let s = oscillatory_symbol(-0.5, 0.5, 1).unwrap();
        for xi in [2.0, 3.5, 10.0, 40.0] {
            let expect = (1.0f64 + xi * xi).powf(-0.25);
            assert!((s.eval(&[0.3], &[xi]).norm() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_symbol_pieces_are_the_partition() {
        let g = line(32.0, 512);
        let p = build_partition(&g, 1).unwrap();
        let one = Symbol::constant(
            SymbolClassParams::exotic(0.0, 0.5, 1, 1).unwrap(),
            Complex64::new(1.0, 0.0),
        );
        let pieces = lp_pieces(&one, &p).unwrap();
        assert_eq!(pieces.len(), 3);
        for i in 0..512 {
            let xi = [g.freq(i)];
            assert_eq!(pieces[0].eval(&[0.0], &xi).re, phi_hat(xi[0].abs()));
            for k in 1..=2 {
                assert_eq!(pieces[k].eval(&[0.0], &xi).re, p.piece(k, &xi));
            }
        }
    }

    #[test]
    fn annulus_two_touches_three_pieces() {
        let g = line(8.0, 2048);
        let p = build_partition(&g, 1).unwrap();
        let s = Symbol::multiplier(
            SymbolClassParams::exotic(0.0, 0.5, 1, 1).unwrap(),
            "annulus",
            |xi| Complex64::new(psi_hat(euclid(xi) / 4.0), 0.0),
        );
        let pieces = lp_pieces(&s, &p).unwrap();
        let nonzero: Vec<usize> = pieces
            .iter()
            .enumerate()
            .filter(|(_, pk)| (0..2048).any(|i| pk.eval(&[0.0], &[g.freq(i)]).norm() > 0.0))
            .map(|(k, _)| k)
            .collect();
        assert_eq!(nonzero, vec![1, 2, 3]);
    }

    #[test]
    fn pieces_reconstruct_family() {
        let g = line(16.0, 512);
        let p = build_partition(&g, 1).unwrap();
        let params = SymbolClassParams::exotic(-0.5, 0.5, 1, 1).unwrap();
        let s = dyadic_modulation_symbol(params, &g, p.k_max() - 1, 11).unwrap();
        let pieces = lp_pieces(&s, &p).unwrap();
        let whole = SymbolTable::build(&s, &g).unwrap();
        let tables: Vec<_> = pieces.iter().map(|pk| SymbolTable::build(pk, &g).unwrap()).collect();
        let mut worst = 0.0f64;
        for ix in (0..512).step_by(5) {
            for f in 0..512 {
                let sum: Complex64 = tables.iter().map(|t| t.at(ix, f)).sum();
                worst = worst.max((sum - whole.at(ix, f)).norm());
            }
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn lp_pieces_dimension_mismatch() {
        let g = line(16.0, 512);
        let p = build_partition(&g, 2).unwrap();
        let one = Symbol::constant(
            SymbolClassParams::exotic(0.0, 0.5, 1, 1).unwrap(),
            Complex64::new(1.0, 0.0),
        );
        assert!(lp_pieces(&one, &p).is_err());
    }

    #[test]
    fn dilation_parameter_edges() {
        let g = line(16.0, 512);
        let params = SymbolClassParams::exotic(-0.5, 0.5, 1, 1).unwrap();
        let s = dyadic_modulation_symbol(params, &g, 3, 3).unwrap();
        let p = build_partition(&g, 1).unwrap();
        let piece = lp_pieces(&s, &p).unwrap().remove(2);
        let same = dilate_symbol(&piece, 0.0, 2, &g).unwrap();
        assert_eq!(same.params(), piece.params());
        let end = dilate_symbol(&piece, 0.5, 2, &g).unwrap();
        assert_eq!(end.params().rho, 0.0);
        assert!((end.params().order + 1.0).abs() < 1e-15);
        assert!(dilate_symbol(&piece, 0.6, 2, &g).is_err());
        assert!(dilate_symbol(&piece, -0.1, 2, &g).is_err());
        let x = [0.7];
        let xi = [3.0];
        let stretch = 2f64.powf(0.5 * 2.0);
        let v = end.eval(&x, &xi);
        let w = piece.eval(&[x[0] / stretch], &[xi[0] * stretch]);
        assert!((v - w).norm() < 1e-15);
    }

    #[test]
    fn constant_symbol_seminorms() {
        let g = line(16.0, 256);
        let params = SymbolClassParams::exotic(0.0, 0.5, 1, 1).unwrap();
        let one = Symbol::constant(params, Complex64::new(1.0, 0.0));
        let report = estimate_seminorms(&one, &params, &g, SeminormOptions::default()).unwrap();
        assert_eq!(report.entry(&[0], &[0]), Some(1.0));
        for e in &report.entries {
            if e.alpha[0] + e.beta[0] > 0 {
                assert!(e.value <= 1e-8, "{e:?}");
            }
        }
        assert!(report.pass);
    }

    #[test]
    fn bessel_symbol_seminorms_against_closed_form() {
        // (1 + |xi|^2)^{1/2}: first derivative xi/(1+xi^2)^{1/2}, second (1+xi^2)^{-3/2}
        let g = line(16.0, 256);
        let params = SymbolClassParams::new(1.0, 0.0, 0.0, 1, 1).unwrap();
        let s = Symbol::multiplier(params, "bessel", |xi| {
            Complex64::new((1.0 + xi[0] * xi[0]).sqrt(), 0.0)
        });
        let report = estimate_seminorms(&s, &params, &g, SeminormOptions::default()).unwrap();
        let mut oracle = [0.0f64; 3];
        for i in 0..256 {
            let xi = g.freq(i);
            let w = 1.0 + xi.abs();
            let q = 1.0 + xi * xi;
            oracle[0] = oracle[0].max(q.sqrt() / w);
            oracle[1] = oracle[1].max((xi / q.sqrt()).abs() / w);
            oracle[2] = oracle[2].max(q.powf(-1.5) / w);
        }
        for b in 0..3 {
            let got = report.entry(&[0], &[b]).unwrap();
            assert!((got - oracle[b]).abs() <= 1e-3 * oracle[b].max(1e-3), "beta={b}: {got} vs {}", oracle[b]);
            assert!(got <= 2.0);
        }
        assert!(report.pass);
    }
}
