//! Linear and multilinear pseudo-differential operators by frequency
//! quadrature on the periodic grid, and the kernels of Littlewood-Paley
//! pieces with their weighted norms.
//!
//! `T f(x) = L^{-n} sum_xi sigma(x, xi) f^(xi) e^{2 pi i x xi}`. The direct
//! routines evaluate this double sum literally; the `_fast` routines
//! reorganise the same finite sum through inverse FFTs when the symbol is a
//! sum of products `a(x) b(xi)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fourier, inverse_fourier, inverse_nd, unravel, Domain, GridFunction, GridSpec, Neumaier};
use crate::symbols::{Symbol, SymbolTable};

/// Frequencies with `|f^| <= SUPPORT_THRESHOLD * max |f^|` are skipped by the
/// direct multilinear sum.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// `e^{2 pi i x_j xi_m}` on the grid equals `(-1)^m w^{j m}` with
/// `w = e^{2 pi i / N}`.
struct Twiddles {
    points: usize,
    roots: Vec<Complex64>,
}

impl Twiddles {
    fn new(points: usize) -> Self {
        let roots = (0..points)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / points as f64))
            .collect();
        Self { points, roots }
    }

    /// Phase for spatial index `j` and centered frequency index `i` on one axis.
    #[inline]
    fn phase(&self, j: usize, i: usize) -> Complex64 {
        let n = self.points;
        let m = i as i64 - (n / 2) as i64;
        let k = ((j as i64 * m).rem_euclid(n as i64)) as usize;
        if m.rem_euclid(2) == 0 {
            self.roots[k]
        } else {
            -self.roots[k]
        }
    }

    fn phase_nd(&self, x_flat: usize, f_flat: usize, dim: usize) -> Complex64 {
        let x = unravel(x_flat, self.points, dim);
        let f = unravel(f_flat, self.points, dim);
        (0..dim).map(|a| self.phase(x[a], f[a])).product()
    }
}

fn check_linear(sigma_l: usize, sigma_n: usize, f: &GridFunction) -> Result<()> {
    f.require(Domain::Spatial)?;
    if sigma_l != 1 {
        return Err(Error::param("sigma", format!("linear operator needs l = 1, got {sigma_l}")));
    }
    if sigma_n != f.spec().dim() {
        return Err(Error::GridMismatch("symbol and function dimensions differ".into()));
    }
    Ok(())
}

/// Direct double sum over `(x, xi)`.
pub fn apply_linear(sigma: &Symbol, f: &GridFunction) -> Result<GridFunction> {
    check_linear(sigma.linearity(), sigma.dim(), f)?;
    let table = SymbolTable::build(sigma, f.spec())?;
    apply_linear_direct_table(&table, f)
}

pub fn apply_linear_direct_table(table: &SymbolTable, f: &GridFunction) -> Result<GridFunction> {
    check_linear(table.linearity(), table.grid().dim(), f)?;
    f.spec().ensure_same(table.grid())?;
    let spec = *f.spec();
    let fh = fourier(f)?;
    let tw = Twiddles::new(spec.points());
    let cell = spec.freq_spacing().powi(spec.dim() as i32);
    let samples = (0..spec.len())
        .into_par_iter()
        .map(|ix| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (f_i, v) in fh.samples().iter().enumerate() {
                acc += table.at(ix, f_i) * v * tw.phase_nd(ix, f_i, spec.dim());
            }
            acc * cell
        })
        .collect();
    GridFunction::new(spec, samples, Domain::Spatial)
}

/// Same finite sum as [`apply_linear`], computed as
/// `sum_t a_t(x) IFFT(b_t f^)(x)`; falls back to the direct sum for
/// non-separable symbols.
pub fn apply_linear_fast(sigma: &Symbol, f: &GridFunction) -> Result<GridFunction> {
    check_linear(sigma.linearity(), sigma.dim(), f)?;
    let table = SymbolTable::build(sigma, f.spec())?;
    apply_linear_table(&table, f)
}

pub fn apply_linear_table(table: &SymbolTable, f: &GridFunction) -> Result<GridFunction> {
    check_linear(table.linearity(), table.grid().dim(), f)?;
    f.spec().ensure_same(table.grid())?;
    let Some(terms) = table.separable_terms() else {
        return apply_linear_direct_table(table, f);
    };
    let spec = *f.spec();
    let fh = fourier(f)?;
    let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (a, b) in terms {
        let prod: Vec<Complex64> = b.iter().zip(fh.samples()).map(|(x, y)| x * y).collect();
        let part = inverse_fourier(&GridFunction::new(spec, prod, Domain::Frequency)?)?;
        match a {
            Some(a) => out
                .iter_mut()
                .zip(a.iter().zip(part.samples()))
                .for_each(|(o, (x, y))| *o += x * y),
            None => out.iter_mut().zip(part.samples()).for_each(|(o, y)| *o += y),
        }
    }
    GridFunction::new(spec, out, Domain::Spatial)
}

fn check_multilinear(table_l: usize, fs: &[&GridFunction], spec: &GridSpec) -> Result<()> {
    if table_l < 2 {
        return Err(Error::param("sigma", "l = 1: use apply_linear"));
    }
    if fs.len() != table_l {
        return Err(Error::param("fs", format!("symbol has {table_l} slots, got {} functions", fs.len())));
    }
    for f in fs {
        f.require(Domain::Spatial)?;
        spec.ensure_same(f.spec())?;
    }
    Ok(())
}

/// Direct `(l+1)`-fold sum, restricted to frequencies where each `f_j^` is
/// above [`SUPPORT_THRESHOLD`] of its peak.
pub fn apply_multilinear(sigma: &Symbol, fs: &[&GridFunction]) -> Result<GridFunction> {
    let spec = *fs.first().ok_or_else(|| Error::param("fs", "no inputs"))?.spec();
    check_multilinear(sigma.linearity(), fs, &spec)?;
    let table = SymbolTable::build(sigma, &spec)?;
    apply_multilinear_direct_table(&table, fs)
}

pub fn apply_multilinear_direct_table(table: &SymbolTable, fs: &[&GridFunction]) -> Result<GridFunction> {
    let spec = *table.grid();
    check_multilinear(table.linearity(), fs, &spec)?;
    let l = fs.len();
    let slot = spec.len();
    let hats: Vec<GridFunction> = fs.iter().map(|f| fourier(f)).collect::<Result<_>>()?;
    let supports: Vec<Vec<usize>> = hats
        .iter()
        .map(|h| {
            let peak = h.sup_norm();
            (0..slot)
                .filter(|&i| h.samples()[i].norm() > SUPPORT_THRESHOLD * peak)
                .collect()
        })
        .collect();
    if supports.iter().any(|s| s.is_empty()) {
        return Ok(GridFunction::zeros(spec, Domain::Spatial));
    }
    let tw = Twiddles::new(spec.points());
    let cell = spec.freq_spacing().powi((spec.dim() * l) as i32);
    let samples = (0..spec.len())
        .into_par_iter()
        .map(|ix| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut counter = vec![0usize; l];
            loop {
                let mut flat = 0usize;
                let mut coeff = Complex64::new(1.0, 0.0);
                for j in 0..l {
                    let i = supports[j][counter[j]];
                    flat = flat * slot + i;
                    coeff *= hats[j].samples()[i] * tw.phase_nd(ix, i, spec.dim());
                }
                acc += table.at(ix, flat) * coeff;
                let mut j = l;
                loop {
                    if j == 0 {
                        return acc * cell;
                    }
                    j -= 1;
                    counter[j] += 1;
                    if counter[j] < supports[j].len() {
                        break;
                    }
                    counter[j] = 0;
                }
            }
        })
        .collect();
    GridFunction::new(spec, samples, Domain::Spatial)
}

/// Same finite sum as [`apply_multilinear`] (without the support cut),
/// computed for separable symbols by binning `b(xi) prod_j f_j^(xi_j)` on
/// `sum_j xi_j mod N` and one inverse FFT per term.
pub fn apply_multilinear_fast(sigma: &Symbol, fs: &[&GridFunction]) -> Result<GridFunction> {
    let spec = *fs.first().ok_or_else(|| Error::param("fs", "no inputs"))?.spec();
    check_multilinear(sigma.linearity(), fs, &spec)?;
    let table = SymbolTable::build(sigma, &spec)?;
    apply_multilinear_table(&table, fs)
}

pub fn apply_multilinear_table(table: &SymbolTable, fs: &[&GridFunction]) -> Result<GridFunction> {
    let spec = *table.grid();
    check_multilinear(table.linearity(), fs, &spec)?;
    let Some(terms) = table.separable_terms() else {
        return apply_multilinear_direct_table(table, fs);
    };
    let l = fs.len();
    let n = spec.dim();
    let points = spec.points();
    let slot = spec.len();
    let half = points / 2;
    let hats: Vec<GridFunction> = fs.iter().map(|f| fourier(f)).collect::<Result<_>>()?;
    let mut out = vec![Complex64::new(0.0, 0.0); slot];
    for (a, b) in terms {
        // bins indexed by the centered index of sum_j m_j mod N, per axis
        let mut bins = vec![Complex64::new(0.0, 0.0); slot];
        for (flat, bv) in b.iter().enumerate() {
            if bv.re == 0.0 && bv.im == 0.0 {
                continue;
            }
            let mut rest = flat;
            let mut coeff = *bv;
            let mut msum = [0i64; 2];
            for j in (0..l).rev() {
                let i = rest % slot;
                rest /= slot;
                coeff *= hats[j].samples()[i];
                let idx = unravel(i, points, n);
                for a in 0..n {
                    msum[a] += idx[a] as i64 - half as i64;
                }
            }
            // e^{2 pi i x M / L} with M = sum_j m_j only depends on M mod N
            // (N is even, so the (-1)^M phase does too)
            let mut target = 0usize;
            for m in msum.iter().take(n) {
                let c = (m + half as i64).rem_euclid(points as i64);
                target = target * points + c as usize;
            }
            bins[target] += coeff;
        }
        let part = inverse_fourier(&GridFunction::new(spec, bins, Domain::Frequency)?)?;
        let extra = spec.freq_spacing().powi((n * (l - 1)) as i32);
        match a {
            Some(a) => out
                .iter_mut()
                .zip(a.iter().zip(part.samples()))
                .for_each(|(o, (x, y))| *o += x * y * extra),
            None => out.iter_mut().zip(part.samples()).for_each(|(o, y)| *o += y * extra),
        }
    }
    GridFunction::new(spec, out, Domain::Spatial)
}

/// `u -> K_k(y, u)` on the `n l`-dimensional lattice, with the derivative
/// slices used by the gradient norms.
#[derive(Clone, Debug)]
pub struct KernelSlice {
    pub k: usize,
    /// Flat spatial index of the base point.
    pub y: usize,
    pub spec: GridSpec,
    /// Number of `u` axes (`n l`).
    pub axes: usize,
    pub values: Vec<Complex64>,
    /// Central differences in `y`, one per spatial axis.
    pub grad_y: Vec<Vec<Complex64>>,
    /// Exact derivatives in `u` (multiplication by `2 pi i xi`), one per axis.
    pub grad_u: Vec<Vec<Complex64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    Plain,
    GradY,
    GradU,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 3] = [KernelVariant::Plain, KernelVariant::GradY, KernelVariant::GradU];

    /// Extra exponent over `m + n l / r` in the decay prediction.
    pub fn extra_exponent(self, rho: f64) -> f64 {
        match self {
            KernelVariant::Plain => 0.0,
            KernelVariant::GradY => rho,
            KernelVariant::GradU => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelVariant::Plain => "plain",
            KernelVariant::GradY => "grad_y",
            KernelVariant::GradU => "grad_u",
        }
    }
}

fn frequency_slice(sigma_k: &Symbol, spec: &GridSpec, y: [f64; 2]) -> Vec<Complex64> {
    let axes = sigma_k.dim() * sigma_k.linearity();
    let total = spec.points().pow(axes as u32);
    let n = spec.dim();
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unravel(flat, spec.points(), axes);
            let mut xi = [0.0; crate::grid::MAX_AXES];
            for a in 0..axes {
                xi[a] = spec.freq(idx[a]);
            }
            sigma_k.eval(&y[..n], &xi[..axes])
        })
        .collect()
}

fn to_kernel(mut data: Vec<Complex64>, spec: &GridSpec, axes: usize) -> Vec<Complex64> {
    inverse_nd(&mut data, spec.points(), axes, spec.side());
    data
}

/// Kernel of a Littlewood-Paley piece at base point `y` (flat spatial index).
pub fn kernel_of_piece(sigma_k: &Symbol, spec: &GridSpec, y: usize) -> Result<KernelSlice> {
    if spec.dim() != sigma_k.dim() {
        return Err(Error::GridMismatch("symbol and grid dimensions differ".into()));
    }
    let (lo, hi) = sigma_k
        .support()
        .ok_or_else(|| Error::SupportViolation("symbol has no declared annular support".into()))?;
    let k = sigma_k.piece_index().unwrap_or(0);
    let axes = sigma_k.dim() * sigma_k.linearity();
    let yp = spec.point(y);
    let slice = frequency_slice(sigma_k, spec, yp);
    let tol = 1e-12;
    for (flat, v) in slice.iter().enumerate() {
        if v.norm() > 0.0 {
            let idx = unravel(flat, spec.points(), axes);
            let r = (0..axes).map(|a| spec.freq(idx[a]).powi(2)).sum::<f64>().sqrt();
            if r < lo * (1.0 - tol) || r > hi * (1.0 + tol) {
                return Err(Error::SupportViolation(format!(
                    "nonzero symbol at |xi| = {r} outside [{lo}, {hi}]"
                )));
            }
        }
    }
    if hi > spec.nyquist() {
        return Err(Error::SupportViolation(format!("annulus reaches {hi} beyond Nyquist {}", spec.nyquist())));
    }

    let h = spec.spacing();
    let grad_y = (0..spec.dim())
        .map(|a| {
            let mut plus = yp;
            let mut minus = yp;
            plus[a] += h;
            minus[a] -= h;
            let sp = frequency_slice(sigma_k, spec, plus);
            let sm = frequency_slice(sigma_k, spec, minus);
            let diff = sp.iter().zip(&sm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            to_kernel(diff, spec, axes)
        })
        .collect();
    let grad_u = (0..axes)
        .map(|a| {
            let scaled = slice
                .iter()
                .enumerate()
                .map(|(flat, v)| {
                    let idx = unravel(flat, spec.points(), axes);
                    v * Complex64::new(0.0, 2.0 * PI * spec.freq(idx[a]))
                })
                .collect();
            to_kernel(scaled, spec, axes)
        })
        .collect();
    Ok(KernelSlice {
        k,
        y,
        spec: *spec,
        axes,
        values: to_kernel(slice, spec, axes),
        grad_y,
        grad_u,
    })
}

/// `|| prod_j (1 + 2^{k rho} |u_j|)^N D K(y, u) ||_{L^{r'}(u)}` with `|u_j|`
/// the periodic distance of slot `j` and `D` the chosen variant.
pub fn kernel_weighted_norm(
    kernel: &KernelSlice,
    decay: f64,
    r: f64,
    rho: f64,
    variant: KernelVariant,
) -> Result<f64> {
    if !(1.0..=2.0).contains(&r) {
        return Err(Error::param("r", format!("need 1 <= r <= 2, got {r}")));
    }
    if !(decay.is_finite() && decay >= 0.0) {
        return Err(Error::param("decay", format!("need N >= 0, got {decay}")));
    }
    let spec = kernel.spec;
    let n = spec.dim();
    let axes = kernel.axes;
    let slots = axes / n;
    let scale = (kernel.k as f64 * rho).exp2();
    let points = spec.points();
    let magnitude = |flat: usize| -> f64 {
        match variant {
            KernelVariant::Plain => kernel.values[flat].norm(),
            KernelVariant::GradY => kernel.grad_y.iter().map(|g| g[flat].norm_sqr()).sum::<f64>().sqrt(),
            KernelVariant::GradU => kernel.grad_u.iter().map(|g| g[flat].norm_sqr()).sum::<f64>().sqrt(),
        }
    };
    let weight = |flat: usize| -> f64 {
        let idx = unravel(flat, points, axes);
        (0..slots)
            .map(|j| {
                let d = (0..n).map(|a| spec.coord(idx[j * n + a]).powi(2)).sum::<f64>().sqrt();
                (1.0 + scale * d).powf(decay)
            })
            .product()
    };
    let total = kernel.values.len();
    if r == 1.0 {
        return Ok((0..total).map(|f| weight(f) * magnitude(f)).fold(0.0, f64::max));
    }
    let rp = r / (r - 1.0);
    let cell = spec.spacing().powi(axes as i32);
    let mut acc = Neumaier::default();
    for f in 0..total {
        acc.add((weight(f) * magnitude(f)).powf(rp));
    }
    Ok((acc.sum() * cell).powf(1.0 / rp))
}

/// Decay exponent predicted for the weighted kernel norms of pieces of an
/// order-`m` symbol: `m + n l / r` plus the variant's extra exponent.
pub fn predicted_kernel_exponent(order: f64, dim: usize, linearity: usize, r: f64, rho: f64, variant: KernelVariant) -> f64 {
    order + (dim * linearity) as f64 / r + variant.extra_exponent(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{build_partition, psi_hat};
    use crate::symbols::{dyadic_modulation_symbol, lp_pieces, SymbolClassParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(spec: GridSpec, s: f64, x0: f64) -> GridFunction {
        GridFunction::from_real_fn(spec, |x| (-PI * ((x[0] - x0) / s).powi(2)).exp()).unwrap()
    }

    fn params(l: usize) -> SymbolClassParams {
        SymbolClassParams::exotic(0.0, 0.5, l, 1).unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_symbol() {
        let g = GridSpec::line(16.0, 256).unwrap();
        let f = gaussian(g, 1.3, 0.4);
        let one = Symbol::constant(params(1), Complex64::new(1.0, 0.0));
        assert!(max_diff(&apply_linear(&one, &f).unwrap(), &f) <= 1e-12);
        assert!(max_diff(&apply_linear_fast(&one, &f).unwrap(), &f) <= 1e-12);
    }

    #[test]
    fn derivative_multiplier() {
        let g = GridSpec::line(16.0, 256).unwrap();
        let f = gaussian(g, 1.0, 0.0);
        let d = Symbol::multiplier(params(1), "derivative", |xi| Complex64::new(0.0, 2.0 * PI * xi[0]));
        let out = apply_linear(&d, &f).unwrap();
        for (i, z) in out.samples().iter().enumerate() {
            let x = g.coord(i);
            let exact = -2.0 * PI * x * (-PI * x * x).exp();
            assert!((z - Complex64::new(exact, 0.0)).norm() <= 1e-6);
        }
    }

    #[test]
    fn modulated_multiplier_direct_oracle() {
        let g = GridSpec::line(8.0, 128).unwrap();
        let f = gaussian(g, 0.7, -0.3);
        let v = 0.75;
        let s = Symbol::separable(
            params(1),
            "modulated",
            move |x| Complex64::from_polar(1.0, 2.0 * PI * v * x[0]),
            |xi| Complex64::new(psi_hat(xi[0].abs()), 0.0),
        );
        let fast = apply_linear_fast(&s, &f).unwrap();
        let fh = fourier(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let j = rng.gen_range(0..128);
            let x = g.coord(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..128 {
                let xi = g.freq(i);
                acc += Complex64::from_polar(1.0, 2.0 * PI * v * x)
                    * psi_hat(xi.abs())
                    * fh.samples()[i]
                    * Complex64::from_polar(1.0, 2.0 * PI * x * xi);
            }
            acc /= 8.0;
            assert!((acc - fast.samples()[j]).norm() <= 1e-12);
        }
    }

    #[test]
    fn fast_and_direct_agree_for_family() {
        let g = GridSpec::line(16.0, 512).unwrap();
        let p = SymbolClassParams::exotic(-0.25, 0.5, 1, 1).unwrap();
        let s = dyadic_modulation_symbol(p, &g, 3, 9).unwrap();
        let f = gaussian(g, 0.5, 1.0);
        let a = apply_linear(&s, &f).unwrap();
        let b = apply_linear_fast(&s, &f).unwrap();
        assert!(max_diff(&a, &b) <= 1e-11);
    }

    #[test]
    fn decomposition_consistency() {
        let g = GridSpec::line(16.0, 512).unwrap();
        let part = build_partition(&g, 1).unwrap();
        let p = SymbolClassParams::exotic(-0.25, 0.5, 1, 1).unwrap();
        let s = dyadic_modulation_symbol(p, &g, part.k_max() - 1, 2).unwrap();
        let f = gaussian(g, 0.6, 0.0);
        let whole = apply_linear_fast(&s, &f).unwrap();
        let mut sum = GridFunction::zeros(g, Domain::Spatial);
        for piece in lp_pieces(&s, &part).unwrap() {
            sum = sum.axpy(Complex64::new(1.0, 0.0), &apply_linear_fast(&piece, &f).unwrap()).unwrap();
        }
        assert!(max_diff(&whole, &sum) <= 1e-9);
    }

    #[test]
    fn product_case_and_multilinearity() {
        let g = GridSpec::line(4.0, 64).unwrap();
        let f1 = gaussian(g, 0.8, 0.2);
        let f2 = gaussian(g, 0.6, -0.1);
        let one = Symbol::constant(params(2), Complex64::new(1.0, 0.0));
        for out in [
            apply_multilinear(&one, &[&f1, &f2]).unwrap(),
            apply_multilinear_fast(&one, &[&f1, &f2]).unwrap(),
        ] {
            for i in 0..64 {
                let expect = f1.samples()[i] * f2.samples()[i];
                assert!((out.samples()[i] - expect).norm() <= 1e-10);
            }
        }
        let zero = GridFunction::zeros(g, Domain::Spatial);
        assert_eq!(apply_multilinear(&one, &[&f1, &zero]).unwrap().sup_norm(), 0.0);
        assert!(apply_multilinear(&Symbol::constant(params(1), Complex64::new(1.0, 0.0)), &[&f1]).is_err());
    }

    #[test]
    fn separable_frequency_symbol_is_product_of_convolutions() {
        let g = GridSpec::line(8.0, 128).unwrap();
        let f1 = gaussian(g, 0.5, 0.3);
        let f2 = gaussian(g, 0.4, -0.2);
        let s = Symbol::multiplier(params(2), "psi1 x psi1", |xi| {
            Complex64::new(psi_hat(xi[0].abs() / 2.0) * psi_hat(xi[1].abs() / 2.0), 0.0)
        });
        let psi1 = Symbol::multiplier(params(1), "psi1", |xi| Complex64::new(psi_hat(xi[0].abs() / 2.0), 0.0));
        let c1 = apply_linear(&psi1, &f1).unwrap();
        let c2 = apply_linear(&psi1, &f2).unwrap();
        let direct = apply_multilinear(&s, &[&f1, &f2]).unwrap();
        let fast = apply_multilinear_fast(&s, &[&f1, &f2]).unwrap();
        for i in 0..128 {
            let expect = c1.samples()[i] * c2.samples()[i];
            assert!((direct.samples()[i] - expect).norm() <= 1e-10);
            assert!((fast.samples()[i] - expect).norm() <= 1e-10);
        }
    }

    #[test]
    fn multilinear_fast_matches_direct_with_x_dependence() {
        let g = GridSpec::line(4.0, 128).unwrap();
        let p = SymbolClassParams::exotic(-0.5, 0.5, 2, 1).unwrap();
        let s = dyadic_modulation_symbol(p, &g, 3, 4).unwrap();
        let f1 = gaussian(g, 0.5, 0.1);
        let f2 = gaussian(g, 0.35, -0.2);
        let a = apply_multilinear(&s, &[&f1, &f2]).unwrap();
        let b = apply_multilinear_fast(&s, &[&f1, &f2]).unwrap();
        assert!(max_diff(&a, &b) <= 1e-10, "{}", max_diff(&a, &b));
        // linear in the first slot
        let g1 = gaussian(g, 0.3, 0.5);
        let alpha = Complex64::new(0.7, -1.3);
        let combo = f1.scaled(alpha).axpy(Complex64::new(1.0, 0.0), &g1).unwrap();
        let lhs = apply_multilinear_fast(&s, &[&combo, &f2]).unwrap();
        let rhs = b.scaled(alpha).axpy(Complex64::new(1.0, 0.0), &apply_multilinear_fast(&s, &[&g1, &f2]).unwrap()).unwrap();
        assert!(max_diff(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn kernel_of_plain_piece_is_dilated_psi() {
        let g = GridSpec::line(32.0, 1024).unwrap();
        let part = build_partition(&g, 1).unwrap();
        let one = Symbol::constant(params(1), Complex64::new(1.0, 0.0));
        let pieces = lp_pieces(&one, &part).unwrap();
        let k1 = kernel_of_piece(&pieces[1], &g, 0).unwrap();
        let k2 = kernel_of_piece(&pieces[2], &g, 0).unwrap();
        // psi_k(u) = 2^{k} psi(2^{k} u): check the sup and L^2 scaling
        let sup1 = k1.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let sup2 = k2.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((sup2 / sup1 - 2.0).abs() < 1e-6);
        let n1 = kernel_weighted_norm(&k1, 0.0, 2.0, 0.0, KernelVariant::Plain).unwrap();
        let n2 = kernel_weighted_norm(&k2, 0.0, 2.0, 0.0, KernelVariant::Plain).unwrap();
        assert!((n2 / n1 - 2f64.sqrt()).abs() < 1e-6, "{}", n2 / n1);
        assert!(kernel_weighted_norm(&k1, 0.0, 2.5, 0.0, KernelVariant::Plain).is_err());
        assert!(kernel_of_piece(&one, &g, 0).is_err());
    }

    #[test]
    fn kernel_reproduces_operator() {
        let g = GridSpec::line(8.0, 256).unwrap();
        let part = build_partition(&g, 1).unwrap();
        let p = SymbolClassParams::exotic(-0.25, 0.5, 1, 1).unwrap();
        let s = dyadic_modulation_symbol(p, &g, 3, 21).unwrap();
        let piece = lp_pieces(&s, &part).unwrap().remove(2);
        let f = gaussian(g, 0.5, 0.4);
        let tf = apply_linear(&piece, &f).unwrap();
        let n = g.points();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let y = rng.gen_range(0..n);
            let ker = kernel_of_piece(&piece, &g, y).unwrap();
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..n {
                let d = (y + n - u + n / 2) % n;
                acc += ker.values[d] * f.samples()[u] * g.spacing();
            }
            assert!((acc - tf.samples()[y]).norm() <= 1e-9);
        }
    }

    #[test]
    fn hausdorff_young_endpoint() {
        let g = GridSpec::line(8.0, 512).unwrap();
        let part = build_partition(&g, 1).unwrap();
        let p = SymbolClassParams::exotic(-0.25, 0.5, 1, 1).unwrap();
        let s = dyadic_modulation_symbol(p, &g, 4, 8).unwrap();
        let piece = lp_pieces(&s, &part).unwrap().remove(3);
        let ker = kernel_of_piece(&piece, &g, 100).unwrap();
        let sup = kernel_weighted_norm(&ker, 0.0, 1.0, 0.5, KernelVariant::Plain).unwrap();
        let l1: f64 = (0..512).map(|i| piece.eval(&[g.coord(100)], &[g.freq(i)]).norm()).sum::<f64>() * g.freq_spacing();
        assert!(sup <= l1 * (1.0 + 1e-12));
    }
}
