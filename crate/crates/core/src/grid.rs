//! Uniform periodic grids over a centered box, the scaled discrete Fourier
//! transform, and the norms used throughout the crate.
//!
//! Spatial samples sit at `x_j = -L/2 + j h` and frequency samples at
//! `xi_m = m / L` for `m = -N/2 .. N/2 - 1`, stored in centered order (index
//! `i = m + N/2`). With these conventions the continuous transform
//! `f^(xi) = \int f(x) e^{-2 pi i x xi} dx` becomes an FFT up to the phase
//! `(-1)^m` and the factor `h^n`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Weight;

/// Experiments refuse test functions carrying more `|f|^2` mass than this in
/// the outer shell of the box.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;

/// Largest number of axes any lattice in this crate uses (`n * l` for the
/// multilinear kernels).
pub(crate) const MAX_AXES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    side: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, side: f64, points: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::param("dim", format!("must be 1 or 2, got {dim}")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::param("side", format!("must be positive, got {side}")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::param(
                "points",
                format!("must be a power of two >= 2, got {points}"),
            ));
        }
        Ok(Self { dim, side, points })
    }

    /// One-dimensional grid.
    pub fn line(side: f64, points: usize) -> Result<Self> {
        Self::new(1, side, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.points as f64
    }

    pub fn freq_spacing(&self) -> f64 {
        1.0 / self.side
    }

    /// Largest resolvable frequency `N / (2L)`.
    pub fn nyquist(&self) -> f64 {
        self.points as f64 / (2.0 * self.side)
    }

    /// Total number of samples `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.side + j as f64 * self.spacing()
    }

    pub fn freq(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) / self.side
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coord(j)).collect()
    }

    pub fn axis_freqs(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.freq(i)).collect()
    }

    /// Spatial coordinates of a flat sample index (unused axes are zero).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let idx = unravel(flat, self.points, self.dim);
        let mut out = [0.0; 2];
        for (a, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.coord(idx[a]);
        }
        out
    }

    pub fn freq_point(&self, flat: usize) -> [f64; 2] {
        let idx = unravel(flat, self.points, self.dim);
        let mut out = [0.0; 2];
        for (a, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.freq(idx[a]);
        }
        out
    }

    /// Index of the grid point nearest to `x` along one axis.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x + 0.5 * self.side) / self.spacing()).round();
        (j.rem_euclid(self.points as f64)) as usize % self.points
    }

    /// Same `N` over a box scaled by `factor`; grid points scale exactly.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.side * factor, self.points)
    }

    /// Same box with twice as many points per axis.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.dim, self.side, self.points * 2)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Spatial,
    Frequency,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::Spatial => "spatial",
            Domain::Frequency => "frequency",
        }
    }
}

/// Complex samples on a [`GridSpec`]; immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    samples: Vec<Complex64>,
    domain: Domain,
}

impl GridFunction {
    pub fn new(spec: GridSpec, samples: Vec<Complex64>, domain: Domain) -> Result<Self> {
        if samples.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                spec.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("grid function samples"));
        }
        Ok(Self {
            spec,
            samples,
            domain,
        })
    }

    pub fn zeros(spec: GridSpec, domain: Domain) -> Self {
        Self {
            spec,
            samples: vec![Complex64::new(0.0, 0.0); spec.len()],
            domain,
        }
    }

    /// Samples `f` at every spatial grid point.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let samples = (0..spec.len())
            .map(|i| f(&spec.point(i)[..spec.dim()]))
            .collect();
        Self::new(spec, samples, Domain::Spatial)
    }

    pub fn from_real_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(spec, |x| Complex64::new(f(x), 0.0))
    }

    /// Samples `g` at every frequency grid point.
    pub fn from_freq_fn(spec: GridSpec, g: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let samples = (0..spec.len())
            .map(|i| g(&spec.freq_point(i)[..spec.dim()]))
            .collect();
        Self::new(spec, samples, Domain::Frequency)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            spec: self.spec,
            samples: self.samples.iter().map(|z| z * c).collect(),
            domain: self.domain,
        }
    }

    /// Pointwise `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &GridFunction) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        if self.domain != other.domain {
            return Err(Error::WrongDomain {
                expected: self.domain.name(),
                found: other.domain.name(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Self {
            spec: self.spec,
            samples,
            domain: self.domain,
        })
    }

    /// Fraction of `|f|^2` mass in the outer 10% shell of the box.
    pub fn tail_mass(&self) -> f64 {
        shell_mass_fraction(&self.samples, &self.spec)
    }

    pub(crate) fn require(&self, domain: Domain) -> Result<()> {
        if self.domain == domain {
            Ok(())
        } else {
            Err(Error::WrongDomain {
                expected: domain.name(),
                found: self.domain.name(),
            })
        }
    }
}

fn shell_mass_fraction(samples: &[Complex64], spec: &GridSpec) -> f64 {
    let edge = 0.4 * spec.side();
    let mut total = Neumaier::default();
    let mut shell = Neumaier::default();
    for (i, z) in samples.iter().enumerate() {
        let m = z.norm_sqr();
        total.add(m);
        let p = spec.point(i);
        if p[..spec.dim()].iter().any(|c| c.abs() >= edge) {
            shell.add(m);
        }
    }
    let total = total.sum();
    if total == 0.0 {
        0.0
    } else {
        shell.sum() / total
    }
}

/// `f^(xi) = h^n sum_j f(x_j) e^{-2 pi i <x_j, xi>}` at every frequency sample.
pub fn fourier(f: &GridFunction) -> Result<GridFunction> {
    f.require(Domain::Spatial)?;
    let mut data = f.samples.clone();
    forward_nd(&mut data, f.spec.points(), f.spec.dim(), f.spec.side());
    GridFunction::new(f.spec, data, Domain::Frequency)
}

/// `f(x_j) = L^{-n} sum_m g(xi_m) e^{2 pi i <x_j, xi_m>}`, the exact inverse of
/// [`fourier`].
pub fn inverse_fourier(g: &GridFunction) -> Result<GridFunction> {
    g.require(Domain::Frequency)?;
    let mut data = g.samples.clone();
    inverse_nd(&mut data, g.spec.points(), g.spec.dim(), g.spec.side());
    GridFunction::new(g.spec, data, Domain::Spatial)
}

/// Riemann-sum `(sum |f|^p w h^n)^{1/p}`; `p = inf` gives the sample maximum.
///
/// Frequency-domain inputs are measured with the frequency cell `(1/L)^n`.
pub fn lp_norm(f: &GridFunction, p: f64, w: Option<&Weight>) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::param("p", format!("must be in (0, inf], got {p}")));
    }
    if let Some(w) = w {
        f.spec.ensure_same(w.spec())?;
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let cell = match f.domain {
        Domain::Spatial => f.spec.spacing().powi(f.spec.dim() as i32),
        Domain::Frequency => f.spec.freq_spacing().powi(f.spec.dim() as i32),
    };
    let mut acc = Neumaier::default();
    match w {
        None => f.samples.iter().for_each(|z| acc.add(z.norm().powf(p))),
        Some(w) => f
            .samples
            .iter()
            .zip(w.values())
            .for_each(|(z, wv)| acc.add(z.norm().powf(p) * wv)),
    }
    Ok((acc.sum() * cell).powf(1.0 / p))
}

/// Bessel-potential norm `(sum (1 + 4 pi^2 |xi|^2)^s |f^(xi)|^2 L^{-n})^{1/2}`.
pub fn sobolev_norm(f: &GridFunction, s: f64) -> Result<f64> {
    f.require(Domain::Spatial)?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::param("s", format!("must be >= 0, got {s}")));
    }
    Ok(sobolev_norm_nd(
        &f.samples,
        f.spec.points(),
        f.spec.side(),
        f.spec.dim(),
        s,
    ))
}

/// Sobolev norm of spatial samples on an `axes`-dimensional periodic lattice
/// with `points` per axis over a box of side `side`.
pub(crate) fn sobolev_norm_nd(
    samples: &[Complex64],
    points: usize,
    side: f64,
    axes: usize,
    s: f64,
) -> f64 {
    let mut data = samples.to_vec();
    forward_nd(&mut data, points, axes, side);
    let cell = side.powi(-(axes as i32));
    let half = (points / 2) as f64;
    let mut acc = Neumaier::default();
    for (flat, z) in data.iter().enumerate() {
        let idx = unravel(flat, points, axes);
        let xi2: f64 = idx[..axes]
            .iter()
            .map(|&i| {
                let f = (i as f64 - half) / side;
                f * f
            })
            .sum();
        acc.add((1.0 + 4.0 * PI * PI * xi2).powf(s) * z.norm_sqr());
    }
    (acc.sum() * cell).sqrt()
}

/// Base profiles for generated test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `e^{-pi |x|^2}`, its own Fourier transform.
    Gaussian,
    /// `exp(1 - 1/(1 - |x/2|^2))` on `|x| < 2`, zero outside.
    Bump,
    /// Wave packet `e^{-pi |x|^2} cos(4 pi x_1)`.
    Modulated,
}

impl Profile {
    /// Frequency radius beyond which the undilated profile's spectrum stays
    /// below `1e-6` of its peak.
    pub fn bandwidth(self) -> f64 {
        match self {
            Profile::Gaussian => 2.1,
            Profile::Bump => 8.5,
            Profile::Modulated => 4.1,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        match self {
            Profile::Gaussian => (-PI * r2).exp(),
            Profile::Bump => {
                let t = r2 / 4.0;
                if t < 1.0 {
                    (1.0 - 1.0 / (1.0 - t)).exp()
                } else {
                    0.0
                }
            }
            Profile::Modulated => (-PI * r2).exp() * (4.0 * PI * x[0]).cos(),
        }
    }
}

/// `g(2^{-lambda_k} (x - x0)) e^{2 pi i <v, x>}` for the base profile `g`.
///
/// Rejects modulations that push the spectrum past the Nyquist band and
/// functions whose tail mass exceeds [`TAIL_MASS_LIMIT`].
pub fn test_function(
    spec: &GridSpec,
    profile: Profile,
    dilation_exponent: f64,
    x0: &[f64],
    v: &[f64],
) -> Result<GridFunction> {
    let n = spec.dim();
    if x0.len() != n || v.len() != n {
        return Err(Error::param(
            "x0/v",
            format!("expected {n} components, got {} and {}", x0.len(), v.len()),
        ));
    }
    if !dilation_exponent.is_finite() {
        return Err(Error::param("dilation_exponent", "must be finite"));
    }
    let scale = (-dilation_exponent).exp2();
    let band = profile.bandwidth() * scale;
    let vmax = v.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if vmax + band > spec.nyquist() {
        return Err(Error::Aliasing(format!(
            "modulation {vmax} plus profile bandwidth {band:.3} exceeds Nyquist {}",
            spec.nyquist()
        )));
    }
    let f = GridFunction::from_fn(*spec, |x| {
        let mut y = [0.0; 2];
        let mut phase = 0.0;
        for a in 0..n {
            y[a] = scale * (x[a] - x0[a]);
            phase += v[a] * x[a];
        }
        Complex64::from_polar(profile.eval(&y[..n]), 2.0 * PI * phase)
    })?;
    let mass = f.tail_mass();
    if mass > TAIL_MASS_LIMIT {
        return Err(Error::TailMass {
            mass,
            limit: TAIL_MASS_LIMIT,
        });
    }
    Ok(f)
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.sum()
}

/// Row-major multi-index of `flat` on a lattice with `points` per axis.
pub(crate) fn unravel(mut flat: usize, points: usize, axes: usize) -> [usize; MAX_AXES] {
    let mut idx = [0; MAX_AXES];
    for a in (0..axes).rev() {
        idx[a] = flat % points;
        flat /= points;
    }
    idx
}

/// `(-1)^m` for the centered frequency index `i`.
#[inline]
fn centered_sign(i: usize, points: usize) -> f64 {
    if (i + points / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place scaled forward transform on an `axes`-dimensional lattice.
pub(crate) fn forward_nd(data: &mut [Complex64], points: usize, axes: usize, side: f64) {
    transform_nd(data, points, axes, side, true);
}

/// In-place scaled inverse transform on an `axes`-dimensional lattice.
pub(crate) fn inverse_nd(data: &mut [Complex64], points: usize, axes: usize, side: f64) {
    transform_nd(data, points, axes, side, false);
}

fn transform_nd(data: &mut [Complex64], points: usize, axes: usize, side: f64, forward: bool) {
    debug_assert_eq!(data.len(), points.pow(axes as u32));
    let mut planner = FftPlanner::<f64>::new();
    let fft = if forward {
        planner.plan_fft_forward(points)
    } else {
        planner.plan_fft_inverse(points)
    };
    let h = side / points as f64;
    let half = points / 2;
    let mut line = vec![Complex64::new(0.0, 0.0); points];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..axes {
        let stride = points.pow((axes - 1 - axis) as u32);
        let outer = points.pow(axis as u32);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * points * stride + s;
                if forward {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for i in 0..points {
                        let k = (i + half) % points;
                        data[base + i * stride] = line[k] * (h * centered_sign(i, points));
                    }
                } else {
                    for i in 0..points {
                        let k = (i + half) % points;
                        line[k] = data[base + i * stride] * centered_sign(i, points);
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = v / side;
                    }
                }
            }
        }
    }
}
