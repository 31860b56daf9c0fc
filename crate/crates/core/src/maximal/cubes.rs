//! Finite cube families on the periodic box and the scale-wise machinery
//! shared by every maximal operator: cyclic window averages from prefix sums
//! and the sliding maximum that spreads per-cube values to the points each
//! cube contains.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Cubes with dense anchors up to this many cells per side.
pub const DENSE_WIDTH_LIMIT: usize = 32;

/// A finite surrogate for "all axis-parallel cubes": cubes of `w` cells per
/// side for each width in `widths`, anchored on a lattice of step
/// `strides[i]` and wrapping around the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    spec: GridSpec,
    widths: Vec<usize>,
    strides: Vec<usize>,
    dyadic_only: bool,
}

/// One cube: lower-corner grid index per axis and side length in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cube {
    pub anchor: [usize; 2],
    pub width: usize,
}

impl Cube {
    /// Flat grid indices of the samples inside the cube.
    pub fn indices(&self, spec: &GridSpec) -> Vec<usize> {
        let n = spec.points();
        let w = self.width;
        match spec.dim() {
            1 => (0..w).map(|i| (self.anchor[0] + i) % n).collect(),
            _ => {
                let mut out = Vec::with_capacity(w * w);
                for i in 0..w {
                    let row = (self.anchor[0] + i) % n;
                    for j in 0..w {
                        out.push(row * n + (self.anchor[1] + j) % n);
                    }
                }
                out
            }
        }
    }

    pub fn contains(&self, spec: &GridSpec, flat: usize) -> bool {
        let n = spec.points();
        let idx = if spec.dim() == 1 {
            [flat, 0]
        } else {
            [flat / n, flat % n]
        };
        (0..spec.dim()).all(|a| (idx[a] + n - self.anchor[a]) % n < self.width)
    }
}

fn dyadic_widths(points: usize) -> Vec<usize> {
    let mut w = 1;
    let mut out = Vec::new();
    while w <= points / 2 {
        out.push(w);
        w *= 2;
    }
    out
}

impl CubeFamily {
    /// Dyadic side lengths `h, 2h, ..., L/2`; every anchor for sides up to
    /// 32 cells, anchors every `side/8` above.
    pub fn standard(spec: &GridSpec) -> Self {
        let widths = dyadic_widths(spec.points());
        let strides = widths
            .iter()
            .map(|&w| if w <= DENSE_WIDTH_LIMIT { 1 } else { w / 8 })
            .collect();
        Self {
            spec: *spec,
            widths,
            strides,
            dyadic_only: false,
        }
    }

    /// Same sides as [`standard`](Self::standard) with every anchor.
    pub fn dense(spec: &GridSpec) -> Self {
        let widths = dyadic_widths(spec.points());
        let strides = vec![1; widths.len()];
        Self {
            spec: *spec,
            widths,
            strides,
            dyadic_only: false,
        }
    }

    /// Every cube of every width `1..=N/2` with every anchor.
    pub fn all_cubes(spec: &GridSpec) -> Self {
        let widths: Vec<usize> = (1..=spec.points() / 2).collect();
        let strides = vec![1; widths.len()];
        Self {
            spec: *spec,
            widths,
            strides,
            dyadic_only: false,
        }
    }

    /// Dyadic cubes: side `2^j h` anchored at multiples of the side.
    pub fn dyadic(spec: &GridSpec) -> Self {
        let widths = dyadic_widths(spec.points());
        Self {
            spec: *spec,
            strides: widths.clone(),
            widths,
            dyadic_only: false,
        }
        .into_dyadic()
    }

    fn into_dyadic(mut self) -> Self {
        self.dyadic_only = true;
        self
    }

    pub fn custom(spec: &GridSpec, widths: Vec<usize>, strides: Vec<usize>, dyadic_only: bool) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if widths.len() != strides.len() {
            return Err(Error::FamilyShape("one stride per width required".into()));
        }
        if widths.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::FamilyShape("side lengths must be strictly increasing".into()));
        }
        for (&w, &s) in widths.iter().zip(&strides) {
            if w == 0 || w > spec.points() {
                return Err(Error::FamilyShape(format!("width {w} outside 1..={}", spec.points())));
            }
            if s == 0 || s > w {
                return Err(Error::FamilyShape(format!(
                    "stride {s} for width {w} leaves points uncovered"
                )));
            }
            if dyadic_only && (s != w || !w.is_power_of_two()) {
                return Err(Error::FamilyShape(format!(
                    "width {w} with stride {s} is not a dyadic scale"
                )));
            }
        }
        Ok(Self {
            spec: *spec,
            widths,
            strides,
            dyadic_only,
        })
    }

    /// Keeps the scales with `lo <= side < hi` (box units).
    pub fn restricted(&self, lo: f64, hi: f64) -> Result<Self> {
        let h = self.spec.spacing();
        let (widths, strides): (Vec<usize>, Vec<usize>) = self
            .widths
            .iter()
            .zip(&self.strides)
            .filter(|(&w, _)| {
                let s = w as f64 * h;
                s >= lo && s < hi
            })
            .map(|(&w, &s)| (w, s))
            .unzip();
        if widths.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(Self {
            spec: self.spec,
            widths,
            strides,
            dyadic_only: self.dyadic_only,
        })
    }

    /// Keeps the scales with side at most `max_side`.
    pub fn with_max_side(&self, max_side: f64) -> Result<Self> {
        self.restricted(0.0, max_side * (1.0 + 1e-12))
    }

    /// Halves every anchor stride (stability probe for the surrogate).
    pub fn halved_strides(&self) -> Self {
        let mut out = self.clone();
        out.strides.iter_mut().for_each(|s| *s = (*s / 2).max(1));
        out.dyadic_only = false;
        out
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn is_dyadic(&self) -> bool {
        self.dyadic_only
    }

    /// Side lengths in box units.
    pub fn side_lengths(&self) -> Vec<f64> {
        let h = self.spec.spacing();
        self.widths.iter().map(|&w| w as f64 * h).collect()
    }

    pub fn scales(&self) -> usize {
        self.widths.len()
    }

    /// Anchor indices per axis for scale `i`.
    pub fn anchors(&self, scale: usize) -> Vec<usize> {
        (0..self.spec.points()).step_by(self.strides[scale]).collect()
    }

    /// All cubes of scale `i`.
    pub fn cubes_at(&self, scale: usize) -> Vec<Cube> {
        let a = self.anchors(scale);
        let width = self.widths[scale];
        if self.spec.dim() == 1 {
            a.iter().map(|&a0| Cube { anchor: [a0, 0], width }).collect()
        } else {
            a.iter()
                .flat_map(|&a0| a.iter().map(move |&a1| Cube { anchor: [a0, a1], width }))
                .collect()
        }
    }

    pub fn cubes(&self) -> Vec<Cube> {
        (0..self.scales()).flat_map(|s| self.cubes_at(s)).collect()
    }

    pub fn cube_count(&self) -> usize {
        (0..self.scales())
            .map(|s| self.anchors(s).len().pow(self.spec.dim() as u32))
            .sum()
    }

    pub(crate) fn ensure_grid(&self, spec: &GridSpec) -> Result<()> {
        self.spec.ensure_same(spec)
    }
}

/// Applies `op` to every line of a row-major `points^dim` array along `axis`.
fn for_each_line(data: &[f64], points: usize, dim: usize, axis: usize, op: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Vec<f64> {
    if dim == 1 {
        return op(data);
    }
    let mut out = vec![0.0; data.len()];
    if axis == 1 {
        out.par_chunks_mut(points)
            .zip(data.par_chunks(points))
            .for_each(|(o, row)| o.copy_from_slice(&op(row)));
    } else {
        let cols: Vec<Vec<f64>> = (0..points)
            .into_par_iter()
            .map(|c| {
                let col: Vec<f64> = (0..points).map(|r| data[r * points + c]).collect();
                op(&col)
            })
            .collect();
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                out[r * points + c] = *v;
            }
        }
    }
    out
}

/// Cyclic window sums `s[a] = sum_{t < w} v[(a + t) mod N]` from prefix sums.
fn window_sums(line: &[f64], w: usize) -> Vec<f64> {
    let n = line.len();
    let mut prefix = Vec::with_capacity(2 * n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for t in 0..2 * n {
        acc += line[t % n];
        prefix.push(acc);
    }
    (0..n).map(|a| prefix[a + w] - prefix[a]).collect()
}

/// Cyclic sliding maximum `m[x] = max_{0 <= t < w} v[(x - t) mod N]`: the
/// largest value among cubes of width `w` anchored so that they contain `x`.
fn trailing_max(line: &[f64], w: usize) -> Vec<f64> {
    let n = line.len();
    let mut out = vec![f64::NEG_INFINITY; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    // positions p in 0..2N stand for v[p mod N]; output x uses window (x+N-w, x+N]
    for p in 0..2 * n {
        let v = line[p % n];
        while let Some(&b) = dq.back() {
            if line[b % n] <= v {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(p);
        while let Some(&f) = dq.front() {
            if f + w <= p {
                dq.pop_front();
            } else {
                break;
            }
        }
        if p >= n {
            out[p - n] = line[dq[0] % n];
        }
    }
    out
}

/// Averages of `values` over every cube of width `w` at every anchor.
pub(crate) fn cube_averages(values: &[f64], spec: &GridSpec, w: usize) -> Vec<f64> {
    let n = spec.points();
    let dim = spec.dim();
    let mut sums = for_each_line(values, n, dim, dim - 1, |l| window_sums(l, w));
    if dim == 2 {
        sums = for_each_line(&sums, n, dim, 0, |l| window_sums(l, w));
    }
    let vol = (w as f64).powi(dim as i32);
    sums.iter_mut().for_each(|s| *s /= vol);
    sums
}

/// Spreads per-anchor cube values (`-inf` at unused anchors) to
/// `max` over cubes containing each point.
pub(crate) fn spread_max(per_anchor: &[f64], spec: &GridSpec, w: usize) -> Vec<f64> {
    let n = spec.points();
    let dim = spec.dim();
    let mut out = for_each_line(per_anchor, n, dim, dim - 1, |l| trailing_max(l, w));
    if dim == 2 {
        out = for_each_line(&out, n, dim, 0, |l| trailing_max(l, w));
    }
    out
}

/// Keeps only the anchors of `scale`; other entries become `-inf`.
pub(crate) fn mask_anchors(full: Vec<f64>, fam: &CubeFamily, scale: usize) -> Vec<f64> {
    let stride = fam.strides()[scale];
    if stride == 1 {
        return full;
    }
    let n = fam.spec().points();
    let dim = fam.spec().dim();
    full.into_iter()
        .enumerate()
        .map(|(flat, v)| {
            let on = if dim == 1 {
                flat % stride == 0
            } else {
                (flat / n) % stride == 0 && (flat % n) % stride == 0
            };
            if on {
                v
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Evaluates `f` on every cube of `scale` (in parallel) and lays the results
/// out per anchor, `-inf` elsewhere.
pub(crate) fn per_cube_values(
    fam: &CubeFamily,
    scale: usize,
    f: impl Fn(&Cube) -> f64 + Sync,
) -> Vec<f64> {
    let spec = fam.spec();
    let n = spec.points();
    let cubes = fam.cubes_at(scale);
    let vals: Vec<f64> = cubes.par_iter().map(&f).collect();
    let mut out = vec![f64::NEG_INFINITY; spec.len()];
    for (c, v) in cubes.iter().zip(vals) {
        let flat = if spec.dim() == 1 {
            c.anchor[0]
        } else {
            c.anchor[0] * n + c.anchor[1]
        };
        out[flat] = v;
    }
    out
}
