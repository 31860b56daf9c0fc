//! Inhomogeneous Littlewood-Paley partition of unity on `R^{nl}`.
//!
//! The low-pass profile is `phi(xi) = 1 - S(|xi| - 1)` with the smooth step
//! `S(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`, so `phi = 1` on `|xi| <= 1`
//! and `phi = 0` on `|xi| >= 2`. Annular pieces are `psi(xi) = phi(xi) -
//! phi(2 xi)` and `psi_k(xi) = psi(2^{-k} xi)`; the partial sums telescope to
//! `phi(2^{-K} xi)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{unravel, GridSpec};

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `C^infinity` in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Radial low-pass profile evaluated at `|xi| = r`.
pub fn phi_hat(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

/// Radial annular profile `phi(r) - phi(2r)`, supported in `[1/2, 2]`.
pub fn psi_hat(r: f64) -> f64 {
    phi_hat(r) - phi_hat(2.0 * r)
}

/// `psi_k(r) = psi(2^{-k} r)` for `k >= 1`, and `phi(r)` for `k = 0`.
pub fn piece_profile(k: usize, r: f64) -> f64 {
    if k == 0 {
        phi_hat(r)
    } else {
        psi_hat(r * (-(k as f64)).exp2())
    }
}

/// Closed support interval `[lo, hi]` of piece `k` in `|xi|`.
pub fn piece_support(k: usize) -> (f64, f64) {
    if k == 0 {
        (0.0, 2.0)
    } else {
        let c = (k as f64).exp2();
        (0.5 * c, 2.0 * c)
    }
}

pub(crate) fn euclid(xi: &[f64]) -> f64 {
    xi.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Partition `{phi, psi_1, ..., psi_Kmax}` resolvable on a given grid.
///
/// `gains` multiplies each piece; it is all ones for a genuine partition and
/// exists so that damaged partitions can be fed to [`partition_check`].
#[derive(Clone, Debug)]
pub struct LpPartition {
    grid: GridSpec,
    total_dimension: usize,
    k_max: usize,
    gains: Vec<f64>,
}

/// Builds the partition on `(R^n)^l` with `total_dimension = n l` axes.
///
/// `K_max = floor(log2(N / 2L)) - 1`, the last annulus whose outer edge
/// `2^{K_max + 1}` stays inside the Nyquist band.
pub fn build_partition(spec: &GridSpec, total_dimension: usize) -> Result<LpPartition> {
    if total_dimension == 0 || total_dimension > crate::grid::MAX_AXES {
        return Err(Error::param(
            "total_dimension",
            format!("must be in 1..={}", crate::grid::MAX_AXES),
        ));
    }
    if total_dimension % spec.dim() != 0 {
        return Err(Error::param(
            "total_dimension",
            format!("must be a multiple of n = {}", spec.dim()),
        ));
    }
    let nyq = spec.nyquist();
    if nyq < 8.0 {
        let required = (16.0 * spec.side()).ceil() as usize;
        return Err(Error::GridTooCoarse {
            reason: format!("Nyquist frequency {nyq} resolves fewer than 3 dyadic annuli"),
            required_points: required.next_power_of_two(),
        });
    }
    let k_max = (nyq.log2().floor() as usize) - 1;
    Ok(LpPartition {
        grid: *spec,
        total_dimension,
        k_max,
        gains: vec![1.0; k_max + 1],
    })
}

impl LpPartition {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn total_dimension(&self) -> usize {
        self.total_dimension
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Radius `2^{K_max}` on which the pieces sum to one.
    pub fn band_radius(&self) -> f64 {
        (self.k_max as f64).exp2()
    }

    pub fn phi(&self, xi: &[f64]) -> f64 {
        self.piece(0, xi)
    }

    /// Piece `k` (0 is the low-pass) at `xi`.
    pub fn piece(&self, k: usize, xi: &[f64]) -> f64 {
        if k > self.k_max {
            return 0.0;
        }
        self.gains[k] * piece_profile(k, euclid(xi))
    }

    pub fn sum(&self, xi: &[f64]) -> f64 {
        (0..=self.k_max).map(|k| self.piece(k, xi)).sum()
    }

    /// Copy with piece `k` removed.
    pub fn without_piece(&self, k: usize) -> Self {
        let mut out = self.clone();
        if k <= self.k_max {
            out.gains[k] = 0.0;
        }
        out
    }

    /// Copy with every piece multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.gains.iter_mut().for_each(|g| *g *= c);
        out
    }

    /// Visits every frequency point of the `(R^n)^l` grid.
    pub(crate) fn for_each_frequency(&self, mut f: impl FnMut(&[f64])) {
        let axes = self.total_dimension;
        let points = self.grid.points();
        let total = points.pow(axes as u32);
        let mut xi = [0.0; crate::grid::MAX_AXES];
        for flat in 0..total {
            let idx = unravel(flat, points, axes);
            for a in 0..axes {
                xi[a] = self.grid.freq(idx[a]);
            }
            f(&xi[..axes]);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    /// Max `|phi + sum psi_k - 1|` over grid frequencies with `|xi| <= 2^{K_max}`.
    pub max_deviation: f64,
    /// Max `|piece_k|` at grid frequencies outside the piece's annulus.
    pub max_support_violation: f64,
    /// Max absolute second difference of any piece along any axis, per unit
    /// frequency step squared.
    pub smoothness_proxy: f64,
    pub k_max: usize,
}

pub fn partition_check(p: &LpPartition) -> PartitionReport {
    let band = p.band_radius();
    let mut max_deviation = 0.0f64;
    let mut max_support_violation = 0.0f64;
    p.for_each_frequency(|xi| {
        let r = euclid(xi);
        if r <= band {
            max_deviation = max_deviation.max((p.sum(xi) - 1.0).abs());
        }
        for k in 0..=p.k_max {
            let (lo, hi) = piece_support(k);
            if r < lo || r > hi {
                max_support_violation = max_support_violation.max(p.piece(k, xi).abs());
            }
        }
    });

    let dxi = p.grid.freq_spacing();
    let points = p.grid.points();
    let mut smoothness_proxy = 0.0f64;
    for k in 0..=p.k_max {
        for i in 1..points - 1 {
            let f = |j: usize| {
                let mut xi = vec![0.0; p.total_dimension];
                xi[0] = p.grid.freq(j);
                p.piece(k, &xi)
            };
            let d2 = (f(i + 1) - 2.0 * f(i) + f(i - 1)) / (dxi * dxi);
            smoothness_proxy = smoothness_proxy.max(d2.abs());
        }
    }
    PartitionReport {
        max_deviation,
        max_support_violation,
        smoothness_proxy,
        k_max: p.k_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::line(32.0, 512).unwrap()
    }

    #[test]
    fn k_max_follows_nyquist() {
        let p = build_partition(&grid(), 1).unwrap();
        assert_eq!(p.k_max(), 2);
        let fine = GridSpec::line(8.0, 2048).unwrap();
        assert_eq!(build_partition(&fine, 1).unwrap().k_max(), 6);
    }

    #[test]
    fn coarse_grid_rejected_with_minimum() {
        let coarse = GridSpec::line(32.0, 256).unwrap();
        match build_partition(&coarse, 1) {
            Err(Error::GridTooCoarse {
                required_points, ..
            }) => assert_eq!(required_points, 512),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partition_sums_to_one_on_band() {
        // direct summation at every grid frequency
        let p = build_partition(&grid(), 1).unwrap();
        let mut worst = 0.0f64;
        for i in 0..512 {
            let xi = grid().freq(i);
            if xi.abs() <= 4.0 {
                let s = phi_hat(xi.abs()) + psi_hat(xi.abs() / 2.0) + psi_hat(xi.abs() / 4.0);
                worst = worst.max((s - 1.0).abs());
            }
        }
        assert!(worst <= 1e-12, "{worst}");
        let report = partition_check(&p);
        assert!(report.max_deviation <= 1e-12);
        assert_eq!(report.max_support_violation, 0.0);
    }

    #[test]
    fn origin_is_pure_low_pass() {
        let p = build_partition(&grid(), 1).unwrap();
        assert_eq!(p.phi(&[0.0]), 1.0);
        for k in 1..=p.k_max() {
            assert_eq!(p.piece(k, &[0.0]), 0.0);
        }
    }

    #[test]
    fn dyadic_points_split_between_neighbours() {
        let p = build_partition(&GridSpec::line(8.0, 2048).unwrap(), 1).unwrap();
        for k in 1..p.k_max() {
            let xi = [(k as f64).exp2() * 1.3];
            let pair = p.piece(k, &xi) + p.piece(k + 1, &xi);
            assert!((pair - 1.0).abs() < 1e-14);
            for j in (0..=p.k_max()).filter(|&j| j != k && j != k + 1) {
                assert_eq!(p.piece(j, &xi), 0.0);
            }
        }
    }

    #[test]
    fn telescoping_and_scaling() {
        for i in 0..4000 {
            let r = i as f64 * 1e-3;
            assert!((psi_hat(r) - (phi_hat(r) - phi_hat(2.0 * r))).abs() <= 1e-14);
            for k in 1..5 {
                let c = (k as f64).exp2();
                assert_eq!(piece_profile(k, r * c), psi_hat(r));
            }
        }
    }

    #[test]
    fn damaged_partitions_show_up() {
        let p = build_partition(&grid(), 1).unwrap();
        let removed = partition_check(&p.without_piece(p.k_max()));
        assert!((removed.max_deviation - 1.0).abs() < 1e-12);
        let half = partition_check(&p.rescaled(0.5));
        assert!((half.max_deviation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn multilinear_partition_is_radial() {
        let spec = GridSpec::line(4.0, 64).unwrap();
        let p = build_partition(&spec, 2).unwrap();
        let report = partition_check(&p);
        assert!(report.max_deviation <= 1e-12);
        assert_eq!(report.max_support_violation, 0.0);
        let a = p.piece(1, &[1.2, 0.9]);
        let b = p.piece(1, &[1.5, 0.0]);
        assert!((a - b).abs() < 1e-15);
    }
}
