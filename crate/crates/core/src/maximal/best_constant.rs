//! Approximate minimisation of `c -> (avg |f - c|^t)^{1/t}` over complex `c`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples up to which every sample value is tried as a candidate when
/// `t < 1`.
pub const FULL_CANDIDATE_LIMIT: usize = 64;
/// Size of the strided sample subsample used as candidates otherwise.
pub const SUBSAMPLE: usize = 16;
/// Number of step halvings in the coordinate descent.
pub const DESCENT_ROUNDS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestConstant {
    pub c: Complex64,
    pub value: f64,
}

#[inline]
fn abs_pow(z: Complex64, t: f64) -> f64 {
    if t == 2.0 {
        z.norm_sqr()
    } else if t == 1.0 {
        z.norm()
    } else {
        z.norm_sqr().powf(0.5 * t)
    }
}

/// `avg |v - c|^t` (without the final root).
fn mean_power(values: &[Complex64], c: Complex64, t: f64) -> f64 {
    values.iter().map(|&v| abs_pow(v - c, t)).sum::<f64>() / values.len() as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Minimises `(avg |v - c|^t)^{1/t}`; the returned value is attained at the
/// returned `c` and so bounds the true infimum from above.
pub fn best_constant(values: &[Complex64], t: f64) -> Result<BestConstant> {
    best_constant_seeded(values, t, &[])
}

/// [`best_constant`] with extra starting candidates.
pub fn best_constant_seeded(values: &[Complex64], t: f64, seeds: &[Complex64]) -> Result<BestConstant> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    if values.is_empty() {
        return Err(Error::Degenerate("best constant of an empty sample set".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<Complex64>() / n as f64;
    let med = Complex64::new(
        median(values.iter().map(|z| z.re).collect()),
        median(values.iter().map(|z| z.im).collect()),
    );
    let mut candidates = vec![Complex64::new(0.0, 0.0), mean, med];
    candidates.extend_from_slice(seeds);
    if t < 1.0 && n <= FULL_CANDIDATE_LIMIT {
        candidates.extend_from_slice(values);
    } else {
        let step = n.div_ceil(SUBSAMPLE);
        candidates.extend(values.iter().step_by(step));
    }

    let mut best_c = candidates[0];
    let mut best = mean_power(values, best_c, t);
    for &c in &candidates[1..] {
        let v = mean_power(values, c, t);
        if v < best {
            best = v;
            best_c = c;
        }
    }

    if best > 0.0 {
        let (mut lo, mut hi) = (values[0], values[0]);
        for z in values {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let mut step = 0.5 * (hi.re - lo.re).max(hi.im - lo.im);
        let dirs = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        for _ in 0..DESCENT_ROUNDS {
            // move while some coordinate step improves, then shrink
            for _ in 0..8 {
                let mut improved = false;
                for d in dirs {
                    let c = best_c + d * step;
                    let v = mean_power(values, c, t);
                    if v < best {
                        best = v;
                        best_c = c;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
            step *= 0.5;
        }
    }

    Ok(BestConstant {
        c: best_c,
        value: best.powf(1.0 / t),
    })
}

/// Brute-force reference: minimum of the objective over a dense rectangular
/// grid of `c` values spanning the samples' bounding box (plus the samples
/// themselves).
pub fn best_constant_grid(values: &[Complex64], t: f64, resolution: usize) -> Result<BestConstant> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    if values.is_empty() {
        return Err(Error::Degenerate("best constant of an empty sample set".into()));
    }
    let (mut lo, mut hi) = (values[0], values[0]);
    for z in values {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let res = resolution.max(2);
    let axis = |a: f64, b: f64, i: usize| {
        if b > a {
            a + (b - a) * i as f64 / (res - 1) as f64
        } else {
            a
        }
    };
    let mut best = BestConstant {
        c: values[0],
        value: f64::INFINITY,
    };
    let mut consider = |c: Complex64| {
        let v = mean_power(values, c, t);
        if v < best.value {
            best = BestConstant { c, value: v };
        }
    };
    let im_steps = if hi.im > lo.im { res } else { 1 };
    for i in 0..res {
        for j in 0..im_steps {
            consider(Complex64::new(axis(lo.re, hi.re, i), axis(lo.im, hi.im, j)));
        }
    }
    values.iter().for_each(|&c| consider(c));
    best.value = best.value.powf(1.0 / t);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn constant_samples_annihilate() {
        let v = vec![Complex64::new(1.5, -0.5); 9];
        for t in [0.25, 0.5, 1.0, 2.0, 3.0] {
            let b = best_constant(&v, t).unwrap();
            assert_eq!(b.value, 0.0);
            assert_eq!(b.c, v[0]);
        }
    }

    #[test]
    fn median_optimal_for_t_one() {
        let b = best_constant(&real(&[0.0, 0.0, 0.0, 1.0]), 1.0).unwrap();
        assert_eq!(b.c, Complex64::new(0.0, 0.0));
        assert!((b.value - 0.25).abs() < 1e-15);
        let oracle = best_constant_grid(&real(&[0.0, 0.0, 0.0, 1.0]), 1.0, 1001).unwrap();
        assert!((oracle.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mean_and_deviation_for_t_two() {
        let xs = [0.3, -1.2, 2.5, 0.0, 4.1, -0.7];
        let v = real(&xs);
        let b = best_constant(&v, 2.0).unwrap();
        let mean = xs.iter().sum::<f64>() / 6.0;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 6.0).sqrt();
        assert!((b.value - sd).abs() <= 1e-12 * sd);
        assert!((b.c.re - mean).abs() <= 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(best_constant(&real(&[1.0]), 0.0).is_err());
        assert!(best_constant(&real(&[1.0]), f64::NAN).is_err());
        assert!(best_constant(&[], 1.0).is_err());
    }

    #[test]
    fn seeds_are_honoured() {
        let v = real(&[0.0, 1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0]);
        let base = best_constant(&v, 0.5).unwrap();
        let seeded = best_constant_seeded(&v, 0.5, &[base.c]).unwrap();
        assert!(seeded.value <= base.value);
    }

    proptest! {
        #[test]
        fn never_worse_than_dense_grid(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..40),
            t in prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
        ) {
            let v = real(&xs);
            let ours = best_constant(&v, t).unwrap();
            let oracle = best_constant_grid(&v, t, 401).unwrap();
            prop_assert!(ours.value <= oracle.value + 1e-9, "{} vs {}", ours.value, oracle.value);
            let zero = mean_power(&v, Complex64::new(0.0, 0.0), t).powf(1.0 / t);
            prop_assert!(ours.value <= zero);
        }
    }
}
