//! Functions on `(R^n)^l` sampled on product grids, restriction to the
//! diagonal `x_1 = ... = x_l`, and the trace ratio
//! `||G~||_{L^2_s} / ||G||_{L^2_{s + (l-1) n / 2}}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{sobolev_norm, sobolev_norm_nd, unravel, Domain, GridFunction, GridSpec, TAIL_MASS_LIMIT};

/// Largest number of factors supported (memory grows as `N^l`).
pub const MAX_FACTORS: usize = 3;

/// Samples of `G(x_1, ..., x_l)` on `l` copies of one line grid, row-major
/// with `x_l` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductGridFunction {
    spec: GridSpec,
    factors: usize,
    samples: Vec<Complex64>,
}

impl ProductGridFunction {
    pub fn new(spec: GridSpec, factors: usize, samples: Vec<Complex64>) -> Result<Self> {
        if spec.dim() != 1 {
            return Err(Error::param("spec", "product grids are built from line grids"));
        }
        if factors == 0 || factors > MAX_FACTORS {
            return Err(Error::param("factors", format!("need 1..={MAX_FACTORS}, got {factors}")));
        }
        if samples.len() != spec.points().pow(factors as u32) {
            return Err(Error::GridMismatch(format!(
                "{} samples for {factors} factors of {} points",
                samples.len(),
                spec.points()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("product grid samples"));
        }
        Ok(Self {
            spec,
            factors,
            samples,
        })
    }

    pub fn from_fn(spec: GridSpec, factors: usize, g: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        if factors == 0 || factors > MAX_FACTORS {
            return Err(Error::param("factors", format!("need 1..={MAX_FACTORS}, got {factors}")));
        }
        let total = spec.points().pow(factors as u32);
        let mut x = [0.0; MAX_FACTORS];
        let samples = (0..total)
            .map(|flat| {
                let idx = unravel(flat, spec.points(), factors);
                for a in 0..factors {
                    x[a] = spec.coord(idx[a]);
                }
                g(&x[..factors])
            })
            .collect();
        Self::new(spec, factors, samples)
    }

    /// `G(x_1, ..., x_l) = prod_j g_j(x_j)`.
    pub fn tensor(parts: &[&GridFunction]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::param("parts", "need at least one factor"))?;
        for p in parts {
            p.require(Domain::Spatial)?;
            first.spec().ensure_same(p.spec())?;
        }
        let spec = *first.spec();
        let l = parts.len();
        let samples = (0..spec.points().pow(l as u32))
            .map(|flat| {
                let idx = unravel(flat, spec.points(), l);
                (0..l).map(|j| parts[j].samples()[idx[j]]).product()
            })
            .collect();
        Self::new(spec, l, samples)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Fraction of `|G|^2` mass with some coordinate in the outer 10% shell.
    pub fn tail_mass(&self) -> f64 {
        let edge = 0.4 * self.spec.side();
        let mut total = 0.0;
        let mut shell = 0.0;
        for (flat, z) in self.samples.iter().enumerate() {
            let m = z.norm_sqr();
            total += m;
            let idx = unravel(flat, self.spec.points(), self.factors);
            if idx[..self.factors].iter().any(|&i| self.spec.coord(i).abs() >= edge) {
                shell += m;
            }
        }
        if total > 0.0 {
            shell / total
        } else {
            0.0
        }
    }

    /// Rejects samples whose tail mass exceeds [`TAIL_MASS_LIMIT`].
    pub fn checked(self) -> Result<Self> {
        let mass = self.tail_mass();
        if mass > TAIL_MASS_LIMIT {
            return Err(Error::TailMass {
                mass,
                limit: TAIL_MASS_LIMIT,
            });
        }
        Ok(self)
    }

    /// Bessel-potential norm on `R^l` with smoothness `s`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        sobolev_norm_nd(&self.samples, self.spec.points(), self.spec.side(), self.factors, s)
    }
}

/// `G~(x) = G(x, ..., x)`.
pub fn diagonal_restrict(g: &ProductGridFunction) -> GridFunction {
    let n = g.spec.points();
    let l = g.factors;
    let step: usize = (0..l).map(|a| n.pow(a as u32)).sum();
    let samples = (0..n).map(|j| g.samples[j * step]).collect();
    GridFunction::new(g.spec, samples, Domain::Spatial).expect("samples already validated")
}

/// `H(x_1, ..., x_k, x_{k+1}) -> H(x_1, ..., x_k, x_k)`.
pub fn collapse_last(h: &ProductGridFunction) -> Result<ProductGridFunction> {
    if h.factors < 2 {
        return Err(Error::param("h", "need at least two factors to collapse"));
    }
    let n = h.spec.points();
    let k = h.factors - 1;
    let samples = (0..n.pow(k as u32))
        .map(|flat| {
            let last = flat % n;
            h.samples[flat * n + last]
        })
        .collect();
    ProductGridFunction::new(h.spec, k, samples)
}

/// `||G~||_{L^2_s(R)} / ||G||_{L^2_{s + (l-1)/2}(R^l)}`.
pub fn trace_ratio(g: &ProductGridFunction, s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::param("s", format!("need s > 0, got {s}")));
    }
    let top = sobolev_norm(&diagonal_restrict(g), s)?;
    let bottom = g.sobolev_norm(s + 0.5 * (g.factors as f64 - 1.0));
    if bottom <= 0.0 {
        return Err(Error::Degenerate("zero Sobolev norm in the trace ratio".into()));
    }
    Ok(top / bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line() -> GridSpec {
        GridSpec::line(8.0, 64).unwrap()
    }

    fn gauss(spec: GridSpec, a: f64, x0: f64) -> GridFunction {
        GridFunction::from_real_fn(spec, |x| (-PI * a * (x[0] - x0).powi(2)).exp()).unwrap()
    }

    #[test]
    fn tensor_diagonal_is_pointwise_product() {
        let g = line();
        let a = gauss(g, 1.0, 0.3);
        let b = gauss(g, 2.0, -0.4);
        let t = ProductGridFunction::tensor(&[&a, &b]).unwrap();
        let d = diagonal_restrict(&t);
        for i in 0..64 {
            assert_eq!(d.samples()[i], a.samples()[i] * b.samples()[i]);
        }
    }

    #[test]
    fn gaussian_diagonal() {
        let g = line();
        let t = ProductGridFunction::from_fn(g, 2, |x| Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).unwrap();
        let d = diagonal_restrict(&t);
        for i in 0..64 {
            let x = g.coord(i);
            assert!((d.samples()[i].re - (-2.0 * PI * x * x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_functions_and_permutations() {
        let g = line();
        let f = |x: &[f64]| Complex64::new((-(x[0] - 0.2).powi(2) - 2.0 * (x[1] + 0.1).powi(2)).exp(), x[0] * x[1]);
        let a = ProductGridFunction::from_fn(g, 2, f).unwrap();
        let b = ProductGridFunction::from_fn(g, 2, |x| f(&[x[1], x[0]])).unwrap();
        assert_eq!(diagonal_restrict(&a), diagonal_restrict(&b));
    }

    #[test]
    fn iterated_collapse_equals_diagonal() {
        let g = line();
        let parts: Vec<GridFunction> = (0..3).map(|j| gauss(g, 1.0 + j as f64, 0.1 * j as f64)).collect();
        let t = ProductGridFunction::tensor(&[&parts[0], &parts[1], &parts[2]]).unwrap();
        let once = collapse_last(&t).unwrap();
        assert_eq!(once.factors(), 2);
        // product structure in the last slot after one collapse
        for i in 0..64 {
            for j in 0..64 {
                let expect = parts[0].samples()[i] * parts[1].samples()[j] * parts[2].samples()[j];
                assert_eq!(once.samples()[i * 64 + j], expect);
            }
        }
        let twice = collapse_last(&once).unwrap();
        let direct = diagonal_restrict(&t);
        for i in 0..64 {
            assert!((twice.samples()[i] - direct.samples()[i]).norm() <= 1e-12);
        }
        assert_eq!(diagonal_restrict(&once), direct);
        let single = collapse_last(&twice);
        assert!(single.is_err());
    }

    #[test]
    fn l2_collapse_is_diagonal() {
        let g = line();
        let t = ProductGridFunction::tensor(&[&gauss(g, 1.0, 0.0), &gauss(g, 3.0, 0.5)]).unwrap();
        let c = collapse_last(&t).unwrap();
        assert_eq!(c.samples(), diagonal_restrict(&t).samples());
    }

    #[test]
    fn trace_ratio_against_frequency_sums() {
        // isotropic Gaussian e^{-pi(x^2+y^2)}: diagonal e^{-2 pi x^2}
        let g = GridSpec::line(8.0, 128).unwrap();
        let t = ProductGridFunction::from_fn(g, 2, |x| Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).unwrap();
        let s = 0.5;
        let ratio = trace_ratio(&t, s).unwrap();
        // continuum oracle: ^ of e^{-2 pi x^2} is e^{-pi xi^2 / 2}/sqrt 2
        let d = 1.0 / 8.0;
        let mut top = 0.0;
        let mut bottom = 0.0;
        for i in -400..400 {
            let xi = i as f64 * d;
            top += (1.0 + 4.0 * PI * PI * xi * xi).powf(s) * (-PI * xi * xi).exp() / 2.0 * d;
            for j in -400..400 {
                let eta = j as f64 * d;
                let r2 = xi * xi + eta * eta;
                bottom += (1.0 + 4.0 * PI * PI * r2).powf(s + 0.5) * (-2.0 * PI * r2).exp() * d * d;
            }
        }
        let oracle = (top / bottom).sqrt();
        assert!((ratio - oracle).abs() <= 1e-8 * oracle, "{ratio} vs {oracle}");
        assert!(trace_ratio(&t, 1.0).unwrap().is_finite());
        assert!(trace_ratio(&t, 0.0).is_err());
        let zero = ProductGridFunction::from_fn(g, 2, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(trace_ratio(&zero, 0.5).is_err());
    }
}
