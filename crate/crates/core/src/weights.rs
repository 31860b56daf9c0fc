//! Weights, Muckenhoupt `A_p` constants, multilinear `A_p` constants and the
//! product weight `v_w = prod_j w_j^{p/p_j}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec};
use crate::maximal::{hl_maximal, CubeFamily};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDescriptor {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

/// Strictly positive finite density on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    spec: GridSpec,
    values: Vec<f64>,
    descriptor: WeightDescriptor,
}

impl Weight {
    pub fn from_values(spec: GridSpec, values: Vec<f64>, family: &str) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "{} weight values for {} grid points",
                values.len(),
                spec.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::param("weight", "values must be positive and finite"));
        }
        Ok(Self {
            spec,
            values,
            descriptor: WeightDescriptor {
                family: family.to_string(),
                exponent: None,
            },
        })
    }

    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        Self::from_values(spec, vec![c; spec.len()], "constant")
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn descriptor(&self) -> &WeightDescriptor {
        &self.descriptor
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = Self::from_values(self.spec, self.values.iter().map(|v| v * c).collect(), &self.descriptor.family)?;
        out.descriptor.exponent = self.descriptor.exponent;
        Ok(out)
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction::new(
            self.spec,
            self.values.iter().map(|&v| v.into()).collect(),
            Domain::Spatial,
        )
        .expect("weights are finite")
    }
}

/// Power weight `max(|x|, h/2)^a`; `|x|` is the distance to the box centre,
/// which is also the periodic distance to the origin.
pub fn power_weight(a: f64, spec: &GridSpec) -> Result<Weight> {
    let cap = 8.0 * spec.dim() as f64;
    if !(a.is_finite() && a.abs() < cap) {
        return Err(Error::param("a", format!("need |a| < {cap}, got {a}")));
    }
    let floor = 0.5 * spec.spacing();
    let values = (0..spec.len())
        .map(|i| {
            let x = spec.point(i);
            let r = x[..spec.dim()].iter().map(|c| c * c).sum::<f64>().sqrt();
            if a == 0.0 {
                1.0
            } else {
                r.max(floor).powf(a)
            }
        })
        .collect();
    let mut w = Weight::from_values(*spec, values, "power")?;
    w.descriptor.exponent = Some(a);
    Ok(w)
}

/// `l` weights with exponents `p_1, ..., p_l` and `1/p = sum 1/p_j`.
#[derive(Clone, Debug)]
pub struct WeightTuple {
    weights: Vec<Weight>,
    exponents: Vec<f64>,
}

impl WeightTuple {
    pub fn new(weights: Vec<Weight>, exponents: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != exponents.len() {
            return Err(Error::param("exponents", "need one exponent per weight"));
        }
        for &p in &exponents {
            if !(p.is_finite() && p > 1.0) {
                return Err(Error::param("exponents", format!("need p_j in (1, inf), got {p}")));
            }
        }
        for w in &weights[1..] {
            weights[0].spec.ensure_same(&w.spec)?;
        }
        Ok(Self { weights, exponents })
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `p` with `1/p = sum_j 1/p_j`.
    pub fn p(&self) -> f64 {
        1.0 / self.exponents.iter().map(|p| 1.0 / p).sum::<f64>()
    }

    pub fn spec(&self) -> &GridSpec {
        &self.weights[0].spec
    }
}

/// `v_w = prod_j w_j^{p/p_j}`.
pub fn product_weight(t: &WeightTuple) -> Result<Weight> {
    let p = t.p();
    let values = (0..t.spec().len())
        .map(|i| {
            t.weights
                .iter()
                .zip(&t.exponents)
                .map(|(w, pj)| w.values[i].powf(p / pj))
                .product()
        })
        .collect();
    let mut out = Weight::from_values(*t.spec(), values, "product")?;
    if t.weights.iter().all(|w| w.descriptor.family == "power") {
        out.descriptor.family = "power".into();
        out.descriptor.exponent = Some(
            t.weights
                .iter()
                .zip(&t.exponents)
                .map(|(w, pj)| w.descriptor.exponent.unwrap_or(0.0) * p / pj)
                .sum(),
        );
    }
    Ok(out)
}

/// Supremum over the family of `prod_i (avg_Q g_i)^{e_i}` for positive
/// densities `g_i`.
fn sup_of_average_products(spec: &GridSpec, fam: &CubeFamily, factors: &[(Vec<f64>, f64)]) -> f64 {
    let mut best = 0.0f64;
    for s in 0..fam.scales() {
        let w = fam.widths()[s];
        let mut prod = vec![1.0f64; spec.len()];
        for (g, e) in factors {
            let avg = crate::maximal::cube_averages(g, spec, w);
            prod.iter_mut().zip(avg).for_each(|(a, b)| *a *= b.max(f64::MIN_POSITIVE).powf(*e));
        }
        let masked = crate::maximal::mask_anchors(prod, fam, s);
        best = masked.into_iter().fold(best, f64::max);
    }
    best
}

/// `[w]_{A_p} = sup_Q (avg_Q w)(avg_Q w^{-1/(p-1)})^{p-1}`; for `p = 1`,
/// `sup_x Mw(x) / w(x)`.
pub fn ap_constant(w: &Weight, p: f64, fam: &CubeFamily) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::param("p", format!("need p >= 1, got {p}")));
    }
    fam.spec().ensure_same(&w.spec)?;
    if p == 1.0 {
        let m = hl_maximal(&w.to_grid_function(), 1.0, fam)?;
        return Ok(m
            .values()
            .iter()
            .zip(&w.values)
            .map(|(a, b)| a / b)
            .fold(0.0, f64::max));
    }
    let dual: Vec<f64> = w.values.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    Ok(sup_of_average_products(
        &w.spec,
        fam,
        &[(w.values.clone(), 1.0), (dual, p - 1.0)],
    ))
}

/// `sup_Q (avg_Q v_w)^{1/p} prod_j (avg_Q w_j^{1 - p_j'})^{1/p_j'}`, invariant
/// under `w_j -> c w_j`.
pub fn multilinear_ap_constant(t: &WeightTuple, fam: &CubeFamily) -> Result<f64> {
    fam.spec().ensure_same(t.spec())?;
    let v = product_weight(t)?;
    let p = t.p();
    let mut factors = vec![(v.values, 1.0 / p)];
    for (w, &pj) in t.weights.iter().zip(&t.exponents) {
        let e = -1.0 / (pj - 1.0);
        factors.push((w.values.iter().map(|x| x.powf(e)).collect(), 1.0 - 1.0 / pj));
    }
    Ok(sup_of_average_products(t.spec(), fam, &factors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::line(8.0, 64).unwrap()
    }

    fn naive_sup(spec: &GridSpec, fam: &CubeFamily, bracket: impl Fn(&[usize]) -> f64) -> f64 {
        fam.cubes()
            .iter()
            .map(|c| bracket(&c.indices(spec)))
            .fold(0.0, f64::max)
    }

    fn avg(v: &[f64], idx: &[usize], e: f64) -> f64 {
        idx.iter().map(|&i| v[i].powf(e)).sum::<f64>() / idx.len() as f64
    }

    #[test]
    fn power_weight_formula() {
        let g = grid();
        assert!(power_weight(0.0, &g).unwrap().values().iter().all(|&v| v == 1.0));
        let w = power_weight(1.0, &g).unwrap();
        assert!((w.values()[g.nearest_index(2.0)] - 2.0).abs() < 1e-12);
        assert_eq!(w.values()[g.nearest_index(0.0)], 0.5 * g.spacing());
        assert!(power_weight(9.0, &g).is_err());
    }

    #[test]
    fn constant_weights_have_unit_constant() {
        let g = grid();
        let fam = CubeFamily::standard(&g);
        for c in [1.0, 7.0] {
            let w = Weight::constant(g, c).unwrap();
            for p in [1.0, 1.5, 2.0, 4.0] {
                assert!((ap_constant(&w, p, &fam).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(ap_constant(&Weight::constant(g, 1.0).unwrap(), 0.5, &fam).is_err());
    }

    #[test]
    fn ap_constant_matches_loops() {
        let g = grid();
        let fam = CubeFamily::standard(&g);
        let w = power_weight(0.5, &g).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let fast = ap_constant(&w, p, &fam).unwrap();
            let slow = naive_sup(&g, &fam, |idx| {
                avg(w.values(), idx, 1.0) * avg(w.values(), idx, -1.0 / (p - 1.0)).powf(p - 1.0)
            });
            assert!((fast - slow).abs() <= 1e-10 * slow, "{fast} vs {slow}");
            assert!(fast >= 1.0);
        }
    }

    #[test]
    fn ap_constants_decrease_in_p() {
        let g = grid();
        let fam = CubeFamily::standard(&g);
        for a in [-0.4, 0.3, 0.9] {
            let w = power_weight(a, &g).unwrap();
            let cs: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 4.0]
                .iter()
                .map(|&p| ap_constant(&w, p, &fam).unwrap())
                .collect();
            assert!(cs.windows(2).all(|c| c[1] <= c[0] * (1.0 + 1e-12)), "{cs:?}");
        }
    }

    #[test]
    fn multilinear_constant_matches_loops_and_scales() {
        let g = grid();
        let fam = CubeFamily::standard(&g);
        let w1 = power_weight(0.25, &g).unwrap();
        let w2 = power_weight(-0.25, &g).unwrap();
        let t = WeightTuple::new(vec![w1.clone(), w2.clone()], vec![4.0, 4.0]).unwrap();
        let fast = multilinear_ap_constant(&t, &fam).unwrap();
        let v = product_weight(&t).unwrap();
        let slow = naive_sup(&g, &fam, |idx| {
            avg(v.values(), idx, 1.0).powf(0.5)
                * avg(w1.values(), idx, -1.0 / 3.0).powf(0.75)
                * avg(w2.values(), idx, -1.0 / 3.0).powf(0.75)
        });
        assert!((fast - slow).abs() <= 1e-10 * slow);
        let t2 = WeightTuple::new(vec![w1.scaled(5.0).unwrap(), w2], vec![4.0, 4.0]).unwrap();
        let scaled = multilinear_ap_constant(&t2, &fam).unwrap();
        assert!((scaled - fast).abs() <= 1e-10 * fast);
        let ones = WeightTuple::new(vec![Weight::constant(g, 1.0).unwrap(); 2], vec![3.0, 5.0]).unwrap();
        assert!((multilinear_ap_constant(&ones, &fam).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_weight_exponents() {
        let g = grid();
        let w = power_weight(0.6, &g).unwrap();
        let t = WeightTuple::new(vec![w.clone(), w.clone()], vec![2.0, 2.0]).unwrap();
        let v = product_weight(&t).unwrap();
        for (a, b) in v.values().iter().zip(w.values()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        let a = power_weight(0.3, &g).unwrap();
        let b = power_weight(-0.5, &g).unwrap();
        let t = WeightTuple::new(vec![a, b], vec![3.0, 6.0]).unwrap();
        let v = product_weight(&t).unwrap();
        let expect = power_weight(0.3 * 2.0 / 3.0 - 0.5 * 2.0 / 6.0, &g).unwrap();
        for (x, y) in v.values().iter().zip(expect.values()) {
            assert!((x - y).abs() <= 1e-12 * y);
        }
        assert!(WeightTuple::new(vec![w], vec![1.0]).is_err());
    }
}
