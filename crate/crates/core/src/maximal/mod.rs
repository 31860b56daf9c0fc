//! Maximal operators over finite cube families: `M_r`, the multi-sublinear
//! `M_r(f_1, ..., f_l)`, the homogeneous and inhomogeneous sharp maximal
//! functions, the dyadic maximal function and BMO seminorms.
//!
//! Averages come from cyclic prefix sums and the per-cube values are spread to
//! points with a sliding maximum, so each scale costs `O(N^n)` apart from the
//! per-cube oscillation minimisation.

mod best_constant;
mod cubes;
pub mod naive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use best_constant::{
    best_constant, best_constant_grid, best_constant_seeded, BestConstant, DESCENT_ROUNDS,
    FULL_CANDIDATE_LIMIT, SUBSAMPLE,
};
pub use cubes::{Cube, CubeFamily, DENSE_WIDTH_LIMIT};

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, GridSpec};
pub(crate) use cubes::{cube_averages, mask_anchors};
use cubes::{per_cube_values, spread_max};

/// Which operator produced a [`MaximalField`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalKind {
    HardyLittlewood,
    MultiSublinear,
    SharpHomogeneous,
    SharpInhomogeneous,
    Dyadic,
    /// `(M#(|f|^t))^{1/t}` with seeded constants.
    SharpOfPower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub kind: MaximalKind,
    pub exponent: f64,
    pub scales: usize,
    pub cubes: usize,
}

/// Nonnegative values of a maximal function at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalField {
    spec: GridSpec,
    values: Vec<f64>,
    provenance: Provenance,
}

impl MaximalField {
    fn new(spec: GridSpec, values: Vec<f64>, kind: MaximalKind, exponent: f64, fam: &CubeFamily) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("maximal field"));
        }
        Ok(Self {
            spec,
            values,
            provenance: Provenance {
                kind,
                exponent,
                scales: fam.scales(),
                cubes: fam.cube_count(),
            },
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction::new(
            self.spec,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            Domain::Spatial,
        )
        .expect("maximal field values are finite")
    }
}

fn check_input(f: &GridFunction, fam: &CubeFamily) -> Result<()> {
    f.require(Domain::Spatial)?;
    fam.ensure_grid(f.spec())?;
    if fam.scales() == 0 {
        return Err(Error::EmptyFamily);
    }
    Ok(())
}

fn check_exponent(name: &'static str, r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {r}")))
    }
}

/// Pointwise maximum over scales of the spread per-cube values.
fn max_over_scales(fam: &CubeFamily, per_scale: impl Fn(usize) -> Vec<f64>) -> Vec<f64> {
    let spec = fam.spec();
    let mut out = vec![f64::NEG_INFINITY; spec.len()];
    for s in 0..fam.scales() {
        let spread = spread_max(&per_scale(s), spec, fam.widths()[s]);
        out.iter_mut().zip(spread).for_each(|(o, v)| *o = o.max(v));
    }
    out
}

fn powers(f: &GridFunction, r: f64) -> Vec<f64> {
    f.samples()
        .iter()
        .map(|z| if r == 1.0 { z.norm() } else { z.norm().powf(r) })
        .collect()
}

/// `M_r f(x) = max_{Q ni x} (avg_Q |f|^r)^{1/r}`.
pub fn hl_maximal(f: &GridFunction, r: f64, fam: &CubeFamily) -> Result<MaximalField> {
    check_input(f, fam)?;
    check_exponent("r", r)?;
    let v = powers(f, r);
    let m = max_over_scales(fam, |s| mask_anchors(cube_averages(&v, fam.spec(), fam.widths()[s]), fam, s));
    let values = m.into_iter().map(|a| a.max(0.0).powf(1.0 / r)).collect();
    MaximalField::new(*f.spec(), values, MaximalKind::HardyLittlewood, r, fam)
}

/// `M_r(f_1, ..., f_l)(x) = max_{Q ni x} prod_j (avg_Q |f_j|^r)^{1/r}`.
pub fn multisublinear_maximal(fs: &[&GridFunction], r: f64, fam: &CubeFamily) -> Result<MaximalField> {
    let first = fs.first().ok_or_else(|| Error::param("fs", "need at least one function"))?;
    for f in fs {
        check_input(f, fam)?;
        first.spec().ensure_same(f.spec())?;
    }
    check_exponent("r", r)?;
    let pows: Vec<Vec<f64>> = fs.iter().map(|f| powers(f, r)).collect();
    let m = max_over_scales(fam, |s| {
        let w = fam.widths()[s];
        let mut prod = vec![1.0; fam.spec().len()];
        for p in &pows {
            let avg = cube_averages(p, fam.spec(), w);
            prod.iter_mut()
                .zip(avg)
                .for_each(|(a, b)| *a *= b.max(0.0).powf(1.0 / r));
        }
        mask_anchors(prod, fam, s)
    });
    let values = m.into_iter().map(|a| a.max(0.0)).collect();
    MaximalField::new(*first.spec(), values, MaximalKind::MultiSublinear, r, fam)
}

/// Max over cubes containing each point of the best-constant oscillation
/// with exponent `t`.
fn oscillation_field(f: &GridFunction, t: f64, fam: &CubeFamily) -> Result<Vec<f64>> {
    let samples = f.samples();
    let spec = *f.spec();
    let m = max_over_scales(fam, |s| {
        per_cube_values(fam, s, |cube| {
            let vals: Vec<Complex64> = cube.indices(&spec).iter().map(|&i| samples[i]).collect();
            best_constant(&vals, t).map(|b| b.value).unwrap_or(f64::NAN)
        })
    });
    Ok(m.into_iter().map(|v| v.max(0.0)).collect())
}

/// `M# f(x) = max_{Q ni x} inf_c avg_Q |f - c|`.
pub fn sharp_maximal_homogeneous(f: &GridFunction, fam: &CubeFamily) -> Result<MaximalField> {
    sharp_maximal_homogeneous_exponent(f, 1.0, fam)
}

/// `max_{Q ni x} inf_c (avg_Q |f - c|^t)^{1/t}`.
pub fn sharp_maximal_homogeneous_exponent(f: &GridFunction, t: f64, fam: &CubeFamily) -> Result<MaximalField> {
    check_input(f, fam)?;
    check_exponent("t", t)?;
    let values = oscillation_field(f, t, fam)?;
    MaximalField::new(*f.spec(), values, MaximalKind::SharpHomogeneous, t, fam)
}

/// The two terms of the inhomogeneous sharp maximal function: plain
/// `L^r` averages over cubes with side `>= 1`, and `L^r` oscillations over
/// cubes with side `< 1`.
#[derive(Clone, Debug)]
pub struct InhomogeneousParts {
    pub large: MaximalField,
    pub small: MaximalField,
}

/// Unit side length separating the two terms.
pub const UNIT_SIDE: f64 = 1.0;

pub fn sharp_maximal_inhomogeneous_parts(
    f: &GridFunction,
    r: f64,
    fam: &CubeFamily,
) -> Result<InhomogeneousParts> {
    check_input(f, fam)?;
    check_exponent("r", r)?;
    let tol = 1e-12;
    let large_fam = fam.restricted(UNIT_SIDE - tol, f64::INFINITY).map_err(|_| {
        Error::FamilyShape("no cubes with side >= 1".into())
    })?;
    let small_fam = fam
        .restricted(0.0, UNIT_SIDE - tol)
        .map_err(|_| Error::FamilyShape("no cubes with side < 1".into()))?;
    let large = hl_maximal(f, r, &large_fam)?;
    let small = oscillation_field(f, r, &small_fam)?;
    Ok(InhomogeneousParts {
        large: MaximalField {
            provenance: Provenance {
                kind: MaximalKind::SharpInhomogeneous,
                ..large.provenance
            },
            ..large
        },
        small: MaximalField::new(*f.spec(), small, MaximalKind::SharpInhomogeneous, r, &small_fam)?,
    })
}

/// Inhomogeneous sharp maximal function: the large-cube `L^r` average term
/// plus the small-cube `L^r` oscillation term.
pub fn sharp_maximal_inhomogeneous(f: &GridFunction, r: f64, fam: &CubeFamily) -> Result<MaximalField> {
    let parts = sharp_maximal_inhomogeneous_parts(f, r, fam)?;
    let values = parts
        .large
        .values
        .iter()
        .zip(&parts.small.values)
        .map(|(a, b)| a + b)
        .collect();
    MaximalField::new(*f.spec(), values, MaximalKind::SharpInhomogeneous, r, fam)
}

/// Dyadic maximal function `max_{dyadic Q ni x} avg_Q |f|`.
pub fn dyadic_maximal(f: &GridFunction, fam: &CubeFamily) -> Result<MaximalField> {
    if !fam.is_dyadic() {
        return Err(Error::FamilyShape("dyadic maximal function needs a dyadic family".into()));
    }
    let mut out = hl_maximal(f, 1.0, fam)?;
    out.provenance.kind = MaximalKind::Dyadic;
    Ok(out)
}

/// `sup_Q inf_c (avg_Q |f - c|^t)^{1/t}` over the family.
pub fn bmo_seminorm(f: &GridFunction, fam: &CubeFamily, t: f64) -> Result<f64> {
    check_input(f, fam)?;
    check_exponent("t", t)?;
    let samples = f.samples();
    let spec = *f.spec();
    let cubes = fam.cubes();
    let vals: Result<Vec<f64>> = cubes
        .par_iter()
        .map(|cube| {
            let v: Vec<Complex64> = cube.indices(&spec).iter().map(|&i| samples[i]).collect();
            best_constant(&v, t).map(|b| b.value)
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// Both sides of the power embedding
/// `(M#(|f|^t))^{1/t} <= M#_t f` for `0 < t <= 1`.
///
/// On every cube the constant `|c|^t` built from the `t`-oscillation
/// minimiser `c` is offered as a candidate for `|f|^t`, so the computed
/// inequality holds cube by cube, hence pointwise.
pub fn sharp_power_embedding(
    f: &GridFunction,
    t: f64,
    fam: &CubeFamily,
) -> Result<(MaximalField, MaximalField)> {
    check_input(f, fam)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::param("t", format!("need 0 < t <= 1, got {t}")));
    }
    let samples = f.samples();
    let spec = *f.spec();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..fam.scales())
        .map(|s| {
            let cubes = fam.cubes_at(s);
            let both: Vec<(f64, f64)> = cubes
                .par_iter()
                .map(|cube| {
                    let v: Vec<Complex64> = cube.indices(&spec).iter().map(|&i| samples[i]).collect();
                    let osc = best_constant(&v, t).expect("validated input");
                    let pw: Vec<Complex64> =
                        v.iter().map(|z| Complex64::new(z.norm().powf(t), 0.0)).collect();
                    let seed = Complex64::new(osc.c.norm().powf(t), 0.0);
                    let lhs = best_constant_seeded(&pw, 1.0, &[seed]).expect("validated input");
                    (lhs.value.powf(1.0 / t), osc.value)
                })
                .collect();
            let n = spec.points();
            let mut l = vec![f64::NEG_INFINITY; spec.len()];
            let mut r = vec![f64::NEG_INFINITY; spec.len()];
            for (c, (a, b)) in cubes.iter().zip(both) {
                let flat = if spec.dim() == 1 { c.anchor[0] } else { c.anchor[0] * n + c.anchor[1] };
                l[flat] = a;
                r[flat] = b;
            }
            (l, r)
        })
        .collect();
    let lhs = max_over_scales(fam, |s| pairs[s].0.clone());
    let rhs = max_over_scales(fam, |s| pairs[s].1.clone());
    Ok((
        MaximalField::new(spec, lhs, MaximalKind::SharpOfPower, t, fam)?,
        MaximalField::new(spec, rhs, MaximalKind::SharpHomogeneous, t, fam)?,
    ))
}
