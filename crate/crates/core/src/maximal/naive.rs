//! Reference implementations that loop over every cube of a family and sum
//! its samples directly. Quadratic or worse; meant for small grids and for
//! cross-checking the fast operators.

use num_complex::Complex64;

use super::{best_constant, best_constant_grid, CubeFamily, UNIT_SIDE};
use crate::error::Result;
use crate::grid::GridFunction;

fn cube_max(f: &GridFunction, fam: &CubeFamily, value: impl Fn(&[Complex64], f64) -> f64) -> Vec<f64> {
    let spec = *f.spec();
    let h = spec.spacing();
    let mut out = vec![0.0f64; spec.len()];
    for cube in fam.cubes() {
        let idx = cube.indices(&spec);
        let vals: Vec<Complex64> = idx.iter().map(|&i| f.samples()[i]).collect();
        let v = value(&vals, cube.width as f64 * h);
        for &i in &idx {
            out[i] = out[i].max(v);
        }
    }
    out
}

fn mean_pow(vals: &[Complex64], r: f64) -> f64 {
    vals.iter().map(|z| z.norm().powf(r)).sum::<f64>() / vals.len() as f64
}

pub fn hl_maximal(f: &GridFunction, r: f64, fam: &CubeFamily) -> Vec<f64> {
    cube_max(f, fam, |v, _| mean_pow(v, r).powf(1.0 / r))
}

pub fn multisublinear_maximal(fs: &[&GridFunction], r: f64, fam: &CubeFamily) -> Vec<f64> {
    let spec = *fs[0].spec();
    let mut out = vec![0.0f64; spec.len()];
    for cube in fam.cubes() {
        let idx = cube.indices(&spec);
        let v: f64 = fs
            .iter()
            .map(|f| {
                let vals: Vec<Complex64> = idx.iter().map(|&i| f.samples()[i]).collect();
                mean_pow(&vals, r).powf(1.0 / r)
            })
            .product();
        for &i in &idx {
            out[i] = out[i].max(v);
        }
    }
    out
}

/// Sharp maximal function with the best constant found by dense grid search.
pub fn sharp_maximal_homogeneous(f: &GridFunction, t: f64, fam: &CubeFamily, resolution: usize) -> Result<Vec<f64>> {
    Ok(cube_max(f, fam, |v, _| best_constant_grid(v, t, resolution).map(|b| b.value).unwrap_or(f64::NAN)))
}

/// Inhomogeneous sharp maximal function by brute force: large-cube average
/// term plus small-cube oscillation term, oscillations by dense grid search.
pub fn sharp_maximal_inhomogeneous(f: &GridFunction, r: f64, fam: &CubeFamily, resolution: usize) -> Result<Vec<f64>> {
    let tol = 1e-12;
    let large = cube_max(f, fam, |v, side| {
        if side >= UNIT_SIDE - tol {
            mean_pow(v, r).powf(1.0 / r)
        } else {
            0.0
        }
    });
    let small = cube_max(f, fam, |v, side| {
        if side < UNIT_SIDE - tol {
            best_constant_grid(v, r, resolution).map(|b| b.value).unwrap_or(f64::NAN)
        } else {
            0.0
        }
    });
    Ok(large.iter().zip(&small).map(|(a, b)| a + b).collect())
}

pub fn bmo_seminorm(f: &GridFunction, fam: &CubeFamily, t: f64) -> Result<f64> {
    let spec = *f.spec();
    let mut best = 0.0f64;
    for cube in fam.cubes() {
        let vals: Vec<Complex64> = cube.indices(&spec).iter().map(|&i| f.samples()[i]).collect();
        best = best.max(best_constant(&vals, t)?.value);
    }
    Ok(best)
}
