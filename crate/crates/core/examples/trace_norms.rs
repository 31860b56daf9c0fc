//! Restriction of functions on a product space to the diagonal and the
//! ratio of Sobolev norms it satisfies.

use std::f64::consts::PI;

use maxharm::grid::{sobolev_norm, GridSpec};
use maxharm::trace::{collapse_last, diagonal_restrict, trace_ratio, ProductGridFunction};
use num_complex::Complex64;

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(16.0, 256)?;
    for a in [0.25, 1.0, 4.0] {
        let g = ProductGridFunction::from_fn(grid, 2, |x| {
            Complex64::new((-PI * (a * x[0] * x[0] + x[1] * x[1] / a)).exp(), 0.0)
        })?
        .checked()?;
        let diag = diagonal_restrict(&g);
        println!(
            "anisotropy {a}: ||g(x,x)||_(H^1/2) = {:.5}, trace ratio {:.5}",
            sobolev_norm(&diag, 0.5)?,
            trace_ratio(&g, 0.5)?
        );
    }
    let g = ProductGridFunction::from_fn(grid, 2, |x| Complex64::new((-PI * (x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.0))?;
    let collapsed = collapse_last(&g)?;
    println!("collapse gives {} factor(s)", collapsed.factors());
    Ok(())
}
