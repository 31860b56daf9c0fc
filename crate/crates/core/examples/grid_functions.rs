//! Sample dilated, translated and modulated test functions on a periodic
//! grid and measure them in Lebesgue and Sobolev norms.

use maxharm::grid::{lp_norm, sobolev_norm, test_function, GridSpec, Profile};

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(16.0, 512)?;
    println!("grid: h = {}, nyquist = {}", grid.spacing(), grid.nyquist());
    for lambda in [0.0, -1.0, -2.0] {
        let f = test_function(&grid, Profile::Gaussian, lambda, &[0.5], &[2.0])?;
        println!(
            "lambda = {lambda:>4}: L^2 = {:.6}, L^inf = {:.3}, H^1 = {:.4}, tail mass = {:.1e}",
            lp_norm(&f, 2.0, None)?,
            f.sup_norm(),
            sobolev_norm(&f, 1.0)?,
            f.tail_mass()
        );
    }
    // too much modulation for this grid is refused rather than aliased
    let err = test_function(&grid, Profile::Gaussian, 0.0, &[0.0], &[15.0]).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}
