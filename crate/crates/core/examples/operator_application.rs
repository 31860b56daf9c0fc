//! Apply linear and bilinear pseudo-differential operators to test
//! functions by Fourier quadrature.

use maxharm::grid::{lp_norm, test_function, GridSpec, Profile};
use maxharm::operators::{apply_linear, apply_multilinear};
use maxharm::symbols::{critical_order, dyadic_modulation_symbol, oscillatory_symbol, SymbolClassParams};

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(8.0, 256)?;
    let f = test_function(&grid, Profile::Gaussian, -1.0, &[0.0], &[1.0])?;
    let g = test_function(&grid, Profile::Modulated, -0.5, &[0.3], &[-2.0])?;

    let osc = oscillatory_symbol(-0.25, 0.5, 1)?;
    let tf = apply_linear(&osc, &f)?;
    println!("oscillatory multiplier: ||f||_2 = {:.5}, ||Tf||_2 = {:.5}", lp_norm(&f, 2.0, None)?, lp_norm(&tf, 2.0, None)?);

    let rho = 0.5;
    let params = SymbolClassParams::exotic(critical_order(1, 2, 2.0, rho), rho, 2, 1)?;
    let sigma = dyadic_modulation_symbol(params, &grid, 3, 7)?;
    let tfg = apply_multilinear(&sigma, &[&f, &g])?;
    println!(
        "bilinear dyadic-modulation operator: ||T(f,g)||_1 = {:.5}, sup = {:.5}",
        lp_norm(&tfg, 1.0, None)?,
        tfg.sup_norm()
    );
    Ok(())
}
