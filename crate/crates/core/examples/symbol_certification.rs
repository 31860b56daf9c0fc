//! Estimate the symbol-class seminorms of the dyadic-modulation family and
//! of a dilated piece, by finite differences on the grid.

use maxharm::grid::GridSpec;
use maxharm::littlewood_paley::build_partition;
use maxharm::symbols::{
    critical_order, dilate_symbol, dyadic_modulation_symbol, estimate_seminorms, lp_pieces, SeminormOptions,
    SymbolClassParams,
};

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(16.0, 1024)?;
    let rho = 0.5;
    let m = critical_order(1, 1, 2.0, rho);
    let params = SymbolClassParams::exotic(m, rho, 1, 1)?;
    let sigma = dyadic_modulation_symbol(params, &grid, 3, 7)?;
    let report = estimate_seminorms(&sigma, &params, &grid, SeminormOptions::default())?;
    println!("m = {m}, rho = {rho}: largest seminorm {:.3} (ceiling {}), pass = {}", report.max_entry, report.ceiling, report.pass);
    for e in &report.entries {
        println!("  alpha {:?} beta {:?}: {:.4}", e.alpha, e.beta, e.value);
    }

    let partition = build_partition(&grid, 1)?;
    let piece = lp_pieces(&sigma, &partition)?.remove(2);
    let lambda = 0.25;
    let target = grid.dilated((lambda * 2.0f64).exp2())?;
    let tau = dilate_symbol(&piece, lambda, 2, &target)?;
    let declared = params.dilated(lambda)?;
    let rep = estimate_seminorms(&tau, &declared, &target, SeminormOptions::default())?;
    println!(
        "dilated piece k = 2, lambda = {lambda}: class (m, rho) = ({:.4}, {:.4}), largest seminorm {:.3}",
        declared.order, declared.rho, rep.max_entry
    );
    Ok(())
}
