//! Build a Littlewood-Paley partition on a grid, check that it sums to one,
//! and split a symbol into dyadic pieces.

use maxharm::grid::GridSpec;
use maxharm::littlewood_paley::{build_partition, partition_check, piece_support};
use maxharm::symbols::{dyadic_modulation_symbol, lp_pieces, SymbolClassParams};

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(16.0, 512)?;
    let partition = build_partition(&grid, 1)?;
    let report = partition_check(&partition);
    println!(
        "K_max = {}, max |sum - 1| = {:.2e}, support leakage = {:.2e}",
        report.k_max, report.max_deviation, report.max_support_violation
    );
    for k in 0..=partition.k_max() {
        let (lo, hi) = piece_support(k);
        println!("piece {k}: {lo} <= |xi| <= {hi}");
    }
    let params = SymbolClassParams::exotic(-0.25, 0.5, 1, 1)?;
    let sigma = dyadic_modulation_symbol(params, &grid, partition.k_max() - 1, 1)?;
    let pieces = lp_pieces(&sigma, &partition)?;
    let xi = [6.0];
    let sum: num_complex::Complex64 = pieces.iter().map(|p| p.eval(&[0.3], &xi)).sum();
    println!("sigma(0.3, 6) = {:.6}, sum of pieces = {:.6}", sigma.eval(&[0.3], &xi), sum);
    Ok(())
}
