//! Weighted kernel norms of Littlewood-Paley pieces and their growth in k
//! against the predicted exponent.

use maxharm::grid::GridSpec;
use maxharm::littlewood_paley::build_partition;
use maxharm::operators::{kernel_of_piece, kernel_weighted_norm, predicted_kernel_exponent, KernelVariant};
use maxharm::symbols::{critical_order, dyadic_modulation_symbol, lp_pieces, SymbolClassParams};
use maxharm::verification::fit_log_slope;

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(8.0, 4096)?;
    let (r, rho) = (2.0, 0.5);
    let m = critical_order(1, 1, r, rho);
    let params = SymbolClassParams::exotic(m, rho, 1, 1)?;
    let sigma = dyadic_modulation_symbol(params, &grid, 6, 7)?;
    let pieces = lp_pieces(&sigma, &build_partition(&grid, 1)?)?;
    let y = grid.len() / 2 + 17;
    for variant in KernelVariant::ALL {
        let mut series = Vec::new();
        for k in 1..=6 {
            let kernel = kernel_of_piece(&pieces[k], &grid, y)?;
            series.push((k as f64, kernel_weighted_norm(&kernel, 1.0 / r + 1.0, r, rho, variant)?));
        }
        let fit = fit_log_slope(&series)?;
        println!(
            "{:>6}: slope {:.3}, predicted {:.3}",
            variant.name(),
            fit.slope,
            predicted_kernel_exponent(m, 1, 1, r, rho, variant)
        );
    }
    Ok(())
}
