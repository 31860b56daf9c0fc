//! Power weights, their A_p constants and the multilinear constant of a
//! weight tuple.

use maxharm::grid::GridSpec;
use maxharm::maximal::CubeFamily;
use maxharm::weights::{ap_constant, multilinear_ap_constant, power_weight, product_weight, WeightTuple};

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(4.0, 256)?;
    let fam = CubeFamily::standard(&grid);
    for a in [-0.5, 0.0, 0.5, 1.5] {
        let w = power_weight(a, &grid)?;
        println!("|x|^{a}: A_2 constant {:.4}", ap_constant(&w, 2.0, &fam)?);
    }
    let tuple = WeightTuple::new(vec![power_weight(0.25, &grid)?, power_weight(-0.25, &grid)?], vec![2.0, 2.0])?;
    println!("tuple (|x|^1/4, |x|^-1/4) at p = (2, 2): constant {:.4}", multilinear_ap_constant(&tuple, &fam)?);
    let v = product_weight(&tuple)?;
    println!("product weight at x = 1: {:.4}", v.values()[grid.nearest_index(1.0)]);
    Ok(())
}
