//! Hardy-Littlewood, multi-sublinear, sharp and dyadic maximal functions on
//! a grid, plus the BMO seminorm.

use maxharm::grid::{test_function, GridSpec, Profile};
use maxharm::maximal::{
    bmo_seminorm, dyadic_maximal, hl_maximal, multisublinear_maximal, sharp_maximal_homogeneous,
    sharp_maximal_inhomogeneous, CubeFamily,
};

fn main() -> maxharm::Result<()> {
    let grid = GridSpec::line(8.0, 512)?;
    let f = test_function(&grid, Profile::Gaussian, -1.0, &[0.0], &[0.0])?;
    let g = test_function(&grid, Profile::Bump, 0.0, &[1.0], &[0.5])?;
    let fam = CubeFamily::standard(&grid);
    let at = |x: f64| grid.nearest_index(x);
    let m2 = hl_maximal(&f, 2.0, &fam)?;
    let mm = multisublinear_maximal(&[&f, &g], 2.0, &fam)?;
    let sh = sharp_maximal_homogeneous(&f, &fam)?;
    let si = sharp_maximal_inhomogeneous(&f, 1.0, &fam)?;
    let dy = dyadic_maximal(&f, &CubeFamily::dyadic(&grid))?;
    for x in [0.0, 0.5, 2.0] {
        let i = at(x);
        println!(
            "x = {x}: M_2 f = {:.4}, M_2(f,g) = {:.4}, M# f = {:.4}, inhomogeneous M#_1 f = {:.4}, dyadic M f = {:.4}",
            m2.values()[i],
            mm.values()[i],
            sh.values()[i],
            si.values()[i],
            dy.values()[i]
        );
    }
    println!("BMO_1 seminorm of f: {:.4}", bmo_seminorm(&f, &fam, 1.0)?);
    Ok(())
}
