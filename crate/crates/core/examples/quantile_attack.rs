//! The exponential-mechanism median with a naive uniform draw.

use refine_dp::attacks::{run_quantile_attack, UniformGrid};

fn main() -> refine_dp::Result<()> {
    let n = 20_000;
    let cases = [
        ([0.0, 0.0, 1.0], [0.0, 0.25, 1.0], UniformGrid::Coarse),
        ([0.0, 0.0, 1.0], [0.0, 0.25, 1.0], UniformGrid::Fine),
        ([-1.0, 1.0, 1.0], [-1.0, 0.0, 1.0], UniformGrid::Fine),
    ];
    for (d1, d2, grid) in cases {
        println!("{d1:?} vs {d2:?}, {grid:?} uniform");
        println!("{}", run_quantile_attack(&d1, &d2, grid, n, 2)?);
    }
    Ok(())
}
