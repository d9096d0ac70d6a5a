//! Why adding noise in binary64 leaks: sums with x land on a ulp(x)/2 grid.

use refine_dp::exact_arith::BigFloat;
use refine_dp::float_grid::{decompose, is_on_grid_multiple, next_float_up, ulp, ulp_log2};

fn main() -> refine_dp::Result<()> {
    for x in [1.0, 1.0 - f64::EPSILON / 2.0, 1e-310, 3.5e20] {
        let d = decompose(x);
        println!("{x:e}: ulp 2^{} = {:e}, decomposition {d:?}", ulp_log2(x)?, ulp(x)?);
    }

    let x = 1.0f64;
    let step = ulp_log2(x)? - 1;
    let on_grid = (0..10_000)
        .map(|i| x + (f64::from(i) * 0.618_033_988_7).fract() - 0.5)
        .filter(|s| is_on_grid_multiple(*s, step))
        .count();
    println!("{on_grid}/10000 sums 1 + r are multiples of 2^{step}");

    let third = BigFloat::from_rational(&refine_dp::inverse_cdf::ratio(1, 3), 200, refine_dp::exact_arith::Rounding::Ceil);
    println!("smallest double >= 1/3 (200-bit bound): {:e}", next_float_up(&third));
    Ok(())
}
