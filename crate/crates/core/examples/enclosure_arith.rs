//! Directed-rounding interval arithmetic on exact dyadics.

use refine_dp::exact_arith::{exp_enclosure, ln2_enclosure, ln_enclosure, BigFloat, Enclosure};

fn main() -> refine_dp::Result<()> {
    let third = Enclosure::from_i64(1).div_rounded(&Enclosure::from_i64(3), 64)?;
    println!("1/3      in [{}, {}]", third.lo(), third.hi());

    let ln2 = ln2_enclosure(100);
    println!("ln 2     in [{}, {}]  width {}", ln2.lo(), ln2.hi(), ln2.width());

    // ln over a non-degenerate interval, then back through exp
    let x = Enclosure::new(BigFloat::dyadic(3, -1), BigFloat::dyadic(7, -2))?;
    let y = exp_enclosure(&ln_enclosure(&x, 80)?, 80)?;
    println!("exp(ln [1.5, 1.75]) = [{:.17}, {:.17}]", y.lo().to_f64_approx(), y.hi().to_f64_approx());
    assert!(y.contains_enclosure(&x));
    Ok(())
}
