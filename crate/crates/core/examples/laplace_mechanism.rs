//! Releases a count with ε = 1/2 through the Laplace mechanism.

use refine_dp::exact_arith::BigFloat;
use refine_dp::mechanisms::{LaplaceMechanism, PrivacyBudget};
use refine_dp::refine_sampler::{BitTape, SamplerConfig};

fn main() -> refine_dp::Result<()> {
    let mech = LaplaceMechanism::new(PrivacyBudget::counting(1, 2)?, SamplerConfig::default())?;
    println!("scale = {} (exact)", mech.scale());

    let true_count = BigFloat::from_i64(1234);
    let mut tape = BitTape::live();
    for _ in 0..5 {
        println!("released: {}", mech.release(&true_count, &mut tape)?);
    }
    Ok(())
}
