//! Distinguishes μ = 0 from μ = 1 when noise is added in binary64, then
//! runs the same test against the correctly rounded sampler.

use refine_dp::attacks::{run_additive_attack, run_additive_attack_safe};

fn main() -> refine_dp::Result<()> {
    let n = 20_000;
    println!("{}", run_additive_attack(0.0, 1.0, 1.0, n, 1)?);
    println!("{}", run_additive_attack_safe(0.0, 1.0, 1.0, n, 1)?);
    Ok(())
}
