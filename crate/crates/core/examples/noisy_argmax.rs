//! Report-noisy-max without ever materializing the noisy scores.
//!
//! Each score's noise is refined in lockstep until one candidate's whole
//! enclosure sits above every other.

use refine_dp::exact_arith::BigFloat;
use refine_dp::mechanisms::{laplace_noise, noisy_argmax};
use refine_dp::refine_sampler::{BitTape, SamplerConfig};

fn main() -> refine_dp::Result<()> {
    let scores: Vec<BigFloat> = [10, 12, 11, 3].into_iter().map(BigFloat::from_i64).collect();
    let noise = laplace_noise(scores.len(), &BigFloat::from_i64(2))?;
    let mut wins = vec![0u32; scores.len()];
    let mut rounds = 0;
    for _ in 0..2000 {
        let mut tapes: Vec<BitTape> = scores.iter().map(|_| BitTape::live()).collect();
        let out = noisy_argmax(&scores, &noise, &SamplerConfig::default(), &mut tapes)?;
        wins[out.index] += 1;
        rounds += out.iterations;
    }
    for (i, w) in wins.iter().enumerate() {
        println!("candidate {i} (score {}): {w} wins", scores[i].to_f64_approx());
    }
    println!("mean refinement rounds: {:.3}", f64::from(rounds) / 2000.0);
    Ok(())
}
