//! Draws correctly rounded Laplace samples.
//!
//! `cargo run --example sample_laplace -- 0.5 2 10`

use refine_dp::inverse_cdf::LaplaceParams;
use refine_dp::refine_sampler::{BitTape, LaplaceSampler, SamplerConfig};

fn main() -> refine_dp::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let (mu, beta, n) = match args[..] {
        [mu, beta, n] => (mu, beta, n as usize),
        _ => (0.0, 1.0, 10),
    };
    let sampler = LaplaceSampler::new(LaplaceParams::from_f64(mu, beta)?, SamplerConfig::default())?;
    let mut tape = BitTape::live();
    for _ in 0..n {
        let s = sampler.sample_counted(&mut tape)?;
        println!("{:>24e}  ({} iteration{})", s.point, s.iterations, if s.iterations == 1 { "" } else { "s" });
    }
    println!("{} random bits used", tape.consumed());
    Ok(())
}
