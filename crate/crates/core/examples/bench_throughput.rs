//! Samples per second and iterations-to-terminate for a few chunk sizes.
//!
//! Build with `--release`.

use refine_dp::harness::bench;
use refine_dp::inverse_cdf::LaplaceParams;
use refine_dp::refine_sampler::{BitTape, SamplerConfig};

fn main() -> refine_dp::Result<()> {
    for chunk_bits in [8, 32, 63] {
        let cfg = SamplerConfig {
            chunk_bits,
            ..SamplerConfig::default()
        };
        let r = bench(&LaplaceParams::standard(), &cfg, 100_000, &mut BitTape::live())?;
        println!(
            "chunk_bits={chunk_bits:<2}  {:>8.0} samples/s  mean {:.3} iterations  max {}",
            r.samples_per_second,
            r.mean_iterations(),
            r.max_iterations()
        );
    }
    Ok(())
}
