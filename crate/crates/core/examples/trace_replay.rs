//! Records a sample's full trace, prints it, parses it back and replays
//! the recorded bits.

use refine_dp::inverse_cdf::LaplaceParams;
use refine_dp::refine_sampler::{BitTape, LaplaceSampler, SampleTrace, SamplerConfig};

fn main() -> refine_dp::Result<()> {
    let sampler = LaplaceSampler::new(LaplaceParams::from_f64(3.0, 0.25)?, SamplerConfig::default())?;
    let (value, trace) = sampler.sample_traced(&mut BitTape::live());
    let value = value?;
    let text = trace.to_string();
    print!("{text}");

    let parsed: SampleTrace = text.parse()?;
    parsed.validate()?;
    let replayed = sampler.sample(&mut BitTape::replay(parsed.bits()))?;
    assert_eq!(replayed.to_bits(), value.to_bits());
    println!("replayed: {replayed}");
    Ok(())
}
