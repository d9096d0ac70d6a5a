//! Chi-square test of sampler output against exact bucket probabilities.

use refine_dp::harness::{goodness_of_fit, BucketSpec};
use refine_dp::inverse_cdf::LaplaceParams;
use refine_dp::refine_sampler::{BitTape, LaplaceSampler, SamplerConfig};

fn main() -> refine_dp::Result<()> {
    let params = LaplaceParams::standard();
    let sampler = LaplaceSampler::new(params.clone(), SamplerConfig::default())?;
    let mut tape = BitTape::live();
    let samples = (0..100_000).map(|_| sampler.sample(&mut tape)).collect::<refine_dp::Result<Vec<_>>>()?;

    let report = goodness_of_fit(&samples, &params, &BucketSpec::equal_probability(&params, 20)?)?;
    print!("{}", report.to_csv());
    println!("chi2 = {:.2}, df = {}, p = {:.4}", report.statistic, report.degrees_of_freedom, report.p_value);
    Ok(())
}
