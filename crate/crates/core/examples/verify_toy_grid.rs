//! Enumerates every bit tape on small grids and checks the exact
//! output law against the rounded reference distribution.

use refine_dp::harness::{check_enclosed, check_exact, laplace_toy_configurations, toy_configurations, ToyReport};
use refine_dp::refine_sampler::SamplerConfig;

fn show(r: &ToyReport) {
    println!("{} ({} points): {}", r.name, r.grid_points, if r.passed() { "ok" } else { "FAILED" });
    for d in &r.depths {
        println!("  k={:<2}  P(bottom)={:<10} tvd={}", d.rounds, d.bottom, d.tvd);
    }
}

fn main() -> refine_dp::Result<()> {
    let cfg = SamplerConfig::bitwise(12);
    for c in toy_configurations() {
        show(&check_exact(c.name, &c.grid, &c.dist, &cfg, &[4, 8, 12])?);
    }
    for (name, grid, dist) in laplace_toy_configurations() {
        show(&check_enclosed(name, &grid, &dist, &cfg, &[4, 8], 200)?);
    }
    Ok(())
}
