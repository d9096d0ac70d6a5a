//! Verification and measurement.
//!
//! Exhaustive enumeration of the sampler on toy grids with exact rational
//! probabilities, chi-square goodness-of-fit on the binary64 grid, and
//! throughput benchmarks.

mod bench;
mod enumerate;
mod fit;

pub use bench::{bench, BenchReport, MachineInfo};
pub use enumerate::{
    check_enclosed, check_exact, enumerate_process, laplace_toy_configurations,
    rounded_distribution_enclosed, rounded_distribution_exact, toy_configurations, tvd,
    DepthCheck, ExactDistribution, ToyConfiguration, ToyReport, MAX_GRID_POINTS, MAX_ROUNDS,
};
pub use fit::{
    bucket_probability, exact_bucket_probability, goodness_of_fit, BucketRow, BucketSpec,
    FitReport, MIN_EXPECTED,
};
