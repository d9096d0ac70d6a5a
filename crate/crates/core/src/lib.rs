pub mod attacks;
pub mod cli;
pub mod error;
pub mod exact_arith;
pub mod float_grid;
pub mod harness;
pub mod inverse_cdf;
pub mod mechanisms;
pub mod refine_sampler;

pub use error::{Error, Result};
