//! Exact dyadic arithmetic and directed-rounding enclosures.
//!
//! Precision is always an explicit argument; there is no global rounding
//! state anywhere in this module.

mod bigfloat;
mod elementary;
mod enclosure;

pub use bigfloat::{BigFloat, Rounding};
pub use elementary::{exp_bound, exp_enclosure, ln2_enclosure, ln_bound, ln_enclosure};
pub use enclosure::Enclosure;
