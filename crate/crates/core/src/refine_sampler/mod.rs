//! The interval-refining sampler.
//!
//! A uniform draw `u ∈ [0, 1]` is never materialized. Instead the sampler
//! keeps a dyadic interval known to contain it, narrows that interval by
//! `chunk_bits` random bits per iteration, and pushes it through an interval
//! quantile. As soon as both ends of the resulting enclosure round up to the
//! same grid point, every `u` in the interval yields that point, so it is the
//! correctly rounded sample.

mod tape;
mod trace;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact_arith::{BigFloat, Enclosure};
use crate::float_grid::{Binary64Grid, RoundingGrid};
use crate::inverse_cdf::{IntervalDistribution, Laplace, LaplaceParams, UnitInterval};

pub use tape::{BitLog, BitTape};
pub use trace::{parse_traces, IterationRecord, SampleTrace, TraceOutcome};

/// What to do when the sample rounds to an infinite grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverflowMode {
    #[default]
    Infinity,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    /// Random bits consumed per iteration, 1 to 63.
    pub chunk_bits: u32,
    pub base_prec: u32,
    pub prec_step: u32,
    /// `None` means no cap.
    pub max_iterations: Option<u32>,
    pub overflow_mode: OverflowMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chunk_bits: 63,
            base_prec: 64,
            prec_step: 1,
            max_iterations: Some(64),
            overflow_mode: OverflowMode::Infinity,
        }
    }
}

impl SamplerConfig {
    /// One bit per iteration and a cap of `rounds`, as used for exhaustive enumeration.
    pub fn bitwise(rounds: u32) -> Self {
        SamplerConfig {
            chunk_bits: 1,
            max_iterations: Some(rounds),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=63).contains(&self.chunk_bits) {
            return Err(Error::invalid("chunk_bits must be between 1 and 63"));
        }
        if self.base_prec < 16 {
            return Err(Error::invalid("base_prec must be at least 16 bits"));
        }
        if self.prec_step == 0 {
            return Err(Error::invalid("prec_step must be at least 1"));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        Ok(())
    }

    /// Working precision at iteration `k` (counting from 1).
    pub fn precision_at(&self, k: u32) -> u32 {
        let step = u64::from(k) * u64::from(self.prec_step) * u64::from(self.chunk_bits);
        u32::try_from(u64::from(self.base_prec) + step).unwrap_or(u32::MAX)
    }
}

/// The interval `[n / 2^level, (n + 1) / 2^level]` inside `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    numerator: BigUint,
    level: u64,
}

impl DyadicInterval {
    pub fn unit() -> Self {
        DyadicInterval {
            numerator: BigUint::zero(),
            level: 0,
        }
    }

    pub fn new(numerator: BigUint, level: u64) -> Result<Self> {
        if numerator.bits() > level {
            return Err(Error::invalid("dyadic interval must lie inside [0, 1]"));
        }
        Ok(DyadicInterval { numerator, level })
    }

    /// Recovers the interval from its endpoints.
    pub fn from_endpoints(a: &BigFloat, b: &BigFloat) -> Result<Self> {
        let width = b.checked_sub(a)?;
        let bad = || Error::invalid(format!("[{a}, {b}] is not a dyadic sub-interval of [0, 1]"));
        if !width.is_positive() || !width.mantissa().is_one() || width.exponent() > 0 {
            return Err(bad());
        }
        let level = width.exponent().unsigned_abs();
        let scaled = a.ldexp(level as i64);
        if scaled.is_negative() || scaled.exponent() < 0 {
            return Err(bad());
        }
        let numerator = if scaled.is_zero() {
            BigUint::zero()
        } else {
            scaled.mantissa() << scaled.exponent() as usize
        };
        Self::new(numerator, level)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn lo(&self) -> BigFloat {
        BigFloat::from_parts(false, self.numerator.clone(), -(self.level as i64))
    }

    pub fn hi(&self) -> BigFloat {
        BigFloat::from_parts(false, &self.numerator + 1u32, -(self.level as i64))
    }

    pub fn width(&self) -> BigFloat {
        BigFloat::dyadic(1, -(self.level as i64))
    }

    pub fn to_unit_interval(&self) -> UnitInterval {
        UnitInterval::new_unchecked(self.lo(), self.hi())
    }

    /// Whether `other` is a (non-strict) sub-interval of `self`.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.level >= self.level
            && (&other.numerator >> (other.level - self.level) as usize) == self.numerator
    }
}

/// Maps `bits` raw tape bits to a sub-interval index.
///
/// Indices count from the bottom of the interval while a raw 0 bit selects
/// the upper half, so the index is the bitwise complement. With one bit per
/// step this is exactly "0 raises the lower end, 1 lowers the upper end", and
/// a `c`-bit draw selects the same interval as `c` single-bit draws.
pub fn chunk_index(raw: u64, bits: u32) -> u64 {
    !raw & mask(bits)
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Sub-interval number `index` out of `2^bits` equal pieces of `interval`.
pub fn bisect_step(interval: &DyadicInterval, index: u64, bits: u32) -> DyadicInterval {
    assert!(bits >= 1 && index <= mask(bits), "chunk index out of range");
    DyadicInterval {
        numerator: (&interval.numerator << bits as usize) | BigUint::from(index),
        level: interval.level + u64::from(bits),
    }
}

/// The common grid point of both endpoints, if they agree.
pub fn terminate_check<G: RoundingGrid>(e: &Enclosure, grid: &G) -> Option<G::Point> {
    let lo = grid.round_up(e.lo());
    let hi = grid.round_up(e.hi());
    (lo == hi).then_some(lo)
}

/// A returned sample and the number of iterations it took.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample<P> {
    pub point: P,
    pub iterations: u32,
}

/// Draws one correctly rounded sample of `dist` on `grid`.
///
/// Returns [`Error::Bottom`] when the iteration cap is reached, and
/// [`Error::Overflow`] for infinite outputs when configured to. If `trace` is
/// given, it is cleared and filled with every iteration.
pub fn refine_sample<D, G>(
    dist: &D,
    grid: &G,
    cfg: &SamplerConfig,
    tape: &mut BitTape,
    mut trace: Option<&mut SampleTrace>,
) -> Result<Sample<G::Point>>
where
    D: IntervalDistribution + ?Sized,
    G: RoundingGrid,
{
    cfg.validate()?;
    if let Some(t) = trace.as_deref_mut() {
        t.reset(cfg.chunk_bits);
    }
    let mut interval = DyadicInterval::unit();
    let mut k = 0u32;
    while cfg.max_iterations.map_or(true, |cap| k < cap) {
        k += 1;
        let raw = tape.draw(cfg.chunk_bits)?;
        interval = bisect_step(&interval, chunk_index(raw, cfg.chunk_bits), cfg.chunk_bits);
        let prec = cfg.precision_at(k);
        let enclosure = dist.interval_inv_cdf(&interval.to_unit_interval(), prec)?;
        let done = terminate_check(&enclosure, grid);
        if let Some(t) = trace.as_deref_mut() {
            t.records.push(IterationRecord {
                iteration: k,
                raw_bits: raw,
                interval: interval.clone(),
                prec,
                enclosure,
            });
        }
        if let Some(point) = done {
            if grid.is_infinite(point) && cfg.overflow_mode == OverflowMode::Error {
                return Err(Error::Overflow);
            }
            if let Some(t) = trace.as_deref_mut() {
                t.outcome = Some(TraceOutcome::Output(grid.value(point)));
            }
            return Ok(Sample {
                point,
                iterations: k,
            });
        }
    }
    if let Some(t) = trace.as_deref_mut() {
        t.outcome = Some(TraceOutcome::Bottom);
    }
    Err(Error::Bottom { iterations: k })
}

/// Correctly rounded Laplace sample on `grid`.
pub fn sample_laplace<G: RoundingGrid>(
    params: &LaplaceParams,
    cfg: &SamplerConfig,
    tape: &mut BitTape,
    grid: &G,
    mut trace: Option<&mut SampleTrace>,
) -> Result<Sample<G::Point>> {
    let laplace = Laplace::new(params.clone());
    let out = refine_sample(&laplace, grid, cfg, tape, trace.as_deref_mut());
    if let Some(t) = trace {
        t.params = Some(params.clone());
    }
    out
}

/// Reusable binary64 Laplace sampler.
#[derive(Clone, Debug)]
pub struct LaplaceSampler {
    laplace: Laplace,
    grid: Binary64Grid,
    cfg: SamplerConfig,
}

impl LaplaceSampler {
    pub fn new(params: LaplaceParams, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(LaplaceSampler {
            laplace: Laplace::new(params),
            grid: Binary64Grid::new(),
            cfg,
        })
    }

    pub fn with_grid(mut self, grid: Binary64Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn params(&self) -> &LaplaceParams {
        self.laplace.params()
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn sample(&self, tape: &mut BitTape) -> Result<f64> {
        Ok(self.sample_counted(tape)?.point)
    }

    pub fn sample_counted(&self, tape: &mut BitTape) -> Result<Sample<f64>> {
        refine_sample(&self.laplace, &self.grid, &self.cfg, tape, None)
    }

    pub fn sample_traced(&self, tape: &mut BitTape) -> (Result<f64>, SampleTrace) {
        let mut trace = SampleTrace::new(self.cfg.chunk_bits);
        let out = refine_sample(&self.laplace, &self.grid, &self.cfg, tape, Some(&mut trace));
        trace.params = Some(self.laplace.params().clone());
        (out.map(|s| s.point), trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float_grid::ToyGrid;

    fn bf(n: i64, e: i64) -> BigFloat {
        BigFloat::dyadic(n, e)
    }

    #[test]
    fn single_bit_branches() {
        let unit = DyadicInterval::unit();
        let up = bisect_step(&unit, chunk_index(0, 1), 1);
        assert_eq!((up.lo(), up.hi()), (bf(1, -1), bf(1, 0)));
        let down = bisect_step(&unit, chunk_index(1, 1), 1);
        assert_eq!((down.lo(), down.hi()), (bf(0, 0), bf(1, -1)));
    }

    #[test]
    fn chunk_value_indexing() {
        let i = bisect_step(&DyadicInterval::unit(), 5, 3);
        assert_eq!((i.lo(), i.hi()), (bf(5, -3), bf(6, -3)));
        assert_eq!(i.width(), bf(1, -3));
        assert!(DyadicInterval::unit().contains(&i));
        assert_eq!(DyadicInterval::from_endpoints(&i.lo(), &i.hi()).unwrap(), i);
        assert!(DyadicInterval::from_endpoints(&bf(1, -3), &bf(4, -3)).is_err());
    }

    #[test]
    fn termination_examples() {
        let grid = Binary64Grid::new();
        let one = BigFloat::one();
        let e = Enclosure::new(one.add(&bf(1, -60)), one.add(&bf(1, -59))).unwrap();
        assert_eq!(terminate_check(&e, &grid), Some(1.0 + f64::EPSILON));
        let straddle = Enclosure::new(one.sub(&bf(1, -60)), one.add(&bf(1, -60))).unwrap();
        assert_eq!(terminate_check(&straddle, &grid), None);
        assert_eq!(terminate_check(&Enclosure::point(bf(3, -1)), &grid), Some(1.5));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        for bad in [
            SamplerConfig { chunk_bits: 0, ..Default::default() },
            SamplerConfig { chunk_bits: 64, ..Default::default() },
            SamplerConfig { base_prec: 8, ..Default::default() },
            SamplerConfig { prec_step: 0, ..Default::default() },
            SamplerConfig { max_iterations: Some(0), ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let cfg = SamplerConfig::default();
        assert_eq!(cfg.precision_at(1), 64 + 63);
        assert_eq!(cfg.precision_at(2), 64 + 126);
    }

    #[test]
    fn deterministic_under_seed() {
        let sampler = LaplaceSampler::new(LaplaceParams::standard(), SamplerConfig::default()).unwrap();
        let (a, ta) = sampler.sample_traced(&mut BitTape::seeded(5));
        let (b, tb) = sampler.sample_traced(&mut BitTape::seeded(5));
        assert_eq!(a.unwrap().to_bits(), b.unwrap().to_bits());
        assert_eq!(ta, tb);
    }

    #[test]
    fn bottom_when_capped() {
        // the upper half maps to [0, +∞], which straddles the only finite point
        let grid = ToyGrid::new(vec![bf(0, 0)]).unwrap();
        let cfg = SamplerConfig {
            chunk_bits: 1,
            max_iterations: Some(1),
            ..Default::default()
        };
        let lap = Laplace::standard();
        let mut tape = BitTape::from_bits([false]);
        let mut trace = SampleTrace::new(1);
        let out = refine_sample(&lap, &grid, &cfg, &mut tape, Some(&mut trace));
        assert!(matches!(out, Err(Error::Bottom { iterations: 1 })));
        assert_eq!(trace.outcome, Some(TraceOutcome::Bottom));
        // the lower half maps to [−∞, 0], all of which rounds up to 0
        let s = refine_sample(&lap, &grid, &cfg, &mut BitTape::from_bits([true]), None).unwrap();
        assert_eq!(s, Sample { point: 0, iterations: 1 });
    }

    #[test]
    fn replay_exhaustion_is_an_error() {
        let sampler = LaplaceSampler::new(LaplaceParams::standard(), SamplerConfig::default()).unwrap();
        let mut tape = BitTape::from_bits([true; 10]);
        assert!(matches!(sampler.sample(&mut tape), Err(Error::TapeExhausted { .. })));
    }

    #[test]
    fn overflow_mode_error() {
        let grid = ToyGrid::new(vec![bf(0, 0)]).unwrap();
        let cfg = SamplerConfig {
            chunk_bits: 1,
            max_iterations: Some(4),
            overflow_mode: OverflowMode::Error,
            ..Default::default()
        };
        let lap = Laplace::standard();
        let out = refine_sample(&lap, &grid, &cfg, &mut BitTape::from_bits([false; 4]), None);
        assert!(matches!(out, Err(Error::Overflow)));
        let cfg = SamplerConfig { overflow_mode: OverflowMode::Infinity, ..cfg };
        let s = refine_sample(&lap, &grid, &cfg, &mut BitTape::from_bits([false; 4]), None).unwrap();
        assert_eq!(s.point, grid.top());
    }
}
