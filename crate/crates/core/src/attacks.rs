//! Reference implementations of vulnerable sampling patterns, and the
//! distinguishers that break them.
//!
//! These are fixtures. Two patterns are covered. In the first, noise is
//! sampled and then added to the secret in floating point. In the second,
//! the output is uniform in an interval computed as `x ⊕ (y ⊖ x) ⊗ r`. Both
//! put every output on a grid set by the secret, and some outputs under one
//! input are impossible under the other.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_arith::{exp_enclosure, BigFloat, Enclosure};
use crate::float_grid::{is_on_grid_multiple, pow2, ulp_log2};
use crate::inverse_cdf::LaplaceParams;
use crate::refine_sampler::{BitTape, LaplaceSampler, SamplerConfig};

/// Grid used by the distinguishers when no secret fixes one: multiples of `2^-53`.
pub const DEFAULT_STEP_LOG2: i64 = -53;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Vulnerable,
    NoFinding,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Vulnerable => "vulnerable",
            Verdict::NoFinding => "no finding",
        })
    }
}

/// Per-input statistics of an attack run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub input: String,
    pub samples: u64,
    pub events: u64,
    pub fraction: f64,
    /// Events re-confirmed with exact dyadic arithmetic.
    pub verified_events: u64,
    /// Up to a few flagged outputs, as raw bit patterns in hex.
    pub example_events: Vec<String>,
}

/// Result of running a distinguisher against two neighbouring inputs.
///
/// Serializes with fields in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub mechanism: String,
    pub predicate: String,
    pub seed: u64,
    pub sides: [SideReport; 2],
    pub verdict: Verdict,
}

impl AttackReport {
    fn new(mechanism: String, predicate: String, seed: u64, sides: [SideReport; 2]) -> Self {
        let fired = |s: &SideReport| s.events > 0;
        let verdict = if fired(&sides[0]) != fired(&sides[1]) {
            Verdict::Vulnerable
        } else {
            Verdict::NoFinding
        };
        AttackReport {
            mechanism,
            predicate,
            seed,
            sides,
            verdict,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mechanism: {}", self.mechanism)?;
        writeln!(f, "event:     {}", self.predicate)?;
        writeln!(f, "seed:      {}", self.seed)?;
        writeln!(f, "{:<28} {:>10} {:>10} {:>10} {:>10}", "input", "samples", "events", "fraction", "verified")?;
        for s in &self.sides {
            writeln!(
                f,
                "{:<28} {:>10} {:>10} {:>10.5} {:>10}",
                s.input, s.samples, s.events, s.fraction, s.verified_events
            )?;
        }
        write!(f, "verdict:   {}", self.verdict)
    }
}

/// The event "not a multiple of `2^step_log2`", checked two independent ways.
struct GridEvent {
    step_log2: i64,
}

impl GridEvent {
    fn fires(&self, x: f64) -> bool {
        x.is_finite() && !is_on_grid_multiple(x, self.step_log2)
    }

    /// Exact re-check: `x · 2^-step` has a fractional part.
    fn verify(&self, x: f64) -> bool {
        BigFloat::from_f64(x)
            .map(|v| !v.is_zero() && v.ldexp(-self.step_log2).exponent() < 0)
            .unwrap_or(false)
    }

    fn describe(&self) -> String {
        format!("output is not a multiple of 2^{}", self.step_log2)
    }

    fn tally(&self, input: String, outputs: impl Iterator<Item = f64>) -> SideReport {
        let (mut samples, mut events, mut verified) = (0u64, 0u64, 0u64);
        let mut example_events = Vec::new();
        for x in outputs {
            samples += 1;
            if self.fires(x) {
                events += 1;
                if self.verify(x) {
                    verified += 1;
                }
                if example_events.len() < 4 {
                    example_events.push(format!("{:#018x}", x.to_bits()));
                }
            }
        }
        SideReport {
            input,
            samples,
            events,
            fraction: if samples == 0 { 0.0 } else { events as f64 / samples as f64 },
            verified_events: verified,
            example_events,
        }
    }
}

fn side_seed(seed: u64, side: u64) -> u64 {
    seed.wrapping_mul(2).wrapping_add(side)
}

/// **Vulnerable.** Samples hole-free Laplace noise, then returns `x ⊕ noise`.
pub fn naive_additive_sample(x: f64, noise: &LaplaceSampler, tape: &mut BitTape) -> Result<f64> {
    Ok(x + noise.sample(tape)?)
}

/// Zero-centred noise sampler for the additive fixture.
pub fn additive_noise(beta: f64) -> Result<LaplaceSampler> {
    LaplaceSampler::new(LaplaceParams::from_f64(0.0, beta)?, SamplerConfig::default())
}

/// How the uniform `r ∈ [0, 1)` is drawn in the interval fixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UniformGrid {
    /// Multiples of `2^-53`, like common standard-library generators.
    Coarse,
    /// Every double in `[0, 1)` reachable, with probability proportional to its width.
    Fine,
}

/// Uniform `r ∈ [0, 1)` on the chosen grid.
pub fn draw_unit(grid: UniformGrid, tape: &mut BitTape) -> Result<f64> {
    match grid {
        UniformGrid::Coarse => Ok(tape.draw(53)? as f64 * pow2(-53)),
        UniformGrid::Fine => {
            // binade [2^e, 2^(e+1)) is chosen with probability 2^e
            let mut e = -1i32;
            while tape.draw(1)? == 0 {
                e -= 1;
                if e < -1074 {
                    return Ok(0.0);
                }
            }
            let mantissa = tape.draw(52)?;
            // below 2^-1022 the product rounds onto the subnormal grid
            Ok((1.0 + mantissa as f64 * pow2(-52)) * pow2(i64::from(e)))
        }
    }
}

/// **Vulnerable.** The naive formula `x ⊕ (y ⊖ x) ⊗ r`.
pub fn naive_uniform_with(x: f64, y: f64, r: f64) -> f64 {
    x + (y - x) * r
}

/// **Vulnerable.** Uniform sample in `[x, y)` via [`naive_uniform_with`].
pub fn naive_uniform_interval(x: f64, y: f64, grid: UniformGrid, tape: &mut BitTape) -> Result<f64> {
    if !(x.is_finite() && y.is_finite() && x < y) {
        return Err(Error::invalid("need finite x < y"));
    }
    Ok(naive_uniform_with(x, y, draw_unit(grid, tape)?))
}

/// Step of the distinguisher grid for the additive attack: `ulp(μ₁)/2`,
/// falling back to `μ₀` and then to `2^-53` when the secrets are zero.
fn additive_step(mu0: f64, mu1: f64) -> Result<i64> {
    for mu in [mu1, mu0] {
        if mu != 0.0 {
            return Ok(ulp_log2(mu)? - 1);
        }
    }
    Ok(DEFAULT_STEP_LOG2)
}

fn check_common(mu0: f64, mu1: f64, beta: f64, n: u64) -> Result<()> {
    if !(mu0.is_finite() && mu1.is_finite()) {
        return Err(Error::invalid("secrets must be finite"));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta must be finite and positive"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one sample per side"));
    }
    Ok(())
}

/// Runs the add-after-sampling pattern on `μ₀` and `μ₁`.
pub fn run_additive_attack(mu0: f64, mu1: f64, beta: f64, n: u64, seed: u64) -> Result<AttackReport> {
    check_common(mu0, mu1, beta, n)?;
    let event = GridEvent {
        step_log2: additive_step(mu0, mu1)?,
    };
    let noise = additive_noise(beta)?;
    let side = |i: u64, mu: f64| -> Result<SideReport> {
        let mut tape = BitTape::seeded(side_seed(seed, i));
        let outputs = (0..n)
            .map(|_| naive_additive_sample(mu, &noise, &mut tape))
            .collect::<Result<Vec<_>>>()?;
        Ok(event.tally(format!("mu = {mu}"), outputs.into_iter()))
    };
    Ok(AttackReport::new(
        format!("naive additive Laplace (beta = {beta}): mu + noise in binary64"),
        event.describe(),
        seed,
        [side(0, mu0)?, side(1, mu1)?],
    ))
}

/// The same distinguisher against the safe mechanism, which samples
/// `Lap(μ, β)` directly with correct rounding.
pub fn run_additive_attack_safe(
    mu0: f64,
    mu1: f64,
    beta: f64,
    n: u64,
    seed: u64,
) -> Result<AttackReport> {
    check_common(mu0, mu1, beta, n)?;
    let event = GridEvent {
        step_log2: additive_step(mu0, mu1)?,
    };
    let side = |i: u64, mu: f64| -> Result<SideReport> {
        let sampler = LaplaceSampler::new(LaplaceParams::from_f64(mu, beta)?, SamplerConfig::default())?;
        let mut tape = BitTape::seeded(side_seed(seed, i));
        let outputs = (0..n).map(|_| sampler.sample(&mut tape)).collect::<Result<Vec<_>>>()?;
        Ok(event.tally(format!("mu = {mu}"), outputs.into_iter()))
    };
    Ok(AttackReport::new(
        format!("interval-refining Laplace (beta = {beta}): correctly rounded"),
        event.describe(),
        seed,
        [side(0, mu0)?, side(1, mu1)?],
    ))
}

/// Exponential-mechanism median over the gaps between sorted data points,
/// followed by a naive uniform draw inside the chosen gap.
///
/// The gap between the `i`-th and `(i+1)`-th smallest points (1-based `i`)
/// has weight `width · exp(−ε·|i − q·m|/2)` with `m` points. Weights are
/// enclosures and the selection is exact: a uniform `U` is refined bit by bit
/// until `U · total` falls strictly inside one cumulative slot. Only the final
/// uniform step uses floating point.
#[derive(Clone, Debug)]
pub struct NaiveQuantile {
    pub epsilon: BigFloat,
    /// Target quantile `q`.
    pub quantile: BigFloat,
    pub grid: UniformGrid,
}

const SELECT_PREC: u32 = 128;

impl NaiveQuantile {
    pub fn median(grid: UniformGrid) -> Self {
        NaiveQuantile {
            epsilon: BigFloat::one(),
            quantile: BigFloat::dyadic(1, -1),
            grid,
        }
    }

    fn weights(&self, data: &[f64]) -> Result<Vec<(f64, f64, Enclosure)>> {
        let m = BigFloat::from_i64(data.len() as i64);
        let target = self.quantile.mul(&m);
        let mut out = Vec::new();
        for (i, w) in data.windows(2).enumerate() {
            let width = BigFloat::from_f64(w[1])?.sub(&BigFloat::from_f64(w[0])?);
            if width.is_zero() {
                continue;
            }
            let dist = BigFloat::from_i64(i as i64 + 1).sub(&target).abs();
            let t = Enclosure::point(-self.epsilon.mul(&dist).ldexp(-1));
            let weight = exp_enclosure(&t, SELECT_PREC)?.mul(&Enclosure::point(width))?;
            out.push((w[0], w[1], weight));
        }
        if out.is_empty() {
            return Err(Error::invalid("data set has no interval of positive width"));
        }
        Ok(out)
    }

    /// Picks a gap with probability proportional to its weight.
    fn select(&self, weights: &[(f64, f64, Enclosure)], tape: &mut BitTape) -> Result<usize> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = Enclosure::from_i64(0);
        for (_, _, w) in weights {
            acc = acc.add(w)?;
            cumulative.push(acc.clone());
        }
        let total = acc;
        let (mut lo, mut level) = (BigFloat::zero(), 0i64);
        for _ in 0..64 {
            let raw = tape.draw(63)?;
            lo = lo.add(&BigFloat::from_bigint(num_bigint::BigInt::from(raw), -(level + 63)));
            level += 63;
            let hi = lo.add(&BigFloat::dyadic(1, -level));
            let u = Enclosure::new(lo.clone(), hi)?.mul(&total)?;
            let mut below = BigFloat::zero();
            for (i, c) in cumulative.iter().enumerate() {
                if &below <= u.lo() && u.hi() < c.lo() {
                    return Ok(i);
                }
                below = c.hi().clone();
            }
        }
        Err(Error::Bottom { iterations: 64 })
    }

    /// One release on `data`.
    pub fn sample(&self, data: &[f64], tape: &mut BitTape) -> Result<f64> {
        let weights = self.weights(&sorted(data)?)?;
        let i = self.select(&weights, tape)?;
        let (x, y, _) = weights[i];
        naive_uniform_interval(x, y, self.grid, tape)
    }
}

fn sorted(data: &[f64]) -> Result<Vec<f64>> {
    if data.len() < 2 || data.len() > 10 {
        return Err(Error::invalid("data sets must have 2 to 10 values"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("data values must be finite"));
    }
    let mut d = data.to_vec();
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Runs the naive quantile procedure on two neighbouring data sets.
pub fn run_quantile_attack(
    d1: &[f64],
    d2: &[f64],
    grid: UniformGrid,
    n: u64,
    seed: u64,
) -> Result<AttackReport> {
    if n == 0 {
        return Err(Error::invalid("need at least one sample per side"));
    }
    let mech = NaiveQuantile::median(grid);
    let event = GridEvent {
        step_log2: DEFAULT_STEP_LOG2,
    };
    let side = |i: u64, data: &[f64]| -> Result<SideReport> {
        let sorted_data = sorted(data)?;
        let weights = mech.weights(&sorted_data)?;
        let mut tape = BitTape::seeded(side_seed(seed, i));
        let outputs = (0..n)
            .map(|_| {
                let k = mech.select(&weights, &mut tape)?;
                let (x, y, _) = weights[k];
                naive_uniform_interval(x, y, grid, &mut tape)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(event.tally(format!("D = {data:?}"), outputs.into_iter()))
    };
    let grid_name = match grid {
        UniformGrid::Coarse => "coarse (2^-53 multiples)",
        UniformGrid::Fine => "fine (hole-free)",
    };
    Ok(AttackReport::new(
        format!("naive exponential-mechanism median, x + (y - x) * r with {grid_name} r"),
        event.describe(),
        seed,
        [side(0, d1)?, side(1, d2)?],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_fixture_on_zero_is_raw_noise() {
        let noise = additive_noise(1.0).unwrap();
        for seed in 0..100 {
            let raw = noise.sample(&mut BitTape::seeded(seed)).unwrap();
            let out = naive_additive_sample(0.0, &noise, &mut BitTape::seeded(seed)).unwrap();
            assert_eq!(raw.to_bits(), out.to_bits());
        }
    }

    #[test]
    fn additive_fixture_on_one_stays_on_grid() {
        let noise = additive_noise(1.0).unwrap();
        let mut tape = BitTape::seeded(4);
        for _ in 0..2000 {
            let out = naive_additive_sample(1.0, &noise, &mut tape).unwrap();
            assert!(is_on_grid_multiple(out, -53), "{out:e}");
        }
    }

    #[test]
    fn naive_uniform_examples() {
        assert_eq!(naive_uniform_with(0.0, 1.0, 0.5), 0.5);
        let mut tape = BitTape::seeded(1);
        for _ in 0..2000 {
            let v = naive_uniform_interval(-1.0, 1.0, UniformGrid::Fine, &mut tape).unwrap();
            assert!(is_on_grid_multiple(v, -53));
        }
        let mut tape = BitTape::seeded(2);
        // only r below 1/2 can leave the 2^-53 grid, about 30% of draws
        let off_grid = (0..2000)
            .map(|_| naive_uniform_interval(0.0, 1.0, UniformGrid::Fine, &mut tape).unwrap())
            .filter(|v| !is_on_grid_multiple(*v, -53))
            .count();
        assert!(off_grid > 300);
        assert!(naive_uniform_interval(1.0, 1.0, UniformGrid::Fine, &mut tape).is_err());
    }

    #[test]
    fn unit_draws_stay_in_range() {
        let mut tape = BitTape::seeded(3);
        for grid in [UniformGrid::Coarse, UniformGrid::Fine] {
            for _ in 0..5000 {
                let r = draw_unit(grid, &mut tape).unwrap();
                assert!((0.0..1.0).contains(&r));
                if grid == UniformGrid::Coarse {
                    assert!(is_on_grid_multiple(r, -53));
                }
            }
        }
        // a tape of zeros walks down the binades
        let mut zeros = BitTape::from_bits(std::iter::repeat(false).take(1200));
        assert_eq!(draw_unit(UniformGrid::Fine, &mut zeros).unwrap(), 0.0);
    }

    #[test]
    fn small_additive_runs() {
        let r = run_additive_attack(0.0, 1.0, 1.0, 4000, 7).unwrap();
        assert_eq!(r.verdict, Verdict::Vulnerable);
        assert_eq!(r.sides[1].events, 0);
        assert_eq!(r.sides[0].events, r.sides[0].verified_events);
        let same = run_additive_attack(0.0, 0.0, 1.0, 2000, 7).unwrap();
        assert_eq!(same.verdict, Verdict::NoFinding);
        let safe = run_additive_attack_safe(0.0, 1.0, 1.0, 2000, 7).unwrap();
        assert_eq!(safe.verdict, Verdict::NoFinding);
        assert!(run_additive_attack(0.0, 1.0, 0.0, 10, 0).is_err());
    }

    #[test]
    fn report_json_keeps_field_order() {
        let r = run_additive_attack(0.0, 1.0, 1.0, 100, 1).unwrap();
        let json = r.to_json().unwrap();
        let pos = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("mechanism") < pos("predicate"));
        assert!(pos("predicate") < pos("seed"));
        assert!(pos("seed") < pos("sides"));
        assert!(pos("sides") < pos("verdict"));
        let back: AttackReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(r.to_string().contains("verdict"));
    }

    #[test]
    fn quantile_selection_skips_empty_gaps() {
        let mech = NaiveQuantile::median(UniformGrid::Coarse);
        let w = mech.weights(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].0, w[0].1), (0.0, 1.0));
        let mut tape = BitTape::seeded(0);
        for _ in 0..100 {
            let v = mech.sample(&[0.0, 0.0, 1.0], &mut tape).unwrap();
            assert!((0.0..1.0).contains(&v));
        }
        assert!(mech.sample(&[1.0, 1.0], &mut tape).is_err());
    }

    #[test]
    fn quantile_selection_follows_weights() {
        // gaps [-1, 0] and [0, 1] have equal weight for the median of three points
        let mech = NaiveQuantile::median(UniformGrid::Fine);
        let w = mech.weights(&[-1.0, 0.0, 1.0]).unwrap();
        let mut tape = BitTape::seeded(5);
        let n = 4000;
        let upper = (0..n).filter(|_| mech.select(&w, &mut tape).unwrap() == 1).count();
        let frac = upper as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.04, "{frac}");
    }

    #[test]
    fn small_quantile_runs() {
        let coarse = run_quantile_attack(&[0.0, 0.0, 1.0], &[0.0, 0.25, 1.0], UniformGrid::Coarse, 2000, 1).unwrap();
        assert_eq!(coarse.verdict, Verdict::Vulnerable);
        assert_eq!(coarse.sides[0].events, 0);
        let fine = run_quantile_attack(&[-1.0, 1.0, 1.0], &[-1.0, 0.0, 1.0], UniformGrid::Fine, 2000, 1).unwrap();
        assert_eq!(fine.verdict, Verdict::Vulnerable);
        assert_eq!(fine.sides[0].events, 0);
        let fine_first = run_quantile_attack(&[0.0, 0.0, 1.0], &[0.0, 0.25, 1.0], UniformGrid::Fine, 2000, 1).unwrap();
        assert_eq!(fine_first.verdict, Verdict::NoFinding);
    }
}
