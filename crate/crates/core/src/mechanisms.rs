//! Differentially private mechanisms on top of the sampler.
//!
//! The Laplace mechanism samples directly from `Lap(f(x), β)` instead of
//! adding noise to `f(x)` in floating point. Adding after sampling places the
//! output on a grid determined by `f(x)`, which leaks it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::exact_arith::{BigFloat, Enclosure};
use crate::float_grid::Binary64Grid;
use crate::inverse_cdf::{IntervalDistribution, Laplace, LaplaceParams};
use crate::refine_sampler::{
    bisect_step, chunk_index, sample_laplace, BitTape, DyadicInterval, LaplaceSampler,
    SamplerConfig,
};

/// Precision of the rounded-up noise scale `Δ/ε`.
pub const SCALE_PRECISION: u32 = 128;

/// Privacy parameters, both exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivacyBudget {
    epsilon: BigRational,
    sensitivity: BigFloat,
}

impl PrivacyBudget {
    pub fn new(epsilon: BigRational, sensitivity: BigFloat) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !sensitivity.is_finite() || !sensitivity.is_positive() {
            return Err(Error::invalid("sensitivity must be finite and positive"));
        }
        Ok(PrivacyBudget {
            epsilon,
            sensitivity,
        })
    }

    /// `ε = num/den` with sensitivity 1.
    pub fn counting(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("epsilon denominator is zero"));
        }
        Self::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigFloat::one(),
        )
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn sensitivity(&self) -> &BigFloat {
        &self.sensitivity
    }

    /// Enclosure of `Δ/ε` at [`SCALE_PRECISION`] bits.
    pub fn scale_enclosure(&self) -> Result<Enclosure> {
        let numer = Enclosure::point(self.sensitivity.clone())
            .mul(&Enclosure::point(BigFloat::from_bigint(self.epsilon.denom().clone(), 0)))?;
        let denom = Enclosure::point(BigFloat::from_bigint(self.epsilon.numer().clone(), 0));
        numer.div_rounded(&denom, SCALE_PRECISION)
    }

    /// The noise scale actually used: the upper end of `Δ/ε`, so rounding can
    /// only add noise and the realized guarantee is at least `ε`.
    pub fn scale(&self) -> Result<BigFloat> {
        Ok(self.scale_enclosure()?.hi().clone())
    }
}

/// Releases `f_value` with Laplace noise of scale `Δ/ε` (rounded up).
///
/// `f_value` must be the exact query answer. The noise is never materialized
/// or added in floating point; the output is a correctly rounded sample of
/// `Lap(f_value, β)`.
pub fn laplace_mechanism(
    f_value: &BigFloat,
    budget: &PrivacyBudget,
    cfg: &SamplerConfig,
    tape: &mut BitTape,
) -> Result<f64> {
    if !f_value.is_finite() {
        return Err(Error::invalid("query value must be finite"));
    }
    let params = LaplaceParams::new(f_value.clone(), budget.scale()?)?;
    Ok(sample_laplace(&params, cfg, tape, &Binary64Grid::new(), None)?.point)
}

/// A Laplace mechanism bound to one budget, for repeated releases.
#[derive(Clone, Debug)]
pub struct LaplaceMechanism {
    budget: PrivacyBudget,
    scale: BigFloat,
    cfg: SamplerConfig,
}

impl LaplaceMechanism {
    pub fn new(budget: PrivacyBudget, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let scale = budget.scale()?;
        Ok(LaplaceMechanism { budget, scale, cfg })
    }

    pub fn budget(&self) -> &PrivacyBudget {
        &self.budget
    }

    pub fn scale(&self) -> &BigFloat {
        &self.scale
    }

    pub fn sampler_for(&self, f_value: &BigFloat) -> Result<LaplaceSampler> {
        LaplaceSampler::new(
            LaplaceParams::new(f_value.clone(), self.scale.clone())?,
            self.cfg.clone(),
        )
    }

    pub fn release(&self, f_value: &BigFloat, tape: &mut BitTape) -> Result<f64> {
        self.sampler_for(f_value)?.sample(tape)
    }
}

/// Outcome of [`noisy_argmax`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgmaxOutcome {
    pub index: usize,
    pub iterations: u32,
}

/// Index of the largest `values[i] + noise_i`, without rounding any noise value.
///
/// **Experimental.** Each candidate keeps its own dyadic interval and tape;
/// all are refined one step per round and the loop stops once some
/// enclosure's lower end exceeds every other enclosure's upper end. There is
/// no privacy proof for this procedure.
pub fn noisy_argmax<D: IntervalDistribution>(
    values: &[BigFloat],
    noise: &[D],
    cfg: &SamplerConfig,
    tapes: &mut [BitTape],
) -> Result<ArgmaxOutcome> {
    if values.len() < 2 {
        return Err(Error::invalid("noisy argmax needs at least two values"));
    }
    if noise.len() != values.len() || tapes.len() != values.len() {
        return Err(Error::invalid("need one noise distribution and one tape per value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    cfg.validate()?;
    let c = cfg.chunk_bits;
    let mut intervals = vec![DyadicInterval::unit(); values.len()];
    let mut k = 0u32;
    while cfg.max_iterations.map_or(true, |cap| k < cap) {
        k += 1;
        let prec = cfg.precision_at(k);
        let mut enclosures = Vec::with_capacity(values.len());
        for i in 0..values.len() {
            let raw = tapes[i].draw(c)?;
            intervals[i] = bisect_step(&intervals[i], chunk_index(raw, c), c);
            let e = noise[i].interval_inv_cdf(&intervals[i].to_unit_interval(), prec)?;
            enclosures.push(e.add(&Enclosure::point(values[i].clone()))?);
        }
        if let Some(index) = strict_winner(&enclosures) {
            return Ok(ArgmaxOutcome {
                index,
                iterations: k,
            });
        }
    }
    Err(Error::Bottom { iterations: k })
}

fn strict_winner(enclosures: &[Enclosure]) -> Option<usize> {
    let best = (0..enclosures.len()).max_by(|&a, &b| enclosures[a].lo().cmp(enclosures[b].lo()))?;
    let lo = enclosures[best].lo();
    enclosures
        .iter()
        .enumerate()
        .all(|(i, e)| i == best || e.hi() < lo)
        .then_some(best)
}

/// Laplace noise of scale `beta` for every candidate.
pub fn laplace_noise(count: usize, beta: &BigFloat) -> Result<Vec<Laplace>> {
    let params = LaplaceParams::new(BigFloat::zero(), beta.clone())?;
    Ok(vec![Laplace::new(params); count])
}
