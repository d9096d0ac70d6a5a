//! Interval-valued quantile and CDF functions.
//!
//! An [`IntervalDistribution`] maps a dyadic sub-interval `[a, b]` of `[0, 1]`
//! to an enclosure containing `F⁻¹(u)` for every `u ∈ [a, b]`, and the
//! enclosure tightens to `[F⁻¹(a), F⁻¹(b)]` as the precision grows. Quantiles
//! are monotone, so implementations bound each endpoint separately.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact_arith::{exp_bound, ln_bound, BigFloat, Enclosure, Rounding};

/// Extra bits used for intermediate quotients inside the CDF.
const CDF_GUARD_BITS: u32 = 16;

/// A closed sub-interval of `[0, 1]` with dyadic endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitInterval {
    lo: BigFloat,
    hi: BigFloat,
}

impl UnitInterval {
    pub fn new(lo: BigFloat, hi: BigFloat) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("unit interval endpoints must be finite"));
        }
        if lo.is_negative() || hi > BigFloat::one() || lo > hi {
            return Err(Error::invalid(format!(
                "[{lo}, {hi}] is not a sub-interval of [0, 1]"
            )));
        }
        Ok(UnitInterval { lo, hi })
    }

    pub(crate) fn new_unchecked(lo: BigFloat, hi: BigFloat) -> Self {
        UnitInterval { lo, hi }
    }

    pub fn full() -> Self {
        UnitInterval {
            lo: BigFloat::zero(),
            hi: BigFloat::one(),
        }
    }

    pub fn point(u: BigFloat) -> Result<Self> {
        Self::new(u.clone(), u)
    }

    pub fn lo(&self) -> &BigFloat {
        &self.lo
    }

    pub fn hi(&self) -> &BigFloat {
        &self.hi
    }
}

/// A continuous distribution whose quantile can be enclosed at any precision.
pub trait IntervalDistribution {
    /// Enclosure of `{F⁻¹(u) : u ∈ interval}`; endpoint 0 maps to `−∞` and 1
    /// to `+∞` for distributions with unbounded support.
    fn interval_inv_cdf(&self, interval: &UnitInterval, prec: u32) -> Result<Enclosure>;

    /// Enclosure of `{F(x) : x ∈ v}`, inside `[0, 1]`.
    fn interval_cdf(&self, v: &Enclosure, prec: u32) -> Result<Enclosure>;

    /// The CDF as an exact rational, for distributions where that exists.
    fn exact_cdf(&self, _x: &BigFloat) -> Option<BigRational> {
        None
    }
}

impl<D: IntervalDistribution + ?Sized> IntervalDistribution for &D {
    fn interval_inv_cdf(&self, interval: &UnitInterval, prec: u32) -> Result<Enclosure> {
        (**self).interval_inv_cdf(interval, prec)
    }

    fn interval_cdf(&self, v: &Enclosure, prec: u32) -> Result<Enclosure> {
        (**self).interval_cdf(v, prec)
    }

    fn exact_cdf(&self, x: &BigFloat) -> Option<BigRational> {
        (**self).exact_cdf(x)
    }
}

/// Location and scale of a Laplace distribution, both exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaplaceParams {
    mu: BigFloat,
    beta: BigFloat,
}

impl LaplaceParams {
    pub fn new(mu: BigFloat, beta: BigFloat) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("Laplace location must be finite"));
        }
        if !beta.is_finite() || !beta.is_positive() {
            return Err(Error::invalid("Laplace scale must be finite and > 0"));
        }
        Ok(LaplaceParams { mu, beta })
    }

    /// Exact conversion from doubles.
    pub fn from_f64(mu: f64, beta: f64) -> Result<Self> {
        Self::new(BigFloat::from_f64(mu)?, BigFloat::from_f64(beta)?)
    }

    pub fn standard() -> Self {
        LaplaceParams {
            mu: BigFloat::zero(),
            beta: BigFloat::one(),
        }
    }

    pub fn mu(&self) -> &BigFloat {
        &self.mu
    }

    pub fn beta(&self) -> &BigFloat {
        &self.beta
    }
}

/// The Laplace distribution `Lap(μ, β)`.
///
/// Quantile: `μ + β·ln(2u)` for `u ≤ 1/2` and `μ − β·ln(2(1−u))` above. The
/// branch test against 1/2 and the doublings are exact dyadic operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laplace {
    params: LaplaceParams,
}

impl Laplace {
    pub fn new(params: LaplaceParams) -> Self {
        Laplace { params }
    }

    pub fn standard() -> Self {
        Self::new(LaplaceParams::standard())
    }

    pub fn params(&self) -> &LaplaceParams {
        &self.params
    }

    /// One-sided bound on `F⁻¹(u)` for a dyadic `u ∈ [0, 1]`.
    pub fn quantile_bound(&self, u: &BigFloat, prec: u32, r: Rounding) -> Result<BigFloat> {
        if u.is_zero() {
            return Ok(BigFloat::neg_inf());
        }
        let one = BigFloat::one();
        if *u == one {
            return Ok(BigFloat::pos_inf());
        }
        let LaplaceParams { mu, beta } = &self.params;
        if u.ldexp(1) <= one {
            let l = ln_bound(&u.ldexp(1), prec, r)?;
            Ok(mu.add(&beta.mul(&l)))
        } else {
            let l = ln_bound(&one.sub(u).ldexp(1), prec, r.flip())?;
            Ok(mu.sub(&beta.mul(&l)))
        }
    }

    /// One-sided bound on `F(x)`, clamped into `[0, 1]`.
    pub fn cdf_bound(&self, x: &BigFloat, prec: u32, r: Rounding) -> Result<BigFloat> {
        if x.is_infinite() {
            return Ok(if x.is_negative() {
                BigFloat::zero()
            } else {
                BigFloat::one()
            });
        }
        let LaplaceParams { mu, beta } = &self.params;
        // F(x) = G((x − μ)/β) with G(t) = e^t/2 for t ≤ 0, 1 − e^−t/2 above;
        // G is increasing, so rounding t in the same direction keeps the side.
        let t = x.sub(mu).div_round(beta, prec + CDF_GUARD_BITS, r)?;
        let value = if !t.is_positive() {
            exp_bound(&t, prec, r)?.ldexp(-1)
        } else {
            BigFloat::one().sub(&exp_bound(&-t, prec, r.flip())?.ldexp(-1))
        };
        Ok(value.clamp_unit())
    }
}

trait ClampUnit {
    fn clamp_unit(self) -> Self;
}

impl ClampUnit for BigFloat {
    fn clamp_unit(self) -> Self {
        if self.is_negative() {
            BigFloat::zero()
        } else if self > BigFloat::one() {
            BigFloat::one()
        } else {
            self
        }
    }
}

impl IntervalDistribution for Laplace {
    fn interval_inv_cdf(&self, interval: &UnitInterval, prec: u32) -> Result<Enclosure> {
        let lo = self.quantile_bound(interval.lo(), prec, Rounding::Floor)?;
        let hi = self.quantile_bound(interval.hi(), prec, Rounding::Ceil)?;
        Ok(Enclosure::new_unchecked(lo, hi))
    }

    fn interval_cdf(&self, v: &Enclosure, prec: u32) -> Result<Enclosure> {
        Ok(Enclosure::new_unchecked(
            self.cdf_bound(v.lo(), prec, Rounding::Floor)?,
            self.cdf_bound(v.hi(), prec, Rounding::Ceil)?,
        ))
    }
}

/// Enclosure of the Laplace quantile over `interval`.
pub fn interval_inv_cdf_laplace(
    params: &LaplaceParams,
    interval: &UnitInterval,
    prec: u32,
) -> Result<Enclosure> {
    Laplace::new(params.clone()).interval_inv_cdf(interval, prec)
}

/// Enclosure of the Laplace CDF over `v`.
pub fn interval_cdf_laplace(params: &LaplaceParams, v: &Enclosure, prec: u32) -> Result<Enclosure> {
    Laplace::new(params.clone()).interval_cdf(v, prec)
}

/// A distribution with a piecewise-linear CDF through dyadic knots.
///
/// Its CDF is an exact rational at every dyadic point, which makes it the
/// reference distribution for exhaustive checks on toy grids. `slack` adds an
/// artificial outward error of `2^-(prec / slack)` to every quantile enclosure,
/// modelling an approximate inverse CDF that still tightens with precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinear {
    xs: Vec<BigFloat>,
    cdf: Vec<BigRational>,
    slack: Option<u32>,
}

impl PiecewiseLinear {
    /// `knots` are `(x, F(x))` pairs with strictly increasing `x` and `F`,
    /// starting at `F = 0` and ending at `F = 1`.
    pub fn new(knots: Vec<(BigFloat, BigRational)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("need at least two knots"));
        }
        if knots.iter().any(|(x, _)| !x.is_finite()) {
            return Err(Error::invalid("knots must be finite"));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
            return Err(Error::invalid("knots must be strictly increasing"));
        }
        if !knots[0].1.is_zero() || !knots[knots.len() - 1].1.is_one() {
            return Err(Error::invalid("CDF must run from 0 to 1"));
        }
        let (xs, cdf) = knots.into_iter().unzip();
        Ok(PiecewiseLinear {
            xs,
            cdf,
            slack: None,
        })
    }

    /// Uniform distribution on `[lo, hi]`.
    pub fn uniform(lo: BigFloat, hi: BigFloat) -> Result<Self> {
        Self::new(vec![
            (lo, BigRational::zero()),
            (hi, BigRational::one()),
        ])
    }

    pub fn with_slack(mut self, divisor: u32) -> Self {
        self.slack = Some(divisor.max(1));
        self
    }

    fn segment_for_probability(&self, u: &BigRational) -> usize {
        let i = self.cdf.partition_point(|f| f <= u);
        i.saturating_sub(1).min(self.cdf.len() - 2)
    }

    /// Exact rational quantile.
    pub fn quantile_exact(&self, u: &BigRational) -> BigRational {
        let i = self.segment_for_probability(u);
        let x0 = self.xs[i].to_rational().expect("finite");
        let x1 = self.xs[i + 1].to_rational().expect("finite");
        let (f0, f1) = (&self.cdf[i], &self.cdf[i + 1]);
        x0.clone() + (u - f0) * (x1 - x0) / (f1 - f0)
    }

    fn slack_at(&self, prec: u32) -> Option<BigFloat> {
        self.slack
            .map(|d| BigFloat::dyadic(1, -i64::from(prec / d)))
    }

    fn cdf_rational(&self, x: &BigFloat) -> BigRational {
        if x <= &self.xs[0] {
            return BigRational::zero();
        }
        if x >= &self.xs[self.xs.len() - 1] {
            return BigRational::one();
        }
        let i = self.xs.partition_point(|k| k <= x) - 1;
        let x = x.to_rational().expect("finite");
        let x0 = self.xs[i].to_rational().expect("finite");
        let x1 = self.xs[i + 1].to_rational().expect("finite");
        let (f0, f1) = (&self.cdf[i], &self.cdf[i + 1]);
        f0 + (x - x0.clone()) * (f1 - f0) / (x1 - x0)
    }
}

impl IntervalDistribution for PiecewiseLinear {
    fn interval_inv_cdf(&self, interval: &UnitInterval, prec: u32) -> Result<Enclosure> {
        let bound = |u: &BigFloat, r: Rounding| {
            let q = self.quantile_exact(&u.to_rational().expect("finite"));
            BigFloat::from_rational(&q, prec.max(1), r)
        };
        let mut lo = bound(interval.lo(), Rounding::Floor);
        let mut hi = bound(interval.hi(), Rounding::Ceil);
        if let Some(slack) = self.slack_at(prec) {
            lo = lo.sub(&slack);
            hi = hi.add(&slack);
        }
        Ok(Enclosure::new_unchecked(lo, hi))
    }

    fn interval_cdf(&self, v: &Enclosure, prec: u32) -> Result<Enclosure> {
        let bound = |x: &BigFloat, r: Rounding| {
            if x.is_infinite() {
                return if x.is_negative() {
                    BigFloat::zero()
                } else {
                    BigFloat::one()
                };
            }
            BigFloat::from_rational(&self.cdf_rational(x), prec.max(1), r)
        };
        Ok(Enclosure::new_unchecked(
            bound(v.lo(), Rounding::Floor),
            bound(v.hi(), Rounding::Ceil),
        ))
    }

    fn exact_cdf(&self, x: &BigFloat) -> Option<BigRational> {
        if x.is_infinite() {
            return Some(if x.is_negative() {
                BigRational::zero()
            } else {
                BigRational::one()
            });
        }
        Some(self.cdf_rational(x))
    }
}

/// `p/q` as a rational; test and example convenience.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}
