//! Exact dyadic scalars.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Direction for operations that must drop bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Toward −∞.
    Floor,
    /// Toward +∞.
    Ceil,
}

impl Rounding {
    pub fn flip(self) -> Self {
        match self {
            Rounding::Floor => Rounding::Ceil,
            Rounding::Ceil => Rounding::Floor,
        }
    }

    /// Whether rounding a magnitude with the given sign moves it away from zero.
    fn grows_magnitude(self, negative: bool) -> bool {
        matches!(
            (self, negative),
            (Rounding::Ceil, false) | (Rounding::Floor, true)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    Finite,
    Infinite,
}

/// A dyadic rational `±mantissa · 2^exponent`, or ±∞.
///
/// Finite values are kept canonical: the mantissa is odd, or the value is
/// zero with a positive sign and exponent 0. Two equal values therefore have
/// identical fields, and derived `Eq`/`Hash` agree with numeric equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigFloat {
    kind: Kind,
    negative: bool,
    mantissa: BigUint,
    exponent: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat {
            kind: Kind::Finite,
            negative: false,
            mantissa: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    pub fn pos_inf() -> Self {
        BigFloat {
            kind: Kind::Infinite,
            negative: false,
            mantissa: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn neg_inf() -> Self {
        BigFloat {
            negative: true,
            ..Self::pos_inf()
        }
    }

    /// Builds `±mantissa · 2^exponent` and canonicalizes it.
    pub fn from_parts(negative: bool, mantissa: BigUint, exponent: i64) -> Self {
        if mantissa.is_zero() {
            return Self::zero();
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        let (mantissa, exponent) = if tz > 0 {
            (mantissa >> tz, exponent + tz as i64)
        } else {
            (mantissa, exponent)
        };
        BigFloat {
            kind: Kind::Finite,
            negative,
            mantissa,
            exponent,
        }
    }

    pub fn from_bigint(value: BigInt, exponent: i64) -> Self {
        let (sign, mag) = value.into_parts();
        Self::from_parts(sign == Sign::Minus, mag, exponent)
    }

    pub fn from_i64(value: i64) -> Self {
        Self::from_parts(value < 0, BigUint::from(value.unsigned_abs()), 0)
    }

    /// `numerator · 2^exponent`.
    pub fn dyadic(numerator: i64, exponent: i64) -> Self {
        Self::from_parts(
            numerator < 0,
            BigUint::from(numerator.unsigned_abs()),
            exponent,
        )
    }

    /// Exact conversion; every finite double is a dyadic rational.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::invalid("NaN has no dyadic value"));
        }
        if x.is_infinite() {
            return Ok(if x > 0.0 {
                Self::pos_inf()
            } else {
                Self::neg_inf()
            });
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exponent) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        Ok(Self::from_parts(negative, BigUint::from(mantissa), exponent))
    }

    pub fn is_finite(&self) -> bool {
        self.kind == Kind::Finite
    }

    pub fn is_infinite(&self) -> bool {
        self.kind == Kind::Infinite
    }

    pub fn is_zero(&self) -> bool {
        self.is_finite() && self.mantissa.is_zero()
    }

    /// True for values strictly below zero (including −∞).
    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn is_positive(&self) -> bool {
        !self.negative && !self.is_zero()
    }

    /// Odd mantissa (zero for 0). Meaningless for infinities.
    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    /// Significant bits of the mantissa.
    pub fn precision(&self) -> u64 {
        self.mantissa.bits()
    }

    /// `floor(log2 |x|)` for finite nonzero values.
    pub fn floor_log2(&self) -> Option<i64> {
        if !self.is_finite() || self.is_zero() {
            None
        } else {
            Some(self.mantissa.bits() as i64 - 1 + self.exponent)
        }
    }

    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        out.negative = false;
        out
    }

    /// Exact multiplication by `2^k`.
    pub fn ldexp(&self, k: i64) -> Self {
        if !self.is_finite() || self.is_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.exponent += k;
        out
    }

    fn signed_mantissa(&self) -> BigInt {
        let sign = if self.negative {
            Sign::Minus
        } else {
            Sign::Plus
        };
        BigInt::from_biguint(sign, self.mantissa.clone())
    }

    /// Exact sum. `+∞ + −∞` is an error.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        match (self.kind, other.kind) {
            (Kind::Infinite, Kind::Infinite) => {
                if self.negative == other.negative {
                    Ok(self.clone())
                } else {
                    Err(Error::Undefined("∞ − ∞"))
                }
            }
            (Kind::Infinite, _) => Ok(self.clone()),
            (_, Kind::Infinite) => Ok(other.clone()),
            _ => Ok(self.add_finite(other)),
        }
    }

    fn add_finite(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(other.exponent);
        let a = self.signed_mantissa() << (self.exponent - e) as usize;
        let b = other.signed_mantissa() << (other.exponent - e) as usize;
        Self::from_bigint(a + b, e)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    /// Exact product. `0 · ∞` is an error.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let negative = self.negative != other.negative;
        if self.is_infinite() || other.is_infinite() {
            if self.is_zero() || other.is_zero() {
                return Err(Error::Undefined("0 · ∞"));
            }
            return Ok(if negative {
                Self::neg_inf()
            } else {
                Self::pos_inf()
            });
        }
        Ok(Self::from_parts(
            negative,
            &self.mantissa * &other.mantissa,
            self.exponent + other.exponent,
        ))
    }

    /// Finite-only convenience; panics on infinite operands.
    pub fn add(&self, other: &Self) -> Self {
        assert!(self.is_finite() && other.is_finite(), "finite add");
        self.add_finite(other)
    }

    /// Finite-only convenience; panics on infinite operands.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-other)
    }

    /// Finite-only convenience; panics on infinite operands.
    pub fn mul(&self, other: &Self) -> Self {
        assert!(self.is_finite() && other.is_finite(), "finite mul");
        Self::from_parts(
            self.negative != other.negative,
            &self.mantissa * &other.mantissa,
            self.exponent + other.exponent,
        )
    }

    /// Exact `(a + b) / 2`.
    pub fn midpoint(a: &Self, b: &Self) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("midpoint of an infinite endpoint"));
        }
        Ok(a.add_finite(b).ldexp(-1))
    }

    /// Rounds to at most `prec` significant bits in the given direction.
    pub fn round(&self, prec: u32, rounding: Rounding) -> Self {
        let prec = u64::from(prec.max(1));
        if !self.is_finite() || self.mantissa.bits() <= prec {
            return self.clone();
        }
        let shift = self.mantissa.bits() - prec;
        // Canonical mantissas are odd, so the dropped bits are never all zero.
        let mut kept = &self.mantissa >> shift;
        if rounding.grows_magnitude(self.negative) {
            kept += 1u32;
        }
        Self::from_parts(self.negative, kept, self.exponent + shift as i64)
    }

    /// Quotient rounded to `prec` significant bits in the given direction.
    pub fn div_round(&self, other: &Self, prec: u32, rounding: Rounding) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let negative = self.negative != other.negative;
        match (self.kind, other.kind) {
            (Kind::Infinite, Kind::Infinite) => return Err(Error::Undefined("∞ / ∞")),
            (Kind::Infinite, _) => {
                return Ok(if negative {
                    Self::neg_inf()
                } else {
                    Self::pos_inf()
                })
            }
            (_, Kind::Infinite) => return Ok(Self::zero()),
            _ => {}
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let prec = u64::from(prec.max(1));
        let shift = (prec + 1 + other.mantissa.bits()).saturating_sub(self.mantissa.bits());
        let numerator = &self.mantissa << shift;
        let (mut q, r) = numerator.div_rem(&other.mantissa);
        let mut inexact = !r.is_zero();
        let mut exponent = self.exponent - other.exponent - shift as i64;
        let excess = q.bits().saturating_sub(prec);
        if excess > 0 {
            let tz = q.trailing_zeros().unwrap_or(0);
            inexact |= tz < excess;
            q >>= excess;
            exponent += excess as i64;
        }
        if inexact && rounding.grows_magnitude(negative) {
            q += 1u32;
        }
        Ok(Self::from_parts(negative, q, exponent))
    }

    /// Exact rational value of a finite BigFloat.
    pub fn to_rational(&self) -> Option<BigRational> {
        if !self.is_finite() {
            return None;
        }
        let m = self.signed_mantissa();
        Some(if self.exponent >= 0 {
            BigRational::from_integer(m << self.exponent as usize)
        } else {
            BigRational::new(m, BigInt::one() << (-self.exponent) as usize)
        })
    }

    /// Rounds a rational to `prec` significant bits in the given direction.
    pub fn from_rational(value: &BigRational, prec: u32, rounding: Rounding) -> Self {
        let num = Self::from_bigint(value.numer().clone(), 0);
        let den = Self::from_bigint(value.denom().clone(), 0);
        // Denominator of a reduced rational is never zero.
        num.div_round(&den, prec, rounding)
            .expect("rational denominator is nonzero")
    }

    /// Exact conversion when the rational is dyadic.
    pub fn from_rational_exact(value: &BigRational) -> Option<Self> {
        let den = value.denom().magnitude();
        if den.count_ones() != 1 {
            return None;
        }
        let k = den.trailing_zeros().unwrap_or(0) as i64;
        Some(Self::from_bigint(value.numer().clone(), -k))
    }

    /// Nearest-ish double, for display and statistics only. Never used on
    /// paths that decide an output.
    pub fn to_f64_approx(&self) -> f64 {
        if self.is_infinite() {
            return if self.negative {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
        }
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits();
        let drop = bits.saturating_sub(64);
        let top = (&self.mantissa >> drop).to_u64().unwrap_or(u64::MAX) as f64;
        let e = self.exponent + drop as i64;
        let v = scale_f64(top, e);
        if self.negative {
            -v
        } else {
            v
        }
    }

    pub fn max(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn min(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

fn scale_f64(mut v: f64, mut e: i64) -> f64 {
    while e > 0 {
        let step = e.min(1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        v *= 2f64.powi(-(step as i32));
        e += step;
    }
    v
}

impl Neg for &BigFloat {
    type Output = BigFloat;

    fn neg(self) -> BigFloat {
        let mut out = self.clone();
        if !out.is_zero() {
            out.negative = !out.negative;
        }
        out
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;

    fn neg(self) -> BigFloat {
        -&self
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        let rank = |x: &BigFloat| match (x.kind, x.negative) {
            (Kind::Infinite, true) => -1,
            (Kind::Infinite, false) => 1,
            _ => 0,
        };
        match rank(self).cmp(&rank(other)) {
            Ordering::Equal if rank(self) != 0 => return Ordering::Equal,
            Ordering::Equal => {}
            ord => return ord,
        }
        let sign = |x: &BigFloat| {
            if x.is_zero() {
                0
            } else if x.negative {
                -1
            } else {
                1
            }
        };
        match sign(self).cmp(&sign(other)) {
            Ordering::Equal => {}
            ord => return ord,
        }
        if sign(self) == 0 {
            return Ordering::Equal;
        }
        let magnitude = compare_magnitude(self, other);
        if self.negative {
            magnitude.reverse()
        } else {
            magnitude
        }
    }
}

fn compare_magnitude(a: &BigFloat, b: &BigFloat) -> Ordering {
    let la = a.floor_log2().unwrap_or(i64::MIN);
    let lb = b.floor_log2().unwrap_or(i64::MIN);
    if la != lb {
        return la.cmp(&lb);
    }
    let e = a.exponent.min(b.exponent);
    let ma = &a.mantissa << (a.exponent - e) as usize;
    let mb = &b.mantissa << (b.exponent - e) as usize;
    ma.cmp(&mb)
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Hex-dyadic text form `±0xMANTISSAp±EXP`, or `+inf` / `-inf`.
impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { '-' } else { '+' };
        if self.is_infinite() {
            return write!(f, "{sign}inf");
        }
        let exp_sign = if self.exponent < 0 { '-' } else { '+' };
        write!(
            f,
            "{sign}0x{}p{exp_sign}{}",
            self.mantissa.to_str_radix(16),
            self.exponent.unsigned_abs()
        )
    }
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (≈{:e})", self.to_f64_approx())
    }
}

impl FromStr for BigFloat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a hex-dyadic value: {s:?}"));
        let s = s.trim();
        let (negative, rest) = match s.as_bytes().first() {
            Some(b'+') => (false, &s[1..]),
            Some(b'-') => (true, &s[1..]),
            _ => return Err(bad()),
        };
        if rest == "inf" {
            return Ok(if negative {
                Self::neg_inf()
            } else {
                Self::pos_inf()
            });
        }
        let rest = rest.strip_prefix("0x").ok_or_else(bad)?;
        let (mant, exp) = rest.split_once('p').ok_or_else(bad)?;
        if mant.is_empty() || exp.len() < 2 || !matches!(exp.as_bytes()[0], b'+' | b'-') {
            return Err(bad());
        }
        let mantissa = BigUint::parse_bytes(mant.as_bytes(), 16).ok_or_else(bad)?;
        let exponent: i64 = exp.parse().map_err(|_| bad())?;
        let value = Self::from_parts(negative, mantissa, exponent);
        if value.is_zero() && negative {
            return Err(bad());
        }
        Ok(value)
    }
}

impl From<i64> for BigFloat {
    fn from(v: i64) -> Self {
        Self::from_i64(v)
    }
}

impl TryFrom<f64> for BigFloat {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::from_f64(v)
    }
}

/// `value` is an exact non-negative dyadic; returns `floor`/`ceil` of `value · 2^bits`.
pub(crate) fn to_fixed(value: &BigFloat, bits: u64, rounding: Rounding) -> BigUint {
    debug_assert!(value.is_finite() && !value.is_negative());
    let e = value.exponent + bits as i64;
    if e >= 0 {
        &value.mantissa << e as usize
    } else {
        let shift = (-e) as u64;
        let floor = &value.mantissa >> shift;
        let exact = value.mantissa.trailing_zeros().unwrap_or(u64::MAX) >= shift;
        if rounding == Rounding::Ceil && !exact {
            floor + 1u32
        } else {
            floor
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bf(num: i64, exp: i64) -> BigFloat {
        BigFloat::dyadic(num, exp)
    }

    #[test]
    fn canonical_form() {
        let a = bf(12, -3);
        assert_eq!(a.mantissa(), &BigUint::from(3u32));
        assert_eq!(a.exponent(), -1);
        assert_eq!(a, bf(3, -1));
        assert_eq!(bf(0, 17), BigFloat::zero());
        assert_eq!(-BigFloat::zero(), BigFloat::zero());
    }

    #[test]
    fn midpoint_examples() {
        let half = bf(1, -1);
        assert_eq!(BigFloat::midpoint(&BigFloat::zero(), &BigFloat::one()).unwrap(), half);
        assert_eq!(BigFloat::midpoint(&half, &BigFloat::one()).unwrap(), bf(3, -2));
        let a = bf(-7, -13);
        assert_eq!(BigFloat::midpoint(&a, &a).unwrap(), a);
        assert!(BigFloat::midpoint(&a, &BigFloat::pos_inf()).is_err());
    }

    #[test]
    fn iterated_halving_has_power_of_two_denominator() {
        let (mut lo, hi) = (BigFloat::zero(), BigFloat::one());
        for k in 1..=200i64 {
            lo = BigFloat::midpoint(&lo, &hi).unwrap();
            // lo = 1 - 2^-k, whose reduced denominator is exactly 2^k
            let r = lo.to_rational().unwrap();
            assert_eq!(r.denom(), &(BigInt::one() << k as usize));
        }
    }

    #[test]
    fn ordering_with_infinities() {
        let mut v = vec![
            BigFloat::pos_inf(),
            bf(3, -1),
            BigFloat::neg_inf(),
            bf(-5, 2),
            BigFloat::zero(),
            bf(1, -1000),
            bf(-1, -1000),
        ];
        v.sort();
        let shown: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(
            shown,
            ["-inf", "-0x5p+2", "-0x1p-1000", "+0x0p+0", "+0x1p-1000", "+0x3p-1", "+inf"]
        );
    }

    #[test]
    fn round_directions() {
        let x = bf(0b10111, 0); // 23
        assert_eq!(x.round(3, Rounding::Floor), bf(20, 0));
        assert_eq!(x.round(3, Rounding::Ceil), bf(24, 0));
        let y = -x;
        assert_eq!(y.round(3, Rounding::Floor), bf(-24, 0));
        assert_eq!(y.round(3, Rounding::Ceil), bf(-20, 0));
        assert_eq!(bf(5, 7).round(3, Rounding::Ceil), bf(5, 7));
    }

    #[test]
    fn div_round_exact_and_inexact() {
        let q = BigFloat::one().div_round(&bf(4, 0), 5, Rounding::Ceil).unwrap();
        assert_eq!(q, bf(1, -2));
        let third_lo = BigFloat::one().div_round(&bf(3, 0), 8, Rounding::Floor).unwrap();
        let third_hi = BigFloat::one().div_round(&bf(3, 0), 8, Rounding::Ceil).unwrap();
        assert_eq!(third_lo, bf(0b10101010, -9));
        assert_eq!(third_hi, bf(0b10101011, -9));
        assert!(matches!(
            BigFloat::one().div_round(&BigFloat::zero(), 8, Rounding::Floor),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn hex_text_examples() {
        assert_eq!(bf(3, -2).to_string(), "+0x3p-2");
        assert_eq!(bf(-255, 10).to_string(), "-0xffp+10");
        assert_eq!(BigFloat::zero().to_string(), "+0x0p+0");
        assert_eq!("+0x6p-3".parse::<BigFloat>().unwrap(), bf(3, -2));
        assert_eq!("-inf".parse::<BigFloat>().unwrap(), BigFloat::neg_inf());
        for bad in ["0x1p0", "+1p0", "+0x1", "+0xp+1", "+0x1p1", "-0x0p+0", "+0xzp+0"] {
            assert!(bad.parse::<BigFloat>().is_err(), "{bad}");
        }
    }

    #[test]
    fn f64_conversion_exact() {
        assert_eq!(BigFloat::from_f64(0.75).unwrap(), bf(3, -2));
        assert_eq!(BigFloat::from_f64(-0.0).unwrap(), BigFloat::zero());
        assert_eq!(BigFloat::from_f64(5e-324).unwrap(), bf(1, -1074));
        assert!(BigFloat::from_f64(f64::NAN).is_err());
        assert_eq!(bf(3, -2).to_f64_approx(), 0.75);
    }

    fn arb_bigfloat() -> impl Strategy<Value = BigFloat> {
        prop_oneof![
            8 => (any::<i64>(), -2000i64..2000).prop_map(|(m, e)| BigFloat::dyadic(m, e)),
            1 => Just(BigFloat::pos_inf()),
            1 => Just(BigFloat::neg_inf()),
        ]
    }

    proptest! {
        #[test]
        fn hex_round_trip(x in arb_bigfloat()) {
            let s = x.to_string();
            prop_assert_eq!(s.parse::<BigFloat>().unwrap(), x);
        }

        #[test]
        fn exact_ops_agree_with_rationals(a in any::<i64>(), ea in -300i64..300, b in any::<i64>(), eb in -300i64..300) {
            let (x, y) = (BigFloat::dyadic(a, ea), BigFloat::dyadic(b, eb));
            let (rx, ry) = (x.to_rational().unwrap(), y.to_rational().unwrap());
            prop_assert_eq!(x.add(&y).to_rational().unwrap(), &rx + &ry);
            prop_assert_eq!(x.sub(&y).to_rational().unwrap(), &rx - &ry);
            prop_assert_eq!(x.mul(&y).to_rational().unwrap(), &rx * &ry);
            prop_assert_eq!(x.cmp(&y), rx.cmp(&ry));
        }

        #[test]
        fn div_round_brackets_quotient(a in any::<i64>(), b in any::<i64>(), prec in 1u32..130) {
            prop_assume!(b != 0);
            let (x, y) = (BigFloat::from_i64(a), BigFloat::from_i64(b));
            let exact = x.to_rational().unwrap() / y.to_rational().unwrap();
            let lo = x.div_round(&y, prec, Rounding::Floor).unwrap();
            let hi = x.div_round(&y, prec, Rounding::Ceil).unwrap();
            prop_assert!(lo.to_rational().unwrap() <= exact.clone());
            prop_assert!(hi.to_rational().unwrap() >= exact);
            prop_assert!(lo.precision() <= u64::from(prec) && hi.precision() <= u64::from(prec));
        }
    }
}
