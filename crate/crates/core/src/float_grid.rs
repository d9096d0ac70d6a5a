//! binary64 introspection and the finite output grids the sampler rounds onto.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::exact_arith::BigFloat;

const FRACTION_BITS: u32 = 52;
const FRACTION_MASK: u64 = (1 << FRACTION_BITS) - 1;
const MIN_ULP_LOG2: i64 = -1074;

/// Raw IEEE-754 fields of a double.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FloatDecomposition {
    pub sign: bool,
    /// Biased exponent field, 0..=2047.
    pub exponent: u16,
    /// The 52 stored fraction bits.
    pub mantissa: u64,
}

impl FloatDecomposition {
    pub fn recompose(&self) -> f64 {
        f64::from_bits(
            (u64::from(self.sign) << 63)
                | (u64::from(self.exponent & 0x7ff) << FRACTION_BITS)
                | (self.mantissa & FRACTION_MASK),
        )
    }
}

pub fn decompose(x: f64) -> FloatDecomposition {
    let bits = x.to_bits();
    FloatDecomposition {
        sign: bits >> 63 == 1,
        exponent: ((bits >> FRACTION_BITS) & 0x7ff) as u16,
        mantissa: bits & FRACTION_MASK,
    }
}

/// `(integer significand, power of two)` with `|x| = significand · 2^power`.
fn integer_significand(x: f64) -> (u64, i64) {
    let d = decompose(x);
    if d.exponent == 0 {
        (d.mantissa, MIN_ULP_LOG2)
    } else {
        (
            d.mantissa | (1 << FRACTION_BITS),
            i64::from(d.exponent) - 1075,
        )
    }
}

/// log2 of the unit in the last place: distance from `x` to the next double
/// away from zero. Subnormals share the minimum spacing 2^-1074.
pub fn ulp_log2(x: f64) -> Result<i64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::invalid(format!("ulp undefined for {x}")));
    }
    let d = decompose(x);
    Ok(if d.exponent == 0 {
        MIN_ULP_LOG2
    } else {
        i64::from(d.exponent) - 1075
    })
}

pub fn ulp(x: f64) -> Result<f64> {
    let k = ulp_log2(x)?;
    Ok(pow2(k))
}

/// `2^k` for `k` in the binary64 range.
pub fn pow2(k: i64) -> f64 {
    assert!((MIN_ULP_LOG2..1024).contains(&k), "2^{k} not representable");
    if k < -1022 {
        f64::from_bits(1u64 << (k - MIN_ULP_LOG2))
    } else {
        f64::from_bits(((k + 1023) as u64) << FRACTION_BITS)
    }
}

/// Whether finite `x` is an integer multiple of `2^step_log2`, decided on the bits.
pub fn is_on_grid_multiple(x: f64, step_log2: i64) -> bool {
    assert!(x.is_finite(), "grid membership of non-finite value");
    let (sig, pow) = integer_significand(x);
    if sig == 0 {
        return true;
    }
    pow + i64::from(sig.trailing_zeros()) >= step_log2
}

fn max_finite() -> &'static BigFloat {
    static MAX: OnceLock<BigFloat> = OnceLock::new();
    MAX.get_or_init(|| BigFloat::from_f64(f64::MAX).expect("finite"))
}

/// Ceiling onto binary64: the smallest double `≥ v`.
///
/// Values below `−f64::MAX` go to `−∞` unless `saturate` is set, in which
/// case they go to `−f64::MAX`. Values above `f64::MAX` go to `+∞`.
pub fn round_up_binary64(v: &BigFloat, saturate: bool) -> f64 {
    if v.is_infinite() {
        return match (v.is_negative(), saturate) {
            (false, _) => f64::INFINITY,
            (true, false) => f64::NEG_INFINITY,
            (true, true) => -f64::MAX,
        };
    }
    if v.is_zero() {
        return 0.0;
    }
    let negative = v.is_negative();
    if negative && v.abs() > *max_finite() {
        return if saturate { -f64::MAX } else { f64::NEG_INFINITY };
    }
    let top = v.floor_log2().expect("nonzero");
    if top >= 1024 {
        return f64::INFINITY;
    }
    let q = (top - i64::from(FRACTION_BITS)).max(MIN_ULP_LOG2);
    let shift = q - v.exponent();
    let k = if shift <= 0 {
        v.mantissa() << (-shift) as usize
    } else {
        let floor = v.mantissa() >> shift as usize;
        // canonical mantissa is odd, so any right shift drops a set bit
        if negative {
            floor
        } else {
            floor + 1u32
        }
    };
    compose(negative, &k, q)
}

/// `±k · 2^q` where `k ≤ 2^53` and `q ≥ -1074`, as a double.
fn compose(negative: bool, k: &BigUint, q: i64) -> f64 {
    let mut k = k.to_u64().expect("significand fits in 54 bits");
    let mut q = q;
    if k == 0 {
        return if negative { -0.0 } else { 0.0 };
    }
    if k == 1 << 53 {
        k = 1 << 52;
        q += 1;
    }
    let bits = if k < 1 << 52 {
        debug_assert_eq!(q, MIN_ULP_LOG2);
        k
    } else {
        let biased = q + 1075;
        if biased >= 2047 {
            return if negative {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
        }
        ((biased as u64) << FRACTION_BITS) | (k & FRACTION_MASK)
    };
    f64::from_bits(bits | (u64::from(negative) << 63))
}

/// Ceiling onto binary64 with the default (non-saturating) overflow convention.
pub fn next_float_up(v: &BigFloat) -> f64 {
    round_up_binary64(v, false)
}

/// A finite output space with a ceiling map from the reals onto it.
///
/// Contract: `round_up` is monotone, fixes every grid point, and
/// `predecessor(round_up(x)) < x ≤ round_up(x)` on the covered range, so each
/// point `s` owns the half-open preimage `(predecessor(s), s]`.
pub trait RoundingGrid {
    type Point: Copy + PartialEq + fmt::Debug;

    fn round_up(&self, v: &BigFloat) -> Self::Point;

    fn predecessor(&self, p: Self::Point) -> Option<Self::Point>;

    /// Exact value of a grid point (possibly infinite).
    fn value(&self, p: Self::Point) -> BigFloat;

    fn is_infinite(&self, p: Self::Point) -> bool {
        self.value(p).is_infinite()
    }

    /// All points in increasing order, or `None` when that is infeasible.
    fn enumerate(&self) -> Option<Vec<Self::Point>>;

    fn size(&self) -> u128;
}

/// The binary64 grid (+0 and −0 count as a single point).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Binary64Grid {
    pub saturate: bool,
}

impl Binary64Grid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn saturating() -> Self {
        Binary64Grid { saturate: true }
    }
}

impl RoundingGrid for Binary64Grid {
    type Point = f64;

    fn round_up(&self, v: &BigFloat) -> f64 {
        round_up_binary64(v, self.saturate)
    }

    fn predecessor(&self, p: f64) -> Option<f64> {
        if p == f64::NEG_INFINITY || (self.saturate && p == -f64::MAX) {
            None
        } else if p == 0.0 {
            Some(-pow2(MIN_ULP_LOG2))
        } else {
            Some(p.next_down())
        }
    }

    fn value(&self, p: f64) -> BigFloat {
        BigFloat::from_f64(p).expect("grid points are never NaN")
    }

    fn is_infinite(&self, p: f64) -> bool {
        p.is_infinite()
    }

    fn enumerate(&self) -> Option<Vec<f64>> {
        None
    }

    fn size(&self) -> u128 {
        // every non-NaN bit pattern, with ±0 merged
        let nan_patterns = 2 * ((1u128 << 52) - 1);
        let all = (1u128 << 64) - nan_patterns - 1;
        if self.saturate {
            all - 1
        } else {
            all
        }
    }
}

/// A small grid of finite dyadic points plus an implicit top point `+∞`.
///
/// Point `i < len` is `points[i]`; point `len` is `+∞` and owns everything
/// above the last finite point. Meant for exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyGrid {
    points: Vec<BigFloat>,
}

impl ToyGrid {
    pub fn new(points: Vec<BigFloat>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("toy grid needs at least one finite point"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("toy grid points must be finite"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("toy grid points must be strictly increasing"));
        }
        Ok(ToyGrid { points })
    }

    /// Evenly spaced points `start, start + step, …` (`count` of them).
    pub fn uniform(start: &BigFloat, step: &BigFloat, count: usize) -> Result<Self> {
        let mut points = Vec::with_capacity(count);
        let mut cur = start.clone();
        for _ in 0..count {
            points.push(cur.clone());
            cur = cur.add(step);
        }
        Self::new(points)
    }

    /// Tiny float format: zero and `±(1 + f/2^mantissa_bits) · 2^e` for
    /// `e ∈ [min_exp, max_exp]`.
    pub fn minifloat(mantissa_bits: u32, min_exp: i64, max_exp: i64) -> Result<Self> {
        let mut positive = Vec::new();
        for e in min_exp..=max_exp {
            for f in 0..(1i64 << mantissa_bits) {
                let sig = (1i64 << mantissa_bits) + f;
                positive.push(BigFloat::dyadic(sig, e - i64::from(mantissa_bits)));
            }
        }
        let mut points: Vec<BigFloat> = positive.iter().rev().map(|p| -p).collect();
        points.push(BigFloat::zero());
        points.extend(positive);
        Self::new(points)
    }

    pub fn finite_points(&self) -> &[BigFloat] {
        &self.points
    }

    /// Index of the `+∞` point.
    pub fn top(&self) -> usize {
        self.points.len()
    }
}

impl RoundingGrid for ToyGrid {
    type Point = usize;

    fn round_up(&self, v: &BigFloat) -> usize {
        self.points.partition_point(|p| p < v)
    }

    fn predecessor(&self, p: usize) -> Option<usize> {
        p.checked_sub(1)
    }

    fn value(&self, p: usize) -> BigFloat {
        self.points
            .get(p)
            .cloned()
            .unwrap_or_else(BigFloat::pos_inf)
    }

    fn is_infinite(&self, p: usize) -> bool {
        p >= self.points.len()
    }

    fn enumerate(&self) -> Option<Vec<usize>> {
        Some((0..=self.points.len()).collect())
    }

    fn size(&self) -> u128 {
        self.points.len() as u128 + 1
    }
}
