//! Guaranteed-containment `ln` and `exp`.
//!
//! Both functions work in fixed point: a real `v` is carried as an integer
//! `V` with `V · 2^-w` bounding `v` from the requested side. Every truncation
//! is a floor or a ceiling chosen so that the bound stays on its side, and
//! series tails are covered by an explicit remainder term. No floating-point
//! operation takes part in any bound.
//!
//! `ln` reduces its argument to `m ∈ (1/√2, √2]` with an exact power of two
//! and sums `2·atanh((m−1)/(m+1))`; `exp` scales its argument below 1/2,
//! sums the Taylor series and squares back up.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use super::bigfloat::{to_fixed, BigFloat, Rounding};
use super::enclosure::Enclosure;
use crate::error::{Error, Result};

/// Extra working bits beyond the requested precision.
const GUARD_BITS: u64 = 24;

/// Bits of the cached `ln 2` bounds.
const LN2_CACHE_BITS: u64 = 2048;

/// Above this magnitude `exp` bounds are answered without a series.
const EXP_MAX_LOG2: i64 = 20;

fn div_round(n: &BigUint, d: &BigUint, r: Rounding) -> BigUint {
    let (q, rem) = n.div_rem(d);
    if r == Rounding::Ceil && !rem.is_zero() {
        q + 1u32
    } else {
        q
    }
}

fn shr_round(n: BigUint, bits: u64, r: Rounding) -> BigUint {
    if bits == 0 {
        return n;
    }
    let exact = n.trailing_zeros().unwrap_or(u64::MAX) >= bits;
    let q = n >> bits;
    if r == Rounding::Ceil && !exact {
        q + 1u32
    } else {
        q
    }
}

fn mul_shift(a: &BigUint, b: &BigUint, w: u64, r: Rounding) -> BigUint {
    shr_round(a * b, w, r)
}

/// Bound on `atanh(num/den) · 2^w` for `0 ≤ num/den ≤ 1/3`.
fn atanh_fixed(num: &BigUint, den: &BigUint, w: u64, r: Rounding) -> BigUint {
    let t = div_round(&(num << w), den, r);
    if t.is_zero() {
        return t;
    }
    let t2 = mul_shift(&t, &t, w, r);
    let mut power = t;
    let mut sum = BigUint::zero();
    let mut n: u64 = 0;
    loop {
        sum += div_round(&power, &BigUint::from(2 * n + 1), r);
        power = mul_shift(&power, &t2, w, r);
        n += 1;
        match r {
            Rounding::Floor if power.is_zero() => break,
            // Tail from term n is at most power·(9/8)/(2n+1) < power for n ≥ 1.
            Rounding::Ceil if power <= BigUint::one() => {
                sum += power;
                break;
            }
            _ => {}
        }
    }
    sum
}

fn ln2_cache() -> &'static (BigUint, BigUint) {
    static CACHE: OnceLock<(BigUint, BigUint)> = OnceLock::new();
    CACHE.get_or_init(|| {
        let one = BigUint::one();
        let three = BigUint::from(3u32);
        (
            atanh_fixed(&one, &three, LN2_CACHE_BITS, Rounding::Floor) << 1,
            atanh_fixed(&one, &three, LN2_CACHE_BITS, Rounding::Ceil) << 1,
        )
    })
}

/// Bound on `ln 2 · 2^w`.
fn ln2_fixed(w: u64, r: Rounding) -> BigUint {
    if w <= LN2_CACHE_BITS {
        let (lo, hi) = ln2_cache();
        match r {
            Rounding::Floor => lo >> (LN2_CACHE_BITS - w),
            Rounding::Ceil => shr_round(hi.clone(), LN2_CACHE_BITS - w, r),
        }
    } else {
        atanh_fixed(&BigUint::one(), &BigUint::from(3u32), w, r) << 1
    }
}

/// Enclosure of `ln 2` whose width is at most `2^(2-prec)`.
pub fn ln2_enclosure(prec: u32) -> Enclosure {
    let w = u64::from(prec) + GUARD_BITS;
    let lo = BigFloat::from_parts(false, ln2_fixed(w, Rounding::Floor), -(w as i64));
    let hi = BigFloat::from_parts(false, ln2_fixed(w, Rounding::Ceil), -(w as i64));
    Enclosure::new_unchecked(lo, hi)
}

/// One-sided bound on `ln c` for a positive dyadic `c` (`+∞` maps to `+∞`).
pub fn ln_bound(c: &BigFloat, prec: u32, r: Rounding) -> Result<BigFloat> {
    if c.is_infinite() && !c.is_negative() {
        return Ok(BigFloat::pos_inf());
    }
    if !c.is_positive() {
        return Err(Error::LogDomain);
    }
    if c == &BigFloat::one() {
        return Ok(BigFloat::zero());
    }
    let mant = c.mantissa();
    let e0 = c.floor_log2().expect("positive finite");
    // c = mant · 2^exponent and m = c / 2^e = mant / 2^s with s = e - exponent.
    let mut e = e0;
    let mut s = (e0 - c.exponent()) as u64;
    let two_pow_s = BigUint::one() << s;
    if mant * mant > (BigUint::one() << (2 * s + 1)) {
        e += 1;
        s += 1;
    }
    let two_pow_s = if s == (e0 - c.exponent()) as u64 {
        two_pow_s
    } else {
        BigUint::one() << s
    };
    let below_one = mant < &two_pow_s;
    let num = if below_one {
        &two_pow_s - mant
    } else {
        mant - &two_pow_s
    };
    let den = mant + &two_pow_s;

    let base = u64::from(prec) + GUARD_BITS;
    let w = if e == 0 {
        // |ln c| ≈ 2·num/den here, so track precision relative to that.
        base + den.bits().saturating_sub(num.bits())
    } else {
        base + 64 - e.unsigned_abs().leading_zeros() as u64
    };

    // ln c = e·ln 2 + 2·atanh(±num/den)
    let atanh_dir = if below_one { r.flip() } else { r };
    let atanh = BigInt::from(atanh_fixed(&num, &den, w, atanh_dir) << 1);
    let atanh = if below_one { -atanh } else { atanh };
    let total = if e == 0 {
        atanh
    } else {
        let ln2_dir = if e > 0 { r } else { r.flip() };
        BigInt::from(ln2_fixed(w, ln2_dir)) * e + atanh
    };
    Ok(BigFloat::from_bigint(total, -(w as i64)).round((base + 8) as u32, r))
}

/// Containment enclosure of `ln` over `x`.
///
/// `x.lo() = 0` is allowed and gives a lower endpoint of `−∞`. For a point
/// input `[c, c]` the width is at most `2^(2-prec) · max(1, |ln c|)`.
pub fn ln_enclosure(x: &Enclosure, prec: u32) -> Result<Enclosure> {
    if !x.hi().is_positive() || x.lo().is_negative() {
        return Err(Error::LogDomain);
    }
    let lo = if x.lo().is_zero() {
        BigFloat::neg_inf()
    } else {
        ln_bound(x.lo(), prec, Rounding::Floor)?
    };
    let hi = ln_bound(x.hi(), prec, Rounding::Ceil)?;
    Ok(Enclosure::new_unchecked(lo, hi))
}

/// Bound on `exp(s) · 2^w` for a dyadic `0 ≤ s < 1/2` given as fixed point `s_fixed`.
fn exp_taylor_fixed(s_fixed: &BigUint, w: u64, r: Rounding) -> BigUint {
    let mut sum = BigUint::one() << w;
    let mut term = sum.clone();
    let mut n: u32 = 1;
    loop {
        term = div_round(&mul_shift(&term, s_fixed, w, r), &BigUint::from(n), r);
        if r == Rounding::Floor && term.is_zero() {
            break;
        }
        sum += &term;
        // With s < 1/2 the tail after term n is below term/3.
        if r == Rounding::Ceil && term <= BigUint::one() {
            sum += term;
            break;
        }
        n += 1;
    }
    sum
}

/// One-sided bound on `exp t`.
pub fn exp_bound(t: &BigFloat, prec: u32, r: Rounding) -> Result<BigFloat> {
    if t.is_infinite() {
        return Ok(if t.is_negative() {
            BigFloat::zero()
        } else {
            BigFloat::pos_inf()
        });
    }
    if t.is_zero() {
        return Ok(BigFloat::one());
    }
    let negative = t.is_negative();
    let s = t.abs();
    let f = s.floor_log2().expect("nonzero");
    if f >= EXP_MAX_LOG2 {
        if !negative {
            return Err(Error::ExpRange);
        }
        // e^t ≤ e^(-2^20) ≤ 2^(-2^20) once t ≤ -2^20.
        return Ok(match r {
            Rounding::Floor => BigFloat::zero(),
            Rounding::Ceil => BigFloat::dyadic(1, -(1 << EXP_MAX_LOG2)),
        });
    }
    if f >= 2 {
        // e^t = 2^n · e^(t − n·ln2), keeping the Taylor argument below 1.
        let n = (t.to_f64_approx() / std::f64::consts::LN_2).round() as i64;
        let ln2 = ln2_enclosure(prec + f as u32 + 16);
        // larger ln2 shrinks the remainder when n > 0
        let ln2_for = |dir: Rounding| if (n > 0) == (dir == Rounding::Ceil) { ln2.lo() } else { ln2.hi() };
        let rem = t.sub(&ln2_for(r).mul(&BigFloat::from_i64(n)));
        return Ok(exp_bound(&rem, prec + 2, r)?.ldexp(n).round(prec + GUARD_BITS as u32 + 8, r));
    }
    let squarings = (f + 2).max(0) as u64;
    let reduced = s.ldexp(-(squarings as i64));
    let base = u64::from(prec) + GUARD_BITS;
    let w = if negative {
        // e^-s can be as small as 2^(-1.45 s); keep that many extra bits.
        let s_ceil = s.to_f64_approx().ceil() as u64 + 1;
        base + squarings + s_ceil + s_ceil / 2
    } else {
        base + squarings
    };

    let mut x = if negative {
        let inner = r.flip();
        let e = exp_taylor_fixed(&to_fixed(&reduced, w, inner), w, inner);
        div_round(&(BigUint::one() << (2 * w)), &e, r)
    } else {
        exp_taylor_fixed(&to_fixed(&reduced, w, r), w, r)
    };
    for _ in 0..squarings {
        x = mul_shift(&x, &x, w, r);
    }
    Ok(BigFloat::from_parts(false, x, -(w as i64)).round((base + 8) as u32, r))
}

/// Containment enclosure of `exp` over `x`.
pub fn exp_enclosure(x: &Enclosure, prec: u32) -> Result<Enclosure> {
    Ok(Enclosure::new_unchecked(
        exp_bound(x.lo(), prec, Rounding::Floor)?,
        exp_bound(x.hi(), prec, Rounding::Ceil)?,
    ))
}
