//! Independent reference computations for integration tests.
//!
//! Nothing here uses the library's own elementary functions or rounding.
//! Logarithms come from Newton's method on a Taylor-series exponential in
//! plain fixed-point integers; rounding to doubles compares exact rationals.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Smallest double `≥ r`, with `+∞` above the largest finite double.
pub fn ceil_to_f64(r: &BigRational) -> f64 {
    let mut d = r.to_f64().unwrap_or(if r.is_negative() { f64::MIN } else { f64::MAX });
    if d.is_infinite() {
        d = if d > 0.0 { f64::MAX } else { f64::MIN };
    }
    while rat(d) < *r {
        d = d.next_up();
        if d.is_infinite() {
            return d;
        }
    }
    while d.next_down().is_finite() && rat(d.next_down()) >= *r {
        d = d.next_down();
    }
    d
}

/// `e^y · 2^s` for `y = y_fixed / 2^s`, `|y| ≤ 1`, to within a few units.
fn exp_fixed(y_fixed: &BigInt, s: u32) -> BigInt {
    const GUARD: u32 = 32;
    const HALVINGS: u32 = 12;
    // r = y / 2^HALVINGS, represented exactly at scale t
    let t = s + GUARD + HALVINGS;
    let r = y_fixed << GUARD as usize;
    let one = BigInt::one() << t as usize;
    let mut sum = one.clone();
    let mut term = one;
    let mut n = 1u32;
    loop {
        term = (&term * &r) >> t as usize;
        term /= BigInt::from(n);
        if term.is_zero() {
            break;
        }
        sum += &term;
        n += 1;
    }
    for _ in 0..HALVINGS {
        sum = (&sum * &sum) >> t as usize;
    }
    sum >> (t - s) as usize
}

/// `ln(m) · 2^s` for `m = m_fixed / 2^s ∈ [1/2, 2]`.
fn ln_fixed(m_fixed: &BigInt, s: u32) -> BigInt {
    let approx = m_fixed.to_f64().unwrap() * 2f64.powi(-(s as i32));
    let start = BigRational::from_float(approx.ln()).unwrap() * BigRational::from_integer(BigInt::one() << s as usize);
    let mut y = start.floor().to_integer();
    for _ in 0..12 {
        let e = exp_fixed(&y, s);
        let diff = m_fixed - &e;
        if diff.abs() <= BigInt::from(4) {
            break;
        }
        // Newton on e^y = m: y ← y + (m − e^y)/e^y
        y += (diff << s as usize) / e;
    }
    y
}

/// Approximation of `ln x` with absolute error below `2^-bits`.
pub fn ln(x: &BigRational, bits: u32) -> BigRational {
    assert!(x.is_positive(), "ln of non-positive value");
    if x.is_one() {
        return BigRational::zero();
    }
    let s = bits + 48;
    // k = floor(log2 x)
    let mut k = x.numer().bits() as i64 - x.denom().bits() as i64;
    let pow2 = |e: i64| {
        if e >= 0 {
            BigRational::from_integer(BigInt::one() << e as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
        }
    };
    while x < &pow2(k) {
        k -= 1;
    }
    while x >= &pow2(k + 1) {
        k += 1;
    }
    let m_fixed = (x / pow2(k) * pow2(i64::from(s))).floor().to_integer();
    let mut y = ln_fixed(&m_fixed, s);
    if k != 0 {
        let ln2 = ln_fixed(&(BigInt::from(2) << s as usize), s);
        y += ln2 * BigInt::from(k);
    }
    BigRational::new(y, BigInt::one() << s as usize)
}

/// Laplace quantile `μ + β·ln(2u)` / `μ − β·ln(2(1−u))` for `u ∈ (0, 1)`.
pub fn laplace_quantile(mu: &BigRational, beta: &BigRational, u: &BigRational, bits: u32) -> BigRational {
    let half = BigRational::new(1.into(), 2.into());
    let two = BigRational::from_integer(2.into());
    if u <= &half {
        mu + beta * ln(&(u * &two), bits)
    } else {
        mu - beta * ln(&((BigRational::one() - u) * &two), bits)
    }
}
pub mod schema;
