use std::fmt;

use super::bigfloat::{BigFloat, Rounding};
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` guaranteed to contain some true real value.
///
/// Endpoints may be infinite. Every operation preserves containment: if the
/// true inputs lie in the input enclosures, the true result lies in the output.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Enclosure {
    lo: BigFloat,
    hi: BigFloat,
}

impl Enclosure {
    pub fn new(lo: BigFloat, hi: BigFloat) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("empty enclosure [{lo}, {hi}]")));
        }
        Ok(Enclosure { lo, hi })
    }

    pub(crate) fn new_unchecked(lo: BigFloat, hi: BigFloat) -> Self {
        debug_assert!(lo <= hi, "enclosure endpoints out of order");
        Enclosure { lo, hi }
    }

    pub fn point(v: BigFloat) -> Self {
        Enclosure {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::point(BigFloat::from_i64(v))
    }

    pub fn whole_line() -> Self {
        Enclosure {
            lo: BigFloat::neg_inf(),
            hi: BigFloat::pos_inf(),
        }
    }

    pub fn lo(&self) -> &BigFloat {
        &self.lo
    }

    pub fn hi(&self) -> &BigFloat {
        &self.hi
    }

    pub fn into_bounds(self) -> (BigFloat, BigFloat) {
        (self.lo, self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// `hi − lo`, which is `+∞` when either endpoint is infinite.
    pub fn width(&self) -> BigFloat {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            BigFloat::pos_inf()
        } else {
            self.hi.sub(&self.lo)
        }
    }

    pub fn contains(&self, v: &BigFloat) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_enclosure(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&BigFloat::zero())
    }

    /// Exact midpoint; fails on infinite endpoints.
    pub fn midpoint(&self) -> Result<BigFloat> {
        BigFloat::midpoint(&self.lo, &self.hi)
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn add(&self, other: &Enclosure) -> Result<Enclosure> {
        Ok(Enclosure {
            lo: self.lo.checked_add(&other.lo)?,
            hi: self.hi.checked_add(&other.hi)?,
        })
    }

    pub fn sub(&self, other: &Enclosure) -> Result<Enclosure> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Enclosure) -> Result<Enclosure> {
        let products = [
            self.lo.checked_mul(&other.lo)?,
            self.lo.checked_mul(&other.hi)?,
            self.hi.checked_mul(&other.lo)?,
            self.hi.checked_mul(&other.hi)?,
        ];
        let lo = products.iter().min().cloned().expect("four products");
        let hi = products.iter().max().cloned().expect("four products");
        Ok(Enclosure { lo, hi })
    }

    /// Quotient with endpoints rounded outward to `prec` significant bits.
    pub fn div_rounded(&self, other: &Enclosure, prec: u32) -> Result<Enclosure> {
        if other.contains_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut lo: Option<BigFloat> = None;
        let mut hi: Option<BigFloat> = None;
        for n in [&self.lo, &self.hi] {
            for d in [&other.lo, &other.hi] {
                let down = n.div_round(d, prec, Rounding::Floor)?;
                let up = n.div_round(d, prec, Rounding::Ceil)?;
                lo = Some(match lo {
                    Some(cur) if cur <= down => cur,
                    _ => down,
                });
                hi = Some(match hi {
                    Some(cur) if cur >= up => cur,
                    _ => up,
                });
            }
        }
        Ok(Enclosure {
            lo: lo.expect("nonempty"),
            hi: hi.expect("nonempty"),
        })
    }

    /// Exact scaling by `2^k`.
    pub fn ldexp(&self, k: i64) -> Enclosure {
        Enclosure {
            lo: self.lo.ldexp(k),
            hi: self.hi.ldexp(k),
        }
    }

    /// Drops endpoint bits beyond `prec`, rounding lo down and hi up.
    pub fn round_outward(&self, prec: u32) -> Enclosure {
        Enclosure {
            lo: self.lo.round(prec, Rounding::Floor),
            hi: self.hi.round(prec, Rounding::Ceil),
        }
    }

    /// Smallest enclosure containing both.
    pub fn hull(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: BigFloat::min(&self.lo, &other.lo),
            hi: BigFloat::max(&self.hi, &other.hi),
        }
    }

    /// Clamps both endpoints into `[lo, hi]`.
    pub fn clamp(&self, lo: &BigFloat, hi: &BigFloat) -> Enclosure {
        let c = |v: &BigFloat| {
            if v < lo {
                lo.clone()
            } else if v > hi {
                hi.clone()
            } else {
                v.clone()
            }
        };
        Enclosure {
            lo: c(&self.lo),
            hi: c(&self.hi),
        }
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn pt(v: i64) -> Enclosure {
        Enclosure::from_i64(v)
    }

    fn iv(lo: i64, hi: i64) -> Enclosure {
        Enclosure::new(BigFloat::from_i64(lo), BigFloat::from_i64(hi)).unwrap()
    }

    #[test]
    fn add_exact_integers() {
        assert_eq!(pt(1).add(&pt(2)).unwrap(), pt(3));
    }

    #[test]
    fn mul_symmetric_unit() {
        // endpoint products are {1, -1, -1, 1}
        assert_eq!(iv(-1, 1).mul(&iv(-1, 1)).unwrap(), iv(-1, 1));
    }

    #[test]
    fn self_subtraction_contains_zero() {
        let x = Enclosure::new(BigFloat::dyadic(3, -4), BigFloat::dyadic(7, -3)).unwrap();
        assert!(x.sub(&x).unwrap().contains_zero());
    }

    #[test]
    fn undefined_infinity_forms() {
        let inf = Enclosure::point(BigFloat::pos_inf());
        let ninf = Enclosure::point(BigFloat::neg_inf());
        assert!(matches!(inf.add(&ninf), Err(Error::Undefined(_))));
        assert!(matches!(inf.mul(&pt(0)), Err(Error::Undefined(_))));
        assert_eq!(inf.mul(&pt(2)).unwrap(), inf);
    }

    #[test]
    fn empty_enclosure_rejected() {
        assert!(Enclosure::new(BigFloat::one(), BigFloat::zero()).is_err());
    }

    #[test]
    fn exact_dyadic_quotient() {
        for prec in [1, 2, 10, 64, 200] {
            let q = pt(1).div_rounded(&pt(2), prec).unwrap();
            assert_eq!(q, Enclosure::point(BigFloat::dyadic(1, -1)));
        }
    }

    #[test]
    fn third_at_ten_bits() {
        let third = BigRational::new(1.into(), 3.into());
        let q10 = pt(1).div_rounded(&pt(3), 10).unwrap();
        assert!(q10.lo().to_rational().unwrap() <= third);
        assert!(q10.hi().to_rational().unwrap() >= third);
        assert!(q10.width() <= BigFloat::dyadic(1, -9));
        let q60 = pt(1).div_rounded(&pt(3), 60).unwrap();
        assert!(q10.contains_enclosure(&q60));
    }

    #[test]
    fn division_by_zero_enclosure() {
        assert!(matches!(
            pt(1).div_rounded(&iv(-1, 1), 10),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn negative_quotient_rounds_outward() {
        let q = pt(-1).div_rounded(&pt(3), 8).unwrap();
        let third = BigRational::new((-1).into(), 3.into());
        assert!(q.lo().to_rational().unwrap() < third);
        assert!(q.hi().to_rational().unwrap() > third);
    }
}
