use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exact_arith::{BigFloat, Enclosure, Rounding};
use crate::inverse_cdf::{IntervalDistribution, Laplace, LaplaceParams, UnitInterval};

/// Breakpoints `b_0 < … < b_{m-1}` splitting the line into the buckets
/// `(−∞, b_0], (b_0, b_1], …, (b_{m-1}, +∞)`.
///
/// Buckets are closed on the right because samples are rounded up: when a
/// breakpoint is itself a grid point, a rounded sample is `≤ b` exactly when
/// the real sample is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketSpec {
    breakpoints: Vec<BigFloat>,
}

impl BucketSpec {
    pub fn new(breakpoints: Vec<BigFloat>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::invalid("need at least one breakpoint"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("breakpoints must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        Ok(BucketSpec { breakpoints })
    }

    /// `count` buckets of (nearly) equal probability under `params`, with
    /// breakpoints on the binary64 grid.
    pub fn equal_probability(params: &LaplaceParams, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("need at least two buckets"));
        }
        let lap = Laplace::new(params.clone());
        let mut points = Vec::with_capacity(count - 1);
        for i in 1..count {
            let u = BigFloat::from_rational(
                &crate::inverse_cdf::ratio(i as i64, count as i64),
                64,
                Rounding::Floor,
            );
            let q = lap.interval_inv_cdf(&UnitInterval::point(u)?, 64)?;
            let x = q.midpoint()?.to_f64_approx();
            points.push(BigFloat::from_f64(x)?);
        }
        points.dedup();
        Self::new(points)
    }

    pub fn breakpoints(&self) -> &[BigFloat] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bounds `(lo, hi]` of bucket `i`, with infinite ends for the tails.
    pub fn bucket(&self, i: usize) -> (BigFloat, BigFloat) {
        let lo = if i == 0 {
            BigFloat::neg_inf()
        } else {
            self.breakpoints[i - 1].clone()
        };
        let hi = self
            .breakpoints
            .get(i)
            .cloned()
            .unwrap_or_else(BigFloat::pos_inf);
        (lo, hi)
    }

    /// Bucket of a double; the spec must be binary64-aligned.
    fn index_of(&self, bounds: &[f64], x: f64) -> usize {
        debug_assert_eq!(bounds.len(), self.breakpoints.len());
        bounds.partition_point(|&b| b < x)
    }

    fn f64_bounds(&self) -> Result<Vec<f64>> {
        self.breakpoints
            .iter()
            .map(|b| {
                let f = b.to_f64_approx();
                if BigFloat::from_f64(f).ok().as_ref() == Some(b) {
                    Ok(f)
                } else {
                    Err(Error::invalid(format!("breakpoint {b} is not a double")))
                }
            })
            .collect()
    }
}

/// Enclosure of `P(lo < X ≤ hi) = F(hi) − F(lo)`.
pub fn bucket_probability<D: IntervalDistribution + ?Sized>(
    dist: &D,
    lo: &BigFloat,
    hi: &BigFloat,
    prec: u32,
) -> Result<Enclosure> {
    if lo > hi {
        return Err(Error::invalid("bucket lower end exceeds upper end"));
    }
    let f_hi = dist.interval_cdf(&Enclosure::point(hi.clone()), prec)?;
    let f_lo = dist.interval_cdf(&Enclosure::point(lo.clone()), prec)?;
    let diff = f_hi.sub(&f_lo)?;
    Ok(diff.clamp(&BigFloat::zero(), &BigFloat::one()))
}

/// Laplace probability of the bucket `(lo, hi]`.
pub fn exact_bucket_probability(
    params: &LaplaceParams,
    lo: &BigFloat,
    hi: &BigFloat,
    prec: u32,
) -> Result<Enclosure> {
    bucket_probability(&Laplace::new(params.clone()), lo, hi, prec)
}

/// Bucket probability whose enclosure width is below `rel` of its value.
fn tight_probability(lap: &Laplace, lo: &BigFloat, hi: &BigFloat, rel: f64) -> Result<f64> {
    let mut prec = 64;
    loop {
        let e = bucket_probability(lap, lo, hi, prec)?;
        let mid = e.midpoint()?.to_f64_approx();
        if e.width().to_f64_approx() <= rel * mid || prec >= 4096 {
            return Ok(mid);
        }
        prec *= 2;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub lo: String,
    pub hi: String,
    pub probability: f64,
    pub expected: f64,
    pub observed: u64,
    pub z: f64,
}

/// Chi-square comparison of samples against a rounded Laplace distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mu: String,
    pub beta: String,
    pub samples: u64,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub buckets: Vec<BucketRow>,
}

impl FitReport {
    /// One row per bucket: `lo,hi,probability,expected,observed,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,probability,expected,observed,z\n");
        for b in &self.buckets {
            out += &format!(
                "{},{},{:.12e},{:.6},{},{:.6}\n",
                b.lo, b.hi, b.probability, b.expected, b.observed, b.z
            );
        }
        out
    }
}

/// Smallest expected count allowed in any bucket.
pub const MIN_EXPECTED: f64 = 20.0;

/// Pearson chi-square test of `samples` against `Lap(μ, β)` rounded up to
/// binary64, over the buckets of `spec`.
pub fn goodness_of_fit(samples: &[f64], params: &LaplaceParams, spec: &BucketSpec) -> Result<FitReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("samples contain NaN"));
    }
    let bounds = spec.f64_bounds()?;
    let mut observed = vec![0u64; spec.len()];
    for &x in samples {
        observed[spec.index_of(&bounds, x)] += 1;
    }
    let lap = Laplace::new(params.clone());
    let n = samples.len() as f64;
    let mut rows = Vec::with_capacity(spec.len());
    let mut statistic = 0.0;
    for (i, &obs) in observed.iter().enumerate() {
        let (lo, hi) = spec.bucket(i);
        let p = tight_probability(&lap, &lo, &hi, 1e-6)?;
        let expected = n * p;
        if expected < MIN_EXPECTED {
            return Err(Error::InsufficientData(format!(
                "bucket {i} expects only {expected:.2} samples"
            )));
        }
        let d = obs as f64 - expected;
        statistic += d * d / expected;
        rows.push(BucketRow {
            lo: lo.to_f64_approx().to_string(),
            hi: hi.to_f64_approx().to_string(),
            probability: p,
            expected,
            observed: obs,
            z: d / (expected * (1.0 - p)).sqrt(),
        });
    }
    let dof = (spec.len() - 1) as u64;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(FitReport {
        mu: params.mu().to_string(),
        beta: params.beta().to_string(),
        samples: samples.len() as u64,
        statistic,
        degrees_of_freedom: dof,
        p_value: chi.sf(statistic),
        buckets: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::ln2_enclosure;

    #[test]
    fn bucket_probability_examples() {
        let p = LaplaceParams::standard();
        let left = exact_bucket_probability(&p, &BigFloat::neg_inf(), &BigFloat::zero(), 64).unwrap();
        assert!(left.contains(&BigFloat::dyadic(1, -1)));
        let right = exact_bucket_probability(&p, &BigFloat::zero(), &BigFloat::pos_inf(), 64).unwrap();
        let total = left.add(&right).unwrap();
        assert!(total.contains(&BigFloat::one()));
        // (0, ln 2] has probability 3/4 − 1/2; use both ends of an ln 2 enclosure
        let ln2 = ln2_enclosure(100);
        let inner = exact_bucket_probability(&p, &BigFloat::zero(), ln2.lo(), 100).unwrap();
        let outer = exact_bucket_probability(&p, &BigFloat::zero(), ln2.hi(), 100).unwrap();
        assert!(inner.lo() <= &BigFloat::dyadic(1, -2));
        assert!(outer.hi() >= &BigFloat::dyadic(1, -2));
        assert!(outer.width() < BigFloat::dyadic(1, -90));
    }

    #[test]
    fn equal_probability_buckets() {
        let p = LaplaceParams::standard();
        let spec = BucketSpec::equal_probability(&p, 40).unwrap();
        assert_eq!(spec.len(), 40);
        for i in 0..spec.len() {
            let (lo, hi) = spec.bucket(i);
            let e = exact_bucket_probability(&p, &lo, &hi, 80).unwrap();
            let mid = e.midpoint().unwrap().to_f64_approx();
            assert!((mid - 1.0 / 40.0).abs() < 1e-12, "bucket {i}: {mid}");
        }
    }

    #[test]
    fn empty_and_underfilled_samples() {
        let p = LaplaceParams::standard();
        let spec = BucketSpec::equal_probability(&p, 10).unwrap();
        assert!(matches!(goodness_of_fit(&[], &p, &spec), Err(Error::InsufficientData(_))));
        assert!(matches!(goodness_of_fit(&[0.0; 50], &p, &spec), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(BucketSpec::new(vec![]).is_err());
        assert!(BucketSpec::new(vec![BigFloat::one(), BigFloat::zero()]).is_err());
        assert!(BucketSpec::new(vec![BigFloat::pos_inf()]).is_err());
        let off_grid = BucketSpec::new(vec![BigFloat::dyadic(1, -2000)]).unwrap();
        assert!(goodness_of_fit(&[0.0; 100], &LaplaceParams::standard(), &off_grid).is_err());
    }

    #[test]
    fn fit_on_small_seeded_run() {
        use crate::refine_sampler::{BitTape, LaplaceSampler, SamplerConfig};
        let p = LaplaceParams::standard();
        let s = LaplaceSampler::new(p.clone(), SamplerConfig::default()).unwrap();
        let mut tape = BitTape::seeded(12);
        let xs: Vec<f64> = (0..20_000).map(|_| s.sample(&mut tape).unwrap()).collect();
        let spec = BucketSpec::equal_probability(&p, 20).unwrap();
        let r = goodness_of_fit(&xs, &p, &spec).unwrap();
        assert!(r.p_value > 1e-4, "{}", r.p_value);
        assert_eq!(r.buckets.iter().map(|b| b.observed).sum::<u64>(), 20_000);
        assert_eq!(r.to_csv().lines().count(), 21);
        let shifted = LaplaceParams::from_f64(0.5, 1.0).unwrap();
        assert!(goodness_of_fit(&xs, &shifted, &spec).unwrap().p_value < 1e-6);
    }
}
