use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_arith::{BigFloat, Enclosure};
use crate::float_grid::{RoundingGrid, ToyGrid};
use crate::inverse_cdf::{ratio, IntervalDistribution, Laplace, LaplaceParams, PiecewiseLinear};
use crate::refine_sampler::{refine_sample, BitTape, SamplerConfig};

/// Largest grid accepted for exhaustive enumeration.
pub const MAX_GRID_POINTS: u128 = 32;
/// Largest number of rounds accepted for exhaustive enumeration.
pub const MAX_ROUNDS: u32 = 20;

/// An exact probability distribution over the points of a finite grid
/// (in increasing order) plus the non-termination outcome ⊥.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistribution {
    points: Vec<BigRational>,
    bottom: BigRational,
}

impl ExactDistribution {
    pub fn new(points: Vec<BigRational>, bottom: BigRational) -> Result<Self> {
        let d = ExactDistribution { points, bottom };
        let in_unit = |p: &BigRational| !p.is_negative() && p <= &BigRational::one();
        if !d.points.iter().all(in_unit) || !in_unit(&d.bottom) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        if d.total() != BigRational::one() {
            return Err(Error::invalid("probabilities must sum to exactly 1"));
        }
        Ok(d)
    }

    /// All mass on point `i` of a grid with `size` points.
    pub fn point_mass(size: usize, i: usize) -> Self {
        let mut points = vec![BigRational::zero(); size];
        points[i] = BigRational::one();
        ExactDistribution {
            points,
            bottom: BigRational::zero(),
        }
    }

    pub fn points(&self) -> &[BigRational] {
        &self.points
    }

    pub fn bottom(&self) -> &BigRational {
        &self.bottom
    }

    pub fn universe(&self) -> usize {
        self.points.len()
    }

    fn total(&self) -> BigRational {
        self.points.iter().fold(self.bottom.clone(), |acc, p| acc + p)
    }
}

/// Total variation distance `½ Σ |p − q|`, including the ⊥ outcome.
pub fn tvd(p: &ExactDistribution, q: &ExactDistribution) -> Result<BigRational> {
    if p.universe() != q.universe() {
        return Err(Error::invalid("distributions are over different grids"));
    }
    let sum = p
        .points
        .iter()
        .zip(&q.points)
        .map(|(a, b)| (a - b).abs())
        .fold((&p.bottom - &q.bottom).abs(), |acc, d| acc + d);
    Ok(sum / BigInt::from(2))
}

fn enumerable_points<G: RoundingGrid>(grid: &G) -> Result<Vec<G::Point>> {
    if grid.size() > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge(format!("{} points", grid.size())));
    }
    grid.enumerate()
        .ok_or_else(|| Error::GridTooLarge("grid cannot be enumerated".into()))
}

/// Runs the sampler on all `2^rounds` bit tapes and returns the exact
/// output distribution `P⁽ᵏ⁾`.
///
/// `cfg` must draw one bit per iteration; its cap is replaced by `rounds`.
pub fn enumerate_process<G, D>(
    grid: &G,
    dist: &D,
    cfg: &SamplerConfig,
    rounds: u32,
) -> Result<ExactDistribution>
where
    G: RoundingGrid,
    D: IntervalDistribution + ?Sized,
{
    if cfg.chunk_bits != 1 {
        return Err(Error::invalid("enumeration needs chunk_bits = 1"));
    }
    if rounds == 0 || rounds > MAX_ROUNDS {
        return Err(Error::invalid(format!("rounds must be in 1..={MAX_ROUNDS}")));
    }
    let points = enumerable_points(grid)?;
    let cfg = SamplerConfig {
        max_iterations: Some(rounds),
        ..cfg.clone()
    };
    let mut counts = vec![0u64; points.len()];
    let mut bottom = 0u64;
    for tape_bits in 0u64..(1 << rounds) {
        let bits = (0..rounds).rev().map(|i| tape_bits >> i & 1 == 1);
        let mut tape = BitTape::from_bits(bits);
        match refine_sample(dist, grid, &cfg, &mut tape, None) {
            Ok(s) => {
                let i = points
                    .iter()
                    .position(|p| *p == s.point)
                    .expect("sampler returns grid points");
                counts[i] += 1;
            }
            Err(Error::Bottom { .. }) => bottom += 1,
            Err(e) => return Err(e),
        }
    }
    let denom = BigInt::one() << rounds as usize;
    let prob = |c: u64| BigRational::new(BigInt::from(c), denom.clone());
    ExactDistribution::new(counts.into_iter().map(prob).collect(), prob(bottom))
}

/// The exact law of "draw from `dist`, round up onto `grid`", for
/// distributions with an exact rational CDF: `Q(s) = F(s) − F(pred(s))`.
pub fn rounded_distribution_exact<G, D>(grid: &G, dist: &D) -> Result<ExactDistribution>
where
    G: RoundingGrid,
    D: IntervalDistribution + ?Sized,
{
    let points = enumerable_points(grid)?;
    let cdf = |p: &G::Point| {
        dist.exact_cdf(&grid.value(*p))
            .ok_or_else(|| Error::invalid("distribution has no exact CDF"))
    };
    let mut out = Vec::with_capacity(points.len());
    let mut below = BigRational::zero();
    for p in &points {
        let f = cdf(p)?;
        out.push(&f - &below);
        below = f;
    }
    ExactDistribution::new(out, BigRational::zero())
}

/// Enclosures of `Q(s)` for every grid point, for distributions whose CDF
/// is only available through enclosures.
pub fn rounded_distribution_enclosed<G, D>(grid: &G, dist: &D, prec: u32) -> Result<Vec<Enclosure>>
where
    G: RoundingGrid,
    D: IntervalDistribution + ?Sized,
{
    let points = enumerable_points(grid)?;
    let mut out = Vec::with_capacity(points.len());
    let mut below = Enclosure::from_i64(0);
    for p in &points {
        let f = dist.interval_cdf(&Enclosure::point(grid.value(*p)), prec)?;
        out.push(f.sub(&below)?.clamp(&BigFloat::zero(), &BigFloat::one()));
        below = f;
    }
    Ok(out)
}

/// Results of the exhaustive checks at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthCheck {
    pub rounds: u32,
    /// `P⁽ᵏ⁾(⊥)` as an exact fraction.
    pub bottom: String,
    /// `TVD(P⁽ᵏ⁾, Q)` as an exact fraction, or an enclosure when `Q` is not exact.
    pub tvd: String,
    /// `P⁽ᵏ⁾(s) ≤ Q(s)` for every grid point `s`.
    pub dominated: bool,
    /// `TVD(P⁽ᵏ⁾, Q) = P⁽ᵏ⁾(⊥)`.
    pub tvd_equals_bottom: bool,
}

/// Exhaustive checks of one grid/distribution pair over several depths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub name: String,
    pub grid_points: u64,
    /// Whether `Q` is exact (rational CDF) or enclosed.
    pub exact: bool,
    pub depths: Vec<DepthCheck>,
    /// `P⁽ᵏ⁾(⊥)` never increases with `k`.
    pub bottom_non_increasing: bool,
}

impl ToyReport {
    pub fn passed(&self) -> bool {
        self.bottom_non_increasing
            && self.depths.iter().all(|d| d.dominated && d.tvd_equals_bottom)
    }
}

fn non_increasing(values: &[BigRational]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

fn sorted_depths(rounds: &[u32]) -> Vec<u32> {
    let mut r = rounds.to_vec();
    r.sort_unstable();
    r.dedup();
    r
}

/// Runs every check with an exact rational `Q`.
pub fn check_exact<G, D>(
    name: &str,
    grid: &G,
    dist: &D,
    cfg: &SamplerConfig,
    rounds: &[u32],
) -> Result<ToyReport>
where
    G: RoundingGrid,
    D: IntervalDistribution + ?Sized,
{
    let q = rounded_distribution_exact(grid, dist)?;
    let mut depths = Vec::new();
    let mut bottoms = Vec::new();
    for k in sorted_depths(rounds) {
        let p = enumerate_process(grid, dist, cfg, k)?;
        let distance = tvd(&p, &q)?;
        depths.push(DepthCheck {
            rounds: k,
            bottom: p.bottom().to_string(),
            tvd: distance.to_string(),
            dominated: p.points().iter().zip(q.points()).all(|(a, b)| a <= b),
            tvd_equals_bottom: &distance == p.bottom(),
        });
        bottoms.push(p.bottom().clone());
    }
    Ok(ToyReport {
        name: name.to_string(),
        grid_points: grid.size() as u64,
        exact: true,
        bottom_non_increasing: non_increasing(&bottoms),
        depths,
    })
}

/// Runs the checks with `Q` known only through enclosures of width below
/// `2^-(prec - 8)`.
///
/// Domination is checked against the lower end of each enclosure, which is
/// sound. The distance identity is checked by requiring `P⁽ᵏ⁾(⊥)` to lie in
/// the enclosure of `TVD(P⁽ᵏ⁾, Q)`.
pub fn check_enclosed<G, D>(
    name: &str,
    grid: &G,
    dist: &D,
    cfg: &SamplerConfig,
    rounds: &[u32],
    prec: u32,
) -> Result<ToyReport>
where
    G: RoundingGrid,
    D: IntervalDistribution + ?Sized,
{
    let q = rounded_distribution_enclosed(grid, dist, prec)?;
    let rat = |b: &BigFloat| b.to_rational().expect("finite enclosure");
    let mut depths = Vec::new();
    let mut bottoms = Vec::new();
    for k in sorted_depths(rounds) {
        let p = enumerate_process(grid, dist, cfg, k)?;
        let dominated = p.points().iter().zip(&q).all(|(a, e)| a <= &rat(e.lo()));
        // |P − Q| over an enclosure of Q: bounds of min and max distance
        let (mut lo, mut hi) = (p.bottom().clone(), p.bottom().clone());
        for (a, e) in p.points().iter().zip(&q) {
            let (ql, qh) = (rat(e.lo()), rat(e.hi()));
            let far = (a - &ql).abs().max((a - &qh).abs());
            let near = if &ql <= a && a <= &qh {
                BigRational::zero()
            } else {
                (a - &ql).abs().min((a - &qh).abs())
            };
            lo += near;
            hi += far;
        }
        let two = BigRational::from_integer(2.into());
        let (lo, hi) = (lo / &two, hi / &two);
        depths.push(DepthCheck {
            rounds: k,
            bottom: p.bottom().to_string(),
            tvd: format!("[{lo}, {hi}]"),
            dominated,
            tvd_equals_bottom: &lo <= p.bottom() && p.bottom() <= &hi,
        });
        bottoms.push(p.bottom().clone());
    }
    Ok(ToyReport {
        name: name.to_string(),
        grid_points: grid.size() as u64,
        exact: false,
        bottom_non_increasing: non_increasing(&bottoms),
        depths,
    })
}

fn bf(n: i64, e: i64) -> BigFloat {
    BigFloat::dyadic(n, e)
}

/// A named toy grid and reference distribution.
pub struct ToyConfiguration {
    pub name: &'static str,
    pub grid: ToyGrid,
    pub dist: PiecewiseLinear,
}

/// Grid/distribution pairs with exact rational CDFs.
///
/// Includes grid points at the median and at CDF knots, which land on
/// dyadic boundaries the sampler can hit exactly, and one distribution
/// whose quantile enclosures carry artificial slack.
pub fn toy_configurations() -> Vec<ToyConfiguration> {
    let uniform = |a, b| PiecewiseLinear::uniform(bf(a, 0), bf(b, 0)).expect("valid");
    let grid = |pts: &[(i64, i64)]| ToyGrid::new(pts.iter().map(|&(n, e)| bf(n, e)).collect()).expect("valid");
    vec![
        ToyConfiguration {
            name: "uniform[-1,1] on {-1/2, 0, 1/2, 1}",
            grid: grid(&[(-1, -1), (0, 0), (1, -1), (1, 0)]),
            dist: uniform(-1, 1),
        },
        ToyConfiguration {
            name: "uniform[0,1] on {5/16, 11/16}",
            grid: grid(&[(5, -4), (11, -4)]),
            dist: uniform(0, 1),
        },
        ToyConfiguration {
            name: "three-piece linear on uniform 8-point grid",
            grid: ToyGrid::uniform(&bf(-3, -1), &bf(1, -1), 8).expect("valid"),
            dist: PiecewiseLinear::new(vec![
                (bf(-2, 0), ratio(0, 1)),
                (bf(0, 0), ratio(1, 5)),
                (bf(1, 0), ratio(7, 10)),
                (bf(3, 0), ratio(1, 1)),
            ])
            .expect("valid"),
        },
        ToyConfiguration {
            name: "skewed linear on minifloat(1, -1, 1)",
            grid: ToyGrid::minifloat(1, -1, 1).expect("valid"),
            dist: PiecewiseLinear::new(vec![
                (bf(-3, 0), ratio(0, 1)),
                (bf(-1, -2), ratio(1, 3)),
                (bf(5, -1), ratio(1, 1)),
            ])
            .expect("valid"),
        },
        ToyConfiguration {
            name: "uniform[-2,2] with slack 2^-(prec/4) on 16-point grid",
            grid: ToyGrid::uniform(&bf(-15, -2), &bf(1, -2), 16).expect("valid"),
            dist: uniform(-2, 2).with_slack(4),
        },
        ToyConfiguration {
            name: "mass beyond the grid on {0, 1/4}",
            grid: grid(&[(0, 0), (1, -2)]),
            dist: PiecewiseLinear::new(vec![
                (bf(-1, 0), ratio(0, 1)),
                (bf(1, 0), ratio(1, 1)),
            ])
            .expect("valid"),
        },
    ]
}

/// Toy grids paired with Laplace distributions, whose `Q` is only enclosed.
pub fn laplace_toy_configurations() -> Vec<(&'static str, ToyGrid, Laplace)> {
    let lap = |mu: i64, beta_exp: i64| {
        Laplace::new(LaplaceParams::new(bf(mu, 0), bf(1, beta_exp)).expect("valid"))
    };
    vec![
        ("Laplace(0,1) on minifloat(2, -1, 1)", ToyGrid::minifloat(2, -1, 1).expect("valid"), lap(0, 0)),
        ("Laplace(1,1/2) on uniform 8-point grid", ToyGrid::uniform(&bf(-1, 0), &bf(1, -1), 8).expect("valid"), lap(1, -1)),
    ]
}
