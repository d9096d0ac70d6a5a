//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! Exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use refine_dp::attacks::{run_additive_attack, run_additive_attack_safe, run_quantile_attack, UniformGrid, Verdict};
use refine_dp::exact_arith::{ln_enclosure, BigFloat, Enclosure};
use refine_dp::harness::{bench, check_exact, goodness_of_fit, toy_configurations, BucketSpec};
use refine_dp::inverse_cdf::LaplaceParams;
use refine_dp::refine_sampler::{BitTape, LaplaceSampler, SamplerConfig, TraceOutcome};

use common::{ceil_to_f64, laplace_quantile, rat};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed.as_secs() < limit_secs
}

// 1. x ⊕ y is a multiple of ulp(x)/2.

fn random_double(rng: &mut ChaCha20Rng, exp_lo: i32, exp_hi: i32) -> f64 {
    let r: u32 = rng.gen_range(0..100);
    if r < 3 {
        // subnormal
        let bits = rng.gen_range(1u64..(1 << 52));
        let x = f64::from_bits(bits);
        return if rng.gen() { -x } else { x };
    }
    let mant = 1.0 + rng.gen_range(0u64..(1 << 52)) as f64 * 2f64.powi(-52);
    let x = mant * 2f64.powi(rng.gen_range(exp_lo..=exp_hi));
    if rng.gen() {
        -x
    } else {
        x
    }
}

fn criterion_1() -> Outcome {
    const PAIRS: u64 = 1_000_000;
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0xa11ce);
    let mut checked = 0u64;
    let mut violations = 0u64;
    while checked < PAIRS {
        let x = random_double(&mut rng, -1020, 1020);
        let y = match rng.gen_range(0..4) {
            // same neighbourhood, including near-cancellation
            0 => -x * (1.0 + rng.gen_range(-1e-6..1e-6)),
            1 => x.abs() * 2f64.powi(rng.gen_range(-60..60)) * if rng.gen() { 1.0 } else { -1.0 },
            // exponent-distant
            _ => random_double(&mut rng, -1020, 1020),
        };
        let s = x + y;
        if !s.is_finite() || x == 0.0 {
            continue;
        }
        checked += 1;
        let ax = x.abs();
        let half_ulp = if ax.next_up().is_finite() {
            (rat(ax.next_up()) - rat(ax)) / BigInt::from(2)
        } else {
            (rat(ax) - rat(ax.next_down())) / BigInt::from(2)
        };
        if !(rat(s) / half_ulp).is_integer() {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && within(elapsed, 30),
        format!("{checked} pairs, {violations} violations, {:.1}s", elapsed.as_secs_f64()),
    )
}

// 2. Both final endpoints round up to the output under an independent oracle.

fn criterion_2() -> Outcome {
    const SAMPLES: usize = 10_000;
    const BITS: u32 = 256;
    let start = Instant::now();
    let sampler = LaplaceSampler::new(LaplaceParams::standard(), SamplerConfig::default()).unwrap();
    let mut tape = BitTape::live();
    let (mu, beta) = (BigRational::zero(), BigRational::one());
    let slack = BigRational::new(BigInt::one(), BigInt::one() << (BITS - 4) as usize);
    let half = BigRational::new(1.into(), 2.into());
    let (mut agree, mut disagree, mut unclear) = (0usize, 0usize, 0usize);
    for _ in 0..SAMPLES {
        let (out, trace) = sampler.sample_traced(&mut tape);
        let out = match (out, &trace.outcome) {
            (Ok(v), Some(TraceOutcome::Output(_))) => v,
            _ => {
                disagree += 1;
                continue;
            }
        };
        let last = trace.final_record().expect("at least one iteration");
        let mut ok = true;
        for u in [last.interval.lo(), last.interval.hi()] {
            let u = u.to_rational().unwrap();
            let q = laplace_quantile(&mu, &beta, &u, BITS);
            let (lo, hi) = if u == half {
                (ceil_to_f64(&q), ceil_to_f64(&q))
            } else {
                (ceil_to_f64(&(&q - &slack)), ceil_to_f64(&(&q + &slack)))
            };
            if lo != hi {
                unclear += 1;
                ok = false;
            } else if lo.to_bits() != out.to_bits() && !(lo == 0.0 && out == 0.0) {
                ok = false;
            }
        }
        if ok {
            agree += 1;
        } else {
            disagree += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == SAMPLES && within(elapsed, 300),
        format!(
            "{agree}/{SAMPLES} samples agree at both endpoints ({disagree} disagree, {unclear} oracle-ambiguous), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 3. Exact identities on toy grids.

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let configs = toy_configurations();
    let cfg = SamplerConfig::bitwise(12);
    let mut failed = Vec::new();
    for c in &configs {
        match check_exact(c.name, &c.grid, &c.dist, &cfg, &[4, 8, 12]) {
            Ok(r) if r.passed() => {}
            Ok(r) => failed.push(r.name),
            Err(e) => failed.push(format!("{}: {e}", c.name)),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        configs.len() >= 5 && failed.is_empty() && within(elapsed, 600),
        format!(
            "{} configurations x k in {{4, 8, 12}}, {} failed{}, {:.1}s",
            configs.len(),
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(" ({})", failed.join("; ")) },
            elapsed.as_secs_f64()
        ),
    )
}

// 4. Chi-square goodness of fit with a negative control.

fn draw(params: &LaplaceParams, n: usize, seed: u64) -> Vec<f64> {
    let sampler = LaplaceSampler::new(params.clone(), SamplerConfig::default()).unwrap();
    let mut tape = BitTape::seeded(seed);
    (0..n).map(|_| sampler.sample(&mut tape).unwrap()).collect()
}

fn criterion_4() -> Outcome {
    const N: usize = 1_000_000;
    let start = Instant::now();
    let reference = LaplaceParams::standard();
    let spec = BucketSpec::equal_probability(&reference, 40).unwrap();
    let fit = goodness_of_fit(&draw(&reference, N, 4), &reference, &spec).unwrap();
    let shifted = LaplaceParams::from_f64(0.5, 1.0).unwrap();
    let control = goodness_of_fit(&draw(&shifted, N, 5), &reference, &spec).unwrap();
    let elapsed = start.elapsed();
    outcome(
        fit.p_value > 1e-4 && control.p_value < 1e-6 && within(elapsed, 300),
        format!(
            "p = {:.4} (chi2 = {:.1}, df = {}); control mu = 0.5: p = {:.2e}, {:.1}s",
            fit.p_value,
            fit.statistic,
            fit.degrees_of_freedom,
            control.p_value,
            elapsed.as_secs_f64()
        ),
    )
}

// 5 and 6 share one live benchmark run.

fn criteria_5_6() -> (Outcome, Outcome) {
    let report = bench(&LaplaceParams::standard(), &SamplerConfig::default(), 1_000_000, &mut BitTape::live()).unwrap();
    let one = report.fraction_within(1);
    let two = report.fraction_within(2);
    let max = report.max_iterations();
    let c5 = outcome(
        one >= 0.95 && two >= 0.999 && max <= 4 && report.bottoms == 0,
        format!(
            "{:.2}% in 1 iteration, {:.3}% within 2, max {max}, {} bottoms",
            one * 100.0,
            two * 100.0,
            report.bottoms
        ),
    );
    let c6 = outcome(
        report.samples_per_second >= 10_000.0,
        format!(
            "{:.0} samples/s single-threaded ({} samples in {:.1}s)",
            report.samples_per_second, report.samples, report.seconds
        ),
    );
    (c5, c6)
}

// 7. Additive attack.

fn criterion_7() -> Outcome {
    const N: u64 = 100_000;
    let naive = run_additive_attack(0.0, 1.0, 1.0, N, 7).unwrap();
    let safe = run_additive_attack_safe(0.0, 1.0, 1.0, N, 7).unwrap();
    let [a, b] = &naive.sides;
    let verified = a.verified_events == a.events && b.verified_events == b.events;
    outcome(
        (a.fraction - 0.25).abs() <= 0.05
            && b.events == 0
            && verified
            && naive.verdict == Verdict::Vulnerable
            && safe.verdict == Verdict::NoFinding,
        format!(
            "naive: {:.4} on mu = 0, {} events on mu = 1; safe verdict: {}",
            a.fraction, b.events, safe.verdict
        ),
    )
}

// 8. Quantile attack.

fn criterion_8() -> Outcome {
    const N: u64 = 100_000;
    let pair1 = ([0.0, 0.0, 1.0], [0.0, 0.25, 1.0]);
    let pair2 = ([-1.0, 1.0, 1.0], [-1.0, 0.0, 1.0]);
    let coarse = run_quantile_attack(&pair1.0, &pair1.1, UniformGrid::Coarse, N, 8).unwrap();
    let fine2 = run_quantile_attack(&pair2.0, &pair2.1, UniformGrid::Fine, N, 8).unwrap();
    let fine1 = run_quantile_attack(&pair1.0, &pair1.1, UniformGrid::Fine, N, 8).unwrap();
    let only_d2 = |r: &refine_dp::attacks::AttackReport| {
        r.verdict == Verdict::Vulnerable && r.sides[0].events == 0 && r.sides[1].events > 0
    };
    let verified = [&coarse, &fine2, &fine1]
        .iter()
        .all(|r| r.sides.iter().all(|s| s.verified_events == s.events));
    outcome(
        only_d2(&coarse) && only_d2(&fine2) && fine1.verdict == Verdict::NoFinding && verified,
        format!(
            "coarse pair 1: {} / {} events; fine pair 2: {} / {} events; fine pair 1: {}",
            coarse.sides[0].events, coarse.sides[1].events, fine2.sides[0].events, fine2.sides[1].events, fine1.verdict
        ),
    )
}

// 9. Enclosure containment against a higher-precision oracle.

struct Fuzz {
    rng: ChaCha20Rng,
    prec: u32,
    oracle_bits: u32,
    checks: u64,
    violations: u64,
}

impl Fuzz {
    fn leaf(&mut self) -> (Enclosure, BigRational) {
        let m: i64 = self.rng.gen_range(1..(1 << 24));
        let m = if self.rng.gen() { -m } else { m };
        let v = BigFloat::dyadic(m, self.rng.gen_range(-40..=0));
        let r = v.to_rational().unwrap();
        (Enclosure::point(v), r)
    }

    fn check(&mut self, e: &Enclosure, v: &BigRational) {
        self.checks += 1;
        let lo = e.lo().to_rational();
        let hi = e.hi().to_rational();
        let above = lo.map_or(true, |lo| &lo <= v);
        let below = hi.map_or(true, |hi| v <= &hi);
        if !(above && below) {
            self.violations += 1;
        }
    }

    fn node(&mut self, depth: u32) -> (Enclosure, BigRational) {
        if depth == 0 || self.rng.gen_range(0..4) == 0 {
            return self.leaf();
        }
        let prec = self.prec;
        let small = BigRational::new(BigInt::one(), BigInt::one() << 10usize);
        let out = match self.rng.gen_range(0..5) {
            0..=3 => {
                let op = self.rng.gen_range(0..4);
                let (a, x) = self.node(depth - 1);
                let (b, y) = self.node(depth - 1);
                match op {
                    0 => Some((a.add(&b).unwrap().round_outward(prec), x + y)),
                    1 => Some((a.sub(&b).unwrap().round_outward(prec), x - y)),
                    2 => Some((a.mul(&b).unwrap().round_outward(prec), x * y)),
                    _ if b.contains_zero() || y.abs() < small => None,
                    _ => Some((a.div_rounded(&b, prec).unwrap(), x / y)),
                }
            }
            _ => {
                let (a, x) = self.node(depth - 1);
                if !a.lo().is_positive() || x < small {
                    None
                } else {
                    let e = ln_enclosure(&a, prec).unwrap();
                    Some((e, common::ln(&x, self.oracle_bits)))
                }
            }
        };
        match out {
            Some((e, v)) => {
                self.check(&e, &v);
                (e, v)
            }
            None => self.leaf(),
        }
    }
}

fn criterion_9() -> Outcome {
    const EXPRESSIONS: u64 = 100_000;
    let start = Instant::now();
    let mut fuzz = Fuzz {
        rng: ChaCha20Rng::seed_from_u64(9),
        prec: 0,
        oracle_bits: 0,
        checks: 0,
        violations: 0,
    };
    for _ in 0..EXPRESSIONS {
        fuzz.prec = fuzz.rng.gen_range(24..=128);
        fuzz.oracle_bits = 4 * fuzz.prec + 64;
        let depth = fuzz.rng.gen_range(1..=3);
        fuzz.node(depth);
    }
    let elapsed = start.elapsed();
    outcome(
        fuzz.violations == 0,
        format!(
            "{EXPRESSIONS} expressions, {} enclosure checks, {} violations, {:.1}s",
            fuzz.checks,
            fuzz.violations,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters: nothing to list, nothing to skip.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut all = true;
    let mut report = |n: &str, what: &str, o: Outcome| {
        all &= o.passed;
        println!("criterion {n} {what}: {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    };
    report("1", "sum precision", criterion_1());
    report("2", "rounding oracle", criterion_2());
    report("3", "toy-grid identities", criterion_3());
    report("4", "goodness of fit", criterion_4());
    let (c5, c6) = criteria_5_6();
    report("5", "iteration statistics", c5);
    report("6", "throughput", c6);
    report("7", "additive attack", criterion_7());
    report("8", "quantile attack", criterion_8());
    report("9", "containment fuzz", criterion_9());
    if !all {
        std::process::exit(1);
    }
}
