//! Command-line front end.
//!
//! Every subcommand writes a [`RunManifest`] describing exactly what ran:
//! the exact dyadic parameters used, the entropy source, and the outputs.
//! Exit codes: 0 on success, 2 for bad parameters, 3 for a ⊥ outcome or a
//! failed verification, 1 for anything else (I/O).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::attacks::{run_additive_attack, run_additive_attack_safe, run_quantile_attack, UniformGrid};
use crate::error::{Error, Result};
use crate::exact_arith::{BigFloat, Rounding};
use crate::float_grid::ToyGrid;
use crate::harness::{self, BucketSpec, ToyReport};
use crate::inverse_cdf::{ratio, Laplace, LaplaceParams, PiecewiseLinear};
use crate::refine_sampler::{
    parse_traces, BitLog, BitTape, LaplaceSampler, OverflowMode, SampleTrace, SamplerConfig,
};

/// Environment variable overriding the default base precision.
pub const PRECISION_ENV: &str = "REFINE_DP_PRECISION_BASE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_BOTTOM_OR_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "refine-dp", version, about = "Correctly rounded Laplace sampling and floating-point DP attack demos")]
pub struct Cli {
    /// Write the run manifest here instead of to stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw correctly rounded Laplace samples.
    Sample(SampleArgs),
    /// Reproduce a floating-point attack against a vulnerable pattern.
    Attack(AttackArgs),
    /// Exhaustively check the sampler's exact distribution on a toy grid.
    Verify(VerifyArgs),
    /// Chi-square goodness-of-fit of sampler output.
    Fit(FitArgs),
    /// Throughput and iteration histogram.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct SamplerOpts {
    /// Bits drawn per refinement step (1 to 63).
    #[arg(long)]
    pub chunk_bits: Option<u32>,
    /// Iteration cap; 0 means unbounded.
    #[arg(long, default_value_t = 64)]
    pub max_iter: u32,
    /// Working precision at the start (overrides REFINE_DP_PRECISION_BASE).
    #[arg(long)]
    pub base_prec: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub prec_step: u32,
    #[arg(long, value_enum, default_value_t = OverflowArg::Infinity)]
    pub overflow: OverflowArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OverflowArg {
    Infinity,
    Error,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Location, as an exact decimal, fraction, or hex-dyadic value.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Scale (> 0), same formats as --mu.
    #[arg(long)]
    pub beta: Option<String>,
    /// Bits used when rounding a non-dyadic parameter up.
    #[arg(long, default_value_t = 128)]
    pub param_prec: u32,
    #[arg(long)]
    pub n: Option<u64>,
    #[command(flatten)]
    pub sampler: SamplerOpts,
    /// Write one replayable trace per sample.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Replay the tape recorded in a trace file.
    #[arg(long, conflicts_with = "seed")]
    pub tape_in: Option<PathBuf>,
    /// Deterministic test-only generator instead of OS entropy.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    Additive,
    Quantile,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    #[arg(long, value_enum, default_value_t = Pattern::Additive)]
    pub pattern: Pattern,
    /// Uniform grid for the quantile pattern.
    #[arg(long, value_enum, default_value_t = UniformGrid::Fine)]
    pub variant: UniformGrid,
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    /// Defaults to a fresh random seed, which is recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run the additive distinguisher against the safe sampler instead.
    #[arg(long)]
    pub safe: bool,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub mu1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// First data set for the quantile pattern, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub d1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub d2: Option<String>,
    /// JSON report path; a table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ToyDist {
    /// Uniform on [-1, 1].
    Uniform,
    /// Piecewise-linear CDF with a kink at -1/4.
    Linear,
    /// Uniform on [-1, 1] with artificially loose quantile enclosures.
    Slack,
    /// Laplace(0, 1/2); checked through enclosures.
    Laplace,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Number of finite grid points (the grid also has a +inf point).
    #[arg(long, default_value_t = 4)]
    pub toy_grid: usize,
    /// Deepest enumeration; every multiple of 4 up to it is also checked.
    #[arg(long, default_value_t = 12)]
    pub rounds: u32,
    #[arg(long = "dist", value_enum, default_value_t = ToyDist::Uniform)]
    pub dist: ToyDist,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, default_value_t = 40)]
    pub buckets: usize,
    /// Location samples are drawn from.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub mu: String,
    #[arg(long, default_value = "1")]
    pub beta: String,
    /// Location of the reference distribution (default: --mu).
    #[arg(long, allow_hyphen_values = true)]
    pub against_mu: Option<String>,
    #[arg(long)]
    pub against_beta: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub param_prec: u32,
    /// Fail (exit 3) when the p-value is below this.
    #[arg(long, default_value_t = 1e-4)]
    pub alpha: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    #[command(flatten)]
    pub sampler: SamplerOpts,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Record of one CLI run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub parameters: BTreeMap<String, Value>,
    /// `os`, `seeded (test-only)`, or `replay`.
    pub entropy: String,
    pub seed: Option<u64>,
    pub tape_file: Option<String>,
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

impl RunManifest {
    fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: BTreeMap::new(),
            entropy: "os".to_string(),
            seed: None,
            tape_file: None,
            outputs: Vec::new(),
            exit_code: EXIT_OK,
        }
    }

    fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    fn seeded(&mut self, seed: u64) {
        self.entropy = "seeded (test-only)".to_string();
        self.seed = Some(seed);
    }
}

/// An exactly parsed parameter and the dyadic value actually used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactParam {
    pub text: String,
    pub exact: BigRational,
    pub used: BigFloat,
    pub rounded: bool,
}

/// Parses a decimal (`-12.5e-3`), fraction (`1/3`), or hex-dyadic
/// (`+0x3p-2`) string as an exact rational.
pub fn parse_exact(text: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("not an exact number: {text:?}"));
    let s = text.trim();
    if s.contains("0x") || s.ends_with("inf") {
        let v: BigFloat = if s.starts_with(['+', '-']) { s.parse()? } else { format!("+{s}").parse()? };
        return v.to_rational().ok_or_else(bad);
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_exact(n)?;
        let d = parse_exact(d)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact parameter; non-dyadic values are rounded up to `prec` bits.
pub fn parse_param(text: &str, prec: u32) -> Result<ExactParam> {
    let exact = parse_exact(text)?;
    let (used, rounded) = match BigFloat::from_rational_exact(&exact) {
        Some(v) => (v, false),
        None => (BigFloat::from_rational(&exact, prec, Rounding::Ceil), true),
    };
    Ok(ExactParam {
        text: text.to_string(),
        exact,
        used,
        rounded,
    })
}

fn record_param(m: &mut RunManifest, key: &str, p: &ExactParam) {
    m.param(
        key,
        json!({
            "input": p.text,
            "exact": p.exact.to_string(),
            "dyadic": p.used.to_string(),
            "rounded_up": p.rounded,
        }),
    );
}

fn base_prec(flag: Option<u32>) -> Result<u32> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{PRECISION_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(SamplerConfig::default().base_prec),
    }
}

fn sampler_config(o: &SamplerOpts, chunk_default: u32) -> Result<SamplerConfig> {
    let cfg = SamplerConfig {
        chunk_bits: o.chunk_bits.unwrap_or(chunk_default),
        base_prec: base_prec(o.base_prec)?,
        prec_step: o.prec_step,
        max_iterations: (o.max_iter != 0).then_some(o.max_iter),
        overflow_mode: match o.overflow {
            OverflowArg::Infinity => OverflowMode::Infinity,
            OverflowArg::Error => OverflowMode::Error,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn record_config(m: &mut RunManifest, cfg: &SamplerConfig) {
    m.param("sampler", serde_json::to_value(cfg).expect("plain struct"));
}

fn emit(path: Option<&Path>, text: &str, m: &mut RunManifest) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            m.outputs.push(p.display().to_string());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            m.outputs.push("stdout".to_string());
        }
    }
    Ok(())
}

fn fresh_seed() -> u64 {
    rand::rngs::OsRng.next_u64()
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Parse(_) | Error::GridTooLarge(_) | Error::InsufficientData(_) => {
            EXIT_PARAMETER
        }
        Error::Bottom { .. } | Error::Overflow | Error::TapeExhausted { .. } => EXIT_BOTTOM_OR_VERIFY,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARAMETER } else { EXIT_OK };
        }
    };
    let (name, outcome) = match &cli.command {
        Command::Sample(a) => ("sample", cmd_sample(a)),
        Command::Attack(a) => ("attack", cmd_attack(a)),
        Command::Verify(a) => ("verify", cmd_verify(a)),
        Command::Fit(a) => ("fit", cmd_fit(a)),
        Command::Bench(a) => ("bench", cmd_bench(a)),
    };
    let mut manifest = match outcome {
        Ok(m) => m,
        Err((m, e)) => {
            eprintln!("error: {e}");
            let mut m = m.unwrap_or_else(|| RunManifest::new(name));
            m.exit_code = exit_code_for(&e);
            m
        }
    };
    if manifest.subcommand.is_empty() {
        manifest.subcommand = name.to_string();
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    match &cli.manifest {
        Some(p) => {
            if let Err(e) = fs::write(p, text + "\n") {
                eprintln!("error: cannot write manifest: {e}");
                return EXIT_FAILURE;
            }
        }
        None => eprintln!("{text}"),
    }
    manifest.exit_code
}

/// A command's manifest, or the partial manifest and the error that stopped it.
type Outcome = std::result::Result<RunManifest, (Option<RunManifest>, Error)>;

fn early(e: Error) -> (Option<RunManifest>, Error) {
    (None, e)
}

fn cmd_sample(a: &SampleArgs) -> Outcome {
    let mut m = RunManifest::new("sample");
    let replay = match &a.tape_in {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| early(e.into()))?;
            Some(parse_traces(&text).map_err(early)?)
        }
        None => None,
    };
    let header = replay.as_ref().and_then(|t| t.first());
    let header_params = header.and_then(|t| t.params.clone());
    let param = |flag: &Option<String>, fallback: Option<&BigFloat>, default: &str| -> Result<ExactParam> {
        match (flag, fallback) {
            (Some(text), _) => parse_param(text, a.param_prec),
            (None, Some(v)) => parse_param(&v.to_string(), a.param_prec),
            (None, None) => parse_param(default, a.param_prec),
        }
    };
    let mu = param(&a.mu, header_params.as_ref().map(|p| p.mu()), "0").map_err(early)?;
    let beta = param(&a.beta, header_params.as_ref().map(|p| p.beta()), "1").map_err(early)?;
    record_param(&mut m, "mu", &mu);
    record_param(&mut m, "beta", &beta);
    let params = LaplaceParams::new(mu.used.clone(), beta.used.clone()).map_err(early)?;
    let chunk_default = header.map_or(63, |t| t.chunk_bits);
    let cfg = sampler_config(&a.sampler, chunk_default).map_err(early)?;
    record_config(&mut m, &cfg);
    let n = a.n.or(replay.as_ref().map(|t| t.len() as u64)).unwrap_or(1);
    m.param("n", n);
    m.param("format", format!("{:?}", a.format).to_lowercase());

    let mut tape = match (&replay, a.seed) {
        (Some(traces), _) => {
            let mut bits = BitLog::new();
            for t in traces {
                bits.extend(&t.bits());
            }
            m.entropy = "replay".to_string();
            m.tape_file = a.tape_in.as_ref().map(|p| p.display().to_string());
            BitTape::replay(bits)
        }
        (None, Some(seed)) => {
            m.seeded(seed);
            BitTape::seeded(seed)
        }
        (None, None) => BitTape::live(),
    };
    let sampler = LaplaceSampler::new(params, cfg).map_err(early)?;
    let mut rows = Vec::with_capacity(n as usize);
    let mut traces = Vec::new();
    let mut failure = None;
    for _ in 0..n {
        let (out, trace) = sampler.sample_traced(&mut tape);
        match out {
            Ok(x) => rows.push((x, trace.iterations())),
            Err(e) => {
                traces.push(trace);
                failure = Some(e);
                break;
            }
        }
        if a.trace_out.is_some() || replay.is_some() {
            traces.push(trace);
        }
    }
    if let Some(recorded) = &replay {
        let mismatch = traces
            .iter()
            .zip(recorded)
            .position(|(now, then)| now.outcome != then.outcome);
        m.param("replay_matches", mismatch.is_none());
        if let Some(i) = mismatch {
            m.exit_code = EXIT_BOTTOM_OR_VERIFY;
            eprintln!("error: replayed sample {i} differs from the recorded output");
        }
    }
    let body = match a.format {
        Format::Csv => {
            let mut s = String::from("index,value,bits,iterations\n");
            for (i, (x, k)) in rows.iter().enumerate() {
                s += &format!("{i},{x:e},{:#018x},{k}\n", x.to_bits());
            }
            s
        }
        Format::Json => {
            let samples: Vec<Value> = rows
                .iter()
                .map(|(x, k)| json!({"value": format!("{x:e}"), "bits": format!("{:#018x}", x.to_bits()), "iterations": k}))
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({ "samples": samples })).expect("json");
            s.push('\n');
            s
        }
    };
    emit(a.out.as_deref(), &body, &mut m).map_err(|e| (Some(m.clone()), e))?;
    if let Some(p) = &a.trace_out {
        let text: String = traces.iter().map(SampleTrace::to_string).collect();
        fs::write(p, text).map_err(|e| (Some(m.clone()), e.into()))?;
        m.outputs.push(p.display().to_string());
    }
    if let Some(e) = failure {
        return Err((Some(m), e));
    }
    Ok(m)
}

fn parse_dataset(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad data value {v:?}")))
        })
        .collect()
}

fn cmd_attack(a: &AttackArgs) -> Outcome {
    let mut m = RunManifest::new("attack");
    let seed = a.seed.unwrap_or_else(fresh_seed);
    m.seeded(seed);
    m.param("pattern", format!("{:?}", a.pattern).to_lowercase());
    m.param("n", a.n);
    let report = match a.pattern {
        Pattern::Additive => {
            m.param("mu0", a.mu0);
            m.param("mu1", a.mu1);
            m.param("beta", a.beta);
            m.param("safe", a.safe);
            if a.safe {
                run_additive_attack_safe(a.mu0, a.mu1, a.beta, a.n, seed)
            } else {
                run_additive_attack(a.mu0, a.mu1, a.beta, a.n, seed)
            }
        }
        Pattern::Quantile => {
            let (d1, d2) = match a.variant {
                UniformGrid::Coarse => ("0,0,1", "0,0.25,1"),
                UniformGrid::Fine => ("-1,1,1", "-1,0,1"),
            };
            let d1 = parse_dataset(a.d1.as_deref().unwrap_or(d1)).map_err(early)?;
            let d2 = parse_dataset(a.d2.as_deref().unwrap_or(d2)).map_err(early)?;
            m.param("variant", format!("{:?}", a.variant).to_lowercase());
            m.param("d1", d1.clone());
            m.param("d2", d2.clone());
            run_quantile_attack(&d1, &d2, a.variant, a.n, seed)
        }
    }
    .map_err(|e| (Some(m.clone()), e))?;
    println!("{report}");
    if let Some(p) = &a.out {
        let json = report.to_json().map_err(|e| (Some(m.clone()), e))?;
        fs::write(p, json + "\n").map_err(|e| (Some(m.clone()), e.into()))?;
        m.outputs.push(p.display().to_string());
    }
    m.outputs.push("stdout".to_string());
    m.param("verdict", report.verdict.to_string());
    Ok(m)
}

fn toy_grid(points: usize) -> Result<ToyGrid> {
    if !(1..=31).contains(&points) {
        return Err(Error::invalid("--toy-grid must be between 1 and 31"));
    }
    // spacing 2^-(ceil(log2 n) - 1) keeps the points inside roughly [-1, 1]
    let step_exp = -(i64::from(usize::BITS - (points - 1).leading_zeros()) - 1);
    let step = BigFloat::dyadic(1, step_exp);
    let start = step.mul(&BigFloat::from_i64(1 - (points / 2) as i64));
    ToyGrid::uniform(&start, &step, points)
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let mut m = RunManifest::new("verify");
    m.entropy = "exhaustive".to_string();
    m.param("toy_grid", a.toy_grid);
    m.param("rounds", a.rounds);
    m.param("dist", format!("{:?}", a.dist).to_lowercase());
    let grid = toy_grid(a.toy_grid).map_err(early)?;
    if a.rounds == 0 || a.rounds > harness::MAX_ROUNDS {
        return Err(early(Error::invalid(format!("--rounds must be in 1..={}", harness::MAX_ROUNDS))));
    }
    let mut depths: Vec<u32> = (1..=a.rounds / 4).map(|i| 4 * i).collect();
    depths.push(a.rounds);
    let cfg = SamplerConfig::bitwise(a.rounds);
    let uniform = || PiecewiseLinear::uniform(BigFloat::from_i64(-1), BigFloat::one());
    let report: Result<ToyReport> = match a.dist {
        ToyDist::Uniform => uniform().and_then(|d| harness::check_exact("uniform[-1,1]", &grid, &d, &cfg, &depths)),
        ToyDist::Slack => uniform()
            .and_then(|d| harness::check_exact("uniform[-1,1] with slack", &grid, &d.with_slack(4), &cfg, &depths)),
        ToyDist::Linear => PiecewiseLinear::new(vec![
            (BigFloat::from_i64(-1), ratio(0, 1)),
            (BigFloat::dyadic(-1, -2), ratio(1, 3)),
            (BigFloat::one(), ratio(1, 1)),
        ])
        .and_then(|d| harness::check_exact("piecewise linear", &grid, &d, &cfg, &depths)),
        ToyDist::Laplace => LaplaceParams::new(BigFloat::zero(), BigFloat::dyadic(1, -1)).and_then(|p| {
            harness::check_enclosed("Laplace(0,1/2)", &grid, &Laplace::new(p), &cfg, &depths, 128)
        }),
    };
    let report = report.map_err(|e| (Some(m.clone()), e))?;
    let json = serde_json::to_string_pretty(&report).expect("json") + "\n";
    emit(a.out.as_deref(), &json, &mut m).map_err(|e| (Some(m.clone()), e))?;
    m.param("passed", report.passed());
    if !report.passed() {
        m.exit_code = EXIT_BOTTOM_OR_VERIFY;
    }
    Ok(m)
}

fn cmd_fit(a: &FitArgs) -> Outcome {
    let mut m = RunManifest::new("fit");
    let mu = parse_param(&a.mu, a.param_prec).map_err(early)?;
    let beta = parse_param(&a.beta, a.param_prec).map_err(early)?;
    let against_mu = parse_param(a.against_mu.as_deref().unwrap_or(&a.mu), a.param_prec).map_err(early)?;
    let against_beta = parse_param(a.against_beta.as_deref().unwrap_or(&a.beta), a.param_prec).map_err(early)?;
    for (k, p) in [("mu", &mu), ("beta", &beta), ("against_mu", &against_mu), ("against_beta", &against_beta)] {
        record_param(&mut m, k, p);
    }
    m.param("n", a.n);
    m.param("buckets", a.buckets);
    m.param("alpha", a.alpha);
    let source = LaplaceParams::new(mu.used, beta.used).map_err(early)?;
    let reference = LaplaceParams::new(against_mu.used, against_beta.used).map_err(early)?;
    let spec = BucketSpec::equal_probability(&reference, a.buckets).map_err(early)?;
    let mut tape = match a.seed {
        Some(s) => {
            m.seeded(s);
            BitTape::seeded(s)
        }
        None => BitTape::live(),
    };
    let sampler = LaplaceSampler::new(source, SamplerConfig::default()).map_err(early)?;
    let samples = (0..a.n)
        .map(|_| sampler.sample(&mut tape))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| (Some(m.clone()), e))?;
    let report = harness::goodness_of_fit(&samples, &reference, &spec).map_err(|e| (Some(m.clone()), e))?;
    let body = match a.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("json") + "\n",
        Format::Csv => report.to_csv(),
    };
    emit(a.out.as_deref(), &body, &mut m).map_err(|e| (Some(m.clone()), e))?;
    m.param("p_value", report.p_value);
    if report.p_value < a.alpha {
        m.exit_code = EXIT_BOTTOM_OR_VERIFY;
    }
    Ok(m)
}

fn cmd_bench(a: &BenchArgs) -> Outcome {
    let mut m = RunManifest::new("bench");
    let cfg = sampler_config(&a.sampler, 63).map_err(early)?;
    record_config(&mut m, &cfg);
    m.param("n", a.n);
    let mut tape = match a.seed {
        Some(s) => {
            m.seeded(s);
            BitTape::seeded(s)
        }
        None => BitTape::live(),
    };
    let report = harness::bench(&LaplaceParams::standard(), &cfg, a.n, &mut tape).map_err(early)?;
    let body = match a.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("json") + "\n",
        Format::Csv => report.to_csv(),
    };
    emit(a.out.as_deref(), &body, &mut m).map_err(|e| (Some(m.clone()), e))?;
    m.param("samples_per_second", report.samples_per_second);
    if report.bottoms > 0 {
        m.exit_code = EXIT_BOTTOM_OR_VERIFY;
    }
    Ok(m)
}
