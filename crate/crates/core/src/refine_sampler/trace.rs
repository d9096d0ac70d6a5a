use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact_arith::{BigFloat, Enclosure};
use crate::inverse_cdf::LaplaceParams;

use super::{chunk_index, BitLog, DyadicInterval};

/// One iteration of the sampler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Bits exactly as drawn from the tape.
    pub raw_bits: u64,
    pub interval: DyadicInterval,
    pub prec: u32,
    pub enclosure: Enclosure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceOutcome {
    /// Exact value of the returned grid point.
    Output(BigFloat),
    Bottom,
}

/// Full record of one sampler run.
///
/// Text form, one line each:
///
/// ```text
/// trace chunk_bits=63 mu=+0x0p+0 beta=+0x1p+0
/// iter 1 chunk=0x… a=… b=… prec=127 lo=… hi=…
/// out 1 value=+0x…p-54 bits=0x3fd…
/// ```
///
/// `out bottom <iterations>` marks a capped run. Values use the hex-dyadic
/// form, so parsing a printed trace gives back an identical trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleTrace {
    pub chunk_bits: u32,
    pub params: Option<LaplaceParams>,
    pub records: Vec<IterationRecord>,
    pub outcome: Option<TraceOutcome>,
}

impl SampleTrace {
    pub fn new(chunk_bits: u32) -> Self {
        SampleTrace {
            chunk_bits,
            params: None,
            records: Vec::new(),
            outcome: None,
        }
    }

    pub(super) fn reset(&mut self, chunk_bits: u32) {
        self.chunk_bits = chunk_bits;
        self.records.clear();
        self.outcome = None;
    }

    pub fn iterations(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// The returned value as a double, when it is one.
    pub fn output_f64(&self) -> Option<f64> {
        match &self.outcome {
            Some(TraceOutcome::Output(v)) => exact_f64(v),
            _ => None,
        }
    }

    /// Tape bits consumed by this run, in draw order.
    pub fn bits(&self) -> BitLog {
        let mut log = BitLog::new();
        for r in &self.records {
            log.push_bits(r.raw_bits, self.chunk_bits);
        }
        log
    }

    /// Checks the structural invariants: iterations count up from 1, each
    /// interval is the chunk-selected piece of its parent, and the output
    /// (if any) is consistent with the final enclosure's endpoints.
    pub fn validate(&self) -> Result<()> {
        let mut parent = DyadicInterval::unit();
        for (i, r) in self.records.iter().enumerate() {
            let bad = |what: &str| Error::invalid(format!("trace iteration {}: {what}", i + 1));
            if r.iteration as usize != i + 1 {
                return Err(bad("out of sequence"));
            }
            let expected = super::bisect_step(
                &parent,
                chunk_index(r.raw_bits, self.chunk_bits),
                self.chunk_bits,
            );
            if expected != r.interval {
                return Err(bad("interval is not the selected child of its parent"));
            }
            parent = r.interval.clone();
        }
        if let (Some(TraceOutcome::Output(v)), Some(last)) = (&self.outcome, self.records.last()) {
            if !(last.enclosure.lo() <= v && last.enclosure.hi() <= v) {
                return Err(Error::invalid("output lies below the final enclosure"));
            }
        }
        Ok(())
    }
}

fn exact_f64(v: &BigFloat) -> Option<f64> {
    let f = v.to_f64_approx();
    if v.is_infinite() {
        return Some(f);
    }
    (BigFloat::from_f64(f).ok().as_ref() == Some(v)).then_some(f)
}

impl fmt::Display for SampleTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trace chunk_bits={}", self.chunk_bits)?;
        if let Some(p) = &self.params {
            write!(f, " mu={} beta={}", p.mu(), p.beta())?;
        }
        writeln!(f)?;
        for r in &self.records {
            writeln!(
                f,
                "iter {} chunk={:#x} a={} b={} prec={} lo={} hi={}",
                r.iteration,
                r.raw_bits,
                r.interval.lo(),
                r.interval.hi(),
                r.prec,
                r.enclosure.lo(),
                r.enclosure.hi()
            )?;
        }
        match &self.outcome {
            Some(TraceOutcome::Output(v)) => {
                write!(f, "out {} value={v}", self.iterations())?;
                if let Some(d) = exact_f64(v) {
                    write!(f, " bits={:#018x}", d.to_bits())?;
                }
                writeln!(f)
            }
            Some(TraceOutcome::Bottom) => writeln!(f, "out bottom {}", self.iterations()),
            None => Ok(()),
        }
    }
}

fn fields(line: &str) -> impl Iterator<Item = (&str, &str)> {
    line.split_whitespace().filter_map(|t| t.split_once('='))
}

fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    fields(line)
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Parse(format!("missing `{key}` in {line:?}")))
}

fn parse_u64(s: &str) -> Result<u64> {
    let parsed = match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}

/// Parses any number of concatenated traces.
pub fn parse_traces(text: &str) -> Result<Vec<SampleTrace>> {
    let mut out: Vec<SampleTrace> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let keyword = line.split_whitespace().next().unwrap_or_default();
        if keyword == "trace" {
            let mut t = SampleTrace::new(parse_u64(field(line, "chunk_bits")?)? as u32);
            if let (Ok(mu), Ok(beta)) = (field(line, "mu"), field(line, "beta")) {
                t.params = Some(LaplaceParams::new(mu.parse()?, beta.parse()?)?);
            }
            out.push(t);
            continue;
        }
        let t = out
            .last_mut()
            .ok_or_else(|| Error::Parse("trace body before header".into()))?;
        if t.outcome.is_some() {
            return Err(Error::Parse(format!("line after trace end: {line:?}")));
        }
        match keyword {
            "iter" => {
                let iteration = line
                    .split_whitespace()
                    .nth(1)
                    .ok_or_else(|| Error::Parse(format!("bad line {line:?}")))?;
                let a: BigFloat = field(line, "a")?.parse()?;
                let b: BigFloat = field(line, "b")?.parse()?;
                t.records.push(IterationRecord {
                    iteration: parse_u64(iteration)? as u32,
                    raw_bits: parse_u64(field(line, "chunk")?)?,
                    interval: DyadicInterval::from_endpoints(&a, &b)?,
                    prec: parse_u64(field(line, "prec")?)? as u32,
                    enclosure: Enclosure::new(field(line, "lo")?.parse()?, field(line, "hi")?.parse()?)?,
                });
            }
            "out" => {
                let second = line.split_whitespace().nth(1).unwrap_or_default();
                t.outcome = Some(if second == "bottom" {
                    TraceOutcome::Bottom
                } else {
                    let value: BigFloat = field(line, "value")?.parse()?;
                    if let Ok(bits) = field(line, "bits") {
                        if exact_f64(&value).map(f64::to_bits) != Some(parse_u64(bits)?) {
                            return Err(Error::Parse(format!("bits disagree with value: {line:?}")));
                        }
                    }
                    TraceOutcome::Output(value)
                });
            }
            _ => return Err(Error::Parse(format!("unknown trace line {line:?}"))),
        }
    }
    Ok(out)
}

impl FromStr for SampleTrace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut all = parse_traces(s)?;
        if all.len() != 1 {
            return Err(Error::Parse(format!("expected one trace, found {}", all.len())));
        }
        Ok(all.remove(0))
    }
}
