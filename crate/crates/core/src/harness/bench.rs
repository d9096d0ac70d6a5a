use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse_cdf::LaplaceParams;
use crate::refine_sampler::{BitTape, LaplaceSampler, SamplerConfig};

/// Where a benchmark ran.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub crate_version: String,
    pub debug_build: bool,
}

impl MachineInfo {
    pub fn current() -> Self {
        MachineInfo {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            debug_build: cfg!(debug_assertions),
        }
    }
}

/// Single-threaded throughput and iterations-to-terminate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub samples: u64,
    pub chunk_bits: u32,
    pub seconds: f64,
    pub samples_per_second: f64,
    /// Iteration count → number of samples.
    pub histogram: BTreeMap<u32, u64>,
    pub bottoms: u64,
    pub machine: MachineInfo,
}

impl BenchReport {
    pub fn fraction_within(&self, iterations: u32) -> f64 {
        let hits: u64 = self.histogram.range(..=iterations).map(|(_, c)| c).sum();
        hits as f64 / self.samples as f64
    }

    pub fn max_iterations(&self) -> u32 {
        self.histogram.keys().next_back().copied().unwrap_or(0)
    }

    pub fn mean_iterations(&self) -> f64 {
        let total: u64 = self.histogram.iter().map(|(k, c)| u64::from(*k) * c).sum();
        total as f64 / self.samples as f64
    }

    /// `iterations,count,fraction` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iterations,count,fraction\n");
        for (k, c) in &self.histogram {
            out += &format!("{k},{c},{:.6}\n", *c as f64 / self.samples as f64);
        }
        out
    }
}

/// Draws `n` samples from one thread, timing the whole run.
pub fn bench(params: &LaplaceParams, cfg: &SamplerConfig, n: u64, tape: &mut BitTape) -> Result<BenchReport> {
    if n == 0 {
        return Err(Error::invalid("benchmark needs at least one sample"));
    }
    let sampler = LaplaceSampler::new(params.clone(), cfg.clone())?;
    let mut histogram = BTreeMap::new();
    let mut bottoms = 0;
    let start = Instant::now();
    for _ in 0..n {
        match sampler.sample_counted(tape) {
            Ok(s) => *histogram.entry(s.iterations).or_insert(0) += 1,
            Err(Error::Bottom { .. }) => bottoms += 1,
            Err(e) => return Err(e),
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        samples: n,
        chunk_bits: cfg.chunk_bits,
        seconds,
        samples_per_second: n as f64 / seconds,
        histogram,
        bottoms,
        machine: MachineInfo::current(),
    })
}
