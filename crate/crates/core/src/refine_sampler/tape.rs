use std::fmt;
use std::str::FromStr;

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// A packed, append-only sequence of bits in draw order.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitLog {
    words: Vec<u64>,
    len: u64,
}

impl BitLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push_bit(&mut self, bit: bool) {
        let offset = (self.len % 64) as u32;
        if offset == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().expect("pushed above") |= 1u64 << (63 - offset);
        }
        self.len += 1;
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, count: u32) {
        for i in (0..count).rev() {
            self.push_bit(value >> i & 1 == 1);
        }
    }

    pub fn get(&self, index: u64) -> Option<bool> {
        if index >= self.len {
            return None;
        }
        let word = self.words[(index / 64) as usize];
        Some(word >> (63 - index % 64) & 1 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i).expect("in range"))
    }

    pub fn extend(&mut self, other: &BitLog) {
        for bit in other.iter() {
            self.push_bit(bit);
        }
    }
}

impl FromIterator<bool> for BitLog {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut log = BitLog::new();
        for bit in iter {
            log.push_bit(bit);
        }
        log
    }
}

/// Text form: `<len>:<hex words>`, bits packed MSB-first into 64-bit words.
impl fmt::Display for BitLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.len)?;
        for w in &self.words {
            write!(f, "{w:016x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitLog({self})")
    }
}

impl FromStr for BitLog {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a bit log: {s:?}"));
        let (len, hex) = s.trim().split_once(':').ok_or_else(bad)?;
        let len: u64 = len.parse().map_err(|_| bad())?;
        if hex.len() % 16 != 0 || hex.len() as u64 / 16 != len.div_ceil(64) {
            return Err(bad());
        }
        let words = (0..hex.len() / 16)
            .map(|i| u64::from_str_radix(&hex[16 * i..16 * (i + 1)], 16).map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(BitLog { words, len })
    }
}

enum Source {
    Live(ChaCha20Rng),
    Seeded(ChaCha20Rng),
    Replay { bits: BitLog, pos: u64 },
}

/// The stream of uniform random bits that drives a sampler.
///
/// Live tapes draw from ChaCha20 keyed by the operating system's entropy
/// source. Seeded tapes use the same generator with a fixed seed and exist
/// for tests and reproducible experiments only. Replay tapes consume a
/// recorded sequence and fail once it runs out.
pub struct BitTape {
    source: Source,
    record: Option<BitLog>,
    consumed: u64,
}

impl BitTape {
    pub fn live() -> Self {
        let rng = ChaCha20Rng::from_rng(OsRng).expect("operating system entropy source");
        Self::with_source(Source::Live(rng))
    }

    /// Deterministic generator; not suitable for privacy-sensitive output.
    pub fn seeded(seed: u64) -> Self {
        Self::with_source(Source::Seeded(ChaCha20Rng::seed_from_u64(seed)))
    }

    pub fn replay(bits: BitLog) -> Self {
        Self::with_source(Source::Replay { bits, pos: 0 })
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self::replay(bits.into_iter().collect())
    }

    fn with_source(source: Source) -> Self {
        BitTape {
            source,
            record: None,
            consumed: 0,
        }
    }

    /// Keeps a copy of every bit drawn from now on.
    pub fn recording(mut self) -> Self {
        self.record = Some(BitLog::new());
        self
    }

    pub fn take_record(&mut self) -> Option<BitLog> {
        self.record.as_mut().map(std::mem::take)
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn is_live(&self) -> bool {
        matches!(self.source, Source::Live(_))
    }

    /// Bits left on a replay tape; `None` for generators.
    pub fn remaining(&self) -> Option<u64> {
        match &self.source {
            Source::Replay { bits, pos } => Some(bits.len() - pos),
            _ => None,
        }
    }

    /// Draws `count` bits (1 to 64); the first bit drawn is the most significant.
    pub fn draw(&mut self, count: u32) -> Result<u64> {
        assert!((1..=64).contains(&count), "draw width must be in 1..=64");
        let value = match &mut self.source {
            Source::Live(rng) | Source::Seeded(rng) => rng.next_u64() >> (64 - count),
            Source::Replay { bits, pos } => {
                if bits.len() - *pos < u64::from(count) {
                    return Err(Error::TapeExhausted {
                        consumed: self.consumed,
                    });
                }
                let mut v = 0u64;
                for i in 0..u64::from(count) {
                    v = v << 1 | u64::from(bits.get(*pos + i).expect("checked length"));
                }
                *pos += u64::from(count);
                v
            }
        };
        self.consumed += u64::from(count);
        if let Some(log) = &mut self.record {
            log.push_bits(value, count);
        }
        Ok(value)
    }
}

impl fmt::Debug for BitTape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match &self.source {
            Source::Live(_) => "live",
            Source::Seeded(_) => "seeded",
            Source::Replay { .. } => "replay",
        };
        f.debug_struct("BitTape")
            .field("mode", &mode)
            .field("consumed", &self.consumed)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_log_packs_msb_first() {
        let mut log = BitLog::new();
        log.push_bits(0b101, 3);
        log.push_bits(u64::MAX, 64);
        assert_eq!(log.len(), 67);
        assert_eq!(log.get(0), Some(true));
        assert_eq!(log.get(1), Some(false));
        assert_eq!(log.get(66), Some(true));
        assert_eq!(log.get(67), None);
        let text = log.to_string();
        assert_eq!(text.parse::<BitLog>().unwrap(), log);
        assert!("3:zz".parse::<BitLog>().is_err());
        assert!("65:0000000000000000".parse::<BitLog>().is_err());
    }

    #[test]
    fn replay_reproduces_recording() {
        let mut live = BitTape::seeded(3).recording();
        let drawn: Vec<u64> = [63, 1, 7, 64, 5].iter().map(|&c| live.draw(c).unwrap()).collect();
        let log = live.take_record().unwrap();
        assert_eq!(log.len(), 140);
        let mut replay = BitTape::replay(log);
        for (&c, &v) in [63, 1, 7, 64, 5].iter().zip(&drawn) {
            assert_eq!(replay.draw(c).unwrap(), v);
        }
        assert!(matches!(replay.draw(1), Err(Error::TapeExhausted { consumed: 140 })));
    }

    #[test]
    fn seeded_tapes_are_deterministic() {
        let a: Vec<u64> = {
            let mut t = BitTape::seeded(9);
            (0..10).map(|_| t.draw(63).unwrap()).collect()
        };
        let mut t = BitTape::seeded(9);
        let b: Vec<u64> = (0..10).map(|_| t.draw(63).unwrap()).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v < 1 << 63));
    }

    #[test]
    fn wide_draw_equals_narrow_draws() {
        let mut wide = BitTape::from_bits([true, false, true, true]);
        let mut narrow = BitTape::from_bits([true, false, true, true]);
        let w = wide.draw(4).unwrap();
        let n = (0..4).fold(0, |acc, _| acc << 1 | narrow.draw(1).unwrap());
        assert_eq!(w, 0b1011);
        assert_eq!(n, w);
    }
}
