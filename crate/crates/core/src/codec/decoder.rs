use std::collections::VecDeque;

use crate::codec::bits::BitSource;
use crate::codec::encoder::terminal_code;
use crate::codec::fixed::{det_product, ApproxConfig, FixedInterval, Renormalized};
use crate::error::{Error, Result};

/// Streaming decoder mirroring [`EncoderState`](crate::codec::EncoderState).
///
/// `interval` is the working interval of decoded branches; `pending` holds the
/// bits read past the settled prefix, i.e. the dyadic interval of consumed
/// input expressed in the working frame.
#[derive(Debug)]
pub struct DecoderState<S> {
    cfg: ApproxConfig,
    interval: FixedInterval,
    pending: VecDeque<bool>,
    /// First `2 * precision` pending bits, most significant first.
    window: u128,
    source: S,
    settled: u64,
    read: u64,
}

impl<S: BitSource> DecoderState<S> {
    pub fn new(source: S, cfg: ApproxConfig) -> Self {
        DecoderState { cfg, interval: cfg.unit(), pending: VecDeque::new(), window: 0, source, settled: 0, read: 0 }
    }

    pub fn interval(&self) -> FixedInterval {
        self.interval
    }

    /// Bits read so far that are not yet part of the settled prefix.
    pub fn pending(&self) -> impl Iterator<Item = bool> + '_ {
        self.pending.iter().copied()
    }

    pub fn bits_read(&self) -> u64 {
        self.read
    }

    pub fn into_source(self) -> S {
        self.source
    }

    fn width(&self) -> usize {
        2 * self.cfg.precision() as usize
    }

    fn push_bit(&mut self, bit: bool) {
        let w = self.width();
        if bit && self.pending.len() < w {
            self.window |= 1 << (w - 1 - self.pending.len());
        }
        self.pending.push_back(bit);
    }

    fn drain(&mut self, k: usize) {
        self.pending.drain(..k);
        let w = self.width();
        self.window = self.pending.iter().take(w).enumerate().fold(0, |acc, (i, &b)| acc | (b as u128) << (w - 1 - i));
    }

    fn contains(&self, r: &Renormalized) -> bool {
        let k = r.shift as usize;
        let j = self.pending.len();
        if j < k {
            return false;
        }
        let p = self.cfg.precision() as usize;
        let rest = j - k;
        let take = rest.min(p);
        let w = self.width();
        let (prefix, v) = if k + take <= w {
            let head = self.window >> (w - k - take);
            (if k == 0 { 0 } else { head >> take }, head & ((1u128 << take) - 1))
        } else {
            let bits = |from: usize, n: usize| {
                self.pending.iter().skip(from).take(n).fold(0u128, |acc, &b| (acc << 1) | b as u128)
            };
            (bits(0, k), bits(k, take))
        };
        if prefix != r.prefix {
            return false;
        }
        let (lo, hi) = (r.interval.lo as u128, r.interval.hi as u128);
        if rest <= p {
            let cell = 1u128 << (p - rest);
            v * cell >= lo && (v + 1) * cell <= hi
        } else {
            v >= lo && v < hi
        }
    }

    /// Resolves the next branch among contiguous, ascending `branches`.
    pub fn next_branch(&mut self, branches: &[FixedInterval]) -> Result<usize> {
        if branches.is_empty() {
            return Err(Error::Codec("no alternatives to decode from".into()));
        }
        let p = self.cfg.precision();
        let w = self.interval.width() as u128;
        let base = (self.interval.lo as u128) << p;
        let mut cached: Option<(usize, Renormalized)> = None;
        loop {
            let x = self.window;
            // Only the branch whose exact product holds the consumed-input point can contain it.
            let idx = branches.partition_point(|b| base + w * b.lo as u128 <= x).saturating_sub(1);
            let r = match cached {
                Some((i, r)) if i == idx => r,
                _ => det_product(self.interval, branches[idx], &self.cfg),
            };
            cached = Some((idx, r));
            if self.contains(&r) {
                self.drain(r.shift as usize);
                self.settled += r.shift as u64;
                self.interval = r.interval;
                return Ok(idx);
            }
            let bit = self.source.read_bit().ok_or(Error::BitsExhausted)?;
            self.read += 1;
            self.push_bit(bit);
        }
    }

    /// Consumes the terminal bits of the current code and returns its length.
    pub fn finish(&mut self) -> Result<u64> {
        let (n, m) = terminal_code(self.interval, &self.cfg);
        let n = n as usize;
        if self.pending.len() > n {
            return Err(Error::Codec("read past the end of the code".into()));
        }
        while self.pending.len() < n {
            let bit = self.source.read_bit().ok_or(Error::BitsExhausted)?;
            self.read += 1;
            self.push_bit(bit);
        }
        let expected = (0..n).map(|i| (m >> (n - 1 - i)) & 1 == 1);
        if !self.pending.iter().copied().eq(expected) {
            return Err(Error::Codec("terminal bits do not match the decoded interval".into()));
        }
        self.pending.clear();
        self.window = 0;
        Ok(self.settled + n as u64)
    }
}
