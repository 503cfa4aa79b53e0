use crate::codec::bits::BitBuf;
use crate::codec::fixed::{det_product, ApproxConfig, FixedInterval};
use crate::error::{Error, Result};

/// Streaming arithmetic encoder: emitted bits plus the working interval.
#[derive(Debug, Clone)]
pub struct EncoderState {
    cfg: ApproxConfig,
    bits: BitBuf,
    interval: FixedInterval,
}

impl EncoderState {
    pub fn new(cfg: ApproxConfig) -> Self {
        EncoderState { cfg, bits: BitBuf::new(), interval: cfg.unit() }
    }

    pub fn config(&self) -> &ApproxConfig {
        &self.cfg
    }

    pub fn interval(&self) -> FixedInterval {
        self.interval
    }

    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }

    /// Narrows the working interval by one branch interval and emits settled bits.
    pub fn push(&mut self, branch: FixedInterval) -> Result<()> {
        if branch.lo >= branch.hi || branch.hi > self.cfg.one() {
            return Err(Error::Codec(format!("{branch:?} is not a grid interval")));
        }
        if branch.width() < self.cfg.min_width() {
            return Err(Error::Codec(format!(
                "branch width {} below the coder minimum {}",
                branch.width(),
                self.cfg.min_width()
            )));
        }
        let r = det_product(self.interval, branch, &self.cfg);
        self.bits.push_bits(r.prefix, r.shift);
        self.interval = r.interval;
        Ok(())
    }

    /// Appends the shortest dyadic cell inside the working interval.
    pub fn finish(mut self) -> BitBuf {
        let (n, m) = terminal_code(self.interval, &self.cfg);
        self.bits.push_bits(m as u128, n);
        self.bits
    }
}

/// Smallest `k` and `M` with `[M/2^k, (M+1)/2^k]` inside the interval, as the
/// bits to append. The `k = 0` case (unit interval) is written as a single `0`
/// so every code is non-empty.
pub fn terminal_code(iv: FixedInterval, cfg: &ApproxConfig) -> (u32, u64) {
    if iv == cfg.unit() {
        return (1, 0);
    }
    let p = cfg.precision();
    for k in 1..=p {
        let cell = 1u64 << (p - k);
        let m = iv.lo.div_ceil(cell);
        if (m + 1) * cell <= iv.hi {
            return (k, m);
        }
    }
    unreachable!("grid intervals have width >= 1 unit")
}

/// Encodes a whole interval sequence.
pub fn encode(intervals: &[FixedInterval], cfg: &ApproxConfig) -> Result<BitBuf> {
    let mut enc = EncoderState::new(*cfg);
    for &iv in intervals {
        enc.push(iv)?;
    }
    Ok(enc.finish())
}
