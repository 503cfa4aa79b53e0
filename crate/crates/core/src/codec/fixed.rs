//! Fixed-point interval arithmetic and the deterministic product.
//!
//! Interval endpoints are integers in `[0, 2^precision]`. The deterministic
//! product computes the exact nested interval in double width, strips every
//! leading bit it has already settled, rounds inward to the grid, and
//! guarantees that what is left is at least `min_width` wide. Encoder and
//! decoder run this same function, so they stay in lock-step bit for bit.

use crate::codec::interval::ProbabilityInterval;
use crate::error::{Error, Result};
use crate::squid::BranchDistribution;

/// Grid precision and minimum working width of the coder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxConfig {
    precision: u32,
    min_width_log2: u32,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { precision: 63, min_width_log2: 40 }
    }
}

impl ApproxConfig {
    /// `min_width = 2^-min_width_log2`; requires `2 <= min_width_log2 < precision <= 63`.
    pub fn new(precision: u32, min_width_log2: u32) -> Result<Self> {
        if !(precision <= 63 && min_width_log2 >= 2 && min_width_log2 < precision) {
            return Err(Error::Config(format!(
                "codec precision {precision} / min width 2^-{min_width_log2} out of bounds"
            )));
        }
        Ok(ApproxConfig { precision, min_width_log2 })
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn min_width_log2(&self) -> u32 {
        self.min_width_log2
    }

    /// The grid value of 1.0.
    pub fn one(&self) -> u64 {
        1 << self.precision
    }

    pub fn half(&self) -> u64 {
        1 << (self.precision - 1)
    }

    /// Minimum interval width in grid units.
    pub fn min_width(&self) -> u64 {
        1 << (self.precision - self.min_width_log2)
    }

    pub fn epsilon_min(&self) -> f64 {
        (-(self.min_width_log2 as f64)).exp2()
    }

    pub fn unit(&self) -> FixedInterval {
        FixedInterval { lo: 0, hi: self.one() }
    }

    /// Nearest grid point to a real in `[0, 1]`.
    pub fn to_grid(&self, x: f64) -> u64 {
        ((x.clamp(0.0, 1.0) * self.one() as f64).round() as u64).min(self.one())
    }

    pub fn interval(&self, l: f64, r: f64) -> Result<FixedInterval> {
        let iv = FixedInterval { lo: self.to_grid(l), hi: self.to_grid(r) };
        if iv.lo >= iv.hi {
            return Err(Error::Codec(format!("[{l}, {r}] collapses on the grid")));
        }
        Ok(iv)
    }
}

/// Interval with endpoints on the coder's grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedInterval {
    pub lo: u64,
    pub hi: u64,
}

impl FixedInterval {
    pub fn width(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn to_f64(&self, cfg: &ApproxConfig) -> ProbabilityInterval<f64> {
        let one = cfg.one() as f64;
        ProbabilityInterval::new(self.lo as f64 / one, self.hi as f64 / one)
            .expect("fixed interval is always non-degenerate")
    }
}

/// Result of a deterministic product: `shift` settled bits (`prefix`, MSB first)
/// followed by the remaining working interval on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Renormalized {
    pub shift: u32,
    pub prefix: u128,
    pub interval: FixedInterval,
}

impl Renormalized {
    /// Bit `i` (0-based, most significant first) of the settled prefix.
    pub fn prefix_bit(&self, i: u32) -> bool {
        (self.prefix >> (self.shift - 1 - i)) & 1 == 1
    }

    /// Endpoints relative to the frame of the left operand, as reals.
    pub fn absolute(&self, cfg: &ApproxConfig) -> (f64, f64) {
        let scale = (-(self.shift as f64)).exp2();
        let one = cfg.one() as f64;
        let base = self.prefix as f64;
        ((base + self.interval.lo as f64 / one) * scale, (base + self.interval.hi as f64 / one) * scale)
    }
}

fn settle(lo: &mut u128, hi: &mut u128, half: u128, shift: &mut u32, prefix: &mut u128) {
    loop {
        if *hi <= half {
            *lo <<= 1;
            *hi <<= 1;
            *prefix <<= 1;
        } else if *lo >= half {
            *lo = (*lo - half) << 1;
            *hi = (*hi - half) << 1;
            *prefix = (*prefix << 1) | 1;
        } else {
            return;
        }
        *shift += 1;
    }
}

/// Deterministic approximation of `outer ∘ inner`.
///
/// The result is contained in the exact product and its working interval is
/// at least `cfg.min_width()` wide and straddles 1/2 (or is the unit interval).
pub fn det_product(outer: FixedInterval, inner: FixedInterval, cfg: &ApproxConfig) -> Renormalized {
    let p = cfg.precision;
    let half2 = 1u128 << (2 * p - 1);
    let w = outer.width() as u128;
    let base = (outer.lo as u128) << p;
    let mut lo = base + w * inner.lo as u128;
    let mut hi = base + w * inner.hi as u128;
    // Two grid units of margin so inward rounding cannot drop below min width.
    let threshold = ((cfg.min_width() + 2) as u128) << p;
    let (mut shift, mut prefix) = (0u32, 0u128);
    loop {
        settle(&mut lo, &mut hi, half2, &mut shift, &mut prefix);
        if hi - lo >= threshold {
            break;
        }
        // Too narrow around 1/2: keep the larger side, which settles on the next pass.
        if hi - half2 > half2 - lo {
            lo = half2;
        } else {
            hi = half2;
        }
    }
    let unit = 1u128 << p;
    let mut lo = lo.div_ceil(unit);
    let mut hi = hi / unit;
    settle(&mut lo, &mut hi, unit >> 1, &mut shift, &mut prefix);
    debug_assert!(shift < 128);
    debug_assert!(hi - lo >= cfg.min_width() as u128);
    Renormalized { shift, prefix, interval: FixedInterval { lo: lo as u64, hi: hi as u64 } }
}

/// Tiles the grid with one interval per branch, every width at least `min_width`.
///
/// Branches whose share would fall below the minimum are raised to it and the
/// remaining budget is split proportionally among the rest; rounding leftovers
/// go to the widest branch.
pub fn cumulative_intervals(d: &BranchDistribution, cfg: &ApproxConfig) -> Result<Vec<FixedInterval>> {
    let probs = d.probabilities();
    let k = probs.len() as u64;
    let floor = cfg.min_width();
    if k.checked_mul(floor).is_none_or(|need| need > cfg.one()) {
        return Err(Error::Codec(format!("{k} branches cannot each receive the minimum width")));
    }
    let mut snapped = vec![false; probs.len()];
    let mut widths = vec![0u64; probs.len()];
    loop {
        let small = snapped.iter().filter(|&&s| s).count() as u64;
        let budget = cfg.one() - small * floor;
        let mass: f64 = probs.iter().zip(&snapped).filter(|(_, &s)| !s).map(|(p, _)| p).sum();
        let mut changed = false;
        for (i, &p) in probs.iter().enumerate() {
            if snapped[i] {
                widths[i] = floor;
                continue;
            }
            let w = if mass > 0.0 { (p / mass * budget as f64).floor() } else { 0.0 };
            let w = if w >= budget as f64 { budget } else { w as u64 };
            if w < floor {
                snapped[i] = true;
                changed = true;
            }
            widths[i] = w;
        }
        if !changed {
            break;
        }
    }
    let total: u64 = widths.iter().sum();
    let widest = (0..widths.len()).max_by_key(|&i| (widths[i], std::cmp::Reverse(i))).unwrap_or(0);
    if total <= cfg.one() {
        widths[widest] += cfg.one() - total;
    } else {
        widths[widest] -= total - cfg.one();
    }
    let mut out = Vec::with_capacity(widths.len());
    let mut at = 0u64;
    for w in widths {
        out.push(FixedInterval { lo: at, hi: at + w });
        at += w;
    }
    debug_assert_eq!(at, cfg.one());
    Ok(out)
}
