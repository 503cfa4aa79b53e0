//! Probability intervals over an arbitrary scalar type.
//!
//! The fixed-point coder never uses these directly; they are the exact
//! reference algebra (instantiate with a rational type) and the convenient
//! floating-point view of coder state.

use std::fmt::Debug;

use num_traits::Num;

use crate::error::{Error, Result};

/// Scalars an interval can be built from: floats, rationals, fixed-point wrappers.
pub trait IntervalScalar: Num + PartialOrd + Clone + Debug {}

impl<T: Num + PartialOrd + Clone + Debug> IntervalScalar for T {}

/// A closed sub-interval `[l, r]` of `[0, 1]` with `l < r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityInterval<S> {
    l: S,
    r: S,
}

impl<S: IntervalScalar> ProbabilityInterval<S> {
    pub fn new(l: S, r: S) -> Result<Self> {
        if !(S::zero() <= l && l < r && r <= S::one()) {
            return Err(Error::Codec(format!("[{l:?}, {r:?}] is not a probability interval")));
        }
        Ok(ProbabilityInterval { l, r })
    }

    pub fn unit() -> Self {
        ProbabilityInterval { l: S::zero(), r: S::one() }
    }

    /// `[k/2, (k+1)/2]` for `k` in {0, 1}.
    pub fn half(upper: bool) -> Self {
        let two = S::one() + S::one();
        if upper {
            ProbabilityInterval { l: S::one() / two, r: S::one() }
        } else {
            ProbabilityInterval { l: S::zero(), r: S::one() / two }
        }
    }

    pub fn lo(&self) -> &S {
        &self.l
    }

    pub fn hi(&self) -> &S {
        &self.r
    }

    pub fn width(&self) -> S {
        self.r.clone() - self.l.clone()
    }

    /// The nesting product `self ∘ inner`: `inner` rescaled into `self`.
    pub fn product(&self, inner: &Self) -> Self {
        let w = self.width();
        ProbabilityInterval {
            l: self.l.clone() + w.clone() * inner.l.clone(),
            r: self.l.clone() + w * inner.r.clone(),
        }
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.l <= other.l && other.r <= self.r
    }

    /// Which dyadic half fully contains the interval, if any.
    pub fn dyadic_half(&self) -> Option<bool> {
        let half = S::one() / (S::one() + S::one());
        if self.r <= half {
            Some(false)
        } else if self.l >= half {
            Some(true)
        } else {
            None
        }
    }

    /// Maps the interval through `x ↦ 2x - k`, undoing one emitted bit.
    pub fn zoom(&self, upper: bool) -> Self {
        let two = S::one() + S::one();
        let k = if upper { S::one() } else { S::zero() };
        ProbabilityInterval { l: two.clone() * self.l.clone() - k.clone(), r: two * self.r.clone() - k }
    }
}

/// Exact product of two intervals.
pub fn interval_product<S: IntervalScalar>(
    a: &ProbabilityInterval<S>,
    b: &ProbabilityInterval<S>,
) -> ProbabilityInterval<S> {
    a.product(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_identity() {
        let b = ProbabilityInterval::new(0.25, 0.75).unwrap();
        assert_eq!(interval_product(&ProbabilityInterval::unit(), &b), b);
    }

    #[test]
    fn width_is_multiplicative() {
        let a = ProbabilityInterval::new(0.5f64, 0.75).unwrap();
        let b = ProbabilityInterval::new(0.0f64, 0.5).unwrap();
        assert_eq!(a.product(&b).width(), 0.125);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(ProbabilityInterval::new(0.5, 0.5).is_err());
        assert!(ProbabilityInterval::new(-0.1, 0.5).is_err());
        assert!(ProbabilityInterval::new(0.1f32, 1.5).is_err());
    }

    #[test]
    fn zoom_inverts_halving() {
        let a = ProbabilityInterval::new(0.625, 0.75).unwrap();
        assert_eq!(a.dyadic_half(), Some(true));
        assert_eq!(a.zoom(true), ProbabilityInterval::new(0.25, 0.5).unwrap());
    }
}
