//! Bisection trees for numeric attributes.
//!
//! A node covers a half-open range `(l, r]` and splits it at the midpoint; the
//! branch probabilities are the law's masses on the two halves (shifted by
//! half a unit for integer trees, see [`BisectionSpec::edge`]). Splitting
//! stops once a single representative is within the tolerance of everything
//! in the range.

use crate::error::{Error, Result};
use crate::schema::Value;
use crate::squid::{at_leaf, not_leaf, BranchDistribution, LeafOutcome, SquidCursor};

/// Probability law over the reals, queried by interval mass.
pub trait Law {
    /// `P(a < X <= b)`.
    fn mass(&self, a: f64, b: f64) -> f64;
}

impl<L: Law + ?Sized> Law for &L {
    fn mass(&self, a: f64, b: f64) -> f64 {
        (**self).mass(a, b)
    }
}

/// Parametric laws used for numeric columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericLaw {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    Laplace { location: f64, scale: f64 },
}

impl NumericLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NumericLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            NumericLaw::Gaussian { mean, std_dev } => {
                0.5 * libm::erfc(-(x - mean) / (std_dev * std::f64::consts::SQRT_2))
            }
            NumericLaw::Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }

    /// Upper tail `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            NumericLaw::Uniform { .. } => 1.0 - self.cdf(x),
            NumericLaw::Gaussian { mean, std_dev } => {
                0.5 * libm::erfc((x - mean) / (std_dev * std::f64::consts::SQRT_2))
            }
            NumericLaw::Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z > 0.0 {
                    0.5 * (-z).exp()
                } else {
                    1.0 - 0.5 * z.exp()
                }
            }
        }
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            NumericLaw::Uniform { lo, hi } => {
                if x > lo && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            NumericLaw::Gaussian { mean, std_dev } => {
                let z = (x - mean) / std_dev;
                (-0.5 * z * z).exp() / (std_dev * (2.0 * std::f64::consts::PI).sqrt())
            }
            NumericLaw::Laplace { location, scale } => (-(x - location).abs() / scale).exp() / (2.0 * scale),
        }
    }

    /// Number of free parameters a fitted instance carries.
    pub fn free_parameters(&self) -> usize {
        match self {
            NumericLaw::Uniform { .. } => 0,
            _ => 2,
        }
    }
}

impl Law for NumericLaw {
    fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        // Subtract in whichever tail keeps precision.
        let center = match *self {
            NumericLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            NumericLaw::Gaussian { mean, .. } => mean,
            NumericLaw::Laplace { location, .. } => location,
        };
        let m = if a >= center { self.sf(a) - self.sf(b) } else { self.cdf(b) - self.cdf(a) };
        m.max(0.0)
    }
}

/// Discrete law over `0..counts.len()` with add-one smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    counts: Vec<u64>,
    cumulative: Vec<f64>,
}

impl Histogram {
    pub fn new(counts: Vec<u64>) -> Self {
        assert!(!counts.is_empty(), "histogram needs at least one bucket");
        let total: f64 = counts.iter().map(|&c| c as f64 + 1.0).sum();
        let mut cumulative = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for &c in &counts {
            acc += c as f64 + 1.0;
            cumulative.push(acc / total);
        }
        Histogram { counts, cumulative }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.cumulative[k + 1] - self.cumulative[k]
    }

    /// `P(X <= x)` for the integer-valued variable.
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let k = x.floor();
        if k >= self.counts.len() as f64 {
            return 1.0;
        }
        self.cumulative[k as usize + 1]
    }
}

impl Law for Histogram {
    fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }
}

/// Shape of a bisection tree: root range, tolerance and value kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionSpec {
    lo: f64,
    hi: f64,
    tolerance: f64,
    integer: bool,
}

impl BisectionSpec {
    /// Root `(lo, hi]`. Integer trees need integral endpoints; real trees a
    /// positive tolerance.
    pub fn new(lo: f64, hi: f64, tolerance: f64, integer: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("bisection range ({lo}, {hi}] is empty or not finite")));
        }
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Error::Config(format!("tolerance {tolerance} must be finite and non-negative")));
        }
        if integer && (lo.fract() != 0.0 || hi.fract() != 0.0) {
            return Err(Error::Config(format!("integer range ({lo}, {hi}] has fractional endpoints")));
        }
        if !integer && tolerance == 0.0 {
            return Err(Error::Config("real-valued columns need a positive tolerance".into()));
        }
        Ok(BisectionSpec { lo, hi, tolerance, integer })
    }

    /// Root covering observed values `min..=max`, or a declared range.
    ///
    /// Integer roots are `(min - 1, max]`; real roots are widened by the
    /// tolerance on each side so that observed extremes lie strictly inside.
    pub fn for_domain(min: f64, max: f64, tolerance: f64, integer: bool, declared: Option<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = match (declared, integer) {
            (Some((lo, hi)), true) => (lo.floor() - 1.0, hi.ceil()),
            (Some((lo, hi)), false) => (lo, hi),
            (None, true) => (min.floor() - 1.0, max.ceil()),
            (None, false) => {
                let pad = if tolerance > 0.0 { tolerance } else { 1.0 };
                (min - pad, max + pad)
            }
        };
        Self::new(lo, hi, tolerance, integer)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_integer(&self) -> bool {
        self.integer
    }

    /// Where a range endpoint sits on the law's axis. An integer leaf `(k - 1, k]`
    /// stands for the value `k`, so its mass is taken over `(k - 1/2, k + 1/2]`.
    pub fn edge(&self, x: f64) -> f64 {
        if self.integer {
            x + 0.5
        } else {
            x
        }
    }

    /// Moves `v` into the root range; the flag reports whether it had to.
    pub fn clamp(&self, v: f64) -> (f64, bool) {
        if v > self.lo && v <= self.hi {
            (v, false)
        } else if v > self.hi {
            (self.hi, true)
        } else if self.integer {
            (self.lo + 1.0, true)
        } else {
            (self.lo.next_up(), true)
        }
    }

    /// Split point of `(l, r]`, or `None` when it is a leaf.
    pub fn split(&self, l: f64, r: f64) -> Option<f64> {
        if self.integer {
            let count = r - l;
            if count <= 1.0 || ((count - 1.0) / 2.0).ceil() <= self.tolerance {
                return None;
            }
            return Some(l + (count / 2.0).floor());
        }
        let m = l + (r - l) / 2.0;
        if !(l < m && m < r) {
            return None;
        }
        if r - l < 2.0 * self.tolerance && (m - l).max(r - m) <= self.tolerance {
            return None;
        }
        Some(m)
    }

    /// Representative and worst error of the leaf `(l, r]`.
    pub fn leaf(&self, l: f64, r: f64) -> LeafOutcome {
        if self.integer {
            let count = r - l;
            let rep = l + 1.0 + ((count - 1.0) / 2.0).floor();
            return LeafOutcome { representative: Value::Num(rep), worst_case_error: r - rep };
        }
        let m = l + (r - l) / 2.0;
        if !(l < m && m < r) {
            return LeafOutcome { representative: Value::Num(r), worst_case_error: 0.0 };
        }
        LeafOutcome { representative: Value::Num(m), worst_case_error: (m - l).max(r - m) }
    }

    /// Leaf range holding `v`, found without a law.
    pub fn locate(&self, v: f64) -> (f64, f64) {
        let (v, _) = self.clamp(v);
        let (mut l, mut r) = (self.lo, self.hi);
        while let Some(m) = self.split(l, r) {
            if v <= m {
                r = m;
            } else {
                l = m;
            }
        }
        (l, r)
    }

    /// Depth of the leaf holding `v`.
    pub fn depth_of(&self, v: f64) -> usize {
        let (v, _) = self.clamp(v);
        let (mut l, mut r, mut d) = (self.lo, self.hi, 0);
        while let Some(m) = self.split(l, r) {
            if v <= m {
                r = m;
            } else {
                l = m;
            }
            d += 1;
        }
        d
    }
}

/// A bisection spec paired with the law assigning its branch probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionTree<L> {
    pub spec: BisectionSpec,
    pub law: L,
}

impl<L: Law> BisectionTree<L> {
    pub fn new(spec: BisectionSpec, law: L) -> Self {
        BisectionTree { spec, law }
    }

    pub fn cursor(&self) -> BisectionCursor<'_, L> {
        BisectionCursor { spec: self.spec, law: &self.law, l: self.spec.lo, r: self.spec.hi }
    }

    /// Probability of the leaf range `(l, r]` relative to the root mass.
    pub fn leaf_probability(&self, l: f64, r: f64) -> f64 {
        let e = |x| self.spec.edge(x);
        let root = self.law.mass(e(self.spec.lo), e(self.spec.hi));
        let m = self.law.mass(e(l), e(r));
        if root > 0.0 && m > 0.0 {
            m / root
        } else {
            self.path_probability(l, r, 0.0)
        }
    }

    /// Product of branch probabilities from the root down to `(l, r]`, each
    /// factor raised to at least `floor`.
    pub fn path_probability(&self, l: f64, r: f64, floor: f64) -> f64 {
        let mut c = self.cursor();
        let mut p = 1.0;
        while !c.is_end() && (c.l, c.r) != (l, r) {
            let (pl, pr, m) = c.split_masses();
            if r <= m {
                p *= pl.max(floor);
                c.r = m;
            } else {
                p *= pr.max(floor);
                c.l = m;
            }
        }
        p
    }
}

/// Cursor over a [`BisectionTree`].
#[derive(Debug)]
pub struct BisectionCursor<'a, L> {
    spec: BisectionSpec,
    law: &'a L,
    l: f64,
    r: f64,
}

impl<L> Clone for BisectionCursor<'_, L> {
    fn clone(&self) -> Self {
        BisectionCursor { spec: self.spec, law: self.law, l: self.l, r: self.r }
    }
}

impl<L: Law> BisectionCursor<'_, L> {
    pub fn range(&self) -> (f64, f64) {
        (self.l, self.r)
    }

    fn split_masses(&self) -> (f64, f64, f64) {
        let m = self.spec.split(self.l, self.r).expect("inner node");
        let e = |x| self.spec.edge(x);
        let a = self.law.mass(e(self.l), e(m));
        let b = self.law.mass(e(m), e(self.r));
        let s = a + b;
        if s > 0.0 && s.is_finite() {
            (a / s, b / s, m)
        } else {
            (0.5, 0.5, m)
        }
    }
}

impl<L: Law> SquidCursor for BisectionCursor<'_, L> {
    fn is_end(&self) -> bool {
        self.spec.split(self.l, self.r).is_none()
    }

    fn generate_branch(&self) -> Result<BranchDistribution> {
        if self.is_end() {
            return Err(at_leaf("generate_branch"));
        }
        let (a, b, _) = self.split_masses();
        BranchDistribution::new(vec![a, b])
    }

    fn get_branch(&self, v: &Value) -> Result<usize> {
        let m = self.spec.split(self.l, self.r).ok_or_else(|| at_leaf("get_branch"))?;
        let x = v.as_num().ok_or_else(|| Error::Cursor(format!("{v:?} is not numeric")))?;
        let (x, _) = self.spec.clamp(x);
        Ok(if x <= m { 0 } else { 1 })
    }

    fn choose_branch(&mut self, b: usize) -> Result<()> {
        let m = self.spec.split(self.l, self.r).ok_or_else(|| at_leaf("choose_branch"))?;
        match b {
            0 => self.r = m,
            1 => self.l = m,
            _ => return Err(Error::Cursor(format!("branch {b} out of range (2 branches)"))),
        }
        Ok(())
    }

    fn get_result(&self) -> Result<LeafOutcome> {
        if !self.is_end() {
            return Err(not_leaf());
        }
        Ok(self.spec.leaf(self.l, self.r))
    }
}
