//! Trees for string attributes: the length first, then one byte per position.

use crate::error::{Error, Result};
use crate::schema::Value;
use crate::squid::bisection::{BisectionCursor, BisectionSpec, BisectionTree, Histogram};
use crate::squid::{at_leaf, not_leaf, BranchDistribution, LeafOutcome, SquidCursor};

pub const ALPHABET: usize = 256;

/// Distribution of the next byte given the previous one (`None` at the start).
pub trait CharModel {
    fn distribution(&self, prev: Option<u8>) -> &BranchDistribution;
}

impl<C: CharModel + ?Sized> CharModel for &C {
    fn distribution(&self, prev: Option<u8>) -> &BranchDistribution {
        (**self).distribution(prev)
    }
}

/// Every byte equally likely.
#[derive(Debug, Clone)]
pub struct UniformChars {
    dist: BranchDistribution,
}

impl Default for UniformChars {
    fn default() -> Self {
        UniformChars { dist: BranchDistribution::uniform(ALPHABET) }
    }
}

impl CharModel for UniformChars {
    fn distribution(&self, _prev: Option<u8>) -> &BranchDistribution {
        &self.dist
    }
}

/// Order-1 byte model with add-one smoothing.
///
/// Context 0 is the start of the string, context `1 + b` follows byte `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramModel {
    counts: Vec<Option<Box<[u32; ALPHABET]>>>,
    dists: Vec<Option<BranchDistribution>>,
    uniform: BranchDistribution,
}

impl Default for BigramModel {
    fn default() -> Self {
        BigramModel {
            counts: vec![None; ALPHABET + 1],
            dists: vec![None; ALPHABET + 1],
            uniform: BranchDistribution::uniform(ALPHABET),
        }
    }
}

impl BigramModel {
    fn context(prev: Option<u8>) -> usize {
        prev.map_or(0, |b| b as usize + 1)
    }

    pub fn observe(&mut self, s: &[u8]) {
        let mut prev = None;
        for &b in s {
            let row = self.counts[Self::context(prev)].get_or_insert_with(|| Box::new([0; ALPHABET]));
            row[b as usize] = row[b as usize].saturating_add(1);
            prev = Some(b);
        }
    }

    pub fn fit<'a>(strings: impl IntoIterator<Item = &'a [u8]>) -> Self {
        let mut m = Self::default();
        for s in strings {
            m.observe(s);
        }
        m.finalize();
        m
    }

    /// Recomputes the cached per-context distributions from the counts.
    pub fn finalize(&mut self) {
        for (ctx, row) in self.counts.iter().enumerate() {
            self.dists[ctx] = row.as_ref().map(|row| {
                let total: f64 = row.iter().map(|&c| c as f64 + 1.0).sum();
                BranchDistribution::new(row.iter().map(|&c| (c as f64 + 1.0) / total).collect())
                    .expect("smoothed counts form a distribution")
            });
        }
    }

    /// Non-zero counts as `(context, byte, count)`, in ascending order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u8, u32)> + '_ {
        self.counts.iter().enumerate().filter_map(|(ctx, row)| row.as_ref().map(|r| (ctx, r))).flat_map(
            |(ctx, row)| row.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(b, &c)| (ctx, b as u8, c)),
        )
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, u8, u32)>) -> Result<Self> {
        let mut m = Self::default();
        for (ctx, b, c) in entries {
            if ctx > ALPHABET {
                return Err(Error::Malformed(format!("bigram context {ctx} out of range")));
            }
            m.counts[ctx].get_or_insert_with(|| Box::new([0; ALPHABET]))[b as usize] = c;
        }
        m.finalize();
        Ok(m)
    }
}

impl CharModel for BigramModel {
    fn distribution(&self, prev: Option<u8>) -> &BranchDistribution {
        self.dists[Self::context(prev)].as_ref().unwrap_or(&self.uniform)
    }
}

/// Length histogram over `0..=max_len` plus a character model.
#[derive(Debug, Clone)]
pub struct StringTree<C> {
    length: BisectionTree<Histogram>,
    chars: C,
}

/// Builds a string tree; `lengths[k]` counts strings of length `k`.
pub fn build_string_tree<C: CharModel>(lengths: Histogram, chars: C) -> StringTree<C> {
    let max_len = lengths.counts().len() - 1;
    let spec = BisectionSpec::new(-1.0, max_len as f64, 0.0, true).expect("length range is non-empty");
    StringTree { length: BisectionTree::new(spec, lengths), chars }
}

impl<C: CharModel> StringTree<C> {
    pub fn max_len(&self) -> usize {
        self.length.spec.hi() as usize
    }

    pub fn lengths(&self) -> &Histogram {
        &self.length.law
    }

    pub fn chars(&self) -> &C {
        &self.chars
    }

    pub fn cursor(&self) -> StringCursor<'_, C> {
        StringCursor { length: self.length.cursor(), chars: &self.chars, len: None, bytes: Vec::new() }
    }

    /// Probability the tree assigns to `s`.
    pub fn probability(&self, s: &[u8]) -> f64 {
        if s.len() > self.max_len() {
            return 0.0;
        }
        let mut p = self.length.law.probability(s.len());
        let mut prev = None;
        for &b in s {
            p *= self.chars.distribution(prev).probabilities()[b as usize];
            prev = Some(b);
        }
        p
    }
}

#[derive(Debug)]
pub struct StringCursor<'a, C> {
    length: BisectionCursor<'a, Histogram>,
    chars: &'a C,
    len: Option<usize>,
    bytes: Vec<u8>,
}

impl<C> Clone for StringCursor<'_, C> {
    fn clone(&self) -> Self {
        StringCursor { length: self.length.clone(), chars: self.chars, len: self.len, bytes: self.bytes.clone() }
    }
}

impl<C: CharModel> StringCursor<'_, C> {
    /// Length decided so far, once the length leaf is reached.
    pub fn length(&self) -> Option<usize> {
        self.len
    }
}

impl<C: CharModel> SquidCursor for StringCursor<'_, C> {
    fn is_end(&self) -> bool {
        self.len == Some(self.bytes.len())
    }

    fn generate_branch(&self) -> Result<BranchDistribution> {
        match self.len {
            None => self.length.generate_branch(),
            Some(n) if self.bytes.len() < n => Ok(self.chars.distribution(self.bytes.last().copied()).clone()),
            Some(_) => Err(at_leaf("generate_branch")),
        }
    }

    fn get_branch(&self, v: &Value) -> Result<usize> {
        let s = v.as_bytes().ok_or_else(|| Error::Cursor(format!("{v:?} is not a string")))?;
        match self.len {
            None => {
                let (l, r) = self.length.range();
                let n = s.len() as f64;
                if n <= l || n > r {
                    return Err(Error::Cursor(format!("string of length {} is outside length node ({l}, {r}]", s.len())));
                }
                self.length.get_branch(&Value::Num(s.len() as f64))
            }
            Some(n) if self.bytes.len() < n => {
                if s.len() != n {
                    return Err(Error::Cursor(format!("string of length {} under a length-{n} node", s.len())));
                }
                Ok(s[self.bytes.len()] as usize)
            }
            Some(_) => Err(at_leaf("get_branch")),
        }
    }

    fn choose_branch(&mut self, b: usize) -> Result<()> {
        match self.len {
            None => {
                self.length.choose_branch(b)?;
                if self.length.is_end() {
                    let n = self.length.get_result()?.representative.as_num().expect("numeric length");
                    self.len = Some(n as usize);
                }
                Ok(())
            }
            Some(n) if self.bytes.len() < n => {
                if b >= ALPHABET {
                    return Err(Error::Cursor(format!("branch {b} out of range ({ALPHABET} branches)")));
                }
                self.bytes.push(b as u8);
                Ok(())
            }
            Some(_) => Err(at_leaf("choose_branch")),
        }
    }

    fn get_result(&self) -> Result<LeafOutcome> {
        if !self.is_end() {
            return Err(not_leaf());
        }
        Ok(LeafOutcome { representative: Value::Str(self.bytes.clone()), worst_case_error: 0.0 })
    }
}
