use crate::error::{Error, Result};
use crate::squid::{build_string_tree, BigramModel, CharModel, Histogram, StringTree};

/// Length histogram plus order-1 byte model; string columns take no parents.
#[derive(Debug, Clone)]
pub struct StringModel {
    pub(crate) target: usize,
    tree: StringTree<BigramModel>,
    pub(crate) data_bits: f64,
    pub(crate) rows: u64,
}

impl PartialEq for StringModel {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target
            && self.tree.lengths() == other.tree.lengths()
            && self.tree.chars() == other.tree.chars()
            && self.data_bits == other.data_bits
            && self.rows == other.rows
    }
}

impl StringModel {
    pub(crate) fn from_parts(target: usize, lengths: Vec<u64>, chars: BigramModel, data_bits: f64, rows: u64) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::malformed("string model without a length table"));
        }
        Ok(StringModel { target, tree: build_string_tree(Histogram::new(lengths), chars), data_bits, rows })
    }

    /// Fits from length counts and observed (unfinalized) bigram counts.
    pub(crate) fn fit(target: usize, lengths: Vec<u64>, mut chars: BigramModel) -> Result<Self> {
        chars.finalize();
        let rows = lengths.iter().sum();
        let mut model = Self::from_parts(target, lengths, chars, 0.0, rows)?;
        let hist = model.tree.lengths();
        let mut bits: f64 = hist
            .counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| -(c as f64) * hist.probability(k).log2())
            .sum();
        let chars = model.tree.chars();
        for (ctx, b, c) in chars.entries() {
            let prev = ctx.checked_sub(1).map(|p| p as u8);
            bits -= c as f64 * chars.distribution(prev).probabilities()[b as usize].log2();
        }
        model.data_bits = bits;
        Ok(model)
    }

    pub fn tree(&self) -> &StringTree<BigramModel> {
        &self.tree
    }

    pub fn parameter_count(&self) -> usize {
        self.tree.lengths().counts().len() + self.tree.chars().entries().count()
    }
}
