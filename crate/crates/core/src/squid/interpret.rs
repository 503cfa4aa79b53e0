//! Interpreters turn a parent's value into a predictor a model can condition on.

use crate::error::{Error, Result};
use crate::schema::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Interpreter {
    Identity,
    /// Right-closed bins `(-inf, c0], (c0, c1], ..., (c_last, inf)` as `Cat`.
    Binning { cuts: Vec<f64> },
    StringLength,
    /// String length, then binned like [`Interpreter::Binning`].
    LengthBinning { cuts: Vec<f64> },
}

impl Interpreter {
    /// `bins` equal-width bins over `[lo, hi]`; values outside fall in the end bins.
    pub fn equal_width(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("cannot bin [{lo}, {hi}] into {bins} bins")));
        }
        let w = (hi - lo) / bins as f64;
        let mut cuts: Vec<f64> = (1..bins).map(|i| lo + w * i as f64).collect();
        cuts.dedup();
        Ok(cuts)
    }

    pub fn binning(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        Ok(Interpreter::Binning { cuts: Self::equal_width(lo, hi, bins)? })
    }

    pub fn length_binning(max_len: usize, bins: usize) -> Result<Self> {
        Ok(Interpreter::LengthBinning { cuts: Self::equal_width(0.0, max_len as f64, bins)? })
    }

    fn bin(cuts: &[f64], x: f64) -> usize {
        cuts.partition_point(|&c| c < x)
    }

    pub fn interpret(&self, v: &Value) -> Result<Value> {
        let mismatch = || Error::Cursor(format!("{self:?} cannot interpret {v:?}"));
        match self {
            Interpreter::Identity => Ok(v.clone()),
            Interpreter::Binning { cuts } => Ok(Value::Cat(Self::bin(cuts, v.as_num().ok_or_else(mismatch)?))),
            Interpreter::StringLength => Ok(Value::Num(v.as_bytes().ok_or_else(mismatch)?.len() as f64)),
            Interpreter::LengthBinning { cuts } => {
                Ok(Value::Cat(Self::bin(cuts, v.as_bytes().ok_or_else(mismatch)?.len() as f64)))
            }
        }
    }

    /// Number of distinct categorical outputs, when the output is categorical.
    pub fn categories(&self, source_size: Option<usize>) -> Option<usize> {
        match self {
            Interpreter::Identity => source_size,
            Interpreter::Binning { cuts } | Interpreter::LengthBinning { cuts } => Some(cuts.len() + 1),
            Interpreter::StringLength => None,
        }
    }
}
