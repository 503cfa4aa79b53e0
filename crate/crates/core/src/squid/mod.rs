//! Probability decision trees over attribute values.
//!
//! A tree is explored through a cursor that starts at the root. Every inner
//! node offers a distribution over its children together with decision rules
//! that route each value to exactly one child; every leaf names a
//! representative value and the worst distance from it to any value that
//! reaches the leaf. The coder only ever talks to trees through
//! [`SquidCursor`], so new attribute types plug in by implementing it.

mod bisection;
mod geometric;
mod interpret;
mod string;

pub use bisection::{BisectionCursor, BisectionSpec, BisectionTree, Histogram, Law, NumericLaw};
pub use geometric::{GeometricCursor, GeometricTree};
pub use interpret::Interpreter;
pub use string::{build_string_tree, BigramModel, CharModel, StringCursor, StringTree, UniformChars};

use crate::error::{Error, Result};
use crate::schema::Value;

/// Probabilities of the children of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchDistribution {
    probs: Vec<f64>,
}

impl BranchDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Distribution(format!("negative or non-finite entry in {probs:?}")));
        }
        if !probs.iter().any(|&p| p > 0.0) {
            return Err(Error::Distribution("no branch has positive probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Distribution(format!("probabilities sum to {sum}")));
        }
        Ok(BranchDistribution { probs })
    }

    /// Normalizes non-negative weights; all-zero weights become uniform.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            if weights.iter().all(|w| *w == 0.0) && !weights.is_empty() {
                return Ok(Self::uniform(weights.len()));
            }
            return Err(Error::Distribution(format!("cannot normalize {weights:?}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "a node needs at least one branch");
        BranchDistribution { probs: vec![1.0 / k as f64; k] }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Representative value of a leaf and its maximum recovery error.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafOutcome {
    pub representative: Value,
    pub worst_case_error: f64,
}

/// Traversal of one probability decision tree.
pub trait SquidCursor {
    fn is_end(&self) -> bool;

    fn generate_branch(&self) -> Result<BranchDistribution>;

    /// The unique child whose decision rule covers `v`.
    fn get_branch(&self, v: &Value) -> Result<usize>;

    fn choose_branch(&mut self, b: usize) -> Result<()>;

    fn get_result(&self) -> Result<LeafOutcome>;
}

pub(crate) fn at_leaf(what: &str) -> Error {
    Error::Cursor(format!("{what} called at a leaf"))
}

pub(crate) fn not_leaf() -> Error {
    Error::Cursor("get_result called before reaching a leaf".into())
}

/// Depth-one tree over a finite domain.
#[derive(Debug, Clone)]
pub struct CategoricalCursor<'a> {
    dist: &'a BranchDistribution,
    chosen: Option<usize>,
}

impl<'a> CategoricalCursor<'a> {
    pub fn new(dist: &'a BranchDistribution) -> Self {
        CategoricalCursor { dist, chosen: None }
    }
}

impl SquidCursor for CategoricalCursor<'_> {
    fn is_end(&self) -> bool {
        self.chosen.is_some()
    }

    fn generate_branch(&self) -> Result<BranchDistribution> {
        if self.is_end() {
            return Err(at_leaf("generate_branch"));
        }
        Ok(self.dist.clone())
    }

    fn get_branch(&self, v: &Value) -> Result<usize> {
        if self.is_end() {
            return Err(at_leaf("get_branch"));
        }
        match *v {
            Value::Cat(i) if i < self.dist.len() => Ok(i),
            ref other => Err(Error::Cursor(format!("{other:?} is outside a {}-way categorical node", self.dist.len()))),
        }
    }

    fn choose_branch(&mut self, b: usize) -> Result<()> {
        if self.is_end() {
            return Err(at_leaf("choose_branch"));
        }
        if b >= self.dist.len() {
            return Err(Error::Cursor(format!("branch {b} out of range ({} branches)", self.dist.len())));
        }
        self.chosen = Some(b);
        Ok(())
    }

    fn get_result(&self) -> Result<LeafOutcome> {
        let i = self.chosen.ok_or_else(not_leaf)?;
        Ok(LeafOutcome { representative: Value::Cat(i), worst_case_error: 0.0 })
    }
}

/// Walks `v` from the cursor's position to a leaf, returning the branch path.
pub fn descend(cursor: &mut dyn SquidCursor, v: &Value) -> Result<(Vec<usize>, LeafOutcome)> {
    let mut path = Vec::new();
    while !cursor.is_end() {
        let b = cursor.get_branch(v)?;
        cursor.choose_branch(b)?;
        path.push(b);
    }
    Ok((path, cursor.get_result()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_validation() {
        assert!(BranchDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(BranchDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(BranchDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(BranchDistribution::new(vec![0.0, 0.0]).is_err());
        assert!(BranchDistribution::new(vec![0.3, 0.7 + 5e-10]).is_ok());
    }

    #[test]
    fn categorical_depth_one() {
        let d = BranchDistribution::new(vec![0.5, 0.5]).unwrap();
        let mut c = CategoricalCursor::new(&d);
        assert!(!c.is_end());
        assert_eq!(c.generate_branch().unwrap().probabilities(), &[0.5, 0.5]);
        assert!(c.get_result().is_err());
        assert!(c.choose_branch(2).is_err());
        c.choose_branch(0).unwrap();
        assert!(c.is_end());
        assert!(c.generate_branch().is_err());
    }

    #[test]
    fn categorical_leaf_is_exact() {
        let d = BranchDistribution::uniform(3);
        let mut c = CategoricalCursor::new(&d);
        let (path, leaf) = descend(&mut c, &Value::Cat(2)).unwrap();
        assert_eq!(path, vec![2]);
        assert_eq!(leaf, LeafOutcome { representative: Value::Cat(2), worst_case_error: 0.0 });
    }
}
