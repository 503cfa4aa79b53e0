//! Unbounded tree over positive reals with geometric leaf probabilities.
//!
//! Node `k` tests `x <= k` against `x > k`; the left child is the leaf
//! `(k - 1, k]`, the right child is node `k + 1`. With stop probability `q`
//! the leaf `(k - 1, k]` gets mass `q (1 - q)^(k - 1)`.

use crate::error::{Error, Result};
use crate::schema::Value;
use crate::squid::{at_leaf, not_leaf, BranchDistribution, LeafOutcome, SquidCursor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricTree {
    stop: f64,
}

impl Default for GeometricTree {
    fn default() -> Self {
        GeometricTree { stop: 0.1 }
    }
}

impl GeometricTree {
    pub fn new(stop: f64) -> Result<Self> {
        if !(stop > 0.0 && stop < 1.0) {
            return Err(Error::Config(format!("stop probability {stop} must lie in (0, 1)")));
        }
        Ok(GeometricTree { stop })
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn cursor(&self) -> GeometricCursor {
        GeometricCursor { stop: self.stop, node: 1, leaf: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricCursor {
    stop: f64,
    node: u64,
    leaf: bool,
}

impl GeometricCursor {
    /// Threshold `k` of the current node, or the upper end of the leaf.
    pub fn node(&self) -> u64 {
        self.node
    }

    /// Human-readable decision rules of the current node.
    pub fn rules(&self) -> Option<[String; 2]> {
        (!self.leaf).then(|| [format!("x <= {}", self.node), format!("x > {}", self.node)])
    }
}

impl SquidCursor for GeometricCursor {
    fn is_end(&self) -> bool {
        self.leaf
    }

    fn generate_branch(&self) -> Result<BranchDistribution> {
        if self.leaf {
            return Err(at_leaf("generate_branch"));
        }
        BranchDistribution::new(vec![self.stop, 1.0 - self.stop])
    }

    fn get_branch(&self, v: &Value) -> Result<usize> {
        if self.leaf {
            return Err(at_leaf("get_branch"));
        }
        let x = v.as_num().ok_or_else(|| Error::Cursor(format!("{v:?} is not numeric")))?;
        if !(x > (self.node - 1) as f64) {
            return Err(Error::Cursor(format!("{x} is not covered by node {}", self.node)));
        }
        Ok(if x <= self.node as f64 { 0 } else { 1 })
    }

    fn choose_branch(&mut self, b: usize) -> Result<()> {
        if self.leaf {
            return Err(at_leaf("choose_branch"));
        }
        match b {
            0 => self.leaf = true,
            1 => self.node += 1,
            _ => return Err(Error::Cursor(format!("branch {b} out of range (2 branches)"))),
        }
        Ok(())
    }

    fn get_result(&self) -> Result<LeafOutcome> {
        if !self.leaf {
            return Err(not_leaf());
        }
        Ok(LeafOutcome { representative: Value::Num(self.node as f64 - 0.5), worst_case_error: 0.5 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::squid::descend;

    #[test]
    fn two_right_turns_reach_node_three() {
        let mut c = GeometricTree::default().cursor();
        c.choose_branch(1).unwrap();
        c.choose_branch(1).unwrap();
        assert_eq!(c.rules().unwrap(), ["x <= 3".to_string(), "x > 3".to_string()]);
    }

    #[test]
    fn leaf_law_is_geometric() {
        let tree = GeometricTree::default();
        for k in 1..=20u64 {
            let mut c = tree.cursor();
            let mut p = 1.0;
            let x = Value::Num(k as f64 - 0.25);
            while !c.is_end() {
                let b = c.get_branch(&x).unwrap();
                p *= c.generate_branch().unwrap().probabilities()[b];
                c.choose_branch(b).unwrap();
            }
            let expect = 0.1 * 0.9f64.powi(k as i32 - 1);
            assert!((p - expect).abs() < 1e-12, "k={k}: {p} vs {expect}");
            let out = c.get_result().unwrap();
            assert_eq!(out.representative, Value::Num(k as f64 - 0.5));
            assert_eq!(out.worst_case_error, 0.5);
        }
    }

    #[test]
    fn boundary_goes_left() {
        let mut c = GeometricTree::default().cursor();
        let (path, _) = descend(&mut c, &Value::Num(2.0)).unwrap();
        assert_eq!(path, vec![1, 0]);
    }
}
