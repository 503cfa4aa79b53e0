//! Schema, attribute values, tuples and the closeness contract.
//!
//! A decompressed dataset is correct when every recovered numeric value lies
//! within its column tolerance of the original (inclusive) and every other
//! value is recovered exactly.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};

/// Declared type of one column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AttributeKind {
    Categorical { size: usize },
    Numerical { integer: bool, range: Option<(f64, f64)> },
    String { max_len: Option<usize> },
}

impl AttributeKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttributeKind::Numerical { .. })
    }

    fn check(&self) -> std::result::Result<(), String> {
        match *self {
            AttributeKind::Categorical { size } if size == 0 => {
                Err("categorical domain must hold at least one value".into())
            }
            AttributeKind::Numerical { range: Some((lo, hi)), .. } if !(lo < hi) => {
                Err(format!("declared range [{lo}, {hi}] is empty"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub kind: AttributeKind,
    /// Maximum tolerated absolute error; always zero for non-numeric columns.
    pub tolerance: f64,
    /// Labels for categorical indices, in index order. May be empty.
    pub dictionary: Vec<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: AttributeKind, tolerance: f64) -> Self {
        Column { name: name.into(), kind, tolerance, dictionary: Vec::new() }
    }

    pub fn categorical(name: impl Into<String>, size: usize) -> Self {
        Column::new(name, AttributeKind::Categorical { size }, 0.0)
    }

    pub fn real(name: impl Into<String>, tolerance: f64) -> Self {
        Column::new(name, AttributeKind::Numerical { integer: false, range: None }, tolerance)
    }

    pub fn integer(name: impl Into<String>, tolerance: f64) -> Self {
        Column::new(name, AttributeKind::Numerical { integer: true, range: None }, tolerance)
    }

    pub fn string(name: impl Into<String>) -> Self {
        Column::new(name, AttributeKind::String { max_len: None }, 0.0)
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        if let AttributeKind::Numerical { range, .. } = &mut self.kind {
            *range = Some((lo, hi));
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
            c.kind.check().map_err(|r| Error::Schema(format!("column `{}`: {r}", c.name)))?;
            if !(c.tolerance >= 0.0 && c.tolerance.is_finite()) {
                return Err(Error::Schema(format!("column `{}`: tolerance must be finite and >= 0", c.name)));
            }
            if !c.kind.is_numeric() && c.tolerance != 0.0 {
                return Err(Error::Schema(format!(
                    "column `{}`: non-numeric columns must be recovered exactly (tolerance 0)",
                    c.name
                )));
            }
            if let AttributeKind::Categorical { size } = c.kind {
                if !c.dictionary.is_empty() && c.dictionary.len() != size {
                    return Err(Error::Schema(format!(
                        "column `{}`: dictionary has {} labels for domain size {size}",
                        c.name,
                        c.dictionary.len()
                    )));
                }
            }
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Cat(usize),
    Num(f64),
    Str(Vec<u8>),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match *self {
            Value::Num(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<usize> {
        match *self {
            Value::Cat(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

pub type Tuple = Vec<Value>;

/// Checks arity, variants and categorical bounds; names the first offending column.
pub fn validate_tuple(schema: &Schema, t: &[Value]) -> Result<()> {
    if t.len() != schema.len() {
        return Err(Error::Arity { expected: schema.len(), found: t.len() });
    }
    for (col, v) in schema.columns().iter().zip(t) {
        let bad = |reason: String| Error::Validation { column: col.name.clone(), reason };
        match (&col.kind, v) {
            (AttributeKind::Categorical { size }, Value::Cat(i)) => {
                if i >= size {
                    return Err(bad(format!("category index {i} out of range (domain size {size})")));
                }
            }
            (AttributeKind::Numerical { integer, .. }, Value::Num(x)) => {
                if !x.is_finite() {
                    return Err(bad(format!("non-finite value {x}")));
                }
                if *integer && x.fract() != 0.0 {
                    return Err(bad(format!("integer column holds {x}")));
                }
            }
            (AttributeKind::String { max_len }, Value::Str(s)) => {
                if let Some(max) = max_len {
                    if s.len() > *max {
                        return Err(bad(format!("string of length {} exceeds max {max}", s.len())));
                    }
                }
            }
            (kind, v) => return Err(bad(format!("value {v:?} does not match kind {kind:?}"))),
        }
    }
    Ok(())
}

/// True iff `recovered` is an acceptable reconstruction of `original`.
pub fn closeness_check(original: &[Value], recovered: &[Value], schema: &Schema) -> bool {
    if original.len() != schema.len() || recovered.len() != schema.len() {
        return false;
    }
    schema.columns().iter().zip(original.iter().zip(recovered)).all(|(col, (a, b))| match (a, b) {
        (Value::Num(x), Value::Num(y)) if col.kind.is_numeric() => (x - y).abs() <= col.tolerance,
        _ => a == b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Tuple>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Tuple>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            validate_tuple(&schema, row).map_err(|e| match e {
                Error::Validation { column, reason } => {
                    Error::Validation { column, reason: format!("row {i}: {reason}") }
                }
                other => other,
            })?;
        }
        Ok(Dataset { schema, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Observed value range of every column.
    pub fn domains(&self) -> Vec<ColumnDomain> {
        (0..self.schema.len()).map(|j| ColumnDomain::observe(self.schema.column(j), &self.rows, j)).collect()
    }
}

/// Observed extent of a column, used for tree roots and predictor binning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ColumnDomain {
    Categorical { size: usize },
    Numeric { min: f64, max: f64 },
    String { max_len: usize },
}

impl ColumnDomain {
    pub fn observe(col: &Column, rows: &[Tuple], j: usize) -> Self {
        match col.kind {
            AttributeKind::Categorical { size } => ColumnDomain::Categorical { size },
            AttributeKind::Numerical { .. } => {
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for r in rows {
                    if let Value::Num(x) = r[j] {
                        min = min.min(x);
                        max = max.max(x);
                    }
                }
                if min > max {
                    (min, max) = (0.0, 0.0);
                }
                ColumnDomain::Numeric { min, max }
            }
            AttributeKind::String { .. } => {
                let max_len = rows.iter().filter_map(|r| r[j].as_bytes()).map(<[u8]>::len).max().unwrap_or(0);
                ColumnDomain::String { max_len }
            }
        }
    }
}
