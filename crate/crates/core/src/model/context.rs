use crate::error::{Error, Result};
use crate::schema::{AttributeKind, Column, ColumnDomain, Value};
use crate::squid::Interpreter;

/// Interpreted parent values of one tuple, in parent order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentContext(pub Vec<Value>);

impl ParentContext {
    pub fn empty() -> Self {
        ParentContext(Vec::new())
    }
}

/// One parent column and the interpreter that turns it into a category.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub column: usize,
    pub interpreter: Interpreter,
    pub categories: usize,
}

impl Predictor {
    /// Identity for categorical columns, equal-width bins over the observed
    /// range for numbers and over the length for strings.
    pub fn for_column(column: usize, col: &Column, domain: &ColumnDomain, bins: usize) -> Result<Self> {
        let interpreter = match (&col.kind, domain) {
            (AttributeKind::Categorical { .. }, _) => Interpreter::Identity,
            (AttributeKind::Numerical { .. }, &ColumnDomain::Numeric { min, max }) => {
                Interpreter::binning(min, max, bins)?
            }
            (AttributeKind::String { .. }, &ColumnDomain::String { max_len }) => {
                Interpreter::length_binning(max_len, bins)?
            }
            _ => return Err(Error::Schema(format!("domain {domain:?} does not fit column `{}`", col.name))),
        };
        let size = match col.kind {
            AttributeKind::Categorical { size } => Some(size),
            _ => None,
        };
        let categories = interpreter
            .categories(size)
            .ok_or_else(|| Error::Config(format!("interpreter for `{}` is not categorical", col.name)))?;
        Ok(Predictor { column, interpreter, categories })
    }

    pub fn code(&self, v: &Value) -> Result<u32> {
        match self.interpreter.interpret(v)? {
            Value::Cat(i) if i < self.categories => Ok(i as u32),
            other => Err(Error::Cursor(format!("parent value {other:?} outside {} categories", self.categories))),
        }
    }
}

/// Mixed-radix numbering of parent configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextLayout {
    predictors: Vec<Predictor>,
    configs: usize,
}

impl Default for ContextLayout {
    fn default() -> Self {
        Self::EMPTY
    }
}

impl ContextLayout {
    pub const DEFAULT_CAP: usize = 4096;

    /// No parents: a single configuration.
    pub const EMPTY: ContextLayout = ContextLayout { predictors: Vec::new(), configs: 1 };

    pub fn new(predictors: Vec<Predictor>, cap: usize) -> Result<Self> {
        let mut configs = 1usize;
        for p in &predictors {
            if p.categories == 0 {
                return Err(Error::Config(format!("predictor on column {} has no categories", p.column)));
            }
            configs = configs.saturating_mul(p.categories);
        }
        if configs > cap {
            return Err(Error::Structure(format!("{configs} parent configurations exceed the cap of {cap}")));
        }
        Ok(ContextLayout { predictors, configs })
    }

    pub fn predictors(&self) -> &[Predictor] {
        &self.predictors
    }

    pub fn columns(&self) -> Vec<usize> {
        self.predictors.iter().map(|p| p.column).collect()
    }

    pub fn configs(&self) -> usize {
        self.configs
    }

    /// Combines per-parent codes, first parent most significant.
    pub fn combine(&self, codes: impl IntoIterator<Item = u32>) -> u32 {
        let mut idx = 0u32;
        for (c, p) in codes.into_iter().zip(&self.predictors) {
            idx = idx * p.categories as u32 + c;
        }
        idx
    }

    pub fn index(&self, ctx: &ParentContext) -> Result<u32> {
        if ctx.0.len() != self.predictors.len() {
            return Err(Error::Arity { expected: self.predictors.len(), found: ctx.0.len() });
        }
        let mut codes = Vec::with_capacity(ctx.0.len());
        for (v, p) in ctx.0.iter().zip(&self.predictors) {
            match *v {
                Value::Cat(i) if i < p.categories => codes.push(i as u32),
                ref other => {
                    return Err(Error::Cursor(format!("context value {other:?} outside {} categories", p.categories)))
                }
            }
        }
        Ok(self.combine(codes))
    }

    /// Interprets the parent values found in a full tuple.
    pub fn context_of(&self, tuple: &[Value]) -> Result<ParentContext> {
        self.predictors
            .iter()
            .map(|p| {
                let v = tuple.get(p.column).ok_or(Error::Arity { expected: p.column + 1, found: tuple.len() })?;
                Ok(Value::Cat(p.code(v)? as usize))
            })
            .collect::<Result<_>>()
            .map(ParentContext)
    }

    pub fn index_of_tuple(&self, tuple: &[Value]) -> Result<u32> {
        let mut idx = 0u32;
        for p in &self.predictors {
            let v = tuple.get(p.column).ok_or(Error::Arity { expected: p.column + 1, found: tuple.len() })?;
            idx = idx * p.categories as u32 + p.code(v)?;
        }
        Ok(idx)
    }
}
