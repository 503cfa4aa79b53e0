//! Per-column conditional models.
//!
//! A [`ModelBuilder`] reads training tuples, [`ModelBuilder::end_of_data`]
//! freezes the parameters into a [`FittedModel`], and the fitted model hands
//! out probability trees conditioned on the interpreted parent values. All
//! stored parameters are single precision and every distribution used for
//! coding is derived from the stored form, so a model read back from bytes
//! yields bit-identical trees.

mod categorical;
mod context;
mod numeric;
mod serial;
mod string;

pub use categorical::CategoricalTable;
pub use context::{ContextLayout, ParentContext, Predictor};
pub use numeric::{law_from_params, scale_floor, LawKind, NumericFamily};
pub use serial::{read_model, write_model};
pub use string::StringModel;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::schema::{validate_tuple, AttributeKind, ColumnDomain, Schema, Value};
use crate::squid::{
    BigramModel, BisectionCursor, BisectionSpec, BisectionTree, BranchDistribution, CategoricalCursor, LeafOutcome,
    NumericLaw, SquidCursor, StringCursor, StringTree,
};

/// Bits charged per stored parameter.
pub const BITS_PER_PARAMETER: f64 = 32.0;

/// Description length of a model and of the data under it.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ModelCost {
    pub model_bits: f64,
    pub data_bits: f64,
}

impl ModelCost {
    pub const INFINITE: ModelCost = ModelCost { model_bits: f64::INFINITY, data_bits: f64::INFINITY };

    pub fn total(&self) -> f64 {
        self.model_bits + self.data_bits
    }
}

/// Training knobs shared by all model families.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    /// Additive smoothing for categorical counts.
    pub alpha: f64,
    /// Equal-width bins used when a numeric or string column is a parent.
    pub bins: usize,
    pub context_cap: usize,
    pub numeric_families: Vec<LawKind>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { alpha: 1.0, bins: 8, context_cap: ContextLayout::DEFAULT_CAP, numeric_families: LawKind::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    CategoricalTable(CategoricalTable),
    NumericFamily(NumericFamily),
    StringModel(StringModel),
}

static EMPTY_LAYOUT: ContextLayout = ContextLayout::EMPTY;

impl FittedModel {
    pub fn target(&self) -> usize {
        match self {
            FittedModel::CategoricalTable(m) => m.target,
            FittedModel::NumericFamily(m) => m.target,
            FittedModel::StringModel(m) => m.target,
        }
    }

    pub fn layout(&self) -> &ContextLayout {
        match self {
            FittedModel::CategoricalTable(m) => &m.layout,
            FittedModel::NumericFamily(m) => &m.layout,
            FittedModel::StringModel(_) => &EMPTY_LAYOUT,
        }
    }

    pub fn parents(&self) -> Vec<usize> {
        self.layout().columns()
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            FittedModel::CategoricalTable(m) => m.parameter_count(),
            FittedModel::NumericFamily(m) => m.parameter_count(),
            FittedModel::StringModel(m) => m.parameter_count(),
        }
    }

    /// Training rows the model was fitted on.
    pub fn rows(&self) -> u64 {
        match self {
            FittedModel::CategoricalTable(m) => m.rows,
            FittedModel::NumericFamily(m) => m.rows,
            FittedModel::StringModel(m) => m.rows,
        }
    }

    /// Model bits (32 per stored parameter) and training-data bits.
    pub fn cost(&self) -> ModelCost {
        let data_bits = match self {
            FittedModel::CategoricalTable(m) => m.data_bits,
            FittedModel::NumericFamily(m) => m.data_bits,
            FittedModel::StringModel(m) => m.data_bits,
        };
        ModelCost { model_bits: BITS_PER_PARAMETER * self.parameter_count() as f64, data_bits }
    }

    pub fn family(&self) -> &'static str {
        match self {
            FittedModel::CategoricalTable(_) => "categorical",
            FittedModel::NumericFamily(m) => m.kind().name(),
            FittedModel::StringModel(_) => "string",
        }
    }

    pub fn get_prob_tree(&self, ctx: &ParentContext) -> Result<ProbTree<'_>> {
        let idx = self.layout().index(ctx)?;
        Ok(self.tree_at(idx))
    }

    /// Tree for the context found in a full tuple (only parent columns are read).
    pub fn tree_for_tuple(&self, tuple: &[Value]) -> Result<ProbTree<'_>> {
        let idx = self.layout().index_of_tuple(tuple)?;
        Ok(self.tree_at(idx))
    }

    /// Tree for a context index as numbered by [`ContextLayout::combine`].
    pub fn tree_at(&self, ctx: u32) -> ProbTree<'_> {
        match self {
            FittedModel::CategoricalTable(m) => ProbTree::Categorical(m.distribution(ctx)),
            FittedModel::NumericFamily(m) => ProbTree::Numeric(m.tree(ctx)),
            FittedModel::StringModel(m) => ProbTree::String(m.tree()),
        }
    }
}

/// A probability tree handed out for one parent context.
#[derive(Debug, Clone)]
pub enum ProbTree<'a> {
    Categorical(&'a BranchDistribution),
    Numeric(BisectionTree<NumericLaw>),
    String(&'a StringTree<BigramModel>),
}

impl ProbTree<'_> {
    pub fn cursor(&self) -> TreeCursor<'_> {
        match self {
            ProbTree::Categorical(d) => TreeCursor::Categorical(CategoricalCursor::new(d)),
            ProbTree::Numeric(t) => TreeCursor::Numeric(t.cursor()),
            ProbTree::String(t) => TreeCursor::String(t.cursor()),
        }
    }

    /// Root range of a numeric tree.
    pub fn numeric_spec(&self) -> Option<&BisectionSpec> {
        match self {
            ProbTree::Numeric(t) => Some(&t.spec),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum TreeCursor<'a> {
    Categorical(CategoricalCursor<'a>),
    Numeric(BisectionCursor<'a, NumericLaw>),
    String(StringCursor<'a, BigramModel>),
}

macro_rules! delegate {
    ($self:ident, $c:ident => $e:expr) => {
        match $self {
            TreeCursor::Categorical($c) => $e,
            TreeCursor::Numeric($c) => $e,
            TreeCursor::String($c) => $e,
        }
    };
}

impl SquidCursor for TreeCursor<'_> {
    fn is_end(&self) -> bool {
        delegate!(self, c => c.is_end())
    }

    fn generate_branch(&self) -> Result<BranchDistribution> {
        delegate!(self, c => c.generate_branch())
    }

    fn get_branch(&self, v: &Value) -> Result<usize> {
        delegate!(self, c => c.get_branch(v))
    }

    fn choose_branch(&mut self, b: usize) -> Result<()> {
        delegate!(self, c => c.choose_branch(b))
    }

    fn get_result(&self) -> Result<LeafOutcome> {
        delegate!(self, c => c.get_result())
    }
}

/// One training observation of the target, already reduced for its family.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Observation<'a> {
    Cat(usize),
    /// A numeric value and the leaf range it falls in.
    Num(f64, (f64, f64)),
    Str(&'a [u8]),
}

#[derive(Debug)]
enum Stats {
    Categorical { size: usize, slots: Vec<u32>, counts: Vec<(u32, Vec<u64>)> },
    Numeric { spec: BisectionSpec, slots: Vec<u32>, groups: Vec<numeric::Group> },
    String { lengths: Vec<u64>, chars: BigramModel },
}

/// Tree root of a numeric column from its declared range or observed domain.
pub fn numeric_spec(schema: &Schema, domains: &[ColumnDomain], target: usize) -> Result<BisectionSpec> {
    let col = schema.column(target);
    match (&col.kind, domains.get(target)) {
        (AttributeKind::Numerical { integer, range }, Some(&ColumnDomain::Numeric { min, max })) => {
            BisectionSpec::for_domain(min, max, col.tolerance, *integer, *range).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("column `{}`: {msg}", col.name)),
                other => other,
            })
        }
        _ => Err(Error::Schema(format!("column `{}` has no numeric domain", col.name))),
    }
}

/// Maximum string length a column's tree must cover.
pub fn string_max_len(schema: &Schema, domains: &[ColumnDomain], target: usize) -> usize {
    let declared = match schema.column(target).kind {
        AttributeKind::String { max_len } => max_len,
        _ => None,
    };
    let observed = match domains.get(target) {
        Some(&ColumnDomain::String { max_len }) => max_len,
        _ => 0,
    };
    declared.unwrap_or(observed).max(observed)
}

/// Training state for one target column and parent set.
#[derive(Debug)]
pub struct ModelBuilder {
    schema: Arc<Schema>,
    target: usize,
    layout: ContextLayout,
    alpha: f64,
    families: Vec<LawKind>,
    stats: Stats,
    closed: bool,
}

impl ModelBuilder {
    pub fn new(schema: &Schema, domains: &[ColumnDomain], target: usize, parents: &[usize], opts: &ModelOptions) -> Result<Self> {
        if target >= schema.len() || domains.len() != schema.len() {
            return Err(Error::Schema(format!("target {target} / {} domains for {} columns", domains.len(), schema.len())));
        }
        let mut predictors = Vec::with_capacity(parents.len());
        for &p in parents {
            if p >= schema.len() || p == target {
                return Err(Error::Structure(format!("invalid parent {p} for column {target}")));
            }
            predictors.push(Predictor::for_column(p, schema.column(p), &domains[p], opts.bins)?);
        }
        let layout = ContextLayout::new(predictors, opts.context_cap)?;
        Self::with_layout(Arc::new(schema.clone()), domains, target, layout, opts)
    }

    pub(crate) fn with_layout(
        schema: Arc<Schema>,
        domains: &[ColumnDomain],
        target: usize,
        layout: ContextLayout,
        opts: &ModelOptions,
    ) -> Result<Self> {
        let configs = layout.configs();
        let stats = match schema.column(target).kind {
            AttributeKind::Categorical { size } => Stats::Categorical { size, slots: vec![0; configs], counts: Vec::new() },
            AttributeKind::Numerical { .. } => {
                Stats::Numeric { spec: numeric_spec(&schema, domains, target)?, slots: vec![0; configs], groups: Vec::new() }
            }
            AttributeKind::String { .. } => {
                if !layout.predictors().is_empty() {
                    return Err(Error::Structure(format!(
                        "string column `{}` cannot be conditioned on parents",
                        schema.column(target).name
                    )));
                }
                let max_len = string_max_len(&schema, domains, target);
                Stats::String { lengths: vec![0; max_len + 1], chars: BigramModel::default() }
            }
        };
        if opts.numeric_families.is_empty() {
            return Err(Error::Config("at least one numeric family is required".into()));
        }
        Ok(ModelBuilder {
            schema,
            target,
            layout,
            alpha: opts.alpha,
            families: opts.numeric_families.clone(),
            stats,
            closed: false,
        })
    }

    pub fn layout(&self) -> &ContextLayout {
        &self.layout
    }

    /// Leaf range a numeric target value falls in, when the target is numeric.
    pub fn numeric_spec(&self) -> Option<&BisectionSpec> {
        match &self.stats {
            Stats::Numeric { spec, .. } => Some(spec),
            _ => None,
        }
    }

    pub fn read_tuple(&mut self, t: &[Value]) -> Result<()> {
        if self.closed {
            return Err(Error::Lifecycle("read_tuple after end_of_data"));
        }
        validate_tuple(&self.schema, t)?;
        let ctx = self.layout.index_of_tuple(t)?;
        let v = &t[self.target];
        let obs = match (&self.stats, v) {
            (Stats::Categorical { .. }, Value::Cat(i)) => Observation::Cat(*i),
            (Stats::Numeric { spec, .. }, Value::Num(x)) => Observation::Num(*x, spec.locate(*x)),
            (Stats::String { .. }, Value::Str(s)) => Observation::Str(s),
            _ => unreachable!("validated tuple"),
        };
        self.observe(ctx, obs)
    }

    pub(crate) fn observe(&mut self, ctx: u32, obs: Observation<'_>) -> Result<()> {
        if self.closed {
            return Err(Error::Lifecycle("read_tuple after end_of_data"));
        }
        match (&mut self.stats, obs) {
            (Stats::Categorical { size, slots, counts }, Observation::Cat(i)) => {
                let slot = &mut slots[ctx as usize];
                if *slot == 0 {
                    counts.push((ctx, vec![0; *size]));
                    *slot = counts.len() as u32;
                }
                counts[*slot as usize - 1].1[i] += 1;
            }
            (Stats::Numeric { slots, groups, .. }, Observation::Num(x, leaf)) => {
                let slot = &mut slots[ctx as usize];
                if *slot == 0 {
                    groups.push((ctx, Vec::new()));
                    *slot = groups.len() as u32;
                }
                groups[*slot as usize - 1].1.push((x, leaf));
            }
            (Stats::String { lengths, chars }, Observation::Str(s)) => {
                let slot = lengths
                    .get_mut(s.len())
                    .ok_or_else(|| Error::Validation { column: self.schema.column(self.target).name.clone(), reason: format!("string of length {} exceeds the model", s.len()) })?;
                *slot += 1;
                chars.observe(s);
            }
            (_, obs) => return Err(Error::Cursor(format!("observation {obs:?} does not fit the target column"))),
        }
        Ok(())
    }

    pub fn end_of_data(&mut self) -> Result<FittedModel> {
        if self.closed {
            return Err(Error::Lifecycle("end_of_data called twice"));
        }
        self.closed = true;
        let stats = std::mem::replace(&mut self.stats, Stats::Categorical { size: 0, slots: Vec::new(), counts: Vec::new() });
        let layout = self.layout.clone();
        match stats {
            Stats::Categorical { size, counts, .. } => {
                if counts.is_empty() {
                    return Err(Error::EmptyData);
                }
                Ok(FittedModel::CategoricalTable(CategoricalTable::fit(self.target, layout, size, self.alpha, counts)?))
            }
            Stats::Numeric { spec, mut groups, .. } => {
                if groups.is_empty() {
                    return Err(Error::EmptyData);
                }
                groups.sort_by_key(|g| g.0);
                let m = NumericFamily::fit_families(self.target, layout, spec, &mut groups, &self.families)?;
                Ok(FittedModel::NumericFamily(m))
            }
            Stats::String { lengths, chars } => {
                if lengths.iter().all(|&c| c == 0) {
                    return Err(Error::EmptyData);
                }
                Ok(FittedModel::StringModel(StringModel::fit(self.target, lengths, chars)?))
            }
        }
    }
}

/// Fits one column's model on `rows`.
pub fn fit_model(
    schema: &Schema,
    domains: &[ColumnDomain],
    rows: &[Vec<Value>],
    target: usize,
    parents: &[usize],
    opts: &ModelOptions,
) -> Result<FittedModel> {
    let mut b = ModelBuilder::new(schema, domains, target, parents, opts)?;
    for r in rows {
        b.read_tuple(r)?;
    }
    b.end_of_data()
}
