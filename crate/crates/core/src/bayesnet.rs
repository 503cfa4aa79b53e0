//! Greedy structure learning over the columns of a dataset.
//!
//! Columns join a growing seed set one at a time. In every round each
//! remaining column greedily collects parents from the seed set while its
//! description length keeps dropping, and the column with the cheapest
//! result joins the seed. Parents are always drawn from the seed, so the
//! graph is acyclic by construction.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{numeric_spec, ContextLayout, FittedModel, ModelBuilder, ModelCost, ModelOptions, Observation, Predictor};
use crate::schema::{AttributeKind, ColumnDomain, Dataset, Schema};

/// Parent sets of every column plus a topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BayesNetStructure {
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl BayesNetStructure {
    /// Validates the parent sets and derives a topological order (smallest ready column first).
    pub fn new(parents: Vec<Vec<usize>>) -> Result<Self> {
        let m = parents.len();
        let mut children = vec![Vec::new(); m];
        let mut indegree = vec![0usize; m];
        for (j, ps) in parents.iter().enumerate() {
            for (k, &p) in ps.iter().enumerate() {
                if p >= m {
                    return Err(Error::Structure(format!("column {j} has parent {p} outside {m} columns")));
                }
                if p == j {
                    return Err(Error::Structure(format!("column {j} is its own parent")));
                }
                if ps[..k].contains(&p) {
                    return Err(Error::Structure(format!("column {j} lists parent {p} twice")));
                }
                children[p].push(j);
                indegree[j] += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..m).filter(|&j| indegree[j] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(m);
        while let Some(Reverse(j)) = ready.pop() {
            order.push(j);
            for &c in &children[j] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if order.len() != m {
            return Err(Error::Structure("parent relation has a cycle".into()));
        }
        Ok(BayesNetStructure { parents, order })
    }

    /// No edges at all.
    pub fn empty(m: usize) -> Self {
        BayesNetStructure { parents: vec![Vec::new(); m], order: (0..m).collect() }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, j: usize) -> &[usize] {
        &self.parents[j]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Directed edges `(parent, child)`, by child then parent position.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents.iter().enumerate().flat_map(|(j, ps)| ps.iter().map(move |&p| (p, j))).collect()
    }

    /// Parses lines of the form `child: parent, parent` using column names.
    /// Blank lines and `#` comments are ignored; unlisted columns get no parents.
    pub fn parse(text: &str, schema: &Schema) -> Result<Self> {
        let mut parents = vec![Vec::new(); schema.len()];
        let mut seen = vec![false; schema.len()];
        let lookup = |name: &str, line: usize| {
            schema.index_of(name).ok_or_else(|| Error::Parse { line: line as u64, reason: format!("unknown column `{name}`") })
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (child, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: i as u64 + 1, reason: "expected `child: parents`".into() })?;
            let c = lookup(child.trim(), i + 1)?;
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::Parse { line: i as u64 + 1, reason: format!("column `{}` listed twice", child.trim()) });
            }
            for p in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                parents[c].push(lookup(p, i + 1)?);
            }
        }
        Self::new(parents)
    }

    /// Inverse of [`BayesNetStructure::parse`]; every column gets a line.
    pub fn to_text(&self, schema: &Schema) -> String {
        let mut out = String::new();
        for (j, ps) in self.parents.iter().enumerate() {
            let names: Vec<&str> = ps.iter().map(|&p| schema.column(p).name.as_str()).collect();
            out.push_str(&format!("{}: {}\n", schema.column(j).name, names.join(", ")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSearchConfig {
    pub sample_rows: usize,
    pub max_parents: usize,
    pub seed: u64,
    /// Draw the sample uniformly at random instead of taking the first rows.
    pub random_sample: bool,
    /// Cache candidate costs across rounds.
    pub memoize: bool,
    pub model: ModelOptions,
}

impl Default for StructureSearchConfig {
    fn default() -> Self {
        StructureSearchConfig {
            sample_rows: 2000,
            max_parents: 4,
            seed: 0,
            random_sample: false,
            memoize: false,
            model: ModelOptions::default(),
        }
    }
}

#[derive(Debug)]
enum TargetData {
    Cat(Vec<u32>),
    /// `(row, value, leaf)` sorted by value, so every context's group arrives sorted.
    Num(Vec<(u32, f64, (f64, f64))>),
    Str(Vec<Vec<u8>>),
}

#[derive(Debug)]
struct ColumnData {
    predictor: Predictor,
    codes: Vec<u32>,
    target: TargetData,
}

/// Rows prepared for repeated model fitting: every column's parent code and
/// target observation are computed once.
#[derive(Debug)]
pub struct Sample {
    schema: Arc<Schema>,
    domains: Vec<ColumnDomain>,
    columns: Vec<ColumnData>,
    bins: usize,
    rows: usize,
}

impl Sample {
    /// Prepares `rows` (indices into the dataset) under the dataset-wide domains.
    pub fn new(dataset: &Dataset, domains: &[ColumnDomain], rows: &[usize], opts: &ModelOptions) -> Result<Self> {
        let schema = &dataset.schema;
        let mut columns = Vec::with_capacity(schema.len());
        for j in 0..schema.len() {
            let predictor = Predictor::for_column(j, schema.column(j), &domains[j], opts.bins)?;
            let mut codes = Vec::with_capacity(rows.len());
            for &r in rows {
                codes.push(predictor.code(&dataset.rows[r][j])?);
            }
            let target = match schema.column(j).kind {
                AttributeKind::Categorical { .. } => {
                    TargetData::Cat(rows.iter().map(|&r| dataset.rows[r][j].as_cat().unwrap_or(0) as u32).collect())
                }
                AttributeKind::Numerical { .. } => {
                    let spec = numeric_spec(schema, domains, j)?;
                    let mut v: Vec<(u32, f64, (f64, f64))> = rows
                        .iter()
                        .enumerate()
                        .map(|(i, &r)| {
                            let x = dataset.rows[r][j].as_num().unwrap_or(0.0);
                            (i as u32, x, spec.locate(x))
                        })
                        .collect();
                    v.sort_by(|a, b| a.1.total_cmp(&b.1));
                    TargetData::Num(v)
                }
                AttributeKind::String { .. } => TargetData::Str(
                    rows.iter().map(|&r| dataset.rows[r][j].as_bytes().unwrap_or_default().to_vec()).collect(),
                ),
            };
            columns.push(ColumnData { predictor, codes, target });
        }
        Ok(Sample { schema: Arc::new(schema.clone()), domains: domains.to_vec(), columns, bins: opts.bins, rows: rows.len() })
    }

    /// All rows of the dataset.
    pub fn full(dataset: &Dataset, domains: &[ColumnDomain], opts: &ModelOptions) -> Result<Self> {
        Self::new(dataset, domains, &(0..dataset.len()).collect::<Vec<_>>(), opts)
    }

    /// The structure-learning sample selected by `cfg`.
    pub fn select(dataset: &Dataset, domains: &[ColumnDomain], cfg: &StructureSearchConfig) -> Result<Self> {
        let n = dataset.len();
        let k = cfg.sample_rows.min(n);
        let rows: Vec<usize> = if cfg.random_sample && k < n {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..k).collect()
        };
        Self::new(dataset, domains, &rows, &cfg.model)
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Fits `target` given `parents` on the sample.
    pub fn fit(&self, target: usize, parents: &[usize], opts: &ModelOptions) -> Result<FittedModel> {
        if target >= self.columns.len() {
            return Err(Error::Structure(format!("column {target} out of range")));
        }
        let mut preds = Vec::with_capacity(parents.len());
        for &p in parents {
            if p >= self.columns.len() || p == target {
                return Err(Error::Structure(format!("invalid parent {p} for column {target}")));
            }
            let mut pred = self.columns[p].predictor.clone();
            if opts.bins != self.bins {
                pred = Predictor::for_column(p, self.schema.column(p), &self.domains[p], opts.bins)?;
            }
            preds.push(pred);
        }
        let layout = ContextLayout::new(preds, opts.context_cap)?;
        let mut b = ModelBuilder::with_layout(self.schema.clone(), &self.domains, target, layout, opts)?;
        let parent_cols: Vec<&ColumnData> = parents.iter().map(|&p| &self.columns[p]).collect();
        let radix: Vec<u32> = parent_cols.iter().map(|c| c.predictor.categories as u32).collect();
        let ctx = |r: usize| parent_cols.iter().zip(&radix).fold(0u32, |acc, (c, &k)| acc * k + c.codes[r]);
        match &self.columns[target].target {
            TargetData::Cat(v) => {
                for (r, &x) in v.iter().enumerate() {
                    b.observe(ctx(r), Observation::Cat(x as usize))?;
                }
            }
            TargetData::Num(v) => {
                for &(r, x, leaf) in v {
                    b.observe(ctx(r as usize), Observation::Num(x, leaf))?;
                }
            }
            TargetData::Str(v) => {
                for s in v {
                    b.observe(0, Observation::Str(s))?;
                }
            }
        }
        b.end_of_data()
    }
}

/// Total description length of `target` given `parents` on the sample;
/// infinite when the parent set is not admissible (context cap, string target).
pub fn compute_obj(target: usize, parents: &[usize], sample: &Sample, opts: &ModelOptions) -> ModelCost {
    match sample.fit(target, parents, opts) {
        Ok(m) => m.cost(),
        Err(_) => ModelCost::INFINITE,
    }
}

/// Outcome of a structure search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub structure: BayesNetStructure,
    /// Columns in the order they joined the seed set.
    pub seed_order: Vec<usize>,
    /// Candidate cost evaluations performed (cache hits excluded).
    pub evaluations: u64,
}

struct Evaluator<'a> {
    sample: &'a Sample,
    opts: &'a ModelOptions,
    count: AtomicU64,
    cache: Option<Mutex<HashMap<(usize, Vec<usize>), f64>>>,
}

impl Evaluator<'_> {
    fn obj(&self, target: usize, parents: &[usize]) -> f64 {
        if let Some(cache) = &self.cache {
            let mut key = parents.to_vec();
            key.sort_unstable();
            if let Some(&v) = cache.lock().unwrap().get(&(target, key.clone())) {
                return v;
            }
            let v = self.eval(target, parents);
            cache.lock().unwrap().insert((target, key), v);
            return v;
        }
        self.eval(target, parents)
    }

    fn eval(&self, target: usize, parents: &[usize]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        compute_obj(target, parents, self.sample, self.opts).total()
    }

    /// Greedy parent growth for one column; returns (score, parents).
    fn grow(&self, j: usize, seed: &[usize], max_parents: usize) -> (f64, Vec<usize>) {
        let mut parent = Vec::new();
        let mut best_score = self.obj(j, &parent);
        while parent.len() < max_parents {
            let mut best: Option<usize> = None;
            for &k in seed {
                if parent.contains(&k) {
                    continue;
                }
                let mut candidate = parent.clone();
                candidate.push(k);
                let t = self.obj(j, &candidate);
                if t < best_score {
                    best_score = t;
                    best = Some(k);
                }
            }
            match best {
                Some(k) => parent.push(k),
                None => break,
            }
        }
        (best_score, parent)
    }
}

/// Greedy structure search on a prepared sample.
pub fn learn_structure(sample: &Sample, cfg: &StructureSearchConfig) -> Result<SearchOutcome> {
    let m = sample.width();
    if sample.is_empty() && m > 0 {
        return Err(Error::EmptyData);
    }
    let ev = Evaluator {
        sample,
        opts: &cfg.model,
        count: AtomicU64::new(0),
        cache: cfg.memoize.then(|| Mutex::new(HashMap::new())),
    };
    let mut parents = vec![Vec::new(); m];
    let mut seeded = vec![false; m];
    let mut seed: Vec<usize> = Vec::with_capacity(m);
    for _ in 0..m {
        let candidates: Vec<usize> = (0..m).filter(|&j| !seeded[j]).collect();
        let results: Vec<(f64, Vec<usize>)> =
            candidates.par_iter().map(|&j| ev.grow(j, &seed, cfg.max_parents)).collect();
        let mut best = 0;
        for i in 1..results.len() {
            if results[i].0 < results[best].0 {
                best = i;
            }
        }
        let j = candidates[best];
        parents[j] = results[best].1.clone();
        seeded[j] = true;
        seed.push(j);
    }
    let structure = BayesNetStructure::new(parents)?;
    Ok(SearchOutcome { structure, seed_order: seed, evaluations: ev.count.load(Ordering::Relaxed) })
}

/// Refits every column with its assigned parents on all rows.
pub fn fit_full(dataset: &Dataset, domains: &[ColumnDomain], structure: &BayesNetStructure, opts: &ModelOptions) -> Result<Vec<FittedModel>> {
    if structure.len() != dataset.schema.len() {
        return Err(Error::Structure(format!(
            "structure covers {} columns, schema has {}",
            structure.len(),
            dataset.schema.len()
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyData);
    }
    let full = Sample::full(dataset, domains, opts)?;
    (0..structure.len()).into_par_iter().map(|j| full.fit(j, structure.parents(j), opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Column, Value};
    use rand::Rng;

    fn binary_schema(m: usize) -> Schema {
        Schema::new((0..m).map(|i| Column::categorical(format!("a{i}"), 2)).collect()).unwrap()
    }

    fn dataset(schema: Schema, rows: Vec<Vec<usize>>) -> Dataset {
        Dataset::new(schema, rows.into_iter().map(|r| r.into_iter().map(Value::Cat).collect()).collect()).unwrap()
    }

    fn sample_of(d: &Dataset) -> Sample {
        Sample::full(d, &d.domains(), &ModelOptions::default()).unwrap()
    }

    #[test]
    fn fair_coin_costs_one_bit_per_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = dataset(binary_schema(1), (0..1000).map(|_| vec![rng.gen_range(0..2)]).collect());
        let c = compute_obj(0, &[], &sample_of(&d), &ModelOptions::default());
        assert!((c.data_bits - 1000.0).abs() <= 20.0, "{c:?}");
    }

    #[test]
    fn copy_parent_costs_almost_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = dataset(
            binary_schema(2),
            (0..1000)
                .map(|_| {
                    let a = rng.gen_range(0..2);
                    vec![a, a]
                })
                .collect(),
        );
        let c = compute_obj(1, &[0], &sample_of(&d), &ModelOptions::default());
        assert!(c.data_bits / 1000.0 <= 0.1, "{c:?}");
    }

    #[test]
    fn context_cap_gives_infinite_cost() {
        let schema = Schema::new((0..4).map(|i| Column::categorical(format!("c{i}"), 20)).collect()).unwrap();
        let d = dataset(schema, (0..10).map(|i| vec![i % 20, i % 3, i % 5, i % 7]).collect());
        let c = compute_obj(0, &[1, 2, 3], &sample_of(&d), &ModelOptions::default());
        assert!(c.total().is_infinite());
    }

    #[test]
    fn single_column_has_no_parents() {
        let d = dataset(binary_schema(1), vec![vec![0], vec![1]]);
        let out = learn_structure(&sample_of(&d), &StructureSearchConfig::default()).unwrap();
        assert!(out.structure.parents(0).is_empty());
    }

    #[test]
    fn independent_parent_costs_more() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = dataset(binary_schema(2), (0..1000).map(|_| vec![rng.gen_range(0..2), rng.gen_range(0..2)]).collect());
        let s = sample_of(&d);
        let opts = ModelOptions::default();
        assert!(compute_obj(1, &[0], &s, &opts).total() > compute_obj(1, &[], &s, &opts).total());
    }

    #[test]
    fn structure_validation() {
        assert!(BayesNetStructure::new(vec![vec![1], vec![0]]).is_err());
        assert!(BayesNetStructure::new(vec![vec![0]]).is_err());
        assert!(BayesNetStructure::new(vec![vec![], vec![0, 0]]).is_err());
        let s = BayesNetStructure::new(vec![vec![2], vec![], vec![1]]).unwrap();
        assert_eq!(s.order(), &[1, 2, 0]);
    }

    #[test]
    fn structure_text_round_trip() {
        let schema = binary_schema(3);
        let s = BayesNetStructure::parse("# manual\na0: a2\n\na2: a1 # chain\n", &schema).unwrap();
        assert_eq!(s.parent_sets(), &[vec![2], vec![], vec![1]]);
        assert_eq!(BayesNetStructure::parse(&s.to_text(&schema), &schema).unwrap(), s);
        assert!(matches!(BayesNetStructure::parse("a0 a1", &schema), Err(Error::Parse { line: 1, .. })));
        assert!(BayesNetStructure::parse("zz: a1", &schema).is_err());
    }

    #[test]
    fn memoized_search_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = (0..500)
            .map(|_| {
                let a = rng.gen_range(0..2);
                let b = if rng.gen_bool(0.9) { a } else { 1 - a };
                vec![a, b, rng.gen_range(0..2), b]
            })
            .collect();
        let d = dataset(binary_schema(4), rows);
        let s = sample_of(&d);
        let plain = learn_structure(&s, &StructureSearchConfig::default()).unwrap();
        let cached = learn_structure(&s, &StructureSearchConfig { memoize: true, ..Default::default() }).unwrap();
        assert_eq!(plain.structure, cached.structure);
        assert!(cached.evaluations < plain.evaluations);
    }
}
