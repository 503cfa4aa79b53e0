//! Tuple-level coding: every column's tree is walked in topological order and
//! each branch choice is fed to the arithmetic coder.
//!
//! Parent contexts are always computed from reconstructed values (leaf
//! representatives), so the decoder sees exactly the contexts the encoder used.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::bayesnet::BayesNetStructure;
use crate::codec::{cumulative_intervals, ApproxConfig, BitBuf, BitSource, DecoderState, EncoderState, FixedInterval};
use crate::error::{Error, Result};
use crate::model::{FittedModel, ProbTree};
use crate::schema::{validate_tuple, Schema, Tuple, Value};
use crate::squid::{BranchDistribution, CharModel, SquidCursor};

enum Tables {
    /// Interval table per context, as an index into `tables`.
    Categorical { slot: Vec<usize>, tables: Vec<Vec<FixedInterval>> },
    Numeric,
    /// Byte tables: slot 0 for the first byte, 1 + b after byte b.
    String { bytes: Vec<Vec<FixedInterval>> },
}

/// How a walk turns interval tables into branch indices.
trait Channel {
    /// `branch` is the branch the value takes, known only when encoding.
    fn code(&mut self, intervals: &[FixedInterval], branch: Option<usize>) -> Result<usize>;
}

struct Encode(EncoderState);

impl Channel for Encode {
    fn code(&mut self, intervals: &[FixedInterval], branch: Option<usize>) -> Result<usize> {
        let b = branch.ok_or_else(|| Error::Cursor("no value to encode".into()))?;
        let iv = intervals.get(b).ok_or_else(|| Error::Cursor(format!("branch {b} out of range")))?;
        self.0.push(*iv)?;
        Ok(b)
    }
}

struct Decode<S>(DecoderState<S>);

impl<S: BitSource> Channel for Decode<S> {
    fn code(&mut self, intervals: &[FixedInterval], _: Option<usize>) -> Result<usize> {
        self.0.next_branch(intervals)
    }
}

/// Encoder and decoder for whole tuples under a fixed network.
pub struct TupleCoder<'a> {
    schema: &'a Schema,
    structure: &'a BayesNetStructure,
    models: &'a [FittedModel],
    cfg: ApproxConfig,
    tables: Vec<Tables>,
    clamped: AtomicU64,
}

fn intervals(d: &BranchDistribution, cfg: &ApproxConfig) -> Result<Vec<FixedInterval>> {
    cumulative_intervals(d, cfg)
}

impl<'a> TupleCoder<'a> {
    pub fn new(schema: &'a Schema, structure: &'a BayesNetStructure, models: &'a [FittedModel]) -> Result<Self> {
        Self::with_config(schema, structure, models, ApproxConfig::default())
    }

    pub fn with_config(
        schema: &'a Schema,
        structure: &'a BayesNetStructure,
        models: &'a [FittedModel],
        cfg: ApproxConfig,
    ) -> Result<Self> {
        if models.len() != schema.len() || structure.len() != schema.len() {
            return Err(Error::Structure(format!(
                "{} models and {} structure entries for {} columns",
                models.len(),
                structure.len(),
                schema.len()
            )));
        }
        let mut tables = Vec::with_capacity(models.len());
        for (j, m) in models.iter().enumerate() {
            if m.target() != j || m.parents() != structure.parents(j) {
                return Err(Error::Structure(format!("model {j} does not match the network")));
            }
            tables.push(match m {
                FittedModel::CategoricalTable(t) => {
                    let configs = m.layout().configs();
                    let mut slot = Vec::with_capacity(configs);
                    let mut tabs: Vec<Vec<FixedInterval>> = Vec::new();
                    let mut seen: Vec<*const BranchDistribution> = Vec::new();
                    for ctx in 0..configs {
                        let d = t.distribution(ctx as u32);
                        // Unseen contexts share one uniform distribution.
                        match seen.iter().position(|&p| std::ptr::eq(p, d)) {
                            Some(i) => slot.push(i),
                            None => {
                                seen.push(d);
                                tabs.push(intervals(d, &cfg)?);
                                slot.push(tabs.len() - 1);
                            }
                        }
                    }
                    Tables::Categorical { slot, tables: tabs }
                }
                FittedModel::NumericFamily(_) => Tables::Numeric,
                FittedModel::StringModel(s) => {
                    let chars = s.tree().chars();
                    let mut bytes = Vec::with_capacity(257);
                    bytes.push(intervals(chars.distribution(None), &cfg)?);
                    for b in 0..=255u8 {
                        bytes.push(intervals(chars.distribution(Some(b)), &cfg)?);
                    }
                    Tables::String { bytes }
                }
            });
        }
        Ok(TupleCoder { schema, structure, models, cfg, tables, clamped: AtomicU64::new(0) })
    }

    pub fn config(&self) -> &ApproxConfig {
        &self.cfg
    }

    /// Numeric values clamped into their tree's root so far.
    pub fn clamped(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn walk(&self, input: Option<&[Value]>, ch: &mut impl Channel) -> Result<Tuple> {
        let mut out: Tuple = match input {
            Some(t) => t.to_vec(),
            None => self.schema.columns().iter().map(|_| Value::Cat(0)).collect(),
        };
        for &j in self.structure.order() {
            let model = &self.models[j];
            let ctx = model.layout().index_of_tuple(&out)?;
            let v = input.map(|t| &t[j]);
            out[j] = match (&self.tables[j], model.tree_at(ctx)) {
                (Tables::Categorical { slot, tables }, ProbTree::Categorical(_)) => {
                    let b = ch.code(&tables[slot[ctx as usize]], v.and_then(Value::as_cat))?;
                    Value::Cat(b)
                }
                (Tables::Numeric, tree @ ProbTree::Numeric(_)) => {
                    if let (Some(x), Some(spec)) = (v.and_then(Value::as_num), tree.numeric_spec()) {
                        if spec.clamp(x).1 {
                            self.clamped.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    let mut c = tree.cursor();
                    while !c.is_end() {
                        let ivs = intervals(&c.generate_branch()?, &self.cfg)?;
                        let hint = v.map(|v| c.get_branch(v)).transpose()?;
                        let b = ch.code(&ivs, hint)?;
                        c.choose_branch(b)?;
                    }
                    c.get_result()?.representative
                }
                (Tables::String { bytes }, tree @ ProbTree::String(_)) => {
                    let mut c = tree.cursor();
                    let crate::model::TreeCursor::String(c) = &mut c else { unreachable!() };
                    while c.length().is_none() {
                        let ivs = intervals(&c.generate_branch()?, &self.cfg)?;
                        let hint = v.map(|v| c.get_branch(v)).transpose()?;
                        let b = ch.code(&ivs, hint)?;
                        c.choose_branch(b)?;
                    }
                    let n = c.length().unwrap_or(0);
                    let src = v.and_then(Value::as_bytes);
                    let mut s = Vec::with_capacity(n);
                    let mut prev = 0usize;
                    for i in 0..n {
                        let b = ch.code(&bytes[prev], src.map(|s| s[i] as usize))?;
                        s.push(b as u8);
                        prev = 1 + b;
                    }
                    Value::Str(s)
                }
                _ => return Err(Error::Structure(format!("model {j} does not match its coding tables"))),
            };
        }
        Ok(out)
    }

    /// Code of one tuple and the tuple the decoder will reconstruct from it.
    pub fn encode_tuple(&self, t: &[Value]) -> Result<(BitBuf, Tuple)> {
        validate_tuple(self.schema, t)?;
        let mut ch = Encode(EncoderState::new(self.cfg));
        let rec = self.walk(Some(t), &mut ch)?;
        Ok((ch.0.finish(), rec))
    }

    /// Codes of all rows, in row order.
    pub fn encode_rows(&self, rows: &[Tuple]) -> Result<Vec<BitBuf>> {
        rows.par_iter().map(|r| self.encode_tuple(r).map(|c| c.0)).collect()
    }

    /// Decodes one tuple, consuming exactly its code from `source`.
    pub fn decode_tuple<S: BitSource>(&self, source: S) -> Result<(Tuple, S)> {
        let mut ch = Decode(DecoderState::new(source, self.cfg));
        let t = self.walk(None, &mut ch)?;
        ch.0.finish()?;
        Ok((t, ch.0.into_source()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::fit_full;
    use crate::codec::BitReader;
    use crate::model::ModelOptions;
    use crate::schema::{closeness_check, Column, Dataset};

    fn mixed() -> Dataset {
        let s = Schema::new(vec![
            Column::categorical("c", 3),
            Column::real("x", 0.01),
            Column::string("s"),
            Column::integer("k", 1.0),
        ])
        .unwrap();
        let rows = (0..200)
            .map(|i| {
                vec![
                    Value::Cat(i % 3),
                    Value::Num((i % 3) as f64 * 2.0 + (i as f64 * 0.37).sin()),
                    Value::Str(format!("v{}", i % 13).into_bytes()),
                    Value::Num((i % 17) as f64),
                ]
            })
            .collect();
        Dataset::new(s, rows).unwrap()
    }

    #[test]
    fn stream_round_trip() {
        let d = mixed();
        let st = BayesNetStructure::new(vec![vec![], vec![0], vec![], vec![1, 0]]).unwrap();
        let models = fit_full(&d, &d.domains(), &st, &ModelOptions::default()).unwrap();
        let coder = TupleCoder::new(&d.schema, &st, &models).unwrap();
        let codes = coder.encode_rows(&d.rows).unwrap();
        let mut all = BitBuf::new();
        codes.iter().for_each(|c| all.extend_from(c));
        let bytes = all.as_bytes().to_vec();
        let mut r = BitReader::new(&bytes, all.len());
        for (i, row) in d.rows.iter().enumerate() {
            let (t, back) = coder.decode_tuple(r).unwrap();
            r = back;
            assert!(closeness_check(row, &t, &d.schema), "row {i}: {row:?} vs {t:?}");
            assert_eq!(t, coder.encode_tuple(row).unwrap().1);
        }
        assert_eq!(r.remaining(), 0);
        assert_eq!(coder.clamped(), 0);
    }

    #[test]
    fn code_length_tracks_model_cost() {
        let d = mixed();
        let st = BayesNetStructure::empty(4);
        let models = fit_full(&d, &d.domains(), &st, &ModelOptions::default()).unwrap();
        let coder = TupleCoder::new(&d.schema, &st, &models).unwrap();
        let bits: usize = coder.encode_rows(&d.rows).unwrap().iter().map(BitBuf::len).sum();
        let cost: f64 = models.iter().map(|m| m.cost().data_bits).sum();
        // At most two terminal bits plus rounding per tuple.
        assert!((bits as f64) <= cost + 3.0 * d.len() as f64, "{bits} vs {cost}");
        assert!((bits as f64) >= cost - 1.0, "{bits} vs {cost}");
    }
}
