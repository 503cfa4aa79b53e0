//! Byte format of a fitted model.
//!
//! ```text
//! u8 version (1) | u8 family tag | varint target | varint rows | f64 data bits
//! layout:  varint count, then per parent: varint column, interpreter, varint categories
//! family payload (see the writers below)
//! ```

use crate::error::{Error, Result};
use crate::model::{CategoricalTable, ContextLayout, FittedModel, LawKind, NumericFamily, Predictor, StringModel};
use crate::squid::{BigramModel, BisectionSpec, Interpreter};
use crate::wire::{Reader, Writer};

const VERSION: u8 = 1;
const TAG_CATEGORICAL: u8 = 0;
const TAG_NUMERIC: u8 = 1;
const TAG_STRING: u8 = 2;

/// Largest categorical domain or string length a model may declare.
const MAX_DOMAIN: usize = 1 << 24;

fn write_interpreter(w: &mut Writer, i: &Interpreter) {
    let cuts = match i {
        Interpreter::Identity => {
            w.u8(0);
            return;
        }
        Interpreter::StringLength => {
            w.u8(2);
            return;
        }
        Interpreter::Binning { cuts } => {
            w.u8(1);
            cuts
        }
        Interpreter::LengthBinning { cuts } => {
            w.u8(3);
            cuts
        }
    };
    w.varint(cuts.len() as u64);
    for &c in cuts {
        w.f64(c);
    }
}

fn read_interpreter(r: &mut Reader) -> Result<Interpreter> {
    let tag = r.u8()?;
    let mut cuts = || -> Result<Vec<f64>> {
        let n = r.count(r.remaining() / 8)?;
        (0..n).map(|_| r.f64()).collect()
    };
    Ok(match tag {
        0 => Interpreter::Identity,
        1 => Interpreter::Binning { cuts: cuts()? },
        2 => Interpreter::StringLength,
        3 => Interpreter::LengthBinning { cuts: cuts()? },
        t => return Err(Error::malformed(format!("unknown interpreter tag {t}"))),
    })
}

fn write_layout(w: &mut Writer, layout: &ContextLayout) {
    w.varint(layout.predictors().len() as u64);
    for p in layout.predictors() {
        w.varint(p.column as u64);
        write_interpreter(w, &p.interpreter);
        w.varint(p.categories as u64);
    }
}

fn read_layout(r: &mut Reader) -> Result<ContextLayout> {
    let n = r.count(r.remaining())?;
    let mut preds = Vec::with_capacity(n);
    for _ in 0..n {
        let column = r.count(u32::MAX as usize)?;
        let interpreter = read_interpreter(r)?;
        let categories = r.count(ContextLayout::DEFAULT_CAP)?;
        preds.push(Predictor { column, interpreter, categories });
    }
    ContextLayout::new(preds, ContextLayout::DEFAULT_CAP).map_err(|e| Error::malformed(e.to_string()))
}

pub fn write_model(m: &FittedModel) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(VERSION);
    w.u8(match m {
        FittedModel::CategoricalTable(_) => TAG_CATEGORICAL,
        FittedModel::NumericFamily(_) => TAG_NUMERIC,
        FittedModel::StringModel(_) => TAG_STRING,
    });
    w.varint(m.target() as u64);
    w.varint(m.rows());
    w.f64(m.cost().data_bits);
    write_layout(&mut w, m.layout());
    match m {
        FittedModel::CategoricalTable(t) => {
            w.varint(t.size() as u64);
            w.varint(t.params().len() as u64);
            for (ctx, q) in t.params() {
                w.varint(*ctx as u64);
                for &p in q {
                    w.f32(p);
                }
            }
        }
        FittedModel::NumericFamily(f) => {
            let spec = f.spec();
            w.f64(spec.lo());
            w.f64(spec.hi());
            w.f64(spec.tolerance());
            w.bool(spec.is_integer());
            w.u8(f.kind().tag());
            w.varint(f.params().len() as u64);
            for (ctx, [a, b]) in f.params() {
                w.varint(*ctx as u64);
                w.f32(*a);
                w.f32(*b);
            }
        }
        FittedModel::StringModel(s) => {
            let lengths = s.tree().lengths().counts();
            w.varint(lengths.len() as u64);
            for &c in lengths {
                w.varint(c);
            }
            let entries: Vec<_> = s.tree().chars().entries().collect();
            w.varint(entries.len() as u64);
            for (ctx, b, c) in entries {
                w.varint(ctx as u64);
                w.u8(b);
                w.varint(c as u64);
            }
        }
    }
    w.into_bytes()
}

pub fn read_model(bytes: &[u8]) -> Result<FittedModel> {
    let mut r = Reader::new(bytes);
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::Version { expected: VERSION as u16, found: version as u16 });
    }
    let tag = r.u8()?;
    let target = r.count(u32::MAX as usize)?;
    let rows = r.varint()?;
    let data_bits = r.f64()?;
    let layout = read_layout(&mut r)?;
    let model = match tag {
        TAG_CATEGORICAL => {
            let size = r.count(MAX_DOMAIN)?;
            if size == 0 {
                return Err(Error::malformed("categorical domain of size 0"));
            }
            let n = r.count(layout.configs())?;
            let mut params = Vec::with_capacity(n);
            for _ in 0..n {
                let ctx = r.count(u32::MAX as usize)? as u32;
                if (size - 1) * 4 > r.remaining() {
                    return Err(Error::malformed("categorical table truncated"));
                }
                let q = (0..size - 1).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                params.push((ctx, q));
            }
            FittedModel::CategoricalTable(CategoricalTable::from_params(target, layout, size, params, data_bits, rows)?)
        }
        TAG_NUMERIC => {
            let (lo, hi, tol, integer) = (r.f64()?, r.f64()?, r.f64()?, r.bool()?);
            let spec = BisectionSpec::new(lo, hi, tol, integer).map_err(|e| Error::malformed(e.to_string()))?;
            let kind = LawKind::from_tag(r.u8()?)?;
            let n = r.count(layout.configs())?;
            let mut params = Vec::with_capacity(n);
            for _ in 0..n {
                let ctx = r.count(u32::MAX as usize)? as u32;
                params.push((ctx, [r.f32()?, r.f32()?]));
            }
            FittedModel::NumericFamily(NumericFamily::from_params(target, layout, spec, kind, params, data_bits, rows)?)
        }
        TAG_STRING => {
            if !layout.predictors().is_empty() {
                return Err(Error::malformed("string model with parents"));
            }
            let n = r.count(MAX_DOMAIN.min(r.remaining()))?;
            let lengths = (0..n).map(|_| r.varint()).collect::<Result<Vec<_>>>()?;
            let m = r.count(r.remaining())?;
            let mut entries = Vec::with_capacity(m);
            for _ in 0..m {
                let ctx = r.count(256)?;
                let b = r.u8()?;
                let c = r.count(u32::MAX as usize)? as u32;
                entries.push((ctx, b, c));
            }
            let chars = BigramModel::from_entries(entries)?;
            FittedModel::StringModel(StringModel::from_parts(target, lengths, chars, data_bits, rows)?)
        }
        t => return Err(Error::malformed(format!("unknown model tag {t}"))),
    };
    if !r.is_empty() {
        return Err(Error::malformed(format!("{} trailing bytes after model", r.remaining())));
    }
    Ok(model)
}
