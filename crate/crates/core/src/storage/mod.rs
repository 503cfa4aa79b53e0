//! Archive format, compression driver and random access.
//!
//! ```text
//! "SQSH" | u16 version | u8 flags (bit 0: delta, bit 1: index)
//! section*  each: varint byte length, then content
//!   schema     columns, dictionaries and observed domains
//!   structure  per column: varint count, varint parents
//!   models     varint count, then one length-prefixed model blob per column
//!   index      (index flag only) varint count, varint gaps between bit offsets
//!   body       varint n, then
//!                rows:  varint bit length, code stream (MSB first)
//!                delta: u8 prefix width, varint bit length, delta payload
//! ```
//!
//! Multi-byte fixed-width integers and floats are little-endian. The body is
//! last so a truncated archive still yields its leading tuples.

mod format;
mod ingest;

pub use ingest::{
    format_value, ingest_csv, write_csv, ColumnKindSpec, ColumnSpec, IngestionConfig, ToleranceSpec,
    MAX_INFERRED_CATEGORIES,
};

use std::path::Path;

use serde::Serialize;

use crate::bayesnet::{fit_full, learn_structure, BayesNetStructure, Sample, StructureSearchConfig};
use crate::codec::{BitBuf, BitReader};
use crate::delta::{delta_encode, DeltaReader};
use crate::error::{Error, Result};
use crate::model::{read_model, write_model, FittedModel};
use crate::pipeline::TupleCoder;
use crate::schema::{AttributeKind, ColumnDomain, Dataset, Schema, Tuple};
use crate::wire::{Reader, Writer};

pub const MAGIC: &[u8; 4] = b"SQSH";
pub const FORMAT_VERSION: u16 = 1;
const FLAG_DELTA: u8 = 1;
const FLAG_INDEX: u8 = 2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompressOptions {
    pub search: StructureSearchConfig,
    /// Sort codes and delta-code their prefixes; row order is not kept.
    pub delta: bool,
    /// Store per-tuple bit offsets for random access.
    pub index: bool,
    /// Use this network instead of learning one.
    pub structure: Option<BayesNetStructure>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Body {
    Rows { bits: usize, bytes: Vec<u8>, offsets: Option<Vec<u64>> },
    Delta { l: u32, bits: usize, bytes: Vec<u8> },
}

/// A parsed (or freshly built) archive.
#[derive(Debug, Clone)]
pub struct Archive {
    pub schema: Schema,
    pub domains: Vec<ColumnDomain>,
    pub structure: BayesNetStructure,
    pub models: Vec<FittedModel>,
    rows: usize,
    body: Body,
    /// Set when the body section was cut short.
    truncated: bool,
    /// Numeric values clamped into their tree's root during encoding.
    clamped: u64,
}

/// Learns (or takes) a network, fits it and encodes every row.
pub fn compress(dataset: &Dataset, opts: &CompressOptions) -> Result<Archive> {
    if opts.delta && opts.index {
        return Err(Error::Config("delta coding and the offset index are mutually exclusive".into()));
    }
    let m = dataset.schema.len();
    let domains = dataset.domains();
    let structure = match &opts.structure {
        Some(s) if s.len() != m => {
            return Err(Error::Structure(format!("structure covers {} columns, schema has {m}", s.len())))
        }
        Some(s) => s.clone(),
        None if dataset.is_empty() => BayesNetStructure::empty(m),
        None => {
            let sample = Sample::select(dataset, &domains, &opts.search)?;
            learn_structure(&sample, &opts.search)?.structure
        }
    };
    let (models, codes, clamped) = if dataset.is_empty() {
        (Vec::new(), Vec::new(), 0)
    } else {
        let models = fit_full(dataset, &domains, &structure, &opts.search.model)?;
        let coder = TupleCoder::new(&dataset.schema, &structure, &models)?;
        let codes = coder.encode_rows(&dataset.rows)?;
        let clamped = coder.clamped();
        (models, codes, clamped)
    };
    let body = if opts.delta {
        let block = delta_encode(&codes);
        Body::Delta { l: block.l, bits: block.payload.len(), bytes: block.payload.into_bytes() }
    } else {
        let mut all = BitBuf::with_capacity(codes.iter().map(BitBuf::len).sum());
        let mut offsets = Vec::with_capacity(codes.len());
        for c in &codes {
            offsets.push(all.len() as u64);
            all.extend_from(c);
        }
        Body::Rows { bits: all.len(), bytes: all.into_bytes(), offsets: opts.index.then_some(offsets) }
    };
    Ok(Archive {
        schema: dataset.schema.clone(),
        domains,
        structure,
        models,
        rows: dataset.len(),
        body,
        truncated: false,
        clamped,
    })
}

fn section(w: &mut Writer, f: impl FnOnce(&mut Writer)) {
    let mut inner = Writer::new();
    f(&mut inner);
    w.bytes(&inner.into_bytes());
}

impl Archive {
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.body, Body::Delta { .. })
    }

    pub fn has_index(&self) -> bool {
        matches!(self.body, Body::Rows { offsets: Some(_), .. })
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    /// Bits of tuple code in the body.
    pub fn body_bits(&self) -> usize {
        match &self.body {
            Body::Rows { bits, .. } | Body::Delta { bits, .. } => *bits,
        }
    }

    fn flags(&self) -> u8 {
        match &self.body {
            Body::Delta { .. } => FLAG_DELTA,
            Body::Rows { offsets: Some(_), .. } => FLAG_INDEX,
            Body::Rows { .. } => 0,
        }
    }

    /// Serialized header: magic through the optional index section.
    fn header_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(MAGIC);
        w.u16(FORMAT_VERSION);
        w.u8(self.flags());
        section(&mut w, |s| format::write_schema(s, &self.schema, &self.domains));
        section(&mut w, |s| format::write_structure(s, &self.structure));
        section(&mut w, |s| {
            s.varint(self.models.len() as u64);
            for m in &self.models {
                s.bytes(&write_model(m));
            }
        });
        if let Body::Rows { offsets: Some(offsets), .. } = &self.body {
            section(&mut w, |s| {
                s.varint(offsets.len() as u64);
                let mut last = 0;
                for &o in offsets {
                    s.varint(o - last);
                    last = o;
                }
            });
        }
        w.into_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(&self.header_bytes());
        section(&mut w, |s| {
            s.varint(self.rows as u64);
            match &self.body {
                Body::Rows { bits, bytes, .. } => {
                    s.varint(*bits as u64);
                    s.raw(bytes);
                }
                Body::Delta { l, bits, bytes } => {
                    s.u8(*l as u8);
                    s.varint(*bits as u64);
                    s.raw(bytes);
                }
            }
        });
        w.into_bytes()
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Parses an archive. A body cut short is accepted (see
    /// [`Archive::is_truncated`]); decoding then stops at the first incomplete tuple.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4).ok() != Some(&MAGIC[..]) {
            return Err(Error::malformed("not an archive (bad magic)"));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version { expected: FORMAT_VERSION, found: version });
        }
        let flags = r.u8()?;
        if flags & !(FLAG_DELTA | FLAG_INDEX) != 0 || flags == FLAG_DELTA | FLAG_INDEX {
            return Err(Error::malformed(format!("bad flags {flags:#04x}")));
        }
        let mut sec = Reader::new(r.bytes()?);
        let (schema, domains) = format::read_schema(&mut sec)?;
        expect_end(&sec, "schema")?;
        let m = schema.len();
        let mut sec = Reader::new(r.bytes()?);
        let structure = format::read_structure(&mut sec, m)?;
        expect_end(&sec, "structure")?;
        let mut sec = Reader::new(r.bytes()?);
        let count = sec.count(m)?;
        if count != 0 && count != m {
            return Err(Error::malformed(format!("{count} models for {m} columns")));
        }
        let mut models = Vec::with_capacity(count);
        for j in 0..count {
            let model = read_model(sec.bytes()?)?;
            if model.target() != j || model.parents() != structure.parents(j) {
                return Err(Error::malformed(format!("model {j} does not match the structure")));
            }
            models.push(model);
        }
        expect_end(&sec, "models")?;
        let offsets = if flags & FLAG_INDEX != 0 {
            let mut sec = Reader::new(r.bytes()?);
            let n = sec.count(sec.remaining())?;
            let mut offsets = Vec::with_capacity(n);
            let mut last = 0u64;
            for i in 0..n {
                let gap = sec.varint()?;
                if i > 0 && gap == 0 {
                    return Err(Error::malformed("index offsets must increase"));
                }
                last = last.checked_add(gap).ok_or_else(|| Error::malformed("index offset overflow"))?;
                offsets.push(last);
            }
            expect_end(&sec, "index")?;
            Some(offsets)
        } else {
            None
        };

        // Body: tolerate truncation.
        let declared = r.varint()?;
        let avail = r.rest();
        let truncated = (avail.len() as u64) < declared;
        let body_bytes = &avail[..avail.len().min(declared as usize)];
        if !truncated && avail.len() as u64 > declared {
            return Err(Error::malformed("bytes after the body section"));
        }
        let mut b = Reader::new(body_bytes);
        let corrupt = |reason: &str| Error::Corrupt { decoded: 0, reason: reason.into() };
        let rows = b.count(usize::MAX).map_err(|_| corrupt("body header truncated"))?;
        if count == 0 && rows > 0 {
            return Err(Error::malformed("rows without models"));
        }
        let body = if flags & FLAG_DELTA != 0 {
            let l = b.u8().map_err(|_| corrupt("body header truncated"))? as u32;
            if l != crate::delta::prefix_width(rows) {
                return Err(Error::malformed(format!("prefix width {l} for {rows} rows")));
            }
            let bits = b.count(usize::MAX).map_err(|_| corrupt("body header truncated"))?;
            let bytes = b.rest().to_vec();
            if !truncated && bytes.len() != bits.div_ceil(8) {
                return Err(Error::malformed("delta payload length mismatch"));
            }
            Body::Delta { l, bits: bits.min(bytes.len() * 8), bytes }
        } else {
            let bits = b.count(usize::MAX).map_err(|_| corrupt("body header truncated"))?;
            let bytes = b.rest().to_vec();
            if !truncated && bytes.len() != bits.div_ceil(8) {
                return Err(Error::malformed("code stream length mismatch"));
            }
            if let Some(o) = &offsets {
                if o.len() != rows || o.last().is_some_and(|&x| x as usize >= bits.max(1)) {
                    return Err(Error::malformed("index does not match the body"));
                }
            }
            Body::Rows { bits: bits.min(bytes.len() * 8), bytes, offsets }
        };
        Ok(Archive { schema, domains, structure, models, rows, body, truncated, clamped: 0 })
    }

    fn coder(&self) -> Result<TupleCoder<'_>> {
        TupleCoder::new(&self.schema, &self.structure, &self.models)
    }

    /// Decodes as many tuples as possible; the error, if any, says how far it got.
    pub fn decode_lenient(&self) -> (Vec<Tuple>, Option<Error>) {
        let mut out = Vec::with_capacity(self.rows);
        if self.rows == 0 {
            return (out, None);
        }
        let coder = match self.coder() {
            Ok(c) => c,
            Err(e) => return (out, Some(e)),
        };
        let fail = |i: usize, e: Error| Error::Corrupt { decoded: i, reason: e.to_string() };
        match &self.body {
            Body::Rows { bits, bytes, .. } => {
                let mut r = BitReader::new(bytes, *bits);
                for i in 0..self.rows {
                    match coder.decode_tuple(&mut r) {
                        Ok((t, _)) => out.push(t),
                        Err(e) => return (out, Some(fail(i, e))),
                    }
                }
                if r.remaining() >= 8 {
                    return (out, Some(fail(self.rows, Error::malformed("unused bits after the last tuple"))));
                }
            }
            Body::Delta { l, bits, bytes } => {
                let mut dr = DeltaReader::new(bytes, *bits, self.rows, *l);
                loop {
                    let i = dr.index();
                    let prefix = match dr.next_prefix() {
                        Ok(Some(p)) => p,
                        Ok(None) => break,
                        Err(e) => return (out, Some(fail(i, e))),
                    };
                    let mut src = dr.code_source(prefix);
                    let decoded = coder.decode_tuple(&mut src).map(|(t, _)| t);
                    match decoded {
                        Ok(t) if src.check_padding() => out.push(t),
                        Ok(_) => return (out, Some(fail(i, Error::malformed("nonzero prefix padding")))),
                        Err(e) => return (out, Some(fail(i, e))),
                    }
                }
            }
        }
        if self.truncated {
            return (out, Some(Error::Corrupt { decoded: self.rows, reason: "archive is truncated".into() }));
        }
        (out, None)
    }

    /// All tuples (sorted by code in delta mode, row order otherwise).
    pub fn decode(&self) -> Result<Dataset> {
        match self.decode_lenient() {
            (rows, None) => Ok(Dataset { schema: self.schema.clone(), rows }),
            (_, Some(e)) => Err(e),
        }
    }

    /// Decodes only tuple `i` through the offset index.
    pub fn read_tuple_at(&self, i: usize) -> Result<Tuple> {
        match &self.body {
            Body::Delta { .. } => Err(Error::NoIndex(
                "delta-coded archives keep tuples in sorted code order without offsets",
            )),
            Body::Rows { offsets: None, .. } => Err(Error::NoIndex("archive was written without an offset index")),
            Body::Rows { bits, bytes, offsets: Some(offsets) } => {
                let &start = offsets.get(i).ok_or(Error::RowOutOfRange { index: i, len: self.rows })?;
                let r = BitReader::at(bytes, *bits, start as usize);
                let (t, _) = self.coder()?.decode_tuple(r).map_err(|e| Error::Corrupt { decoded: i, reason: e.to_string() })?;
                Ok(t)
            }
        }
    }

    /// Bit accounting and per-column summary.
    pub fn inspect(&self) -> InspectReport {
        let total_bits = self.to_bytes().len() as u64 * 8;
        let index_bits = match &self.body {
            Body::Rows { offsets: Some(_), .. } => {
                // Difference between the header with and without the index.
                let mut plain = self.clone();
                if let Body::Rows { offsets, .. } = &mut plain.body {
                    *offsets = None;
                }
                (self.header_bytes().len() - plain.header_bytes().len()) as u64 * 8
            }
            _ => 0,
        };
        let mut columns = Vec::with_capacity(self.schema.len());
        let (mut model_bits, mut data_bits) = (0.0, 0.0);
        for (j, c) in self.schema.columns().iter().enumerate() {
            let cost = self.models.get(j).map(FittedModel::cost).unwrap_or_default();
            model_bits += cost.model_bits;
            data_bits += cost.data_bits;
            columns.push(ColumnReport {
                name: c.name.clone(),
                kind: match c.kind {
                    AttributeKind::Categorical { size } => format!("categorical({size})"),
                    AttributeKind::Numerical { integer: true, .. } => "integer".into(),
                    AttributeKind::Numerical { .. } => "real".into(),
                    AttributeKind::String { .. } => "string".into(),
                },
                tolerance: c.tolerance,
                parents: self.structure.parents(j).iter().map(|&p| self.schema.column(p).name.clone()).collect(),
                family: self.models.get(j).map(|m| m.family().to_string()).unwrap_or_else(|| "none".into()),
                parameters: self.models.get(j).map(FittedModel::parameter_count).unwrap_or(0),
                model_bits: cost.model_bits,
                data_bits: cost.data_bits,
            });
        }
        let model_bits = model_bits.round() as u64;
        let data_bits = data_bits.round() as u64;
        InspectReport {
            version: FORMAT_VERSION,
            rows: self.rows,
            delta: self.is_delta(),
            index: self.has_index(),
            edges: self.structure.edges().len(),
            columns,
            model_bits,
            data_bits,
            framing_bits: total_bits as i64 - model_bits as i64 - data_bits as i64,
            body_bits: self.body_bits() as u64,
            index_bits,
            total_bits,
        }
    }
}

fn expect_end(r: &Reader, what: &str) -> Result<()> {
    if r.is_empty() {
        Ok(())
    } else {
        Err(Error::malformed(format!("{} trailing bytes in the {what} section", r.remaining())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnReport {
    pub name: String,
    pub kind: String,
    pub tolerance: f64,
    pub parents: Vec<String>,
    pub family: String,
    pub parameters: usize,
    pub model_bits: f64,
    pub data_bits: f64,
}

/// What `inspect` shows. `model_bits` and `data_bits` are the fitted costs
/// (32 bits per parameter, ideal code length of the rows); `framing_bits` is
/// everything else in the file, and is negative when delta coding saves more
/// than the framing costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectReport {
    pub version: u16,
    pub rows: usize,
    pub delta: bool,
    pub index: bool,
    pub edges: usize,
    pub columns: Vec<ColumnReport>,
    pub model_bits: u64,
    pub data_bits: u64,
    pub framing_bits: i64,
    pub body_bits: u64,
    pub index_bits: u64,
    pub total_bits: u64,
}

impl InspectReport {
    /// Stable plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("format version {}\n", self.version));
        s.push_str(&format!("rows {}\n", self.rows));
        s.push_str(&format!("mode {}\n", if self.delta { "delta" } else if self.index { "rows+index" } else { "rows" }));
        s.push_str(&format!("columns {}\n", self.columns.len()));
        for c in &self.columns {
            s.push_str(&format!(
                "  {} {} tol={} family={} params={} model_bits={:.1} data_bits={:.1}\n",
                c.name, c.kind, c.tolerance, c.family, c.parameters, c.model_bits, c.data_bits
            ));
        }
        s.push_str(&format!("structure ({} edges)\n", self.edges));
        for c in &self.columns {
            s.push_str(&format!("  {}:{}{}\n", c.name, if c.parents.is_empty() { "" } else { " " }, c.parents.join(", ")));
        }
        s.push_str(&format!(
            "bits model={} data={} framing={} body={} index={} total={}\n",
            self.model_bits, self.data_bits, self.framing_bits, self.body_bits, self.index_bits, self.total_bits
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{closeness_check, Column, Value};

    fn data(n: usize) -> Dataset {
        let s = Schema::new(vec![
            Column::categorical("a", 3),
            Column::categorical("b", 3),
            Column::real("x", 0.05),
            Column::string("s"),
        ])
        .unwrap();
        let rows = (0..n)
            .map(|i| {
                let a = i * 7 % 3;
                vec![
                    Value::Cat(a),
                    Value::Cat(if i % 5 == 0 { (a + 1) % 3 } else { a }),
                    Value::Num(a as f64 + (i as f64).sin()),
                    Value::Str(format!("k{}", i % 4).into_bytes()),
                ]
            })
            .collect();
        Dataset::new(s, rows).unwrap()
    }

    #[test]
    fn round_trip_with_index() {
        let d = data(300);
        let a = compress(&d, &CompressOptions { index: true, ..Default::default() }).unwrap();
        let bytes = a.to_bytes();
        let b = Archive::from_bytes(&bytes).unwrap();
        assert_eq!(b.header_bytes(), a.header_bytes());
        assert_eq!(b.to_bytes(), bytes);
        let back = b.decode().unwrap();
        for (x, y) in d.rows.iter().zip(&back.rows) {
            assert!(closeness_check(x, y, &d.schema));
        }
        for i in [0, 1, 150, 299] {
            assert_eq!(b.read_tuple_at(i).unwrap(), back.rows[i]);
        }
        assert!(matches!(b.read_tuple_at(300), Err(Error::RowOutOfRange { index: 300, len: 300 })));
    }

    #[test]
    fn delta_mode_keeps_multiset() {
        let d = data(200);
        let a = compress(&d, &CompressOptions { delta: true, ..Default::default() }).unwrap();
        let b = Archive::from_bytes(&a.to_bytes()).unwrap();
        assert!(matches!(b.read_tuple_at(0), Err(Error::NoIndex(_))));
        let plain = compress(&d, &CompressOptions::default()).unwrap();
        let mut x: Vec<String> = plain.decode().unwrap().rows.iter().map(|r| format!("{r:?}")).collect();
        let mut y: Vec<String> = b.decode().unwrap().rows.iter().map(|r| format!("{r:?}")).collect();
        x.sort();
        y.sort();
        assert_eq!(x, y);
        assert!(b.body_bits() < plain.body_bits());
    }

    #[test]
    fn empty_dataset() {
        let d = Dataset::new(data(1).schema, Vec::new()).unwrap();
        let a = compress(&d, &CompressOptions::default()).unwrap();
        let b = Archive::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(b.len(), 0);
        assert!(b.decode().unwrap().rows.is_empty());
        assert_eq!(b.inspect().rows, 0);
    }

    #[test]
    fn truncation_keeps_leading_rows() {
        let d = data(300);
        let bytes = compress(&d, &CompressOptions::default()).unwrap().to_bytes();
        let cut = Archive::from_bytes(&bytes[..bytes.len() - 40]).unwrap();
        let (rows, err) = cut.decode_lenient();
        assert!(matches!(err, Some(Error::Corrupt { decoded, .. }) if decoded == rows.len()));
        assert!(rows.len() > 200 && rows.len() < 300);
        for (x, y) in d.rows.iter().zip(&rows) {
            assert!(closeness_check(x, y, &d.schema));
        }
        assert!(Archive::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn accounting_matches_costs() {
        let d = data(500);
        let a = compress(&d, &CompressOptions::default()).unwrap();
        let r = a.inspect();
        let (m, dd): (f64, f64) = a.models.iter().map(|m| (m.cost().model_bits, m.cost().data_bits)).fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
        assert!(((r.model_bits + r.data_bits) as f64 - (m + dd)).abs() <= 8.0);
        assert_eq!(r.model_bits as i64 + r.data_bits as i64 + r.framing_bits, r.total_bits as i64);
        assert!(r.to_text().contains("structure ("));
    }

    #[test]
    fn deterministic_bytes() {
        let d = data(200);
        let x = compress(&d, &CompressOptions::default()).unwrap().to_bytes();
        let y = compress(&d, &CompressOptions::default()).unwrap().to_bytes();
        assert_eq!(x, y);
    }

    #[test]
    fn bad_magic_and_version() {
        let d = data(10);
        let mut bytes = compress(&d, &CompressOptions::default()).unwrap().to_bytes();
        bytes[4] = 7;
        assert!(matches!(Archive::from_bytes(&bytes), Err(Error::Version { found: 7, .. })));
        bytes[0] = b'X';
        assert!(Archive::from_bytes(&bytes).is_err());
    }
}
