//! CSV ingestion under an explicit (or inferred) schema, and CSV output.
//!
//! Sidecar config format, one setting per line, `#` starts a comment:
//!
//! ```text
//! delimiter = ,            # single byte, or `tab`
//! header = true
//! quote = "                # or `none`
//! tolerance = 1%           # default for numeric columns: absolute or % of range
//! column = age integer tolerance=0
//! column = price real tolerance=0.5% range=0:1000
//! column = city categorical
//! column = note string max_len=80
//! ```
//!
//! When no `column` lines are given, kinds are inferred: a column whose every
//! value parses as a number is numeric (integer when all values are whole),
//! anything else is categorical, or a string column when it has more than
//! [`MAX_INFERRED_CATEGORIES`] distinct values.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::schema::{AttributeKind, Column, Dataset, Schema, Value};

/// Distinct values above which an inferred non-numeric column becomes a string column.
pub const MAX_INFERRED_CATEGORIES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKindSpec {
    Categorical,
    Real,
    Integer,
    String,
}

/// Error tolerance of a numeric column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceSpec {
    Absolute(f64),
    /// Percentage of the column's range (declared, else observed).
    Percent(f64),
}

impl ToleranceSpec {
    /// Parses `0.5` or `2%`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, pct) = match s.strip_suffix('%') {
            Some(p) => (p.trim(), true),
            None => (s, false),
        };
        let v: f64 = num.parse().map_err(|_| Error::Config(format!("bad tolerance `{s}`")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("tolerance `{s}` must be finite and >= 0")));
        }
        Ok(if pct { ToleranceSpec::Percent(v) } else { ToleranceSpec::Absolute(v) })
    }

    pub fn resolve(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            ToleranceSpec::Absolute(v) => v,
            ToleranceSpec::Percent(p) => p / 100.0 * (hi - lo).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKindSpec,
    pub tolerance: Option<ToleranceSpec>,
    pub range: Option<(f64, f64)>,
    pub max_len: Option<usize>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKindSpec) -> Self {
        ColumnSpec { name: name.into(), kind, tolerance: None, range: None, max_len: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestionConfig {
    pub delimiter: u8,
    pub header: bool,
    /// Quote character; `None` disables quoting.
    pub quote: Option<u8>,
    /// Declared columns in file order; empty means infer.
    pub columns: Vec<ColumnSpec>,
    /// Tolerance for numeric columns without their own.
    pub default_tolerance: ToleranceSpec,
    /// Per-column overrides by name, applied after the declared ones.
    pub tolerance_overrides: Vec<(String, ToleranceSpec)>,
}

impl Default for IngestionConfig {
    fn default() -> Self {
        IngestionConfig {
            delimiter: b',',
            header: true,
            quote: Some(b'"'),
            columns: Vec::new(),
            default_tolerance: ToleranceSpec::Absolute(0.0),
            tolerance_overrides: Vec::new(),
        }
    }
}

fn single_byte(key: &str, v: &str) -> Result<u8> {
    match v {
        "tab" | "\\t" => Ok(b'\t'),
        "space" => Ok(b' '),
        _ if v.len() == 1 => Ok(v.as_bytes()[0]),
        _ => Err(Error::Config(format!("`{key}` must be a single byte, got `{v}`"))),
    }
}

impl IngestionConfig {
    /// Parses the sidecar text format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = IngestionConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let err = |reason: String| Error::Config(format!("line {}: {reason}", i + 1));
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            // Quote and delimiter values may themselves be `#`, so they take the first token.
            let value = match key {
                "quote" | "delimiter" => value.split_whitespace().next().unwrap_or(""),
                _ => value.split('#').next().unwrap_or("").trim(),
            };
            match key {
                "delimiter" => cfg.delimiter = single_byte(key, value).map_err(|e| err(e.to_string()))?,
                "header" => {
                    cfg.header = value.parse().map_err(|_| err(format!("`header` must be true or false, got `{value}`")))?
                }
                "quote" => {
                    cfg.quote = if value == "none" { None } else { Some(single_byte(key, value).map_err(|e| err(e.to_string()))?) }
                }
                "tolerance" => cfg.default_tolerance = ToleranceSpec::parse(value).map_err(|e| err(e.to_string()))?,
                "column" => cfg.columns.push(parse_column(value).map_err(|e| err(e.to_string()))?),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    fn tolerance_for(&self, spec: &ColumnSpec) -> ToleranceSpec {
        self.tolerance_overrides
            .iter()
            .rev()
            .find(|(n, _)| *n == spec.name)
            .map(|(_, t)| *t)
            .or(spec.tolerance)
            .unwrap_or(self.default_tolerance)
    }
}

fn parse_column(text: &str) -> Result<ColumnSpec> {
    let mut parts = text.split_whitespace();
    let name = parts.next().ok_or_else(|| Error::Config("column needs a name".into()))?;
    let kind = match parts.next() {
        Some("categorical") => ColumnKindSpec::Categorical,
        Some("real") => ColumnKindSpec::Real,
        Some("integer") => ColumnKindSpec::Integer,
        Some("string") => ColumnKindSpec::String,
        other => {
            return Err(Error::Config(format!(
                "column `{name}`: kind must be categorical, real, integer or string (got {other:?})"
            )))
        }
    };
    let mut spec = ColumnSpec::new(name, kind);
    for opt in parts {
        let (k, v) = opt.split_once('=').ok_or_else(|| Error::Config(format!("column `{name}`: bad option `{opt}`")))?;
        let numeric = matches!(kind, ColumnKindSpec::Real | ColumnKindSpec::Integer);
        match k {
            "tolerance" if numeric => spec.tolerance = Some(ToleranceSpec::parse(v)?),
            "range" if numeric => {
                let (lo, hi) = v.split_once(':').ok_or_else(|| Error::Config(format!("column `{name}`: range is lo:hi")))?;
                let lo: f64 = lo.parse().map_err(|_| Error::Config(format!("column `{name}`: bad range `{v}`")))?;
                let hi: f64 = hi.parse().map_err(|_| Error::Config(format!("column `{name}`: bad range `{v}`")))?;
                spec.range = Some((lo, hi));
            }
            "max_len" if kind == ColumnKindSpec::String => {
                spec.max_len = Some(v.parse().map_err(|_| Error::Config(format!("column `{name}`: bad max_len `{v}`")))?)
            }
            _ => return Err(Error::Config(format!("column `{name}`: option `{k}` does not apply to {kind:?}"))),
        }
    }
    Ok(spec)
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn infer(name: &str, values: &[&str]) -> ColumnSpec {
    let nums: Option<Vec<f64>> = values.iter().map(|v| parse_number(v)).collect();
    let kind = match nums {
        Some(ns) if !ns.is_empty() => {
            if ns.iter().all(|x| x.fract() == 0.0) {
                ColumnKindSpec::Integer
            } else {
                ColumnKindSpec::Real
            }
        }
        _ => {
            let mut distinct: Vec<&str> = values.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() > MAX_INFERRED_CATEGORIES {
                ColumnKindSpec::String
            } else {
                ColumnKindSpec::Categorical
            }
        }
    };
    ColumnSpec::new(name, kind)
}

/// Reads a CSV stream into a validated dataset.
pub fn ingest_csv<R: Read>(input: R, cfg: &IngestionConfig) -> Result<Dataset> {
    let mut rb = csv::ReaderBuilder::new();
    rb.delimiter(cfg.delimiter).has_headers(false).flexible(true);
    match cfg.quote {
        Some(q) => rb.quote(q),
        None => rb.quoting(false),
    };
    let mut reader = rb.from_reader(input);
    let mut names: Option<Vec<String>> = None;
    // (line, fields)
    let mut records: Vec<(u64, csv::StringRecord)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if names.is_none() && cfg.header {
            names = Some(rec.iter().map(|s| s.trim().to_string()).collect());
            continue;
        }
        records.push((line, rec));
    }
    let width = match (&names, cfg.columns.len(), records.first()) {
        (Some(n), _, _) => n.len(),
        (None, k, _) if k > 0 => k,
        (None, _, Some((_, r))) => r.len(),
        (None, _, None) => 0,
    };
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(Error::Parse { line: *line, reason: format!("expected {width} fields, found {}", rec.len()) });
        }
    }
    let names = names.unwrap_or_else(|| match cfg.columns.len() {
        0 => (0..width).map(|i| format!("c{i}")).collect(),
        _ => cfg.columns.iter().map(|c| c.name.clone()).collect(),
    });
    let specs: Vec<ColumnSpec> = if cfg.columns.is_empty() {
        (0..width)
            .map(|j| {
                let vals: Vec<&str> = records.iter().map(|(_, r)| &r[j]).collect();
                infer(&names[j], &vals)
            })
            .collect()
    } else {
        if cfg.columns.len() != width {
            return Err(Error::Config(format!("config declares {} columns, data has {width}", cfg.columns.len())));
        }
        for (spec, name) in cfg.columns.iter().zip(&names) {
            if spec.name != *name {
                return Err(Error::Config(format!("config column `{}` does not match header `{name}`", spec.name)));
            }
        }
        cfg.columns.clone()
    };
    for (name, _) in &cfg.tolerance_overrides {
        if !specs.iter().any(|s| s.name == *name) {
            return Err(Error::Config(format!("tolerance given for unknown column `{name}`")));
        }
    }

    let mut dicts: Vec<HashMap<String, usize>> = vec![HashMap::new(); width];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let mut row = Vec::with_capacity(width);
        for (j, field) in rec.iter().enumerate() {
            let spec = &specs[j];
            let bad = |what: &str| Error::Parse { line: *line, reason: format!("column `{}`: {what} `{field}`", spec.name) };
            row.push(match spec.kind {
                ColumnKindSpec::Categorical => {
                    let next = labels[j].len();
                    let idx = *dicts[j].entry(field.to_string()).or_insert(next);
                    if idx == next {
                        labels[j].push(field.to_string());
                    }
                    Value::Cat(idx)
                }
                ColumnKindSpec::Real => Value::Num(parse_number(field).ok_or_else(|| bad("not a number"))?),
                ColumnKindSpec::Integer => {
                    let x = parse_number(field).ok_or_else(|| bad("not a number"))?;
                    if x.fract() != 0.0 {
                        return Err(bad("not an integer"));
                    }
                    Value::Num(x)
                }
                ColumnKindSpec::String => {
                    if spec.max_len.is_some_and(|m| field.len() > m) {
                        return Err(bad("string longer than max_len"));
                    }
                    Value::Str(field.as_bytes().to_vec())
                }
            });
        }
        rows.push(row);
    }

    let mut columns = Vec::with_capacity(width);
    for (j, spec) in specs.iter().enumerate() {
        let col = match spec.kind {
            ColumnKindSpec::Categorical => {
                let mut c = Column::categorical(&spec.name, labels[j].len().max(1));
                if !labels[j].is_empty() {
                    c.dictionary = std::mem::take(&mut labels[j]);
                }
                c
            }
            ColumnKindSpec::Real | ColumnKindSpec::Integer => {
                let (lo, hi) = spec.range.unwrap_or_else(|| {
                    rows.iter().filter_map(|r: &Vec<Value>| r[j].as_num()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                        (a.min(x), b.max(x))
                    })
                });
                let tol = if lo <= hi { cfg.tolerance_for(spec).resolve(lo, hi) } else { 0.0 };
                let integer = spec.kind == ColumnKindSpec::Integer;
                Column::new(&spec.name, AttributeKind::Numerical { integer, range: spec.range }, tol)
            }
            ColumnKindSpec::String => Column::new(&spec.name, AttributeKind::String { max_len: spec.max_len }, 0.0),
        };
        columns.push(col);
    }
    Dataset::new(Schema::new(columns)?, rows)
}

/// Formats one value for CSV output using the column's dictionary.
pub fn format_value(col: &Column, v: &Value) -> String {
    match (v, &col.kind) {
        (Value::Cat(i), _) => col.dictionary.get(*i).cloned().unwrap_or_else(|| i.to_string()),
        (Value::Num(x), AttributeKind::Numerical { integer: true, .. }) => format!("{}", x.round() as i64),
        (Value::Num(x), _) => format!("{x}"),
        (Value::Str(s), _) => String::from_utf8_lossy(s).into_owned(),
    }
}

/// Writes rows as CSV, with a header row when `cfg.header` is set.
pub fn write_csv<W: Write>(out: W, schema: &Schema, rows: &[Vec<Value>], cfg: &IngestionConfig) -> Result<()> {
    let mut wb = csv::WriterBuilder::new();
    wb.delimiter(cfg.delimiter);
    match cfg.quote {
        Some(q) => wb.quote(q),
        None => wb.quote_style(csv::QuoteStyle::Never),
    };
    let mut w = wb.from_writer(out);
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    };
    if cfg.header {
        w.write_record(schema.columns().iter().map(|c| c.name.as_str())).map_err(io)?;
    }
    for row in rows {
        w.write_record(schema.columns().iter().zip(row).map(|(c, v)| format_value(c, v))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_two_columns() {
        let d = ingest_csv("a,b\nx,1\ny,2\nx,3\n".as_bytes(), &IngestionConfig::default()).unwrap();
        assert_eq!((d.len(), d.schema.len()), (3, 2));
        assert_eq!(d.schema.column(0).dictionary, vec!["x", "y"]);
        assert_eq!(d.rows[2], vec![Value::Cat(0), Value::Num(3.0)]);
        assert!(matches!(d.schema.column(1).kind, AttributeKind::Numerical { integer: true, .. }));
    }

    #[test]
    fn exponent_notation() {
        let d = ingest_csv("v\n1e-3\n2.5\n".as_bytes(), &IngestionConfig::default()).unwrap();
        assert_eq!(d.rows[0][0], Value::Num(0.001));
    }

    #[test]
    fn wrong_arity_names_line() {
        let err = ingest_csv("a,b\n1,2\n3\n".as_bytes(), &IngestionConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn percent_tolerance_uses_range() {
        let cfg = IngestionConfig { default_tolerance: ToleranceSpec::Percent(1.0), ..Default::default() };
        let d = ingest_csv("v\n0\n2.5\n10\n".as_bytes(), &cfg).unwrap();
        assert!((d.schema.column(0).tolerance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sidecar_config() {
        let text = "# demo\ndelimiter = ;\nheader = false\nquote = none\ntolerance = 2%\n\
                    column = id integer tolerance=0\ncolumn = price real range=0:50\n\
                    column = city categorical\ncolumn = note string max_len=8 # free text\n";
        let cfg = IngestionConfig::parse(text).unwrap();
        assert_eq!((cfg.delimiter, cfg.header, cfg.quote), (b';', false, None));
        assert_eq!(cfg.columns.len(), 4);
        assert_eq!(cfg.columns[1].range, Some((0.0, 50.0)));
        let d = ingest_csv("1;10.5;Oslo;hi\n2;20;Lima;there\n".as_bytes(), &cfg).unwrap();
        assert_eq!(d.schema.column(0).tolerance, 0.0);
        assert!((d.schema.column(1).tolerance - 1.0).abs() < 1e-12);
        assert_eq!(d.rows[1][3], Value::Str(b"there".to_vec()));
        assert!(IngestionConfig::parse("column = x complex\n").is_err());
        assert!(IngestionConfig::parse("colour = red\n").is_err());
        assert_eq!(IngestionConfig::parse("quote = #  # hash quotes\n").unwrap().quote, Some(b'#'));
        assert_eq!(IngestionConfig::parse("delimiter = tab\n").unwrap().delimiter, b'\t');
    }

    #[test]
    fn csv_round_trip() {
        let text = "name,n,t\n\"a,b\",1,x\nc,2,y\n";
        let cfg = IngestionConfig::default();
        let d = ingest_csv(text.as_bytes(), &cfg).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &d.schema, &d.rows, &cfg).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
