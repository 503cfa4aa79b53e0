//! Header sections: schema with observed domains, and the network structure.

use crate::bayesnet::BayesNetStructure;
use crate::error::{Error, Result};
use crate::schema::{AttributeKind, Column, ColumnDomain, Schema};
use crate::wire::{Reader, Writer};

const MAX_COLUMNS: usize = 1 << 20;

pub(crate) fn write_schema(w: &mut Writer, schema: &Schema, domains: &[ColumnDomain]) {
    w.varint(schema.len() as u64);
    for (c, d) in schema.columns().iter().zip(domains) {
        w.bytes(c.name.as_bytes());
        match c.kind {
            AttributeKind::Categorical { size } => {
                w.u8(0);
                w.varint(size as u64);
            }
            AttributeKind::Numerical { integer, range } => {
                w.u8(1);
                w.bool(integer);
                w.bool(range.is_some());
                if let Some((lo, hi)) = range {
                    w.f64(lo);
                    w.f64(hi);
                }
            }
            AttributeKind::String { max_len } => {
                w.u8(2);
                w.bool(max_len.is_some());
                if let Some(m) = max_len {
                    w.varint(m as u64);
                }
            }
        }
        w.f64(c.tolerance);
        w.varint(c.dictionary.len() as u64);
        for label in &c.dictionary {
            w.bytes(label.as_bytes());
        }
        match *d {
            ColumnDomain::Categorical { size } => {
                w.u8(0);
                w.varint(size as u64);
            }
            ColumnDomain::Numeric { min, max } => {
                w.u8(1);
                w.f64(min);
                w.f64(max);
            }
            ColumnDomain::String { max_len } => {
                w.u8(2);
                w.varint(max_len as u64);
            }
        }
    }
}

pub(crate) fn read_schema(r: &mut Reader) -> Result<(Schema, Vec<ColumnDomain>)> {
    let m = r.count(MAX_COLUMNS.min(r.remaining()))?;
    let mut columns = Vec::with_capacity(m);
    let mut domains = Vec::with_capacity(m);
    for _ in 0..m {
        let name = r.string()?;
        let kind = match r.u8()? {
            0 => AttributeKind::Categorical { size: r.count(u32::MAX as usize)? },
            1 => {
                let integer = r.bool()?;
                let range = if r.bool()? { Some((r.f64()?, r.f64()?)) } else { None };
                AttributeKind::Numerical { integer, range }
            }
            2 => AttributeKind::String { max_len: if r.bool()? { Some(r.count(u32::MAX as usize)?) } else { None } },
            t => return Err(Error::malformed(format!("unknown column kind {t}"))),
        };
        let tolerance = r.f64()?;
        let labels = r.count(r.remaining())?;
        let dictionary = (0..labels).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let domain = match (r.u8()?, &kind) {
            (0, AttributeKind::Categorical { .. }) => ColumnDomain::Categorical { size: r.count(u32::MAX as usize)? },
            (1, AttributeKind::Numerical { .. }) => {
                let (min, max) = (r.f64()?, r.f64()?);
                if !(min <= max && min.is_finite() && max.is_finite()) {
                    return Err(Error::malformed(format!("bad numeric domain [{min}, {max}]")));
                }
                ColumnDomain::Numeric { min, max }
            }
            (2, AttributeKind::String { .. }) => ColumnDomain::String { max_len: r.count(u32::MAX as usize)? },
            (t, _) => return Err(Error::malformed(format!("domain tag {t} does not match column `{name}`"))),
        };
        columns.push(Column { name, kind, tolerance, dictionary });
        domains.push(domain);
    }
    let schema = Schema::new(columns).map_err(|e| Error::malformed(e.to_string()))?;
    Ok((schema, domains))
}

pub(crate) fn write_structure(w: &mut Writer, s: &BayesNetStructure) {
    for ps in s.parent_sets() {
        w.varint(ps.len() as u64);
        for &p in ps {
            w.varint(p as u64);
        }
    }
}

pub(crate) fn read_structure(r: &mut Reader, m: usize) -> Result<BayesNetStructure> {
    let mut parents = Vec::with_capacity(m);
    for _ in 0..m {
        let k = r.count(m)?;
        parents.push((0..k).map(|_| r.count(m)).collect::<Result<Vec<_>>>()?);
    }
    BayesNetStructure::new(parents).map_err(|e| Error::malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_round_trip() {
        let mut city = Column::categorical("city", 2);
        city.dictionary = vec!["Oslo".into(), "Lima".into()];
        let s = Schema::new(vec![
            city,
            Column::real("x", 0.25).with_range(-1.0, 4.0),
            Column::integer("k", 0.0),
            Column::new("s", AttributeKind::String { max_len: Some(9) }, 0.0),
        ])
        .unwrap();
        let d = vec![
            ColumnDomain::Categorical { size: 2 },
            ColumnDomain::Numeric { min: -0.5, max: 3.0 },
            ColumnDomain::Numeric { min: 1.0, max: 7.0 },
            ColumnDomain::String { max_len: 4 },
        ];
        let mut w = Writer::new();
        write_schema(&mut w, &s, &d);
        let bytes = w.into_bytes();
        let mut r = Reader::new(&bytes);
        assert_eq!(read_schema(&mut r).unwrap(), (s, d));
        assert!(r.is_empty());
        for cut in 0..bytes.len() {
            assert!(read_schema(&mut Reader::new(&bytes[..cut])).is_err());
        }
    }

    #[test]
    fn structure_round_trip() {
        let s = BayesNetStructure::new(vec![vec![], vec![0], vec![1, 0]]).unwrap();
        let mut w = Writer::new();
        write_structure(&mut w, &s);
        let bytes = w.into_bytes();
        assert_eq!(read_structure(&mut Reader::new(&bytes), 3).unwrap(), s);
        let cyclic = [1u8, 1, 1, 0, 0];
        assert!(read_structure(&mut Reader::new(&cyclic), 3).is_err());
    }
}
