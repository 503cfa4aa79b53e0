//! Cross-tuple delta coding of sorted code strings.
//!
//! With `n` codes and `l = floor(log2 n)`, codes are sorted, and each one's
//! leading `l` bits are replaced by the unary-coded difference to the previous
//! code's prefix. The rest of each code (its suffix) is stored unchanged.
//! Codes shorter than `l` are padded with zeros.

use crate::codec::{BitBuf, BitReader, BitSource};
use crate::error::{Error, Result};

/// How a reader finds where each suffix ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeLengths {
    /// Every code has this many bits.
    Fixed(usize),
    /// Original length of each code, in sorted order.
    PerCode(Vec<usize>),
    /// Codes are self-delimiting; the consumer knows where each one ends.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaBlock {
    pub n: usize,
    /// Prefix width in bits.
    pub l: u32,
    pub lengths: CodeLengths,
    pub payload: BitBuf,
}

/// Prefix width for `n` codes.
pub fn prefix_width(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        n.ilog2()
    }
}

/// Appends `v` in unary: `v` ones, then a zero.
pub fn push_unary(out: &mut BitBuf, v: u64) {
    for _ in 0..v {
        out.push(true);
    }
    out.push(false);
}

fn read_unary(src: &mut impl BitSource, limit: u64) -> Option<u64> {
    let mut v = 0;
    loop {
        match src.read_bit()? {
            false => return Some(v),
            true if v < limit => v += 1,
            true => return None,
        }
    }
}

fn prefix_of(code: &BitBuf, l: u32) -> u64 {
    (0..l as usize).fold(0, |acc, i| (acc << 1) | (i < code.len() && code.get(i)) as u64)
}

/// Sorts `codes` (padded comparison, shorter first on ties) and delta-codes them.
pub fn delta_encode(codes: &[BitBuf]) -> DeltaBlock {
    let n = codes.len();
    let l = prefix_width(n);
    let mut sorted: Vec<&BitBuf> = codes.iter().collect();
    sorted.sort_by(|a, b| {
        let len = a.len().max(b.len()).max(l as usize);
        let bit = |c: &BitBuf, i: usize| i < c.len() && c.get(i);
        (0..len).map(|i| bit(a, i)).cmp((0..len).map(|i| bit(b, i))).then(a.len().cmp(&b.len()))
    });
    let mut payload = BitBuf::new();
    let mut last = 0u64;
    for c in &sorted {
        let a = prefix_of(c, l);
        push_unary(&mut payload, a - last);
        last = a;
        for i in l as usize..c.len() {
            payload.push(c.get(i));
        }
    }
    let lengths = match sorted.first() {
        Some(f) if sorted.iter().all(|c| c.len() == f.len()) => CodeLengths::Fixed(f.len()),
        Some(_) => CodeLengths::PerCode(sorted.iter().map(|c| c.len()).collect()),
        None => CodeLengths::Fixed(0),
    };
    DeltaBlock { n, l, lengths, payload }
}

/// Walks a block: yields each code's prefix and leaves the payload reader
/// positioned at that code's suffix.
#[derive(Debug, Clone)]
pub struct DeltaReader<'a> {
    reader: BitReader<'a>,
    l: u32,
    n: usize,
    index: usize,
    last: u64,
}

impl<'a> DeltaReader<'a> {
    pub fn new(payload: &'a [u8], bits: usize, n: usize, l: u32) -> Self {
        DeltaReader { reader: BitReader::new(payload, bits), l, n, index: 0, last: 0 }
    }

    /// Index of the next code.
    pub fn index(&self) -> usize {
        self.index
    }

    /// Prefix of the next code, or `None` once all `n` codes were read.
    pub fn next_prefix(&mut self) -> Result<Option<u64>> {
        if self.index == self.n {
            return Ok(None);
        }
        let room = (1u64 << self.l) - 1 - self.last;
        let d = read_unary(&mut self.reader, room).ok_or_else(|| Error::Corrupt {
            decoded: self.index,
            reason: format!("bad unary prefix difference in delta code {}", self.index),
        })?;
        self.last += d;
        self.index += 1;
        Ok(Some(self.last))
    }

    /// Source for a self-delimiting code: the prefix bits, then the payload.
    pub fn code_source(&mut self, prefix: u64) -> PrefixedSource<'_, 'a> {
        PrefixedSource { prefix, l: self.l, pos: 0, reader: &mut self.reader }
    }

    pub fn payload(&mut self) -> &mut BitReader<'a> {
        &mut self.reader
    }

    pub fn prefix_width(&self) -> u32 {
        self.l
    }
}

/// Bits of a reconstructed prefix followed by the payload suffix.
#[derive(Debug)]
pub struct PrefixedSource<'r, 'a> {
    prefix: u64,
    l: u32,
    pos: u32,
    reader: &'r mut BitReader<'a>,
}

impl PrefixedSource<'_, '_> {
    /// Prefix bits not consumed by the code; these must be zero padding.
    pub fn check_padding(&self) -> bool {
        (self.pos..self.l).all(|i| (self.prefix >> (self.l - 1 - i)) & 1 == 0)
    }
}

impl BitSource for PrefixedSource<'_, '_> {
    fn read_bit(&mut self) -> Option<bool> {
        if self.pos < self.l {
            let bit = (self.prefix >> (self.l - 1 - self.pos)) & 1 == 1;
            self.pos += 1;
            return Some(bit);
        }
        self.reader.read_bit()
    }
}

/// Recovers the codes in sorted order; needs explicit lengths.
pub fn delta_decode(block: &DeltaBlock) -> Result<Vec<BitBuf>> {
    let bytes = block.payload.as_bytes();
    let mut r = DeltaReader::new(bytes, block.payload.len(), block.n, block.l);
    let mut out = Vec::with_capacity(block.n);
    while let Some(prefix) = r.next_prefix()? {
        let i = out.len();
        let len = match &block.lengths {
            CodeLengths::Fixed(k) => *k,
            CodeLengths::PerCode(v) => *v.get(i).ok_or_else(|| Error::Corrupt {
                decoded: i,
                reason: "length table shorter than the block".into(),
            })?,
            CodeLengths::Implicit => {
                return Err(Error::Config("block has implicit lengths; decode it with a self-delimiting reader".into()))
            }
        };
        let l = block.l as usize;
        let mut code = BitBuf::with_capacity(len.max(l));
        code.push_bits(prefix as u128, block.l);
        if len < l {
            if (len..l).any(|k| code.get(k)) {
                return Err(Error::Corrupt { decoded: i, reason: format!("nonzero padding in delta code {i}") });
            }
            code = code.slice(0, len);
        }
        for _ in l..len {
            let bit = r.payload().read_bit().ok_or_else(|| Error::Corrupt {
                decoded: i,
                reason: format!("payload truncated in delta code {i}"),
            })?;
            code.push(bit);
        }
        out.push(code);
    }
    if r.payload().remaining() != 0 {
        return Err(Error::malformed(format!("{} bits after the last delta code", r.payload().remaining())));
    }
    Ok(out)
}
