use std::cmp::Ordering;
use std::fmt;

/// Growable bit string packed most-significant-bit first.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitBuf {
    bytes: Vec<u8>,
    len: usize,
}

impl BitBuf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitBuf { bytes: Vec::with_capacity(bits.div_ceil(8)), len: 0 }
    }

    /// Takes the first `len` bits of `bytes`.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "bit length exceeds byte buffer");
        let mut bytes = bytes[..len.div_ceil(8)].to_vec();
        if len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        BitBuf { bytes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u128, n: u32) {
        for i in (0..n).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitBuf) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
        } else {
            other.iter().for_each(|b| self.push(b));
        }
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// Packed bytes; the final partial byte is zero padded.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Reads `n <= 64` bits starting at `start` as an integer; bits past the end read as 0.
    pub fn read_uint(&self, start: usize, n: u32) -> u64 {
        let mut v = 0u64;
        for i in 0..n as usize {
            v <<= 1;
            if start + i < self.len && self.get(start + i) {
                v |= 1;
            }
        }
        v
    }

    pub fn slice(&self, start: usize, end: usize) -> BitBuf {
        let mut out = BitBuf::with_capacity(end - start);
        (start..end).for_each(|i| out.push(self.get(i)));
        out
    }

    pub fn is_prefix_of(&self, other: &BitBuf) -> bool {
        self.len <= other.len && (0..self.len).all(|i| self.get(i) == other.get(i))
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader::new(&self.bytes, self.len)
    }
}

impl Ord for BitBuf {
    /// Lexicographic; a proper prefix sorts first.
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.len.min(other.len);
        let full = common / 8;
        match self.bytes[..full].cmp(&other.bytes[..full]) {
            Ordering::Equal => {}
            o => return o,
        }
        for i in full * 8..common {
            match self.get(i).cmp(&other.get(i)) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitBuf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitBuf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.iter().try_for_each(|b| f.write_str(if b { "1" } else { "0" }))
    }
}

impl fmt::Debug for BitBuf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitBuf({self})")
    }
}

impl std::str::FromStr for BitBuf {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitBuf::new();
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(crate::Error::malformed(format!("`{c}` is not a bit"))),
            }
        }
        Ok(out)
    }
}

impl FromIterator<bool> for BitBuf {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut out = BitBuf::new();
        iter.into_iter().for_each(|b| out.push(b));
        out
    }
}

/// A forward-only supply of bits.
pub trait BitSource {
    fn read_bit(&mut self) -> Option<bool>;
}

impl<S: BitSource + ?Sized> BitSource for &mut S {
    fn read_bit(&mut self) -> Option<bool> {
        (**self).read_bit()
    }
}

/// Reads MSB-first bits from a byte slice, up to a bit limit.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: usize) -> Self {
        BitReader { bytes, pos: 0, end: bit_len.min(bytes.len() * 8) }
    }

    pub fn at(bytes: &'a [u8], bit_len: usize, pos: usize) -> Self {
        let mut r = Self::new(bytes, bit_len);
        r.pos = pos.min(r.end);
        r
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.end - self.pos
    }

    /// Skips forward; fails without moving if fewer than `n` bits remain.
    pub fn skip(&mut self, n: usize) -> bool {
        if n > self.remaining() {
            return false;
        }
        self.pos += n;
        true
    }
}

impl BitSource for BitReader<'_> {
    fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.end {
            return None;
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Some(bit)
    }
}
