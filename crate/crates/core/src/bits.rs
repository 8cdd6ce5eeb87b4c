//! Bit-string helpers. Bits are packed LSB-first within bytes throughout the crate.

use bitvec::prelude::*;

use crate::error::{Error, Result};

pub type Bits = BitVec<u8, Lsb0>;
pub type BitStr = BitSlice<u8, Lsb0>;

/// Packs a bit string into bytes, LSB-first, zero-filling the final byte.
pub fn to_bytes(bits: &BitStr) -> Vec<u8> {
    let mut v = Bits::from_bitslice(bits);
    v.set_uninitialized(false);
    v.into_vec()
}

/// Unpacks the first `len` bits of `bytes`.
pub fn from_bytes(bytes: &[u8], len: usize) -> Bits {
    let mut v = Bits::from_slice(bytes);
    v.truncate(len);
    v
}

pub fn random_bits<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Bits {
    let bytes: Vec<u8> = (0..len.div_ceil(8)).map(|_| rng.gen()).collect();
    from_bytes(&bytes, len)
}

pub fn hamming(a: &BitStr, b: &BitStr) -> usize {
    debug_assert_eq!(a.len(), b.len());
    let x = a.to_bitvec() ^ b;
    x.count_ones()
}

/// Little-endian cursor over a file body.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }
}
