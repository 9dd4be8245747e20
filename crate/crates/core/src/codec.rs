//! Canonical binary encoding used for every digest in the crate.
//!
//! Integers are big-endian and fixed width. Variable-length byte strings and
//! UTF-8 strings carry a `u32` big-endian length prefix. Addresses (20 bytes)
//! and hashes (32 bytes) are written raw, without a prefix.

use thiserror::Error;

use crate::types::{Address, Hash256};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unexpected end of input: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
    #[error("invalid utf-8 in string field")]
    Utf8,
    #[error("invalid tag {0}")]
    Tag(u8),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        let len = u32::try_from(v.len()).expect("byte field longer than u32::MAX");
        self.u32(len);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn address(&mut self, v: &Address) -> &mut Self {
        self.buf.extend_from_slice(v.as_bytes());
        self
    }

    pub fn hash(&mut self, v: &Hash256) -> &mut Self {
        self.buf.extend_from_slice(v.as_bytes());
        self
    }

    pub fn raw(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    input: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Self { input }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.input.len() < n {
            return Err(DecodeError::Truncated {
                needed: n - self.input.len(),
            });
        }
        let (head, tail) = self.input.split_at(n);
        self.input = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128, DecodeError> {
        Ok(u128::from_be_bytes(self.array()?))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn str(&mut self) -> Result<&'a str, DecodeError> {
        std::str::from_utf8(self.bytes()?).map_err(|_| DecodeError::Utf8)
    }

    pub fn address(&mut self) -> Result<Address, DecodeError> {
        Ok(Address::new(self.array()?))
    }

    pub fn hash(&mut self) -> Result<Hash256, DecodeError> {
        Ok(Hash256::new(self.array()?))
    }

    pub fn remaining(&self) -> usize {
        self.input.len()
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.input.len() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_big_endian() {
        let mut enc = Encoder::new();
        enc.u32(1).u64(0x0102).bytes(b"ab");
        assert_eq!(
            enc.finish(),
            vec![0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 2, 0, 0, 0, 2, b'a', b'b']
        );
    }

    #[test]
    fn decoder_reports_truncation_and_trailing() {
        let mut dec = Decoder::new(&[0, 0, 0, 5, 1]);
        assert_eq!(dec.bytes(), Err(DecodeError::Truncated { needed: 4 }));

        let mut dec = Decoder::new(&[7, 8]);
        assert_eq!(dec.u8(), Ok(7));
        assert_eq!(dec.finish(), Err(DecodeError::Trailing(1)));
    }

    #[test]
    fn strings_round_trip() {
        let mut enc = Encoder::new();
        enc.str("likes").u128(u128::MAX);
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        assert_eq!(dec.str().unwrap(), "likes");
        assert_eq!(dec.u128().unwrap(), u128::MAX);
        dec.finish().unwrap();
    }
}
