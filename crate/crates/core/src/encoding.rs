//! Byte-level encoding shared by the wire format, the on-disk formats and
//! Fiat-Shamir hashing.
//!
//! Integers are big-endian unsigned magnitudes behind a 4-byte big-endian
//! length prefix. Fixed-width integers (ciphertext chunks, commitments) are
//! left-padded to a width derived from the modulus so that every encoding of
//! the same kind of value has the same size.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
    #[error("invalid value: {0}")]
    Invalid(String),
}

impl DecodeError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        DecodeError::Invalid(msg.into())
    }
}

/// Number of bytes needed for the big-endian magnitude of any value `< modulus`.
pub fn byte_width(modulus: &BigUint) -> usize {
    let bits = (modulus - 1u32).bits() as usize;
    bits.div_ceil(8).max(1)
}

pub fn put_u8(buf: &mut Vec<u8>, v: u8) {
    buf.push(v);
}

pub fn put_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_be_bytes());
}

pub fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_bits().to_be_bytes());
}

/// Length-prefixed opaque bytes.
pub fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(buf, bytes.len() as u32);
    buf.extend_from_slice(bytes);
}

pub fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_bytes(buf, s.as_bytes());
}

/// Minimal big-endian magnitude; zero encodes with length 0.
pub fn put_uint(buf: &mut Vec<u8>, x: &BigUint) {
    if x.bits() == 0 {
        put_u32(buf, 0);
    } else {
        put_bytes(buf, &x.to_bytes_be());
    }
}

/// Magnitude left-padded to exactly `width` bytes.
///
/// Panics if `x` does not fit; callers size `width` from the modulus.
pub fn put_uint_fixed(buf: &mut Vec<u8>, x: &BigUint, width: usize) {
    put_u32(buf, width as u32);
    buf.extend_from_slice(&to_fixed_bytes(x, width));
}

pub fn to_fixed_bytes(x: &BigUint, width: usize) -> Vec<u8> {
    let raw = if x.bits() == 0 {
        Vec::new()
    } else {
        x.to_bytes_be()
    };
    assert!(raw.len() <= width, "integer of {} bytes exceeds width {width}", raw.len());
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Serialized size of a fixed-width integer including its length prefix.
pub const fn fixed_uint_len(width: usize) -> usize {
    4 + width
}

/// Cursor over an input buffer.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated {
                offset: self.pos,
                needed: n,
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_be_bytes(a))
    }

    pub fn f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn string(&mut self) -> Result<String, DecodeError> {
        let raw = self.bytes()?;
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError::invalid("string is not utf-8"))
    }

    pub fn uint(&mut self) -> Result<BigUint, DecodeError> {
        Ok(BigUint::from_bytes_be(self.bytes()?))
    }

    /// Reads a fixed-width integer, rejecting any other declared width.
    pub fn uint_fixed(&mut self, width: usize) -> Result<BigUint, DecodeError> {
        let raw = self.bytes()?;
        if raw.len() != width {
            return Err(DecodeError::invalid(format!(
                "fixed-width integer has {} bytes, expected {width}",
                raw.len()
            )));
        }
        Ok(BigUint::from_bytes_be(raw))
    }

    pub fn finish(&self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_zero_has_empty_magnitude() {
        let mut buf = Vec::new();
        put_uint(&mut buf, &BigUint::from(0u8));
        assert_eq!(buf, vec![0, 0, 0, 0]);
        let mut r = Reader::new(&buf);
        assert_eq!(r.uint().unwrap(), BigUint::from(0u8));
        r.finish().unwrap();
    }

    #[test]
    fn fixed_width_is_left_padded() {
        let mut buf = Vec::new();
        put_uint_fixed(&mut buf, &BigUint::from(0x0102u32), 4);
        assert_eq!(buf, vec![0, 0, 0, 4, 0, 0, 1, 2]);
        let mut r = Reader::new(&buf);
        assert!(Reader::new(&buf).uint_fixed(3).is_err());
        assert_eq!(r.uint_fixed(4).unwrap(), BigUint::from(0x0102u32));
    }

    #[test]
    fn truncated_input_is_reported() {
        let mut r = Reader::new(&[0, 0, 0, 9, 1]);
        assert!(matches!(r.bytes(), Err(DecodeError::Truncated { .. })));
    }

    #[test]
    fn byte_width_matches_modulus() {
        assert_eq!(byte_width(&BigUint::from(225u32)), 1);
        assert_eq!(byte_width(&BigUint::from(256u32)), 1);
        assert_eq!(byte_width(&BigUint::from(257u32)), 2);
    }
}
