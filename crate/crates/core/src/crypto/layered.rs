//! Recursive (layered) Paillier encryption.
//!
//! A payload of `len` bytes is read as a big-endian integer and split into
//! `k0 = ceil(8·len / (bits − 1))` digits of radix `B = 2^(bits−1)`, so every
//! digit is below `n`. Layer 1 encrypts each digit. To go one layer deeper,
//! every chunk `c < n^2` is re-chunked into its two base-`n` digits
//! `(c div n, c mod n)` and each digit is encrypted again. The expansion
//! factor is therefore exactly 2 and a layer-`ℓ` ciphertext has
//! `k0·2^(ℓ−1)` chunks.
//!
//! A zero-string of layer `i ≥ 1` is the same shape with every chunk equal to
//! 0. Zero is never a valid ciphertext, so a zero-string cannot be confused
//! with a real encryption.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{CryptoRng, RngCore};

use super::paillier::{PaillierPublicKey, PaillierSecretKey};
use super::CryptoError;
use crate::encoding::{self, DecodeError, Reader};

/// Chunks per chunk when moving one layer deeper.
pub const EXPANSION_FACTOR: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredCiphertext {
    layer: u8,
    chunks: Vec<BigUint>,
}

impl LayeredCiphertext {
    pub fn new(layer: u8, chunks: Vec<BigUint>) -> Result<Self, CryptoError> {
        if layer == 0 {
            return Err(CryptoError::ZeroLayer);
        }
        Ok(LayeredCiphertext { layer, chunks })
    }

    /// The zero-string of `layer` for a payload of `payload_len` bytes.
    pub fn zero_string(pk: &PaillierPublicKey, layer: u8, payload_len: usize) -> Result<Self, CryptoError> {
        let count = chunk_count(pk, payload_len, layer)?;
        Self::new(layer, vec![BigUint::zero(); count])
    }

    pub fn layer(&self) -> u8 {
        self.layer
    }

    pub fn chunks(&self) -> &[BigUint] {
        &self.chunks
    }

    pub fn into_chunks(self) -> Vec<BigUint> {
        self.chunks
    }

    pub fn chunk_count(&self) -> usize {
        self.chunks.len()
    }

    /// Radix used when this ciphertext is re-chunked into digits.
    pub fn chunk_base(pk: &PaillierPublicKey) -> &BigUint {
        pk.n()
    }

    pub fn is_zero_string(&self) -> bool {
        self.chunks.iter().all(Zero::is_zero)
    }

    /// The base-`n` digits `(c div n, c mod n)` of every chunk, in order.
    pub fn digits(&self, pk: &PaillierPublicKey) -> Vec<BigUint> {
        let n = pk.n();
        let mut out = Vec::with_capacity(self.chunks.len() * EXPANSION_FACTOR);
        for c in &self.chunks {
            out.push(c / n);
            out.push(c % n);
        }
        out
    }

    pub fn encode(&self, pk: &PaillierPublicKey, buf: &mut Vec<u8>) {
        let width = pk.ciphertext_width();
        encoding::put_u8(buf, self.layer);
        encoding::put_u16(buf, self.chunks.len() as u16);
        for c in &self.chunks {
            encoding::put_uint_fixed(buf, c, width);
        }
    }

    pub fn to_bytes(&self, pk: &PaillierPublicKey) -> Vec<u8> {
        let mut buf = Vec::with_capacity(serialized_len(pk, self.chunks.len()));
        self.encode(pk, &mut buf);
        buf
    }

    pub fn decode(pk: &PaillierPublicKey, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let layer = r.u8()?;
        if layer == 0 {
            return Err(DecodeError::invalid("layered ciphertext with layer 0"));
        }
        let count = r.u16()? as usize;
        let width = pk.ciphertext_width();
        let mut chunks = Vec::with_capacity(count);
        for _ in 0..count {
            let c = r.uint_fixed(width)?;
            if &c >= pk.n_squared() {
                return Err(DecodeError::invalid("chunk exceeds n^2"));
            }
            chunks.push(c);
        }
        Ok(LayeredCiphertext { layer, chunks })
    }
}

/// A zero-string `0_i`: all-zero bytes as long as a layer-`i` serialization.
/// Layer 0 is the plain zero payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroString {
    pub layer_tag: u8,
    pub byte_length: usize,
}

impl ZeroString {
    pub fn new(pk: &PaillierPublicKey, layer_tag: u8, payload_len: usize) -> Result<Self, CryptoError> {
        let byte_length = if layer_tag == 0 {
            payload_len
        } else {
            serialized_len(pk, chunk_count(pk, payload_len, layer_tag)?)
        };
        Ok(ZeroString {
            layer_tag,
            byte_length,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        vec![0u8; self.byte_length]
    }
}

/// Serialized size of a layered ciphertext with `chunks` chunks.
pub fn serialized_len(pk: &PaillierPublicKey, chunks: usize) -> usize {
    3 + chunks * encoding::fixed_uint_len(pk.ciphertext_width())
}

/// Bits per payload digit, `bits − 1`.
pub fn payload_digit_bits(pk: &PaillierPublicKey) -> u64 {
    pk.bit_length() - 1
}

pub fn payload_digit_count(pk: &PaillierPublicKey, payload_len: usize) -> usize {
    let bits = 8 * payload_len as u64;
    bits.div_ceil(payload_digit_bits(pk)).max(1) as usize
}

/// Chunk count of a layer-`layer` encryption of a `payload_len`-byte payload.
pub fn chunk_count(pk: &PaillierPublicKey, payload_len: usize, layer: u8) -> Result<usize, CryptoError> {
    if layer == 0 {
        return Err(CryptoError::ZeroLayer);
    }
    Ok(payload_digit_count(pk, payload_len) << (layer - 1))
}

/// Splits a payload into base-`2^(bits−1)` digits, most significant first.
pub fn payload_to_digits(pk: &PaillierPublicKey, payload: &[u8]) -> Vec<BigUint> {
    let k0 = payload_digit_count(pk, payload.len());
    let bits = payload_digit_bits(pk);
    let mask = (BigUint::from(1u32) << bits) - 1u32;
    let mut v = BigUint::from_bytes_be(payload);
    let mut digits = vec![BigUint::zero(); k0];
    for slot in digits.iter_mut().rev() {
        *slot = &v & &mask;
        v >>= bits;
    }
    digits
}

/// Inverse of [`payload_to_digits`]; rejects digits or totals that do not fit.
pub fn digits_to_payload(
    pk: &PaillierPublicKey,
    digits: &[BigUint],
    payload_len: usize,
) -> Result<Vec<u8>, CryptoError> {
    let bits = payload_digit_bits(pk);
    let mut v = BigUint::zero();
    for d in digits {
        if d.bits() > bits {
            return Err(CryptoError::DigitOutOfRange);
        }
        v = (v << bits) | d;
    }
    if v.bits() > 8 * payload_len as u64 {
        return Err(CryptoError::DigitOutOfRange);
    }
    Ok(encoding::to_fixed_bytes(&v, payload_len))
}

/// Encrypts `digits` (each `< n`) once, producing a layer-`layer` ciphertext.
pub fn encrypt_digits<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    digits: &[BigUint],
    layer: u8,
    rng: &mut R,
) -> Result<LayeredCiphertext, CryptoError> {
    let chunks = digits
        .iter()
        .map(|d| pk.encrypt(d, rng))
        .collect::<Result<Vec<_>, _>>()?;
    LayeredCiphertext::new(layer, chunks)
}

/// Encrypts `payload` recursively `layers` times.
pub fn layered_encrypt<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    payload: &[u8],
    layers: u8,
    rng: &mut R,
) -> Result<LayeredCiphertext, CryptoError> {
    if layers == 0 {
        return Err(CryptoError::ZeroLayer);
    }
    let mut current = encrypt_digits(pk, &payload_to_digits(pk, payload), 1, rng)?;
    for layer in 2..=layers {
        current = encrypt_digits(pk, &current.digits(pk), layer, rng)?;
    }
    Ok(current)
}

/// Adds further layers on top of an existing ciphertext or zero-string.
pub fn wrap<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    inner: &LayeredCiphertext,
    extra: u8,
    rng: &mut R,
) -> Result<LayeredCiphertext, CryptoError> {
    let mut current = inner.clone();
    for _ in 0..extra {
        let next = current.layer + 1;
        current = encrypt_digits(pk, &current.digits(pk), next, rng)?;
    }
    Ok(current)
}

/// Result of removing one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Peeled {
    Layer(LayeredCiphertext),
    Payload(Vec<u8>),
}

fn check_count(
    pk: &PaillierPublicKey,
    lc: &LayeredCiphertext,
    payload_len: usize,
) -> Result<(), CryptoError> {
    let expected = chunk_count(pk, payload_len, lc.layer)?;
    if lc.chunks.len() != expected {
        return Err(CryptoError::MalformedChunks {
            layer: lc.layer,
            found: lc.chunks.len(),
            expected,
        });
    }
    Ok(())
}

/// Decrypts one layer of `lc`.
pub fn peel(
    sk: &PaillierSecretKey,
    lc: &LayeredCiphertext,
    payload_len: usize,
) -> Result<Peeled, CryptoError> {
    let pk = sk.public_key();
    check_count(pk, lc, payload_len)?;
    let digits = lc
        .chunks
        .iter()
        .map(|c| sk.decrypt(c))
        .collect::<Result<Vec<_>, _>>()?;
    if lc.layer == 1 {
        return digits_to_payload(pk, &digits, payload_len).map(Peeled::Payload);
    }
    let n = pk.n();
    let chunks = digits
        .chunks_exact(EXPANSION_FACTOR)
        .map(|pair| &pair[0] * n + &pair[1])
        .collect();
    Ok(Peeled::Layer(LayeredCiphertext::new(lc.layer - 1, chunks)?))
}

/// Peels every layer and returns the innermost payload.
pub fn layered_decrypt(
    sk: &PaillierSecretKey,
    lc: &LayeredCiphertext,
    payload_len: usize,
) -> Result<Vec<u8>, CryptoError> {
    let mut current = lc.clone();
    loop {
        match peel(sk, &current, payload_len)? {
            Peeled::Payload(p) => return Ok(p),
            Peeled::Layer(next) => current = next,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::arith;
    use crate::crypto::paillier::toy_keypair;
    use crate::test_support::{rng, test_keypair};
    use rand::Rng;

    #[test]
    fn single_layer_zero_with_unit_randomness_is_one() {
        let (pk, _) = test_keypair();
        let digits = payload_to_digits(&pk, &[0u8; 8]);
        assert_eq!(digits.len(), 1);
        let c = pk.encrypt_with(&digits[0], &BigUint::from(1u32)).unwrap();
        assert_eq!(c, BigUint::from(1u32));
    }

    #[test]
    fn two_layers_at_1024_bits_have_two_chunks() {
        let mut n = BigUint::from(1u32) << 1023u32;
        n += 1u32;
        let pk = PaillierPublicKey::from_modulus(n).unwrap();
        // A 1016-bit group element fits one 1023-bit digit.
        assert_eq!(chunk_count(&pk, 127, 1).unwrap(), 1);
        assert_eq!(chunk_count(&pk, 127, 2).unwrap(), 2);
        assert_eq!(chunk_count(&pk, 127, 4).unwrap(), 8);
    }

    #[test]
    fn round_trips_at_every_depth() {
        let (pk, sk) = test_keypair();
        let mut r = rng(11);
        for layers in 1..=4u8 {
            let payload: Vec<u8> = (0..40).map(|_| r.gen()).collect();
            let lc = layered_encrypt(&pk, &payload, layers, &mut r).unwrap();
            assert_eq!(lc.layer(), layers);
            assert_eq!(lc.chunk_count(), chunk_count(&pk, 40, layers).unwrap());
            assert_eq!(layered_decrypt(&sk, &lc, 40).unwrap(), payload);
        }
    }

    #[test]
    fn round_trips_multi_digit_payloads() {
        let (pk, sk) = test_keypair();
        let mut r = rng(12);
        let payload: Vec<u8> = (0..200).map(|_| r.gen()).collect();
        assert_eq!(payload_digit_count(&pk, 200), 4);
        let lc = layered_encrypt(&pk, &payload, 2, &mut r).unwrap();
        assert_eq!(lc.chunk_count(), 8);
        assert_eq!(layered_decrypt(&sk, &lc, 200).unwrap(), payload);
    }

    #[test]
    fn toy_key_round_trips() {
        let (pk, sk) = toy_keypair();
        let mut r = rng(13);
        for v in 0..=255u8 {
            let lc = layered_encrypt(&pk, &[v], 2, &mut r).unwrap();
            assert_eq!(lc.chunk_count(), 6);
            assert_eq!(layered_decrypt(&sk, &lc, 1).unwrap(), vec![v]);
        }
    }

    #[test]
    fn digits_reassemble_chunks() {
        let (pk, _) = test_keypair();
        let mut r = rng(14);
        let c = arith::random_below(&mut r, pk.n_squared());
        let lc = LayeredCiphertext::new(1, vec![c.clone()]).unwrap();
        let d = lc.digits(&pk);
        assert!(d.iter().all(|x| x < pk.n()));
        assert_eq!(&d[0] * pk.n() + &d[1], c);
    }

    #[test]
    fn wrong_chunk_count_is_malformed() {
        let (pk, sk) = test_keypair();
        let mut r = rng(15);
        let lc = layered_encrypt(&pk, &[1, 2, 3], 2, &mut r).unwrap();
        let mut chunks = lc.into_chunks();
        chunks.pop();
        let bad = LayeredCiphertext::new(2, chunks).unwrap();
        assert_eq!(
            layered_decrypt(&sk, &bad, 3),
            Err(CryptoError::MalformedChunks {
                layer: 2,
                found: 1,
                expected: 2
            })
        );
    }

    #[test]
    fn serialization_round_trips_and_has_predicted_size() {
        let (pk, _) = test_keypair();
        let mut r = rng(16);
        let lc = layered_encrypt(&pk, &[9; 63], 3, &mut r).unwrap();
        let bytes = lc.to_bytes(&pk);
        assert_eq!(bytes.len(), serialized_len(&pk, 4));
        let mut rd = Reader::new(&bytes);
        assert_eq!(LayeredCiphertext::decode(&pk, &mut rd).unwrap(), lc);
        rd.finish().unwrap();
    }

    #[test]
    fn zero_string_lengths_match_serializations() {
        let (pk, _) = test_keypair();
        let z0 = ZeroString::new(&pk, 0, 63).unwrap();
        assert_eq!(z0.to_bytes(), vec![0u8; 63]);
        let z2 = ZeroString::new(&pk, 2, 63).unwrap();
        let lc = LayeredCiphertext::zero_string(&pk, 2, 63).unwrap();
        assert_eq!(z2.byte_length, lc.to_bytes(&pk).len());
        assert!(z2.to_bytes().iter().all(|b| *b == 0));
        assert!(lc.is_zero_string());
    }

    #[test]
    fn payload_digits_reject_overflow() {
        let (pk, _) = toy_keypair();
        // Three 3-bit digits hold 9 bits; a 1-byte payload must stay below 256.
        let digits = vec![BigUint::from(4u32), BigUint::from(0u32), BigUint::from(0u32)];
        assert_eq!(digits_to_payload(&pk, &digits, 1), Err(CryptoError::DigitOutOfRange));
        let digits = vec![BigUint::from(8u32), BigUint::from(0u32), BigUint::from(0u32)];
        assert_eq!(digits_to_payload(&pk, &digits, 1), Err(CryptoError::DigitOutOfRange));
    }
}
