//! Communication-size accounting: the `(Σ m_i + f^d)·l` model and the exact
//! framing added by the serialization.

use crate::crypto::layered;
use crate::crypto::PaillierPublicKey;
use crate::encoding;

use super::QueryShape;

/// `(Σ m_i)·f·l` bits.
pub fn predicted_query_bits(shape: &QueryShape, f: u64, l: u64) -> u64 {
    shape.slot_count() as u64 * f * l
}

/// `f^d·l` bits.
pub fn predicted_response_bits(d: usize, f: u64, l: u64) -> u64 {
    f.pow(d as u32) * l
}

/// Bytes a serialized query adds on top of its ciphertext bits: the shape
/// header plus a 4-byte length prefix per slot.
pub fn query_framing_bytes(shape: &QueryShape) -> usize {
    shape.encoded_len() + 4 * shape.slot_count()
}

/// Bytes a serialized layer-`d` response adds on top of its ciphertext bits.
pub fn response_framing_bytes(pk: &PaillierPublicKey, payload_len: usize, d: usize) -> usize {
    let chunks = layered::chunk_count(pk, payload_len, d as u8).expect("d >= 1");
    layered::serialized_len(pk, chunks) - chunks * pk.ciphertext_width()
}

/// Serialized size of one base ciphertext including its length prefix.
pub fn ciphertext_len(pk: &PaillierPublicKey) -> usize {
    encoding::fixed_uint_len(pk.ciphertext_width())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_two_predictions() {
        let q4 = QueryShape::new(vec![10; 4]).unwrap();
        assert_eq!(predicted_query_bits(&q4, 2, 1024), 81_920);
        let q2 = QueryShape::new(vec![100, 100]).unwrap();
        assert_eq!(predicted_query_bits(&q2, 2, 1024) / 8, 51_200);
        assert_eq!(predicted_response_bits(4, 2, 1024) / 8, 2_048);
    }

    #[test]
    fn framing_counts() {
        let q = QueryShape::new(vec![2]).unwrap();
        assert_eq!(query_framing_bytes(&q), 5 + 8);
    }
}
