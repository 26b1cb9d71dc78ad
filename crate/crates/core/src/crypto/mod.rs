//! Arbitrary-precision primitives: Paillier with layered (recursive)
//! encryption, Pedersen commitments, the keyed PRF and the truncated Laplace
//! sampler.

pub mod arith;
pub mod laplace;
pub mod layered;
pub mod paillier;
pub mod pedersen;
pub mod prf;

use thiserror::Error;

pub use layered::{LayeredCiphertext, ZeroString};
pub use paillier::{PaillierPublicKey, PaillierSecretKey};
pub use pedersen::{Commitment, PedersenParams};
pub use prf::{Label, PrfSeed};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unsupported key size {0} (expected 512, 1024 or 2048)")]
    UnsupportedKeySize(u64),
    #[error("plaintext out of range for modulus")]
    PlaintextOutOfRange,
    #[error("randomness is not a unit modulo n")]
    RandomnessNotUnit,
    #[error("ciphertext is not an element of Z*_(n^2)")]
    InvalidCiphertext,
    #[error("operand does not belong to this key's modulus")]
    ModulusMismatch,
    #[error("layer {layer} ciphertext has {found} chunks, expected {expected}")]
    MalformedChunks {
        layer: u8,
        found: usize,
        expected: usize,
    },
    #[error("layer must be at least 1")]
    ZeroLayer,
    #[error("invalid group parameters: {0}")]
    InvalidParams(&'static str),
    #[error("value is not an element of the commitment subgroup")]
    NotInSubgroup,
    #[error("decoded digit exceeds the payload radix")]
    DigitOutOfRange,
}
