//! Non-interactive Σ-protocols made non-interactive with a SHA-256
//! Fiat-Shamir transcript.
//!
//! Every prover and verifier takes a `ctx` byte string (the session id in the
//! protocol) that is absorbed before anything else, so a proof produced for
//! one session never verifies in another.

mod paillier_proofs;
mod pedersen_proofs;
mod query_proofs;
mod transcript;

use num_bigint::BigUint;
use thiserror::Error;

use crate::encoding::{self, DecodeError, Reader};

pub use paillier_proofs::{
    prove_binary, prove_nth_root, prove_or_nth_root, prove_plaintext_knowledge, verify_binary,
    verify_nth_root, verify_or_nth_root, verify_plaintext_knowledge, BinaryPlaintextProof,
    NthRootProof, OrNthRootProof, PlaintextKnowledgeProof,
};
pub use pedersen_proofs::{
    prove_comparison, prove_ped_bit, prove_ped_multiplication, prove_ped_opening, prove_ped_range,
    verify_comparison, verify_ped_bit, verify_ped_multiplication, verify_ped_opening,
    verify_ped_range, BitProof, Comparison, ComparisonProof, MultiplicationProof, OpeningProof,
    RangeProof,
};
pub use query_proofs::{
    correspondence_statements, prove_correspondence, prove_valid_query, verify_correspondence,
    verify_valid_query, CorrespondenceProof, ValidQueryProof,
};
pub use transcript::{Challenge, Transcript, CHALLENGE_BITS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZkError {
    #[error("statement and witness sizes differ: {0}")]
    SizeMismatch(String),
    #[error("dataset entries are not pairwise distinct")]
    DuplicateDataset,
    #[error("range of {0} bits does not fit the group")]
    RangeTooWide(usize),
    #[error("witness index outside the statement list")]
    WitnessIndex,
}

// Serialization tags, one per proof kind.
pub(crate) const TAG_PLAINTEXT_KNOWLEDGE: u8 = 1;
pub(crate) const TAG_NTH_ROOT: u8 = 2;
pub(crate) const TAG_OR_NTH_ROOT: u8 = 3;
pub(crate) const TAG_BINARY: u8 = 4;
pub(crate) const TAG_VALID_QUERY: u8 = 5;
pub(crate) const TAG_CORRESPONDENCE: u8 = 6;
pub(crate) const TAG_PED_OPENING: u8 = 7;
pub(crate) const TAG_PED_BIT: u8 = 8;
pub(crate) const TAG_PED_MULTIPLICATION: u8 = 9;
pub(crate) const TAG_PED_RANGE: u8 = 10;
pub(crate) const TAG_COMPARISON: u8 = 11;

pub(crate) fn expect_tag(r: &mut Reader<'_>, tag: u8) -> Result<(), DecodeError> {
    let found = r.u8()?;
    if found != tag {
        return Err(DecodeError::invalid(format!("proof tag {found}, expected {tag}")));
    }
    Ok(())
}

pub(crate) fn put_uints(buf: &mut Vec<u8>, xs: &[&BigUint]) {
    for x in xs {
        encoding::put_uint(buf, x);
    }
}

pub(crate) fn put_len(buf: &mut Vec<u8>, n: usize) {
    encoding::put_u32(buf, n as u32);
}

/// Reads a length with an upper bound so corrupted input cannot force huge allocations.
pub(crate) fn read_len(r: &mut Reader<'_>, max: usize) -> Result<usize, DecodeError> {
    let n = r.u32()? as usize;
    if n > max {
        return Err(DecodeError::invalid(format!("length {n} exceeds {max}")));
    }
    Ok(n)
}
