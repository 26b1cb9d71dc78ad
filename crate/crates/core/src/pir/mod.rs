//! Recursive PIR over layered Paillier: query generation, the sparsity-aware
//! responder, a dense reference responder, response classification and size
//! accounting.

mod classify;
mod database;
mod query;
mod respond;
mod shape;
pub mod sizes;

use thiserror::Error;

use crate::crypto::CryptoError;
use crate::encoding::DecodeError;

pub use classify::{classify_response, decrypt_response, reachable_types, Decrypted, ResponseType};
pub use database::SparseDatabase;
pub use query::{gen_query, gen_query_with_plaintexts, PirQuery, QueryWitness};
pub use respond::{
    empty_sentinel_response, naive_respond, sparse_respond, sparse_respond_instrumented, DenseSlot,
    PirResponse, RespondOutcome, RespondStats,
};
pub use shape::QueryShape;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PirError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("pid {pid} outside capacity {capacity}")]
    PidOutOfRange { pid: usize, capacity: usize },
    #[error("query and database shapes differ")]
    ShapeMismatch,
    #[error("replace iteration {s} outside 1..={d}")]
    InvalidReplaceIteration { s: usize, d: usize },
    #[error("payload of {found} bytes, database width is {expected}")]
    PayloadLength { found: usize, expected: usize },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for PirError {
    fn from(e: std::io::Error) -> Self {
        PirError::Io(e.to_string())
    }
}
