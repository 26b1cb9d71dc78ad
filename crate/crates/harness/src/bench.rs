//! Serialized query and response sizes against the `(Σ m_i + f^d)·l` model.

use std::fmt::Write as _;

use octopus_core::crypto::{PaillierPublicKey, PedersenParams};
use octopus_core::pir::sizes::{
    predicted_query_bits, predicted_response_bits, query_framing_bytes, response_framing_bytes,
};
use octopus_core::pir::{gen_query, sparse_respond, QueryShape, RespondOutcome, SparseDatabase};
use rand::{CryptoRng, RngCore};

use crate::HarnessError;

/// Ciphertext expansion of one layer.
pub const F: u64 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeRow {
    pub shape: QueryShape,
    pub key_bits: u64,
    pub query_bytes: usize,
    pub predicted_query_bytes: u64,
    pub query_framing: usize,
    pub response_bytes: usize,
    pub predicted_response_bytes: u64,
    pub response_framing: usize,
}

impl SizeRow {
    /// Measured size minus the model equals the serialization framing.
    pub fn exact(&self) -> bool {
        self.query_bytes as u64 == self.predicted_query_bytes + self.query_framing as u64
            && self.response_bytes as u64 == self.predicted_response_bytes + self.response_framing as u64
    }
}

/// Measures one query for `shape` and one layer-`d` response carrying a
/// single commitment.
pub fn measure<R: RngCore + CryptoRng>(
    pk: &PaillierPublicKey,
    shape: &QueryShape,
    rng: &mut R,
) -> Result<SizeRow, HarnessError> {
    let l = pk.bit_length();
    let pp = PedersenParams::for_key_bits(l)?;
    let payload_len = pp.element_width();
    let (query, _) = gen_query(pk, shape, 0, rng)?;
    let query_bytes = query.to_bytes(pk).len();

    let mut db = SparseDatabase::new(shape.clone(), payload_len);
    db.insert(0, pp.commit(&1u32.into(), &pp.random_scalar(rng)).to_payload(&pp))?;
    let d = shape.d();
    let response = match sparse_respond(pk, &query, &db, d, rng)? {
        RespondOutcome::Response(r) => r,
        RespondOutcome::EmptySentinel => unreachable!("the target slot is occupied"),
    };
    Ok(SizeRow {
        shape: shape.clone(),
        key_bits: l,
        query_bytes,
        predicted_query_bytes: predicted_query_bits(shape, F, l) / 8,
        query_framing: query_framing_bytes(shape),
        response_bytes: response.to_bytes(pk).len(),
        predicted_response_bytes: predicted_response_bits(d, F, l) / 8,
        response_framing: response_framing_bytes(pk, payload_len, d),
    })
}

pub fn bench_sizes<R: RngCore + CryptoRng>(
    pk: &PaillierPublicKey,
    shapes: &[QueryShape],
    rng: &mut R,
) -> Result<Vec<SizeRow>, HarnessError> {
    shapes.iter().map(|s| measure(pk, s, rng)).collect()
}

pub fn to_csv(rows: &[SizeRow]) -> String {
    let mut out = String::from(
        "shape,key_bits,query_bytes,predicted_query_bytes,query_framing,response_bytes,predicted_response_bytes,response_framing,exact\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.shape,
            r.key_bits,
            r.query_bytes,
            r.predicted_query_bytes,
            r.query_framing,
            r.response_bytes,
            r.predicted_response_bytes,
            r.response_framing,
            r.exact()
        );
    }
    out
}
