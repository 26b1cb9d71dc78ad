use std::collections::BTreeSet;

use crate::crypto::layered::{self, Peeled};
use crate::crypto::pedersen::{Commitment, PedersenParams};
use crate::crypto::PaillierSecretKey;
use crate::encoding::{DecodeError, Reader};

use super::{PirError, PirResponse};

/// What a decrypted response reveals: a payload (`Type0`), a zero-string of
/// layer `i` (`TypeI(i)`), or the all-zero payload at full depth (`TypeD`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResponseType {
    Type0,
    TypeI(u8),
    TypeD,
}

impl ResponseType {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        let (kind, layer) = match self {
            ResponseType::Type0 => (0, 0),
            ResponseType::TypeI(i) => (1, *i),
            ResponseType::TypeD => (2, 0),
        };
        buf.push(kind);
        buf.push(layer);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match (r.u8()?, r.u8()?) {
            (0, 0) => Ok(ResponseType::Type0),
            (1, i) if i >= 1 => Ok(ResponseType::TypeI(i)),
            (2, 0) => Ok(ResponseType::TypeD),
            (k, l) => Err(DecodeError::invalid(format!("response type ({k}, {l})"))),
        }
    }
}

impl std::fmt::Display for ResponseType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResponseType::Type0 => f.write_str("type0"),
            ResponseType::TypeI(i) => write!(f, "type{i}"),
            ResponseType::TypeD => f.write_str("typeD"),
        }
    }
}

/// A fully peeled response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decrypted {
    Payload(Vec<u8>),
    /// A zero-string found at this layer (`0` is the all-zero payload).
    Zero(u8),
}

impl Decrypted {
    pub fn response_type(&self, d: usize) -> ResponseType {
        match self {
            Decrypted::Payload(_) => ResponseType::Type0,
            Decrypted::Zero(0) => ResponseType::TypeD,
            Decrypted::Zero(i) => {
                debug_assert!((*i as usize) < d);
                ResponseType::TypeI(*i)
            }
        }
    }
}

/// Peels layers until a payload or a zero-string appears.
pub fn decrypt_response(
    sk: &PaillierSecretKey,
    resp: &PirResponse,
    payload_len: usize,
) -> Result<Decrypted, PirError> {
    if resp.body.is_zero_string() {
        return Err(PirError::MalformedResponse("response is a bare zero-string".into()));
    }
    let mut current = resp.body.clone();
    loop {
        let peeled = layered::peel(sk, &current, payload_len)
            .map_err(|e| PirError::MalformedResponse(e.to_string()))?;
        match peeled {
            Peeled::Payload(p) if p.iter().all(|b| *b == 0) => return Ok(Decrypted::Zero(0)),
            Peeled::Payload(p) => return Ok(Decrypted::Payload(p)),
            Peeled::Layer(lc) if lc.is_zero_string() => return Ok(Decrypted::Zero(lc.layer())),
            Peeled::Layer(lc) => current = lc,
        }
    }
}

/// Classifies a layer-`d` response whose payload is `columns` fixed-width commitments.
pub fn classify_response(
    sk: &PaillierSecretKey,
    resp: &PirResponse,
    d: usize,
    params: &PedersenParams,
    columns: usize,
) -> Result<(ResponseType, Option<Vec<Commitment>>), PirError> {
    if resp.body.layer() as usize != d {
        return Err(PirError::MalformedResponse(format!(
            "response at layer {}, expected {d}",
            resp.body.layer()
        )));
    }
    let width = params.element_width();
    match decrypt_response(sk, resp, width * columns)? {
        Decrypted::Payload(p) => {
            let commitments = p
                .chunks_exact(width)
                .map(|chunk| Commitment::from_payload(params, chunk))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| PirError::MalformedResponse("payload is not a group element".into()))?;
            Ok((ResponseType::Type0, Some(commitments)))
        }
        z => Ok((z.response_type(d), None)),
    }
}

/// `{Type0, TypeD} ∪ {TypeI(i) : 1 ≤ i ≤ min(s, d − 1)}`.
pub fn reachable_types(d: usize, s: usize) -> BTreeSet<ResponseType> {
    let mut out = BTreeSet::from([ResponseType::Type0, ResponseType::TypeD]);
    for i in 1..=s.min(d.saturating_sub(1)) {
        out.insert(ResponseType::TypeI(i as u8));
    }
    out
}
