//! Message bodies and their wire tags.

use num_bigint::BigUint;

use crate::crypto::{Commitment, PaillierPublicKey, PedersenParams};
use crate::encoding::{self, DecodeError, Reader};
use crate::pir::{PirQuery, PirResponse};
use crate::zk::{CorrespondenceProof, PlaintextKnowledgeProof, ValidQueryProof};

use super::evaluation::EvalMessage;
use super::wire::{Frame, SessionId};
use super::{AbortKind, SessionHeader};

pub const TAG_HEADER: u8 = 1;
pub const TAG_NONCE: u8 = 2;
pub const TAG_AUTH_CIPHERTEXT: u8 = 3;
pub const TAG_GROUP_DATASET: u8 = 4;
pub const TAG_QUERY: u8 = 5;
pub const TAG_CORRESPONDENCE: u8 = 6;
pub const TAG_QUERY_FORWARD: u8 = 7;
pub const TAG_LENDER_RESPONSE: u8 = 8;
pub const TAG_BORROWER_DELTA: u8 = 9;
pub const TAG_BORROWER_COMMITMENT: u8 = 10;
pub const TAG_RESPONSES: u8 = 11;
pub const TAG_EVALUATION: u8 = 12;
pub const TAG_ABORT: u8 = 13;

pub fn tag_name(tag: u8) -> &'static str {
    match tag {
        TAG_HEADER => "header",
        TAG_NONCE => "nonce",
        TAG_AUTH_CIPHERTEXT => "auth-ciphertext",
        TAG_GROUP_DATASET => "group-dataset",
        TAG_QUERY => "query",
        TAG_CORRESPONDENCE => "correspondence",
        TAG_QUERY_FORWARD => "query-forward",
        TAG_LENDER_RESPONSE => "lender-response",
        TAG_BORROWER_DELTA => "borrower-delta",
        TAG_BORROWER_COMMITMENT => "borrower-commitment",
        TAG_RESPONSES => "responses",
        TAG_EVALUATION => "evaluation",
        TAG_ABORT => "abort",
        _ => "unknown",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    /// Originator to every role: session parameters and the originator key.
    Header { header: SessionHeader, pk: PaillierPublicKey },
    /// Exchanger to borrower: the session nonce `r_e`.
    Nonce { r_e: [u8; 32] },
    /// Borrower to exchanger: `c = E(y; r)` and knowledge of its plaintext.
    AuthCiphertext { c: BigUint, proof: PlaintextKnowledgeProof },
    /// Exchanger to originator: the per-pid secrets `y_u` of the group.
    GroupDataset { ys: Vec<BigUint> },
    /// Originator to exchanger: the PIR query and its validity proof.
    Query { query: PirQuery, proof: ValidQueryProof },
    /// Originator to exchanger.
    Correspondence { proof: CorrespondenceProof },
    /// Exchanger to lenders.
    QueryForward { query: PirQuery },
    /// Lender to exchanger.
    LenderResponse { response: PirResponse },
    /// Borrower to exchanger: `Δr_b` per column.
    BorrowerDelta { delta_rb: Vec<BigUint> },
    /// Borrower to originator, relayed by the exchanger: `c_b` per column.
    BorrowerCommitment { c_b: Vec<Commitment> },
    /// Exchanger to originator: shuffled responses and `Δr` per column.
    Responses { responses: Vec<PirResponse>, delta_r: Vec<BigUint> },
    /// Borrower to originator.
    Evaluation(EvalMessage),
    Abort(AbortKind),
}

fn put_list<T>(buf: &mut Vec<u8>, items: &[T], mut f: impl FnMut(&mut Vec<u8>, &T)) {
    encoding::put_u32(buf, items.len() as u32);
    for item in items {
        f(buf, item);
    }
}

fn read_list<T>(
    r: &mut Reader<'_>,
    mut f: impl FnMut(&mut Reader<'_>) -> Result<T, DecodeError>,
) -> Result<Vec<T>, DecodeError> {
    let n = r.u32()? as usize;
    if n > r.remaining() {
        return Err(DecodeError::invalid("count exceeds the remaining input"));
    }
    (0..n).map(|_| f(r)).collect()
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Header { .. } => TAG_HEADER,
            Message::Nonce { .. } => TAG_NONCE,
            Message::AuthCiphertext { .. } => TAG_AUTH_CIPHERTEXT,
            Message::GroupDataset { .. } => TAG_GROUP_DATASET,
            Message::Query { .. } => TAG_QUERY,
            Message::Correspondence { .. } => TAG_CORRESPONDENCE,
            Message::QueryForward { .. } => TAG_QUERY_FORWARD,
            Message::LenderResponse { .. } => TAG_LENDER_RESPONSE,
            Message::BorrowerDelta { .. } => TAG_BORROWER_DELTA,
            Message::BorrowerCommitment { .. } => TAG_BORROWER_COMMITMENT,
            Message::Responses { .. } => TAG_RESPONSES,
            Message::Evaluation(_) => TAG_EVALUATION,
            Message::Abort(_) => TAG_ABORT,
        }
    }

    /// Serializes the body. Ciphertexts and commitments use the fixed widths
    /// of `pk` and `pp`.
    pub fn encode_body(&self, pk: &PaillierPublicKey, pp: &PedersenParams) -> Vec<u8> {
        let mut buf = Vec::new();
        match self {
            Message::Header { header, pk } => {
                header.encode(&mut buf);
                pk.encode(&mut buf);
            }
            Message::Nonce { r_e } => buf.extend_from_slice(r_e),
            Message::AuthCiphertext { c, proof } => {
                encoding::put_uint_fixed(&mut buf, c, pk.ciphertext_width());
                proof.encode(&mut buf);
            }
            Message::GroupDataset { ys } => {
                put_list(&mut buf, ys, |b, y| encoding::put_uint_fixed(b, y, encoding::byte_width(pk.n())))
            }
            Message::Query { query, proof } => {
                query.encode(pk, &mut buf);
                proof.encode(&mut buf);
            }
            Message::Correspondence { proof } => proof.encode(&mut buf),
            Message::QueryForward { query } => query.encode(pk, &mut buf),
            Message::LenderResponse { response } => response.encode(pk, &mut buf),
            Message::BorrowerDelta { delta_rb } => put_list(&mut buf, delta_rb, encoding::put_uint),
            Message::BorrowerCommitment { c_b } => put_list(&mut buf, c_b, |b, c| c.encode(pp, b)),
            Message::Responses { responses, delta_r } => {
                put_list(&mut buf, responses, |b, resp| resp.encode(pk, b));
                put_list(&mut buf, delta_r, encoding::put_uint);
            }
            Message::Evaluation(e) => e.encode(pp, &mut buf),
            Message::Abort(kind) => encoding::put_u8(&mut buf, kind.code()),
        }
        buf
    }

    pub fn to_frame(&self, session: SessionId, pk: &PaillierPublicKey, pp: &PedersenParams) -> Frame {
        Frame::new(self.tag(), session, self.encode_body(pk, pp))
    }

    /// Parses a header frame, the only message readable without session keys.
    pub fn decode_header(frame: &Frame) -> Result<(SessionHeader, PaillierPublicKey), DecodeError> {
        if frame.tag != TAG_HEADER {
            return Err(DecodeError::invalid(format!("expected a header, got {}", tag_name(frame.tag))));
        }
        let mut r = Reader::new(&frame.body);
        let header = SessionHeader::decode(&mut r)?;
        let pk = PaillierPublicKey::decode(&mut r)?;
        r.finish()?;
        if header.session_id != frame.session {
            return Err(DecodeError::invalid("header session id differs from the frame"));
        }
        Ok((header, pk))
    }

    pub fn decode(frame: &Frame, pk: &PaillierPublicKey, pp: &PedersenParams) -> Result<Self, DecodeError> {
        let mut r = Reader::new(&frame.body);
        let r = &mut r;
        let msg = match frame.tag {
            TAG_HEADER => {
                let (header, pk) = Message::decode_header(frame)?;
                return Ok(Message::Header { header, pk });
            }
            TAG_NONCE => {
                let mut r_e = [0u8; 32];
                r_e.copy_from_slice(r.take(32)?);
                Message::Nonce { r_e }
            }
            TAG_AUTH_CIPHERTEXT => Message::AuthCiphertext {
                c: r.uint_fixed(pk.ciphertext_width())?,
                proof: PlaintextKnowledgeProof::decode(r)?,
            },
            TAG_GROUP_DATASET => Message::GroupDataset {
                ys: read_list(r, |r| r.uint_fixed(encoding::byte_width(pk.n())))?,
            },
            TAG_QUERY => Message::Query {
                query: PirQuery::decode(pk, r)?,
                proof: ValidQueryProof::decode(r)?,
            },
            TAG_CORRESPONDENCE => Message::Correspondence {
                proof: CorrespondenceProof::decode(r)?,
            },
            TAG_QUERY_FORWARD => Message::QueryForward {
                query: PirQuery::decode(pk, r)?,
            },
            TAG_LENDER_RESPONSE => Message::LenderResponse {
                response: PirResponse::decode(pk, r)?,
            },
            TAG_BORROWER_DELTA => Message::BorrowerDelta {
                delta_rb: read_list(r, |r| r.uint())?,
            },
            TAG_BORROWER_COMMITMENT => Message::BorrowerCommitment {
                c_b: read_list(r, |r| Commitment::decode(pp, r))?,
            },
            TAG_RESPONSES => Message::Responses {
                responses: read_list(r, |r| PirResponse::decode(pk, r))?,
                delta_r: read_list(r, |r| r.uint())?,
            },
            TAG_EVALUATION => Message::Evaluation(EvalMessage::decode(pp, r)?),
            TAG_ABORT => {
                let code = r.u8()?;
                Message::Abort(
                    AbortKind::from_code(code).ok_or_else(|| DecodeError::invalid(format!("abort code {code}")))?,
                )
            }
            other => return Err(DecodeError::invalid(format!("message tag {other}"))),
        };
        r.finish()?;
        Ok(msg)
    }
}
