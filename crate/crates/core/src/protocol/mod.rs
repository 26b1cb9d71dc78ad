//! The four roles of a session and the transports that connect them.
//!
//! Each role is a message-driven state machine ([`Role`]). Authorization,
//! aggregation and evaluation proceed concurrently; the exchanger releases
//! lender responses only once the query is valid and the borrower is
//! authorized, and the originator accepts a result only after the
//! consistency check on the aggregate.

mod borrower;
pub mod driver;
mod evaluation;
mod exchanger;
mod lender;
mod messages;
mod originator;
mod session;
mod shuffle;
pub mod wire;

use std::fmt;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crypto::{CryptoError, Label, PaillierPublicKey, PedersenParams, PrfSeed};
use crate::dp::{DpError, DpParams};
use crate::encoding::{self, DecodeError, Reader};
use crate::pir::{PirError, QueryShape};
use crate::registry::{Column, RegistryError};

pub use borrower::Borrower;
pub use driver::{
    run_inproc, run_tcp, run_threaded, Address, Outgoing, Role, StepTiming, Transcript, TranscriptEntry, START_STEP,
};
pub use evaluation::{EvalMessage, QueryResult};
pub use exchanger::{Exchanger, NoiseSource};
pub use lender::Lender;
pub use messages::{tag_name, Message};
pub use originator::Originator;
pub use session::{run_octopus, run_sessions, EventLog, SessionConfig, SessionEvent, SessionReport, TransportKind, Verdicts};
pub use shuffle::exchanger_shuffle;

/// Wire tags of every message type.
pub mod tags {
    pub use super::messages::{
        TAG_ABORT, TAG_AUTH_CIPHERTEXT, TAG_BORROWER_COMMITMENT, TAG_BORROWER_DELTA, TAG_CORRESPONDENCE, TAG_EVALUATION,
        TAG_GROUP_DATASET, TAG_HEADER, TAG_LENDER_RESPONSE, TAG_NONCE, TAG_QUERY, TAG_QUERY_FORWARD, TAG_RESPONSES,
    };
}
pub use wire::{Frame, SessionId, FRAME_OVERHEAD};

/// A protocol participant as seen on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Originator,
    Exchanger,
    Borrower,
    Lender(u32),
    /// The borrower as seen by the exchanger, behind the anonymity boundary.
    Anonymous,
}

impl Party {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        let (kind, id) = match *self {
            Party::Originator => (0, 0),
            Party::Exchanger => (1, 0),
            Party::Borrower => (2, 0),
            Party::Lender(i) => (3, i),
            Party::Anonymous => (4, 0),
        };
        encoding::put_u8(buf, kind);
        encoding::put_u32(buf, id);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let kind = r.u8()?;
        let id = r.u32()?;
        Ok(match kind {
            0 => Party::Originator,
            1 => Party::Exchanger,
            2 => Party::Borrower,
            3 => Party::Lender(id),
            4 => Party::Anonymous,
            other => return Err(DecodeError::invalid(format!("party kind {other}"))),
        })
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Originator => f.write_str("originator"),
            Party::Exchanger => f.write_str("exchanger"),
            Party::Borrower => f.write_str("borrower"),
            Party::Lender(i) => write!(f, "lender-{i}"),
            Party::Anonymous => f.write_str("anonymous"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Sum,
    Count,
    Variance,
    /// Is the total below a public threshold?
    CmpPublic(u64),
    /// Comparison against a threshold kept secret by the originator.
    CmpPrivate,
}

impl QueryKind {
    /// Database columns a lender commits to for this kind.
    pub fn columns(&self) -> Vec<Column> {
        match self {
            QueryKind::Count => vec![Column::Indicator],
            QueryKind::Variance => vec![Column::Amount, Column::Square],
            QueryKind::Sum | QueryKind::CmpPublic(_) | QueryKind::CmpPrivate => vec![Column::Amount],
        }
    }

    pub fn parse(s: &str, threshold: Option<u64>) -> Result<Self, String> {
        match s {
            "sum" => Ok(QueryKind::Sum),
            "count" => Ok(QueryKind::Count),
            "variance" => Ok(QueryKind::Variance),
            "cmp_public" | "cmp-public" => threshold
                .map(QueryKind::CmpPublic)
                .ok_or_else(|| "cmp_public needs a threshold".to_string()),
            "cmp_private" | "cmp-private" => Ok(QueryKind::CmpPrivate),
            other => Err(format!("unknown query kind {other:?}")),
        }
    }

    fn encode(&self, buf: &mut Vec<u8>) {
        let (k, t) = match *self {
            QueryKind::Sum => (0, 0),
            QueryKind::Count => (1, 0),
            QueryKind::Variance => (2, 0),
            QueryKind::CmpPublic(t) => (3, t),
            QueryKind::CmpPrivate => (4, 0),
        };
        encoding::put_u8(buf, k);
        encoding::put_u64(buf, t);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let k = r.u8()?;
        let t = r.u64()?;
        Ok(match k {
            0 => QueryKind::Sum,
            1 => QueryKind::Count,
            2 => QueryKind::Variance,
            3 => QueryKind::CmpPublic(t),
            4 => QueryKind::CmpPrivate,
            other => return Err(DecodeError::invalid(format!("query kind {other}"))),
        })
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryKind::Sum => f.write_str("sum"),
            QueryKind::Count => f.write_str("count"),
            QueryKind::Variance => f.write_str("variance"),
            QueryKind::CmpPublic(t) => write!(f, "cmp_public({t})"),
            QueryKind::CmpPrivate => f.write_str("cmp_private"),
        }
    }
}

/// Session parameters every role holds an identical copy of.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionHeader {
    pub session_id: SessionId,
    pub gid: u32,
    /// UTC date, `YYYY-MM-DD`; part of every date-labelled PRF input.
    pub date: String,
    pub kind: QueryKind,
    pub pk_fingerprint: [u8; 32],
    pub shape: QueryShape,
    pub s: usize,
    pub dp: DpParams,
    /// Lenders taking part, in ascending id order.
    pub lenders: Vec<u32>,
    /// Bit length `L` of comparison range proofs.
    pub range_bits: usize,
}

impl SessionHeader {
    pub fn d(&self) -> usize {
        self.shape.d()
    }

    pub fn columns(&self) -> Vec<Column> {
        self.kind.columns()
    }

    pub fn payload_len(&self, pp: &PedersenParams) -> usize {
        self.columns().len() * pp.element_width()
    }

    pub fn validate(&self, pk: &PaillierPublicKey) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::InvalidConfig(msg));
        if self.pk_fingerprint != pk.fingerprint() {
            return bad("public key does not match the header fingerprint".into());
        }
        if self.s == 0 || self.s > self.d() {
            return bad(format!("replace iteration {} outside 1..={}", self.s, self.d()));
        }
        if self.dp.s != self.s || self.dp.d != self.d() || self.dp.m != self.shape.capacity() as u64 {
            return bad("privacy parameters disagree with the shape".into());
        }
        self.dp.validate()?;
        if self.lenders.windows(2).any(|w| w[0] >= w[1]) {
            return bad("lender ids must be strictly increasing".into());
        }
        if self.kind == QueryKind::Variance && self.lenders.is_empty() {
            return bad("variance needs at least one lender".into());
        }
        Ok(())
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(&self.session_id);
        encoding::put_u32(buf, self.gid);
        encoding::put_str(buf, &self.date);
        self.kind.encode(buf);
        buf.extend_from_slice(&self.pk_fingerprint);
        self.shape.encode(buf);
        encoding::put_u8(buf, self.s as u8);
        self.dp.encode(buf);
        encoding::put_u32(buf, self.lenders.len() as u32);
        for l in &self.lenders {
            encoding::put_u32(buf, *l);
        }
        encoding::put_u16(buf, self.range_bits as u16);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let mut session_id = [0u8; 16];
        session_id.copy_from_slice(r.take(16)?);
        let gid = r.u32()?;
        let date = r.string()?;
        let kind = QueryKind::decode(r)?;
        let mut pk_fingerprint = [0u8; 32];
        pk_fingerprint.copy_from_slice(r.take(32)?);
        let shape = QueryShape::decode(r)?;
        let s = r.u8()? as usize;
        let dp = DpParams::decode(r)?;
        let count = r.u32()? as usize;
        if count > r.remaining() / 4 {
            return Err(DecodeError::invalid("count exceeds the remaining input"));
        }
        let lenders = (0..count).map(|_| r.u32()).collect::<Result<_, _>>()?;
        let range_bits = r.u16()? as usize;
        Ok(SessionHeader {
            session_id,
            gid,
            date,
            kind,
            pk_fingerprint,
            shape,
            s,
            dp,
            lenders,
            range_bits,
        })
    }
}

/// Why a session ended without a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AbortKind {
    /// The originator's query failed its validity proof.
    InvalidQuery,
    /// Borrower knowledge or correspondence proof failed.
    Unauthorized,
    /// The borrower's commitment disagrees with the lenders' aggregate.
    InconsistentSum,
    /// A response did not decrypt to a commitment or a zero form.
    MalformedResponse,
    /// The query kind is not supported.
    UnsupportedQuery,
    /// The borrower's evaluation proof was rejected.
    EvaluationRejected,
    /// A message could not be decoded or arrived out of protocol.
    ProtocolViolation,
}

impl AbortKind {
    pub const ALL: [AbortKind; 7] = [
        AbortKind::InvalidQuery,
        AbortKind::Unauthorized,
        AbortKind::InconsistentSum,
        AbortKind::MalformedResponse,
        AbortKind::UnsupportedQuery,
        AbortKind::EvaluationRejected,
        AbortKind::ProtocolViolation,
    ];

    pub fn code(self) -> u8 {
        AbortKind::ALL.iter().position(|k| *k == self).unwrap() as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        AbortKind::ALL.get((code as usize).checked_sub(1)?).copied()
    }
}

impl fmt::Display for AbortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Faults a test or the harness can inject into an otherwise honest session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdversaryFlags {
    /// The borrower commits to one more than its true total.
    pub lie_sum: bool,
    /// The originator's query has two encrypted ones in its first dimension.
    pub bad_query: bool,
    /// The borrower does not know its exchanger seed.
    pub impostor: bool,
    /// The originator reuses a validity proof bound to an earlier session.
    pub replay_proof: bool,
    /// The originator queries a different pid than the borrower's.
    pub wrong_target: bool,
}

impl AdversaryFlags {
    pub fn any(&self) -> bool {
        self.lie_sum || self.bad_query || self.impostor || self.replay_proof || self.wrong_target
    }

    /// The abort each single injected fault must produce.
    pub fn expected_abort(&self) -> Option<AbortKind> {
        if self.bad_query || self.replay_proof {
            Some(AbortKind::InvalidQuery)
        } else if self.impostor || self.wrong_target {
            Some(AbortKind::Unauthorized)
        } else if self.lie_sum {
            Some(AbortKind::InconsistentSum)
        } else {
            None
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("no role at {0}")]
    Unroutable(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Pir(#[from] PirError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl From<std::io::Error> for ProtocolError {
    fn from(e: std::io::Error) -> Self {
        ProtocolError::Transport(e.to_string())
    }
}

/// Independent per-session randomness for a multiplexing role.
pub(crate) fn role_rng(seed: &[u8; 32], role: &str, session: &SessionId) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(seed);
    h.update((role.len() as u32).to_be_bytes());
    h.update(role.as_bytes());
    h.update(session);
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Pedersen group matching the originator's key size.
pub(crate) fn pedersen_for(pk: &PaillierPublicKey) -> Result<PedersenParams, ProtocolError> {
    Ok(PedersenParams::for_key_bits(pk.bit_length())?)
}

/// Label of the per-session group secret `y_u`.
pub(crate) fn y_label(r_e: &[u8; 32], date: &str) -> Label {
    Label::new("y").bytes(r_e).str(date)
}

/// Label of the encryption randomness of the borrower's authorization ciphertext.
pub(crate) fn auth_randomness_label(pk: &PaillierPublicKey, uid: &str, date: &str) -> Label {
    Label::new("r").bytes(&pk.to_bytes()).str(uid).str(date)
}

/// The originator's share `r_o` of the blinding of `Δr_b` for column `j`.
pub(crate) fn r_o(pp: &PedersenParams, tau_ob: &PrfSeed, column: usize, date: &str) -> BigUint {
    tau_ob.eval(&Label::new("ro").u32(column as u32).str(date), pp.q())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abort_codes_round_trip() {
        for k in AbortKind::ALL {
            assert_eq!(AbortKind::from_code(k.code()), Some(k));
        }
        assert_eq!(AbortKind::from_code(0), None);
        assert_eq!(AbortKind::from_code(99), None);
    }

    #[test]
    fn party_round_trip() {
        for p in [Party::Originator, Party::Exchanger, Party::Borrower, Party::Lender(7), Party::Anonymous] {
            let mut buf = Vec::new();
            p.encode(&mut buf);
            assert_eq!(Party::decode(&mut Reader::new(&buf)).unwrap(), p);
        }
    }

    #[test]
    fn each_fault_maps_to_one_abort() {
        let cases = [
            (AdversaryFlags { lie_sum: true, ..Default::default() }, AbortKind::InconsistentSum),
            (AdversaryFlags { bad_query: true, ..Default::default() }, AbortKind::InvalidQuery),
            (AdversaryFlags { impostor: true, ..Default::default() }, AbortKind::Unauthorized),
            (AdversaryFlags { replay_proof: true, ..Default::default() }, AbortKind::InvalidQuery),
            (AdversaryFlags { wrong_target: true, ..Default::default() }, AbortKind::Unauthorized),
        ];
        for (flags, kind) in cases {
            assert_eq!(flags.expected_abort(), Some(kind));
        }
        assert_eq!(AdversaryFlags::default().expected_abort(), None);
    }

    #[test]
    fn kind_columns() {
        assert_eq!(QueryKind::Variance.columns(), vec![Column::Amount, Column::Square]);
        assert_eq!(QueryKind::Count.columns(), vec![Column::Indicator]);
        assert_eq!(QueryKind::parse("cmp_public", Some(7)), Ok(QueryKind::CmpPublic(7)));
        assert!(QueryKind::parse("cmp_public", None).is_err());
    }
}
