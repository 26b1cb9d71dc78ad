use std::collections::HashMap;

use rand_chacha::ChaCha20Rng;

use crate::crypto::{PaillierPublicKey, PedersenParams};
use crate::pir::{empty_sentinel_response, sparse_respond, RespondOutcome, SparseDatabase};
use crate::registry::SharedRegistry;

use super::driver::{Address, Outgoing, Role};
use super::messages::{Message, TAG_HEADER};
use super::session::{EventLog, SessionEvent};
use super::wire::{Frame, SessionId};
use super::{pedersen_for, role_rng, AbortKind, Party, ProtocolError, SessionHeader};

struct LenderSession {
    header: SessionHeader,
    pk: PaillierPublicKey,
    pp: PedersenParams,
    db: SparseDatabase,
    rng: ChaCha20Rng,
    answered: bool,
}

/// A participating lender. It answers forwarded queries over its database
/// of commitments for the session's group.
pub struct Lender {
    id: u32,
    registry: SharedRegistry,
    seed: [u8; 32],
    events: EventLog,
    sessions: HashMap<SessionId, LenderSession>,
    pending: HashMap<SessionId, Vec<(Party, Frame)>>,
}

impl Lender {
    pub fn new(id: u32, registry: SharedRegistry, seed: [u8; 32], events: EventLog) -> Self {
        Lender {
            id,
            registry,
            seed,
            events,
            sessions: HashMap::new(),
            pending: HashMap::new(),
        }
    }

    fn note(&self, session: SessionId, detail: String) {
        self.events.push(SessionEvent::Note {
            session,
            party: Party::Lender(self.id),
            detail,
        });
    }

    fn open(&self, frame: &Frame) -> Result<LenderSession, ProtocolError> {
        let (header, pk) = Message::decode_header(frame)?;
        header.validate(&pk)?;
        let pp = pedersen_for(&pk)?;
        let db = self.registry.read().expect("registry lock").lender_database(
            &pp,
            &header.shape,
            self.id,
            header.gid,
            &header.date,
            &header.columns(),
        )?;
        let rng = role_rng(&self.seed, &format!("lender-{}", self.id), &frame.session);
        Ok(LenderSession {
            header,
            pk,
            pp,
            db,
            rng,
            answered: false,
        })
    }

    fn respond(&mut self, sid: SessionId, frame: &Frame) -> Vec<Outgoing> {
        let s = self.sessions.get_mut(&sid).expect("session is open");
        let query = match Message::decode(frame, &s.pk, &s.pp) {
            Ok(Message::QueryForward { query }) => query,
            Ok(Message::Abort(_)) => {
                s.answered = true;
                return Vec::new();
            }
            Ok(other) => {
                let detail = format!("unexpected {}", super::tag_name(other.tag()));
                self.note(sid, detail);
                return Vec::new();
            }
            Err(e) => {
                let violation = s.frame(&Message::Abort(AbortKind::ProtocolViolation));
                self.note(sid, format!("undecodable frame: {e}"));
                return vec![Outgoing::new(Party::Exchanger, violation)];
            }
        };
        if s.answered {
            return Vec::new();
        }
        s.answered = true;
        let result = sparse_respond(&s.pk, &query, &s.db, s.header.s, &mut s.rng).and_then(|outcome| match outcome {
            RespondOutcome::Response(r) => Ok(r),
            RespondOutcome::EmptySentinel => {
                empty_sentinel_response(&s.pk, s.db.payload_len(), s.header.d(), &mut s.rng)
            }
        });
        match result {
            Ok(response) => vec![Outgoing::new(
                Party::Exchanger,
                s.frame(&Message::LenderResponse { response }),
            )],
            Err(e) => {
                let violation = s.frame(&Message::Abort(AbortKind::ProtocolViolation));
                self.note(sid, format!("cannot answer: {e}"));
                vec![Outgoing::new(Party::Exchanger, violation)]
            }
        }
    }
}

impl LenderSession {
    fn frame(&self, msg: &Message) -> Frame {
        msg.to_frame(self.header.session_id, &self.pk, &self.pp)
    }
}

impl Role for Lender {
    fn address(&self) -> Address {
        Address {
            party: Party::Lender(self.id),
            session: None,
        }
    }

    fn handle(&mut self, from: Party, frame: Frame) -> Vec<Outgoing> {
        let sid = frame.session;
        if frame.tag == TAG_HEADER {
            if from != Party::Originator || self.sessions.contains_key(&sid) {
                return Vec::new();
            }
            let session = match self.open(&frame) {
                Ok(s) => s,
                Err(e) => {
                    self.note(sid, format!("cannot open session: {e}"));
                    return Vec::new();
                }
            };
            self.sessions.insert(sid, session);
            let mut out = Vec::new();
            for (from, f) in self.pending.remove(&sid).unwrap_or_default() {
                out.extend(self.handle(from, f));
            }
            return out;
        }
        if from != Party::Exchanger {
            return Vec::new();
        }
        if !self.sessions.contains_key(&sid) {
            self.pending.entry(sid).or_default().push((from, frame));
            return Vec::new();
        }
        self.respond(sid, &frame)
    }
}
