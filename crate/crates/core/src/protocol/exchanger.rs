use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use rand::RngCore;
use rand_chacha::ChaCha20Rng;

use crate::crypto::{PaillierPublicKey, PedersenParams};
use crate::dp::{gen_noise_batch, laplace_params_for, plan_noise, LaplacePlan, NoiseBatch, NoiseCache};
use crate::pir::{reachable_types, PirQuery, PirResponse};
use crate::registry::SharedRegistry;
use crate::zk::{verify_correspondence, verify_plaintext_knowledge, verify_valid_query, CorrespondenceProof};

use super::driver::{Address, Outgoing, Role};
use super::messages::{Message, TAG_HEADER};
use super::session::{EventLog, SessionEvent};
use super::shuffle::exchanger_shuffle;
use super::wire::{Frame, SessionId};
use super::{pedersen_for, role_rng, y_label, AbortKind, Party, ProtocolError, SessionHeader};

/// Where the exchanger's dummy responses come from.
#[derive(Clone, Debug)]
pub enum NoiseSource {
    /// A fresh truncated-Laplace draw per type, every session.
    Online,
    /// Exactly `k` dummies of every reachable type.
    Fixed(u64),
    /// Batches pre-generated for the originator's key, one per session.
    /// Falls back to online generation once exhausted.
    Cached(NoiseCache),
}

struct ExSession {
    header: SessionHeader,
    pk: PaillierPublicKey,
    pp: PedersenParams,
    rng: ChaCha20Rng,
    ys: Vec<BigUint>,
    noise: NoiseBatch,
    query: Option<PirQuery>,
    z1: Option<bool>,
    auth_c: Option<BigUint>,
    knowledge: Option<bool>,
    correspondence: Option<CorrespondenceProof>,
    z2: Option<bool>,
    responses: BTreeMap<u32, PirResponse>,
    delta_rb: Option<Vec<BigUint>>,
    released: bool,
    closed: bool,
}

impl ExSession {
    fn frame(&self, msg: &Message) -> Frame {
        msg.to_frame(self.header.session_id, &self.pk, &self.pp)
    }
}

/// The trusted mixer. Serves any number of concurrent sessions.
pub struct Exchanger {
    registry: SharedRegistry,
    noise: NoiseSource,
    seed: [u8; 32],
    events: EventLog,
    sessions: HashMap<SessionId, ExSession>,
    /// Frames that arrived before their session's header.
    pending: HashMap<SessionId, Vec<(Party, Frame)>>,
}

impl Exchanger {
    pub fn new(registry: SharedRegistry, noise: NoiseSource, seed: [u8; 32], events: EventLog) -> Self {
        Exchanger {
            registry,
            noise,
            seed,
            events,
            sessions: HashMap::new(),
            pending: HashMap::new(),
        }
    }

    fn note(&self, session: SessionId, detail: String) {
        self.events.push(SessionEvent::Note {
            session,
            party: Party::Exchanger,
            detail,
        });
    }

    fn verdict(&self, session: SessionId, name: &'static str, pass: bool) {
        self.events.push(SessionEvent::Verdict { session, name, pass });
    }

    fn noise_batch(
        &mut self,
        header: &SessionHeader,
        pk: &PaillierPublicKey,
        pp: &PedersenParams,
        rng: &mut ChaCha20Rng,
    ) -> Result<NoiseBatch, ProtocolError> {
        let columns = header.columns().len();
        let d = header.d();
        let plan = match &mut self.noise {
            NoiseSource::Online => plan_noise(&header.dp, rng)?,
            NoiseSource::Fixed(k) => {
                let (mu, lambda) = laplace_params_for(&header.dp)?;
                let counts: Vec<_> = reachable_types(d, header.s).into_iter().map(|t| (t, *k)).collect();
                LaplacePlan::with_counts(mu, lambda, &counts)
            }
            NoiseSource::Cached(cache) => {
                let usable = cache.fingerprint == pk.fingerprint()
                    && cache.d == d
                    && cache.payload_len == header.payload_len(pp)
                    && cache.params == header.dp;
                if !usable {
                    return Err(ProtocolError::InvalidConfig(
                        "noise cache does not match this session's key or layout".into(),
                    ));
                }
                if let Some(batch) = cache.batches.pop() {
                    return Ok(batch);
                }
                plan_noise(&header.dp, rng)?
            }
        };
        Ok(gen_noise_batch(pk, pp, &plan, d, columns, rng)?)
    }

    fn on_header(&mut self, frame: &Frame) -> Vec<Outgoing> {
        let sid = frame.session;
        let (header, pk) = match Message::decode_header(frame) {
            Ok(v) => v,
            Err(e) => {
                self.note(sid, format!("bad header: {e}"));
                return Vec::new();
            }
        };
        let prepared = header.validate(&pk).and_then(|_| pedersen_for(&pk));
        let pp = match prepared {
            Ok(pp) => pp,
            Err(e) => {
                self.note(sid, e.to_string());
                return Vec::new();
            }
        };
        let mut rng = role_rng(&self.seed, "exchanger", &sid);
        let mut r_e = [0u8; 32];
        rng.fill_bytes(&mut r_e);

        let capacity = header.shape.capacity();
        let mut ys: Vec<Option<BigUint>> = vec![None; capacity];
        {
            let registry = self.registry.read().expect("registry lock");
            for user in registry.group_members(header.gid) {
                if let Some(slot) = ys.get_mut(user.pid as usize) {
                    *slot = Some(user.tau_eu.eval(&y_label(&r_e, &header.date), pk.n()));
                }
            }
        }
        let ys: Vec<BigUint> = ys.into_iter().map(|y| y.unwrap_or_else(|| pk.random_unit(&mut rng))).collect();

        let noise = match self.noise_batch(&header, &pk, &pp, &mut rng) {
            Ok(b) => b,
            Err(e) => {
                self.note(sid, format!("noise generation failed: {e}"));
                return Vec::new();
            }
        };
        self.events.push(SessionEvent::NoiseCounts {
            session: sid,
            counts: noise.responses.iter().fold(BTreeMap::new(), |mut acc, (t, _)| {
                *acc.entry(*t).or_insert(0usize) += 1;
                acc
            }),
        });

        let session = ExSession {
            header,
            pk,
            pp,
            rng,
            ys,
            noise,
            query: None,
            z1: None,
            auth_c: None,
            knowledge: None,
            correspondence: None,
            z2: None,
            responses: BTreeMap::new(),
            delta_rb: None,
            released: false,
            closed: false,
        };
        let mut out = vec![
            Outgoing::new(Party::Anonymous, session.frame(&Message::Nonce { r_e })),
            Outgoing::new(
                Party::Originator,
                session.frame(&Message::GroupDataset { ys: session.ys.clone() }),
            ),
        ];
        self.sessions.insert(sid, session);
        for (from, f) in self.pending.remove(&sid).unwrap_or_default() {
            out.extend(self.handle(from, f));
        }
        out
    }

    /// Closes the session and tells everyone still waiting on it.
    fn abort(&mut self, sid: SessionId, kind: AbortKind) -> Vec<Outgoing> {
        let Some(s) = self.sessions.get_mut(&sid) else {
            return Vec::new();
        };
        if s.closed {
            return Vec::new();
        }
        s.closed = true;
        let notice = s.frame(&Message::Abort(kind));
        let mut out = vec![
            Outgoing::new(Party::Originator, notice.clone()),
            Outgoing::new(Party::Anonymous, notice.clone()),
        ];
        out.extend(s.header.lenders.iter().map(|&l| Outgoing::new(Party::Lender(l), notice.clone())));
        out
    }

    fn check_z2(&mut self, sid: SessionId) -> Vec<Outgoing> {
        let s = &self.sessions[&sid];
        if s.z2.is_some() || s.z1 != Some(true) {
            return Vec::new();
        }
        let (Some(query), Some(c), Some(knowledge), Some(proof)) =
            (s.query.as_ref(), s.auth_c.as_ref(), s.knowledge, s.correspondence.as_ref())
        else {
            return Vec::new();
        };
        let ok = knowledge && verify_correspondence(&s.pk, query, c, &s.ys, proof, &sid);
        self.sessions.get_mut(&sid).unwrap().z2 = Some(ok);
        self.verdict(sid, "z2", ok);
        if !ok {
            return self.abort(sid, AbortKind::Unauthorized);
        }
        self.try_release(sid)
    }

    /// Mixes the lender responses with the noise batch once both gates have
    /// passed and every input is in.
    fn try_release(&mut self, sid: SessionId) -> Vec<Outgoing> {
        let s = self.sessions.get_mut(&sid).unwrap();
        if s.closed || s.released || s.z1 != Some(true) || s.z2 != Some(true) || s.responses.len() < s.header.lenders.len() {
            return Vec::new();
        }
        let Some(delta_rb) = s.delta_rb.as_ref() else {
            return Vec::new();
        };
        let columns = s.header.columns().len();
        if delta_rb.len() != columns || s.noise.r_z.len() != columns {
            return self.abort(sid, AbortKind::ProtocolViolation);
        }
        let delta_r: Vec<BigUint> = delta_rb
            .iter()
            .zip(&s.noise.r_z)
            .map(|(rb, rz)| s.pp.sub_scalar(rb, rz))
            .collect();
        let mut mixed: Vec<PirResponse> = std::mem::take(&mut s.responses).into_values().collect();
        mixed.extend(
            std::mem::take(&mut s.noise.responses)
                .into_iter()
                .map(|(_, body)| PirResponse { body }),
        );
        let responses = exchanger_shuffle(mixed, &mut s.rng);
        s.released = true;
        vec![Outgoing::new(
            Party::Originator,
            s.frame(&Message::Responses { responses, delta_r }),
        )]
    }

    fn on_message(&mut self, from: Party, sid: SessionId, msg: Message) -> Vec<Outgoing> {
        let s = self.sessions.get_mut(&sid).unwrap();
        match (from, msg) {
            (Party::Originator, Message::Query { query, proof }) if s.query.is_none() => {
                let ok = query.shape == s.header.shape && verify_valid_query(&s.pk, &query, &proof, &sid);
                s.z1 = Some(ok);
                s.query = Some(query.clone());
                self.verdict(sid, "z1", ok);
                if !ok {
                    return self.abort(sid, AbortKind::InvalidQuery);
                }
                let s = &self.sessions[&sid];
                let forward = s.frame(&Message::QueryForward { query });
                let mut out: Vec<Outgoing> = s
                    .header
                    .lenders
                    .iter()
                    .map(|&l| Outgoing::new(Party::Lender(l), forward.clone()))
                    .collect();
                out.extend(self.check_z2(sid));
                out
            }
            (Party::Originator, Message::Correspondence { proof }) if s.correspondence.is_none() => {
                s.correspondence = Some(proof);
                self.check_z2(sid)
            }
            (Party::Anonymous, Message::AuthCiphertext { c, proof }) if s.auth_c.is_none() => {
                s.knowledge = Some(verify_plaintext_knowledge(&s.pk, &c, &proof, &sid));
                s.auth_c = Some(c);
                self.check_z2(sid)
            }
            (Party::Anonymous, Message::BorrowerCommitment { c_b }) => {
                vec![Outgoing::new(
                    Party::Originator,
                    s.frame(&Message::BorrowerCommitment { c_b }),
                )]
            }
            (Party::Anonymous, Message::BorrowerDelta { delta_rb }) if s.delta_rb.is_none() => {
                s.delta_rb = Some(delta_rb);
                self.try_release(sid)
            }
            (Party::Lender(l), Message::LenderResponse { response }) if s.header.lenders.binary_search(&l).is_ok() => {
                if response.body.layer() as usize != s.header.d() {
                    return self.abort(sid, AbortKind::MalformedResponse);
                }
                s.responses.entry(l).or_insert(response);
                self.try_release(sid)
            }
            (Party::Lender(_), Message::Abort(kind)) | (Party::Originator, Message::Abort(kind)) => self.abort(sid, kind),
            (from, other) => {
                self.note(sid, format!("ignored {} from {from}", super::tag_name(other.tag())));
                Vec::new()
            }
        }
    }
}

impl Role for Exchanger {
    fn address(&self) -> Address {
        Address {
            party: Party::Exchanger,
            session: None,
        }
    }

    fn handle(&mut self, from: Party, frame: Frame) -> Vec<Outgoing> {
        let sid = frame.session;
        if frame.tag == TAG_HEADER {
            if from != Party::Originator || self.sessions.contains_key(&sid) {
                return Vec::new();
            }
            return self.on_header(&frame);
        }
        let Some(s) = self.sessions.get(&sid) else {
            self.pending.entry(sid).or_default().push((from, frame));
            return Vec::new();
        };
        if s.closed {
            return Vec::new();
        }
        match Message::decode(&frame, &s.pk, &s.pp) {
            Ok(msg) => self.on_message(from, sid, msg),
            Err(e) => {
                self.note(sid, format!("undecodable {} from {from}: {e}", super::tag_name(frame.tag)));
                self.abort(sid, AbortKind::ProtocolViolation)
            }
        }
    }
}
