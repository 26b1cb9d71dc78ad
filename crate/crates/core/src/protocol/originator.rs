use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::crypto::{Commitment, PaillierPublicKey, PaillierSecretKey, PedersenParams, PrfSeed};
use crate::pir::{classify_response, gen_query, gen_query_with_plaintexts, PirQuery, PirResponse, QueryWitness, ResponseType};
use crate::zk::{prove_correspondence, prove_valid_query};

use super::driver::{Address, Outgoing, Role};
use super::evaluation::{verify_evaluation, EvalMessage, QueryResult};
use super::messages::Message;
use super::session::{EventLog, SessionEvent};
use super::wire::{Frame, SessionId};
use super::{auth_randomness_label, pedersen_for, r_o, AbortKind, AdversaryFlags, Party, ProtocolError, QueryKind, SessionHeader};

/// The querying lender. Holds the Paillier key pair, knows the borrower's
/// identity and position, and shares `τ_ob` with the borrower.
pub struct Originator {
    sk: PaillierSecretKey,
    pk: PaillierPublicKey,
    pp: PedersenParams,
    header: SessionHeader,
    target_uid: String,
    target_pid: usize,
    tau_ob: PrfSeed,
    flags: AdversaryFlags,
    rng: ChaCha20Rng,
    events: EventLog,
    query: Option<(PirQuery, QueryWitness, usize)>,
    c_b: Option<Vec<Commitment>>,
    responses: Option<(Vec<PirResponse>, Vec<BigUint>)>,
    eval: Option<EvalMessage>,
    consistent: Option<bool>,
    finished: bool,
}

impl Originator {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sk: PaillierSecretKey,
        header: SessionHeader,
        target_uid: String,
        target_pid: usize,
        tau_ob: PrfSeed,
        flags: AdversaryFlags,
        rng: ChaCha20Rng,
        events: EventLog,
    ) -> Result<Self, ProtocolError> {
        let pk = sk.public_key().clone();
        header.validate(&pk)?;
        let pp = pedersen_for(&pk)?;
        if target_pid >= header.shape.capacity() {
            return Err(ProtocolError::InvalidConfig(format!(
                "pid {target_pid} outside capacity {}",
                header.shape.capacity()
            )));
        }
        Ok(Originator {
            sk,
            pk,
            pp,
            header,
            target_uid,
            target_pid,
            tau_ob,
            flags,
            rng,
            events,
            query: None,
            c_b: None,
            responses: None,
            eval: None,
            consistent: None,
            finished: false,
        })
    }

    fn sid(&self) -> SessionId {
        self.header.session_id
    }

    fn frame(&self, msg: &Message) -> Frame {
        msg.to_frame(self.sid(), &self.pk, &self.pp)
    }

    fn finish(&mut self, result: Result<QueryResult, AbortKind>) -> Vec<Outgoing> {
        if self.finished {
            return Vec::new();
        }
        self.finished = true;
        self.events.push(SessionEvent::Outcome {
            session: self.sid(),
            result: result.clone(),
        });
        Vec::new()
    }

    /// Ends the session and tells the exchanger and borrower why.
    fn abort(&mut self, kind: AbortKind) -> Vec<Outgoing> {
        if self.finished {
            return Vec::new();
        }
        self.finish(Err(kind));
        let notice = self.frame(&Message::Abort(kind));
        vec![
            Outgoing::new(Party::Exchanger, notice.clone()),
            Outgoing::new(Party::Borrower, notice),
        ]
    }

    fn build_query(&mut self) -> Result<(PirQuery, QueryWitness, usize), ProtocolError> {
        let shape = &self.header.shape;
        let pid = if self.flags.wrong_target {
            (self.target_pid + 1) % shape.capacity()
        } else {
            self.target_pid
        };
        if !self.flags.bad_query {
            let (q, w) = gen_query(&self.pk, shape, pid, &mut self.rng)?;
            return Ok((q, w, pid));
        }
        // Two encrypted ones in the first dimension.
        let coords = shape.pid_to_coords(pid)?;
        let mut plaintexts: Vec<Vec<BigUint>> = shape
            .dims()
            .iter()
            .zip(&coords)
            .map(|(m, k)| (0..*m).map(|j| BigUint::from(u8::from(j == *k))).collect())
            .collect();
        let m0 = shape.dims()[0];
        plaintexts[0][(coords[0] + 1) % m0] = BigUint::one();
        let (q, mut w) = gen_query_with_plaintexts(&self.pk, shape, plaintexts, &mut self.rng)?;
        w.coords = coords;
        Ok((q, w, pid))
    }

    /// The context the validity proof is bound to: normally this session's id.
    fn query_proof_ctx(&self) -> Vec<u8> {
        if self.flags.replay_proof {
            let mut h = Sha256::new();
            h.update(b"earlier session");
            h.update(self.sid());
            h.finalize()[..16].to_vec()
        } else {
            self.sid().to_vec()
        }
    }

    fn on_dataset(&mut self, ys: Vec<BigUint>) -> Vec<Outgoing> {
        let Some((query, witness, pid)) = self.query.as_ref() else {
            return self.abort(AbortKind::ProtocolViolation);
        };
        if ys.len() != self.header.shape.capacity() {
            return self.abort(AbortKind::ProtocolViolation);
        }
        let r = self
            .tau_ob
            .eval_unit(&auth_randomness_label(&self.pk, &self.target_uid, &self.header.date), self.pk.n());
        let y_b = &ys[self.target_pid];
        let c = match self.pk.encrypt_with(y_b, &r) {
            Ok(c) => c,
            Err(_) => return self.abort(AbortKind::ProtocolViolation),
        };
        let sid = self.sid();
        match prove_correspondence(&self.pk, query, witness, *pid, &c, &r, &ys, &sid, &mut self.rng) {
            Ok(proof) => vec![Outgoing::new(
                Party::Exchanger,
                self.frame(&Message::Correspondence { proof }),
            )],
            Err(_) => self.abort(AbortKind::ProtocolViolation),
        }
    }

    /// Consistency check once both the borrower's commitment and the mixed
    /// responses are in.
    fn check_consistency(&mut self) -> Vec<Outgoing> {
        if self.consistent.is_some() {
            return Vec::new();
        }
        let (Some(c_b), Some((responses, delta_r))) = (self.c_b.as_ref(), self.responses.as_ref()) else {
            return Vec::new();
        };
        let columns = self.header.columns().len();
        if c_b.len() != columns || delta_r.len() != columns {
            return self.abort(AbortKind::ProtocolViolation);
        }
        let mut counts: BTreeMap<ResponseType, usize> = BTreeMap::new();
        let mut aggregate = vec![self.pp.identity(); columns];
        for resp in responses {
            match classify_response(&self.sk, resp, self.header.d(), &self.pp, columns) {
                Ok((t, commitments)) => {
                    *counts.entry(t).or_default() += 1;
                    if let Some(cs) = commitments {
                        for (acc, c) in aggregate.iter_mut().zip(&cs) {
                            *acc = self.pp.mul(acc, c);
                        }
                    }
                }
                Err(_) => {
                    self.events.push(SessionEvent::TypeCounts {
                        session: self.sid(),
                        counts,
                    });
                    return self.abort(AbortKind::MalformedResponse);
                }
            }
        }
        self.events.push(SessionEvent::TypeCounts {
            session: self.sid(),
            counts,
        });
        let ok = (0..columns).all(|j| {
            let exponent = self
                .pp
                .add_scalar(&delta_r[j], &r_o(&self.pp, &self.tau_ob, j, &self.header.date));
            let expected = self.pp.mul(&aggregate[j], &self.pp.commit(&BigUint::from(0u32), &exponent));
            expected == c_b[j]
        });
        self.consistent = Some(ok);
        self.events.push(SessionEvent::Verdict {
            session: self.sid(),
            name: "z3",
            pass: ok,
        });
        if !ok {
            return self.abort(AbortKind::InconsistentSum);
        }
        self.try_evaluate()
    }

    fn try_evaluate(&mut self) -> Vec<Outgoing> {
        if self.consistent != Some(true) || self.finished {
            return Vec::new();
        }
        let (Some(eval), Some(c_b)) = (self.eval.as_ref(), self.c_b.as_ref()) else {
            return Vec::new();
        };
        let sid = self.sid();
        match verify_evaluation(
            &self.pp,
            self.header.kind,
            self.header.lenders.len(),
            self.header.range_bits,
            c_b,
            eval,
            &sid,
        ) {
            Some(result) => self.finish(Ok(result)),
            None => self.abort(AbortKind::EvaluationRejected),
        }
    }
}

impl Role for Originator {
    fn address(&self) -> Address {
        Address {
            party: Party::Originator,
            session: Some(self.sid()),
        }
    }

    fn start(&mut self) -> Vec<Outgoing> {
        if self.header.kind == QueryKind::CmpPrivate {
            return self.finish(Err(AbortKind::UnsupportedQuery));
        }
        let header = self.frame(&Message::Header {
            header: self.header.clone(),
            pk: self.pk.clone(),
        });
        let mut out = vec![Outgoing::new(Party::Exchanger, header.clone())];
        out.extend(self.header.lenders.iter().map(|&l| Outgoing::new(Party::Lender(l), header.clone())));
        out.push(Outgoing::new(Party::Borrower, header));

        let (query, witness, pid) = match self.build_query() {
            Ok(v) => v,
            Err(_) => return self.abort(AbortKind::ProtocolViolation),
        };
        let ctx = self.query_proof_ctx();
        let proof = match prove_valid_query(&self.pk, &query, &witness, &ctx, &mut self.rng) {
            Ok(p) => p,
            Err(_) => return self.abort(AbortKind::ProtocolViolation),
        };
        out.push(Outgoing::new(
            Party::Exchanger,
            self.frame(&Message::Query {
                query: query.clone(),
                proof,
            }),
        ));
        self.query = Some((query, witness, pid));
        out
    }

    fn handle(&mut self, from: Party, frame: Frame) -> Vec<Outgoing> {
        if self.finished || frame.session != self.sid() {
            return Vec::new();
        }
        let msg = match Message::decode(&frame, &self.pk, &self.pp) {
            Ok(m) => m,
            Err(_) if frame.tag == super::messages::TAG_RESPONSES => return self.abort(AbortKind::MalformedResponse),
            Err(_) => return self.abort(AbortKind::ProtocolViolation),
        };
        match (from, msg) {
            (Party::Exchanger, Message::GroupDataset { ys }) => self.on_dataset(ys),
            (Party::Exchanger, Message::BorrowerCommitment { c_b }) => {
                self.c_b.get_or_insert(c_b);
                self.check_consistency()
            }
            (Party::Exchanger, Message::Responses { responses, delta_r }) => {
                self.responses.get_or_insert((responses, delta_r));
                self.check_consistency()
            }
            (Party::Borrower, Message::Evaluation(e)) => {
                self.eval.get_or_insert(e);
                self.try_evaluate()
            }
            (_, Message::Abort(kind)) => self.finish(Err(kind)),
            _ => Vec::new(),
        }
    }
}
