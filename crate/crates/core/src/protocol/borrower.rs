use num_bigint::BigUint;
use num_traits::Zero;
use rand_chacha::ChaCha20Rng;

use crate::crypto::{PaillierPublicKey, PedersenParams, PrfSeed};
use crate::registry::{commitment_randomness, LoanRecord};
use crate::zk::prove_plaintext_knowledge;

use super::driver::{Address, Outgoing, Role};
use super::evaluation::{prove_evaluation, CommittedTotals};
use super::messages::{Message, TAG_HEADER};
use super::session::{EventLog, SessionEvent};
use super::wire::{Frame, SessionId};
use super::{auth_randomness_label, pedersen_for, r_o, y_label, AdversaryFlags, Party, SessionHeader};

struct Context {
    header: SessionHeader,
    pk: PaillierPublicKey,
    pp: PedersenParams,
}

/// The queried borrower. It sees only the header, the exchanger's nonce and
/// abort notices.
pub struct Borrower {
    uid: String,
    tau_eu: PrfSeed,
    tau_ob: PrfSeed,
    loans: Vec<LoanRecord>,
    session: SessionId,
    flags: AdversaryFlags,
    rng: ChaCha20Rng,
    events: EventLog,
    ctx: Option<Context>,
    /// Frames that arrived before the header.
    early: Vec<(Party, Frame)>,
}

impl Borrower {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        uid: String,
        tau_eu: PrfSeed,
        tau_ob: PrfSeed,
        loans: Vec<LoanRecord>,
        session: SessionId,
        flags: AdversaryFlags,
        mut rng: ChaCha20Rng,
        events: EventLog,
    ) -> Self {
        let tau_eu = if flags.impostor { PrfSeed::random(&mut rng) } else { tau_eu };
        Borrower {
            uid,
            tau_eu,
            tau_ob,
            loans,
            session,
            flags,
            rng,
            events,
            ctx: None,
            early: Vec::new(),
        }
    }

    fn frame(&self, msg: &Message) -> Frame {
        let ctx = self.ctx.as_ref().expect("session context is set");
        msg.to_frame(self.session, &ctx.pk, &ctx.pp)
    }

    fn violation(&self, detail: String) -> Vec<Outgoing> {
        self.events.push(SessionEvent::Note {
            session: self.session,
            party: Party::Borrower,
            detail,
        });
        Vec::new()
    }

    fn on_header(&mut self, frame: &Frame) -> Vec<Outgoing> {
        let (header, pk) = match Message::decode_header(frame) {
            Ok(v) => v,
            Err(e) => return self.violation(format!("bad header: {e}")),
        };
        if let Err(e) = header.validate(&pk) {
            return self.violation(e.to_string());
        }
        let pp = match pedersen_for(&pk) {
            Ok(pp) => pp,
            Err(e) => return self.violation(e.to_string()),
        };
        let columns = header.columns();
        let session_loans: Vec<&LoanRecord> = self
            .loans
            .iter()
            .filter(|l| header.lenders.binary_search(&l.lender_id).is_ok())
            .collect();

        let mut values = Vec::with_capacity(columns.len());
        let mut r_b = Vec::with_capacity(columns.len());
        let mut c_b = Vec::with_capacity(columns.len());
        let mut delta_rb = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let mut x: BigUint = session_loans.iter().map(|l| col.value(l.amount)).sum();
            if j == 0 && self.flags.lie_sum {
                x += 1u32;
            }
            let r = pp.random_scalar(&mut self.rng);
            let lender_r = session_loans.iter().fold(BigUint::zero(), |acc, l| {
                pp.add_scalar(&acc, &commitment_randomness(&pp, &l.tau_iu, *col, &self.uid, l.amount, &header.date))
            });
            let blinded = pp.sub_scalar(&pp.sub_scalar(&r, &r_o(&pp, &self.tau_ob, j, &header.date)), &lender_r);
            c_b.push(pp.commit(&x, &r));
            delta_rb.push(blinded);
            values.push(x);
            r_b.push(r);
        }
        let totals = CommittedTotals {
            values: &values,
            randomness: &r_b,
            commitments: &c_b,
        };
        let eval = prove_evaluation(
            &pp,
            header.kind,
            header.lenders.len(),
            header.range_bits,
            &totals,
            &self.session,
            &mut self.rng,
        );
        self.ctx = Some(Context { header, pk, pp });

        let mut out = vec![
            Outgoing::new(Party::Exchanger, self.frame(&Message::BorrowerCommitment { c_b })),
            Outgoing::new(Party::Exchanger, self.frame(&Message::BorrowerDelta { delta_rb })),
        ];
        match eval {
            Ok(Some(e)) => out.push(Outgoing::new(Party::Originator, self.frame(&Message::Evaluation(e)))),
            Ok(None) => {}
            // A total outside the provable range leaves the originator without an evaluation.
            Err(e) => {
                self.violation(format!("cannot prove evaluation: {e}"));
            }
        }
        out
    }

    fn on_nonce(&mut self, r_e: [u8; 32]) -> Vec<Outgoing> {
        let ctx = self.ctx.as_ref().expect("header precedes nonce handling");
        let y = self.tau_eu.eval(&y_label(&r_e, &ctx.header.date), ctx.pk.n());
        let r = self
            .tau_ob
            .eval_unit(&auth_randomness_label(&ctx.pk, &self.uid, &ctx.header.date), ctx.pk.n());
        let c = match ctx.pk.encrypt_with(&y, &r) {
            Ok(c) => c,
            Err(e) => return self.violation(e.to_string()),
        };
        let proof = prove_plaintext_knowledge(&ctx.pk, &c, &y, &r, &self.session, &mut self.rng);
        vec![Outgoing::new(
            Party::Exchanger,
            self.frame(&Message::AuthCiphertext { c, proof }),
        )]
    }
}

impl Role for Borrower {
    fn address(&self) -> Address {
        Address {
            party: Party::Borrower,
            session: Some(self.session),
        }
    }

    fn handle(&mut self, from: Party, frame: Frame) -> Vec<Outgoing> {
        if frame.session != self.session {
            return Vec::new();
        }
        if frame.tag == TAG_HEADER {
            if from != Party::Originator || self.ctx.is_some() {
                return Vec::new();
            }
            let mut out = self.on_header(&frame);
            if self.ctx.is_some() {
                for (from, f) in std::mem::take(&mut self.early) {
                    out.extend(self.handle(from, f));
                }
            }
            return out;
        }
        let Some(ctx) = self.ctx.as_ref() else {
            self.early.push((from, frame));
            return Vec::new();
        };
        match Message::decode(&frame, &ctx.pk, &ctx.pp) {
            Ok(Message::Nonce { r_e }) if from == Party::Exchanger => self.on_nonce(r_e),
            Ok(Message::Abort(kind)) => {
                self.events.push(SessionEvent::Note {
                    session: self.session,
                    party: Party::Borrower,
                    detail: format!("session aborted: {kind}"),
                });
                Vec::new()
            }
            Ok(_) => self.violation(format!("unexpected {} from {from}", super::tag_name(frame.tag))),
            Err(e) => self.violation(format!("undecodable frame: {e}")),
        }
    }
}
