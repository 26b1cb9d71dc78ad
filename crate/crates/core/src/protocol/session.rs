//! Session setup, role wiring and per-session reports.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto::{PaillierSecretKey, PrfSeed};
use crate::dp::DpParams;
use crate::pir::{QueryShape, ResponseType};
use crate::registry::SharedRegistry;

use super::borrower::Borrower;
use super::driver::{run_inproc, run_tcp, run_threaded, Role, Transcript};
use super::evaluation::QueryResult;
use super::exchanger::{Exchanger, NoiseSource};
use super::lender::Lender;
use super::originator::Originator;
use super::wire::SessionId;
use super::{AbortKind, AdversaryFlags, Party, ProtocolError, QueryKind, SessionHeader};

/// Something a role observed, collected for reports and tests.
#[derive(Clone, Debug, PartialEq)]
pub enum SessionEvent {
    /// A gate decision: `z1` (query valid), `z2` (borrower authorized) or
    /// `z3` (aggregate consistent).
    Verdict {
        session: SessionId,
        name: &'static str,
        pass: bool,
    },
    /// Response types the originator saw after decryption.
    TypeCounts {
        session: SessionId,
        counts: BTreeMap<ResponseType, usize>,
    },
    /// Dummy responses the exchanger mixed in.
    NoiseCounts {
        session: SessionId,
        counts: BTreeMap<ResponseType, usize>,
    },
    Outcome {
        session: SessionId,
        result: Result<QueryResult, AbortKind>,
    },
    Note {
        session: SessionId,
        party: Party,
        detail: String,
    },
}

impl SessionEvent {
    pub fn session(&self) -> &SessionId {
        match self {
            SessionEvent::Verdict { session, .. }
            | SessionEvent::TypeCounts { session, .. }
            | SessionEvent::NoiseCounts { session, .. }
            | SessionEvent::Outcome { session, .. }
            | SessionEvent::Note { session, .. } => session,
        }
    }
}

/// Shared, append-only event sink handed to every role.
#[derive(Clone, Debug, Default)]
pub struct EventLog(Arc<Mutex<Vec<SessionEvent>>>);

impl EventLog {
    pub fn push(&self, event: SessionEvent) {
        self.0.lock().expect("event log lock").push(event);
    }

    pub fn events(&self) -> Vec<SessionEvent> {
        self.0.lock().expect("event log lock").clone()
    }

    pub fn for_session(&self, session: &SessionId) -> Vec<SessionEvent> {
        self.events().into_iter().filter(|e| e.session() == session).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TransportKind {
    /// One thread, FIFO delivery; reproducible byte for byte.
    #[default]
    Inproc,
    /// One thread per role over channels.
    Threaded,
    /// One thread per role, every frame over a loopback TCP socket.
    Tcp,
}

impl std::str::FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inproc" => Ok(TransportKind::Inproc),
            "threaded" => Ok(TransportKind::Threaded),
            "tcp" => Ok(TransportKind::Tcp),
            other => Err(format!("unknown transport {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub session_id: SessionId,
    pub borrower_uid: String,
    pub kind: QueryKind,
    pub shape: QueryShape,
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Queries allowed per borrower.
    pub k: u64,
    /// Participating lenders; empty means every registered lender.
    pub lenders: Vec<u32>,
    pub date: String,
    pub range_bits: usize,
    pub adversary: AdversaryFlags,
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(borrower_uid: &str, kind: QueryKind, shape: QueryShape) -> Self {
        SessionConfig {
            session_id: [0; 16],
            borrower_uid: borrower_uid.to_string(),
            kind,
            shape,
            s: 1,
            epsilon: 0.7,
            delta: 1e-4,
            k: 5,
            lenders: Vec::new(),
            date: "2024-01-01".to_string(),
            range_bits: 32,
            adversary: AdversaryFlags::default(),
            seed: 0,
        }
    }

    pub fn dp_params(&self) -> DpParams {
        DpParams {
            epsilon: self.epsilon,
            delta: self.delta,
            k: self.k,
            s: self.s,
            d: self.shape.d(),
            m: self.shape.capacity() as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Verdicts {
    pub z1: Option<bool>,
    pub z2: Option<bool>,
    pub z3: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct SessionReport {
    pub session_id: SessionId,
    pub outcome: Result<QueryResult, AbortKind>,
    pub verdicts: Verdicts,
    /// What the originator decrypted, noise included.
    pub type_counts: BTreeMap<ResponseType, usize>,
    pub noise_counts: BTreeMap<ResponseType, usize>,
    /// Frames of this session only.
    pub transcript: Transcript,
    pub notes: Vec<(Party, String)>,
    /// Wall time of the whole run this session was part of.
    pub wall: Duration,
}

/// Everything a role needs that is not on the wire, derived from `cfg.seed`.
struct Setup {
    tau_ob: PrfSeed,
    originator_rng: ChaCha20Rng,
    borrower_rng: ChaCha20Rng,
    exchanger_seed: [u8; 32],
    lender_seed: [u8; 32],
}

impl Setup {
    fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let tau_ob = PrfSeed::random(&mut rng);
        let mut child = || {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            s
        };
        let originator_rng = ChaCha20Rng::from_seed(child());
        let borrower_rng = ChaCha20Rng::from_seed(child());
        let exchanger_seed = child();
        let lender_seed = child();
        Setup {
            tau_ob,
            originator_rng,
            borrower_rng,
            exchanger_seed,
            lender_seed,
        }
    }
}

/// The session's roles and the lender ids taking part.
type SessionRoles = (Vec<Box<dyn Role>>, Vec<u32>);

fn session_roles(
    registry: &SharedRegistry,
    sk: &PaillierSecretKey,
    cfg: &SessionConfig,
    setup: Setup,
    events: &EventLog,
) -> Result<SessionRoles, ProtocolError> {
    let reg = registry.read().expect("registry lock");
    let user = reg
        .user(&cfg.borrower_uid)
        .ok_or_else(|| ProtocolError::InvalidConfig(format!("borrower {:?} is not registered", cfg.borrower_uid)))?
        .clone();
    if reg.group_size() > cfg.shape.capacity() {
        return Err(ProtocolError::InvalidConfig(format!(
            "groups of {} do not fit shape capacity {}",
            reg.group_size(),
            cfg.shape.capacity()
        )));
    }
    let mut lenders: Vec<u32> = if cfg.lenders.is_empty() {
        reg.lenders().collect()
    } else {
        cfg.lenders.clone()
    };
    lenders.sort_unstable();
    lenders.dedup();
    if let Some(unknown) = lenders.iter().find(|l| !reg.lenders().any(|r| r == **l)) {
        return Err(ProtocolError::InvalidConfig(format!("lender {unknown} is not registered")));
    }
    let loans = reg.loans_of_user(&cfg.borrower_uid).cloned().collect();
    drop(reg);

    let header = SessionHeader {
        session_id: cfg.session_id,
        gid: user.gid,
        date: cfg.date.clone(),
        kind: cfg.kind,
        pk_fingerprint: sk.public_key().fingerprint(),
        shape: cfg.shape.clone(),
        s: cfg.s,
        dp: cfg.dp_params(),
        lenders: lenders.clone(),
        range_bits: cfg.range_bits,
    };
    let originator = Originator::new(
        sk.clone(),
        header,
        user.uid.clone(),
        user.pid as usize,
        setup.tau_ob.clone(),
        cfg.adversary,
        setup.originator_rng,
        events.clone(),
    )?;
    let borrower = Borrower::new(
        user.uid,
        user.tau_eu,
        setup.tau_ob,
        loans,
        cfg.session_id,
        cfg.adversary,
        setup.borrower_rng,
        events.clone(),
    );
    Ok((vec![Box::new(originator), Box::new(borrower)], lenders))
}

fn drive(roles: Vec<Box<dyn Role>>, transport: TransportKind) -> Result<Transcript, ProtocolError> {
    match transport {
        TransportKind::Inproc => run_inproc(roles),
        TransportKind::Threaded => run_threaded(roles),
        TransportKind::Tcp => run_tcp(roles),
    }
}

fn report(session_id: SessionId, events: &EventLog, transcript: Transcript, wall: Duration) -> SessionReport {
    let mut outcome = None;
    let mut verdicts = Verdicts::default();
    let mut type_counts = BTreeMap::new();
    let mut noise_counts = BTreeMap::new();
    let mut notes = Vec::new();
    for event in events.for_session(&session_id) {
        match event {
            SessionEvent::Outcome { result, .. } => {
                outcome.get_or_insert(result);
            }
            SessionEvent::Verdict { name, pass, .. } => {
                let slot = match name {
                    "z1" => &mut verdicts.z1,
                    "z2" => &mut verdicts.z2,
                    _ => &mut verdicts.z3,
                };
                slot.get_or_insert(pass);
            }
            SessionEvent::TypeCounts { counts, .. } => type_counts = counts,
            SessionEvent::NoiseCounts { counts, .. } => noise_counts = counts,
            SessionEvent::Note { party, detail, .. } => notes.push((party, detail)),
        }
    }
    SessionReport {
        session_id,
        // A session that went quiet without an outcome stalled on a message
        // some role refused.
        outcome: outcome.unwrap_or(Err(AbortKind::ProtocolViolation)),
        verdicts,
        type_counts,
        noise_counts,
        transcript,
        notes,
        wall,
    }
}

/// Runs one session end to end over `transport`.
pub fn run_octopus(
    registry: &SharedRegistry,
    sk: &PaillierSecretKey,
    noise: NoiseSource,
    cfg: &SessionConfig,
    transport: TransportKind,
) -> Result<SessionReport, ProtocolError> {
    let mut reports = run_sessions(registry, sk, noise, std::slice::from_ref(cfg), transport, None)?;
    Ok(reports.remove(0))
}

/// Runs several sessions concurrently against one exchanger and one set of
/// lenders. Shared roles are seeded from `shared_seed`, or from the first
/// session's seed when `None`.
pub fn run_sessions(
    registry: &SharedRegistry,
    sk: &PaillierSecretKey,
    noise: NoiseSource,
    cfgs: &[SessionConfig],
    transport: TransportKind,
    shared_seed: Option<u64>,
) -> Result<Vec<SessionReport>, ProtocolError> {
    let Some(first) = cfgs.first() else {
        return Ok(Vec::new());
    };
    let ids: BTreeSet<SessionId> = cfgs.iter().map(|c| c.session_id).collect();
    if ids.len() != cfgs.len() {
        return Err(ProtocolError::InvalidConfig("session ids must be distinct".into()));
    }
    let events = EventLog::default();
    let shared = Setup::from_seed(shared_seed.unwrap_or(first.seed));
    let mut roles: Vec<Box<dyn Role>> = Vec::new();
    let mut all_lenders = BTreeSet::new();
    for cfg in cfgs {
        let (session_roles, lenders) = session_roles(registry, sk, cfg, Setup::from_seed(cfg.seed), &events)?;
        roles.extend(session_roles);
        all_lenders.extend(lenders);
    }
    roles.push(Box::new(Exchanger::new(
        registry.clone(),
        noise,
        shared.exchanger_seed,
        events.clone(),
    )));
    for id in all_lenders {
        roles.push(Box::new(Lender::new(id, registry.clone(), shared.lender_seed, events.clone())));
    }

    let started = Instant::now();
    let transcript = drive(roles, transport)?;
    let wall = started.elapsed();

    if cfgs.len() == 1 {
        return Ok(vec![report(first.session_id, &events, transcript, wall)]);
    }
    Ok(cfgs
        .iter()
        .map(|cfg| {
            let entries: Vec<_> = transcript.for_session(&cfg.session_id).cloned().collect();
            let mut t = Transcript {
                entries,
                ..Transcript::default()
            };
            t.byte_counter = t.bytes_by_direction();
            report(cfg.session_id, &events, t, wall)
        })
        .collect())
}
