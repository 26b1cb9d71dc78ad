//! Transports. Roles never touch sockets or channels; a driver feeds them
//! frames and routes what they emit, recording every frame in a
//! [`Transcript`].
//!
//! Three drivers share the routing rules: a single-threaded FIFO loop, one
//! thread per role over channels, and one thread per role over localhost TCP
//! through a routing hub.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::encoding::Reader;

use super::messages::tag_name;
use super::wire::{Frame, SessionId};
use super::{Party, ProtocolError};

/// Where a frame goes. Session-bound roles (originator, borrower) are found
/// by party and session; shared roles (exchanger, lenders) by party alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Address {
    pub party: Party,
    pub session: Option<SessionId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub to: Party,
    pub frame: Frame,
}

impl Outgoing {
    pub fn new(to: Party, frame: Frame) -> Self {
        Outgoing { to, frame }
    }
}

pub trait Role: Send {
    fn address(&self) -> Address;

    fn start(&mut self) -> Vec<Outgoing> {
        Vec::new()
    }

    /// `from` is the sender as this role is allowed to see it.
    fn handle(&mut self, from: Party, frame: Frame) -> Vec<Outgoing>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    /// The true sender, even when the receiver sees [`Party::Anonymous`].
    pub from: Party,
    pub to: Party,
    pub session: SessionId,
    pub tag: u8,
    /// The complete frame as transmitted.
    pub bytes: Vec<u8>,
}

impl TranscriptEntry {
    pub fn tag_name(&self) -> &'static str {
        tag_name(self.tag)
    }
}

/// Step tag recorded for [`Role::start`].
pub const START_STEP: u8 = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTiming {
    pub party: Party,
    /// Tag of the handled frame, or [`START_STEP`] for the role's start.
    pub tag: u8,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    /// Bytes per `(from, to)`, counted by the transport as frames are sent.
    pub byte_counter: BTreeMap<(Party, Party), u64>,
    pub timings: Vec<StepTiming>,
}

impl Transcript {
    fn record(&mut self, from: Party, to: Party, frame: &Frame) {
        let bytes = frame.to_bytes();
        *self.byte_counter.entry((from, to)).or_default() += bytes.len() as u64;
        self.entries.push(TranscriptEntry {
            from,
            to,
            session: frame.session,
            tag: frame.tag,
            bytes,
        });
    }

    pub fn for_session(&self, session: &SessionId) -> impl Iterator<Item = &TranscriptEntry> + '_ {
        let session = *session;
        self.entries.iter().filter(move |e| e.session == session)
    }

    /// Everything `party` received.
    pub fn received_by(&self, party: Party) -> impl Iterator<Item = &TranscriptEntry> + '_ {
        self.entries.iter().filter(move |e| e.to == party)
    }

    /// Byte totals per direction recomputed from the recorded frames.
    pub fn bytes_by_direction(&self) -> BTreeMap<(Party, Party), u64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry((e.from, e.to)).or_default() += e.bytes.len() as u64;
        }
        out
    }

    pub fn total_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.bytes.len() as u64).sum()
    }

    /// Concatenated frames, for replay comparisons.
    pub fn concat(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|e| e.bytes.iter().copied()).collect()
    }

    pub fn contains_bytes(&self, needle: &[u8]) -> bool {
        !needle.is_empty() && self.entries.iter().any(|e| e.bytes.windows(needle.len()).any(|w| w == needle))
    }
}

struct Router {
    slots: HashMap<Address, usize>,
}

impl Router {
    fn new(addresses: impl IntoIterator<Item = Address>) -> Result<Self, ProtocolError> {
        let mut slots = HashMap::new();
        for (i, a) in addresses.into_iter().enumerate() {
            if slots.insert(a, i).is_some() {
                return Err(ProtocolError::InvalidConfig(format!("two roles at {a:?}")));
            }
        }
        Ok(Router { slots })
    }

    /// Destination slot and the sender identity the receiver gets to see.
    fn resolve(&self, from: Party, out: &Outgoing) -> Result<(usize, Party, Party), ProtocolError> {
        let to = match out.to {
            Party::Anonymous => Party::Borrower,
            p => p,
        };
        let slot = self
            .slots
            .get(&Address {
                party: to,
                session: Some(out.frame.session),
            })
            .or_else(|| self.slots.get(&Address { party: to, session: None }))
            .copied()
            .ok_or_else(|| ProtocolError::Unroutable(format!("{to} for session {}", hex(&out.frame.session))))?;
        let seen_from = if from == Party::Borrower && to == Party::Exchanger {
            Party::Anonymous
        } else {
            from
        };
        Ok((slot, to, seen_from))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs all roles to quiescence in one thread, delivering frames in FIFO
/// order. With seeded roles the transcript is byte-for-byte reproducible.
pub fn run_inproc(mut roles: Vec<Box<dyn Role>>) -> Result<Transcript, ProtocolError> {
    let router = Router::new(roles.iter().map(|r| r.address()))?;
    let mut transcript = Transcript::default();
    let mut queue: VecDeque<(usize, Party, Frame)> = VecDeque::new();
    let parties: Vec<Party> = roles.iter().map(|r| r.address().party).collect();
    for i in 0..roles.len() {
        let t0 = Instant::now();
        let outs = roles[i].start();
        transcript.timings.push(StepTiming {
            party: parties[i],
            tag: START_STEP,
            elapsed: t0.elapsed(),
        });
        for out in outs {
            let (slot, to, seen) = router.resolve(parties[i], &out)?;
            transcript.record(parties[i], to, &out.frame);
            queue.push_back((slot, seen, out.frame));
        }
    }
    while let Some((slot, seen, frame)) = queue.pop_front() {
        let tag = frame.tag;
        let t0 = Instant::now();
        let outs = roles[slot].handle(seen, frame);
        transcript.timings.push(StepTiming {
            party: parties[slot],
            tag,
            elapsed: t0.elapsed(),
        });
        for out in outs {
            let (dest, to, seen) = router.resolve(parties[slot], &out)?;
            transcript.record(parties[slot], to, &out.frame);
            queue.push_back((dest, seen, out.frame));
        }
    }
    Ok(transcript)
}

/// Counts units of pending work: undelivered frames plus unfinished starts.
struct Pending {
    count: Mutex<usize>,
    idle: Condvar,
}

impl Pending {
    fn new(initial: usize) -> Self {
        Pending {
            count: Mutex::new(initial),
            idle: Condvar::new(),
        }
    }

    fn add(&self, n: usize) {
        *self.count.lock().unwrap() += n;
    }

    fn done(&self) {
        let mut c = self.count.lock().unwrap();
        *c -= 1;
        if *c == 0 {
            self.idle.notify_all();
        }
    }

    fn wait_idle(&self) {
        let mut c = self.count.lock().unwrap();
        while *c > 0 {
            c = self.idle.wait(c).unwrap();
        }
    }
}

enum Delivery {
    Frame(Party, Frame),
    Shutdown,
}

struct Shared {
    router: Router,
    parties: Vec<Party>,
    transcript: Mutex<Transcript>,
    pending: Pending,
    errors: Mutex<Vec<ProtocolError>>,
}

impl Shared {
    fn fail(&self, e: ProtocolError) {
        self.errors.lock().unwrap().push(e);
    }

    fn finish(self) -> Result<Transcript, ProtocolError> {
        if let Some(e) = self.errors.into_inner().unwrap().into_iter().next() {
            return Err(e);
        }
        Ok(self.transcript.into_inner().unwrap())
    }
}

/// One thread per role, connected by channels.
pub fn run_threaded(roles: Vec<Box<dyn Role>>) -> Result<Transcript, ProtocolError> {
    let shared = Arc::new(Shared {
        router: Router::new(roles.iter().map(|r| r.address()))?,
        parties: roles.iter().map(|r| r.address().party).collect(),
        transcript: Mutex::new(Transcript::default()),
        pending: Pending::new(roles.len()),
        errors: Mutex::new(Vec::new()),
    });
    let (senders, receivers): (Vec<_>, Vec<_>) = roles.iter().map(|_| mpsc::channel::<Delivery>()).unzip();
    let senders = Arc::new(senders);

    let route = |shared: &Shared, senders: &[mpsc::Sender<Delivery>], slot: usize, outs: Vec<Outgoing>| {
        let from = shared.parties[slot];
        for out in outs {
            match shared.router.resolve(from, &out) {
                Ok((dest, to, seen)) => {
                    shared.transcript.lock().unwrap().record(from, to, &out.frame);
                    shared.pending.add(1);
                    if senders[dest].send(Delivery::Frame(seen, out.frame)).is_err() {
                        shared.pending.done();
                    }
                }
                Err(e) => shared.fail(e),
            }
        }
    };

    let handles: Vec<_> = roles
        .into_iter()
        .zip(receivers)
        .enumerate()
        .map(|(slot, (mut role, rx))| {
            let shared = Arc::clone(&shared);
            let senders = Arc::clone(&senders);
            thread::spawn(move || {
                let t0 = Instant::now();
                let outs = role.start();
                shared.transcript.lock().unwrap().timings.push(StepTiming {
                    party: shared.parties[slot],
                    tag: START_STEP,
                    elapsed: t0.elapsed(),
                });
                route(&shared, &senders, slot, outs);
                shared.pending.done();
                while let Ok(Delivery::Frame(from, frame)) = rx.recv() {
                    let tag = frame.tag;
                    let t0 = Instant::now();
                    let outs = role.handle(from, frame);
                    shared.transcript.lock().unwrap().timings.push(StepTiming {
                        party: shared.parties[slot],
                        tag,
                        elapsed: t0.elapsed(),
                    });
                    route(&shared, &senders, slot, outs);
                    shared.pending.done();
                }
            })
        })
        .collect();

    shared.pending.wait_idle();
    for tx in senders.iter() {
        let _ = tx.send(Delivery::Shutdown);
    }
    for h in handles {
        h.join().map_err(|_| ProtocolError::Transport("role thread panicked".into()))?;
    }
    Arc::try_unwrap(shared)
        .map_err(|_| ProtocolError::Transport("driver state still shared".into()))?
        .finish()
}

// Envelope kinds on the hub connections.
const ENV_FRAME: u8 = 0;
const ENV_DONE: u8 = 1;
const ENV_SHUTDOWN: u8 = 2;

fn write_envelope<W: Write>(w: &mut W, kind: u8, party: Option<Party>, frame: Option<&Frame>) -> std::io::Result<()> {
    let mut head = vec![kind];
    if let Some(p) = party {
        p.encode(&mut head);
    }
    w.write_all(&head)?;
    if let Some(f) = frame {
        f.write_to(w)?;
    }
    w.flush()
}

fn read_party<R: Read>(r: &mut R) -> std::io::Result<Party> {
    let mut b = [0u8; 5];
    r.read_exact(&mut b)?;
    Party::decode(&mut Reader::new(&b)).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

fn read_frame<R: Read>(r: &mut R) -> std::io::Result<Frame> {
    Frame::read_from(r)?.ok_or_else(|| std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "stream closed mid-envelope"))
}

/// One thread per role, each talking to a routing hub over its own
/// localhost TCP connection. The hub stands in for the network: it forwards
/// frames unchanged and applies the same anonymity rule as the other drivers.
pub fn run_tcp(roles: Vec<Box<dyn Role>>) -> Result<Transcript, ProtocolError> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        router: Router::new(roles.iter().map(|r| r.address()))?,
        parties: roles.iter().map(|r| r.address().party).collect(),
        transcript: Mutex::new(Transcript::default()),
        pending: Pending::new(roles.len()),
        errors: Mutex::new(Vec::new()),
    });
    let timings = Arc::new(Mutex::new(Vec::new()));
    let n = roles.len();

    let role_threads: Vec<_> = roles
        .into_iter()
        .enumerate()
        .map(|(slot, mut role)| {
            let timings = Arc::clone(&timings);
            thread::spawn(move || -> std::io::Result<()> {
                let stream = TcpStream::connect(addr)?;
                stream.set_nodelay(true)?;
                let mut writer = BufWriter::new(stream.try_clone()?);
                let mut reader = BufReader::new(stream);
                writer.write_all(&(slot as u32).to_be_bytes())?;
                let party = role.address().party;
                let send_all = |w: &mut BufWriter<TcpStream>, outs: Vec<Outgoing>| -> std::io::Result<()> {
                    for out in outs {
                        write_envelope(w, ENV_FRAME, Some(out.to), Some(&out.frame))?;
                    }
                    write_envelope(w, ENV_DONE, None, None)
                };
                let t0 = Instant::now();
                let outs = role.start();
                timings.lock().unwrap().push(StepTiming {
                    party,
                    tag: START_STEP,
                    elapsed: t0.elapsed(),
                });
                send_all(&mut writer, outs)?;
                loop {
                    let mut kind = [0u8; 1];
                    reader.read_exact(&mut kind)?;
                    match kind[0] {
                        ENV_FRAME => {
                            let from = read_party(&mut reader)?;
                            let frame = read_frame(&mut reader)?;
                            let tag = frame.tag;
                            let t0 = Instant::now();
                            let outs = role.handle(from, frame);
                            timings.lock().unwrap().push(StepTiming {
                                party,
                                tag,
                                elapsed: t0.elapsed(),
                            });
                            send_all(&mut writer, outs)?;
                        }
                        _ => return Ok(()),
                    }
                }
            })
        })
        .collect();

    // Accept every role connection and index it by its announced slot. Each
    // destination gets a writer thread so hub readers never block on a peer.
    let mut outboxes: Vec<Option<mpsc::Sender<Vec<u8>>>> = vec![None; n];
    let mut readers = Vec::with_capacity(n);
    let mut writer_threads = Vec::with_capacity(n);
    for _ in 0..n {
        let (mut stream, _) = listener.accept()?;
        stream.set_nodelay(true)?;
        let mut slot = [0u8; 4];
        stream.read_exact(&mut slot)?;
        let slot = u32::from_be_bytes(slot) as usize;
        if slot >= n || outboxes[slot].is_some() {
            return Err(ProtocolError::Transport(format!("bad slot announcement {slot}")));
        }
        let (tx, rx) = mpsc::channel::<Vec<u8>>();
        let mut out = stream.try_clone()?;
        writer_threads.push(thread::spawn(move || {
            for bytes in rx {
                if out.write_all(&bytes).is_err() {
                    return;
                }
            }
        }));
        outboxes[slot] = Some(tx);
        readers.push((slot, stream));
    }
    let outboxes: Arc<Vec<mpsc::Sender<Vec<u8>>>> = Arc::new(outboxes.into_iter().map(Option::unwrap).collect());

    let hub_threads: Vec<_> = readers
        .into_iter()
        .map(|(slot, stream)| {
            let shared = Arc::clone(&shared);
            let outboxes = Arc::clone(&outboxes);
            thread::spawn(move || {
                let mut reader = BufReader::new(stream);
                let from = shared.parties[slot];
                loop {
                    let mut kind = [0u8; 1];
                    if reader.read_exact(&mut kind).is_err() {
                        return;
                    }
                    match kind[0] {
                        ENV_FRAME => {
                            let parsed = read_party(&mut reader).and_then(|to| Ok((to, read_frame(&mut reader)?)));
                            let Ok((to, frame)) = parsed else {
                                shared.fail(ProtocolError::Transport(format!("corrupt envelope from {from}")));
                                return;
                            };
                            let out = Outgoing::new(to, frame);
                            match shared.router.resolve(from, &out) {
                                Ok((dest, to, seen)) => {
                                    shared.transcript.lock().unwrap().record(from, to, &out.frame);
                                    shared.pending.add(1);
                                    let mut env = Vec::new();
                                    // Writing into a Vec cannot fail.
                                    let _ = write_envelope(&mut env, ENV_FRAME, Some(seen), Some(&out.frame));
                                    if outboxes[dest].send(env).is_err() {
                                        shared.pending.done();
                                    }
                                }
                                Err(e) => shared.fail(e),
                            }
                        }
                        ENV_DONE => shared.pending.done(),
                        _ => {
                            shared.fail(ProtocolError::Transport(format!("unknown envelope from {from}")));
                            return;
                        }
                    }
                }
            })
        })
        .collect();

    shared.pending.wait_idle();
    for tx in outboxes.iter() {
        let _ = tx.send(vec![ENV_SHUTDOWN]);
    }
    for h in role_threads {
        h.join()
            .map_err(|_| ProtocolError::Transport("role thread panicked".into()))??;
    }
    // Role streams are closed now, so every hub reader sees end of stream.
    for h in hub_threads {
        h.join().map_err(|_| ProtocolError::Transport("hub thread panicked".into()))?;
    }
    drop(outboxes);
    for h in writer_threads {
        h.join().map_err(|_| ProtocolError::Transport("hub writer panicked".into()))?;
    }
    let mut transcript = Arc::try_unwrap(shared)
        .map_err(|_| ProtocolError::Transport("driver state still shared".into()))?
        .finish()?;
    transcript.timings = Arc::try_unwrap(timings).map(|m| m.into_inner().unwrap()).unwrap_or_default();
    Ok(transcript)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Forwards a counter to a peer until it reaches a limit.
    struct PingPong {
        party: Party,
        peer: Party,
        limit: u8,
        starts: bool,
    }

    impl Role for PingPong {
        fn address(&self) -> Address {
            Address {
                party: self.party,
                session: None,
            }
        }

        fn start(&mut self) -> Vec<Outgoing> {
            if self.starts {
                vec![Outgoing::new(self.peer, Frame::new(1, [3; 16], vec![0]))]
            } else {
                Vec::new()
            }
        }

        fn handle(&mut self, _from: Party, frame: Frame) -> Vec<Outgoing> {
            let v = frame.body[0];
            if v >= self.limit {
                return Vec::new();
            }
            vec![Outgoing::new(self.peer, Frame::new(1, [3; 16], vec![v + 1]))]
        }
    }

    fn roles() -> Vec<Box<dyn Role>> {
        vec![
            Box::new(PingPong {
                party: Party::Originator,
                peer: Party::Exchanger,
                limit: 9,
                starts: true,
            }),
            Box::new(PingPong {
                party: Party::Exchanger,
                peer: Party::Originator,
                limit: 9,
                starts: false,
            }),
        ]
    }

    fn check(t: &Transcript) {
        assert_eq!(t.entries.len(), 10);
        let values: Vec<u8> = t.entries.iter().map(|e| *e.bytes.last().unwrap()).collect();
        assert_eq!(values, (0..10).collect::<Vec<u8>>());
        assert_eq!(t.byte_counter, t.bytes_by_direction());
    }

    #[test]
    fn all_drivers_agree_on_a_ping_pong() {
        check(&run_inproc(roles()).unwrap());
        check(&run_threaded(roles()).unwrap());
        check(&run_tcp(roles()).unwrap());
    }

    #[test]
    fn borrower_is_anonymous_to_the_exchanger() {
        struct Probe(Party, Option<Party>, Arc<Mutex<Vec<Party>>>);
        impl Role for Probe {
            fn address(&self) -> Address {
                Address {
                    party: self.0,
                    session: None,
                }
            }
            fn start(&mut self) -> Vec<Outgoing> {
                self.1
                    .map(|to| vec![Outgoing::new(to, Frame::new(1, [0; 16], vec![]))])
                    .unwrap_or_default()
            }
            fn handle(&mut self, from: Party, _frame: Frame) -> Vec<Outgoing> {
                self.2.lock().unwrap().push(from);
                if from == Party::Anonymous {
                    vec![Outgoing::new(Party::Anonymous, Frame::new(2, [0; 16], vec![]))]
                } else {
                    Vec::new()
                }
            }
        }
        let seen = Arc::new(Mutex::new(Vec::new()));
        let roles: Vec<Box<dyn Role>> = vec![
            Box::new(Probe(Party::Borrower, Some(Party::Exchanger), Arc::clone(&seen))),
            Box::new(Probe(Party::Exchanger, None, Arc::clone(&seen))),
        ];
        let t = run_inproc(roles).unwrap();
        assert_eq!(*seen.lock().unwrap(), vec![Party::Anonymous, Party::Exchanger]);
        assert_eq!(t.entries[0].from, Party::Borrower);
        assert_eq!(t.entries[1].to, Party::Borrower);
    }

    #[test]
    fn unroutable_destination_is_an_error() {
        let roles: Vec<Box<dyn Role>> = vec![Box::new(PingPong {
            party: Party::Originator,
            peer: Party::Lender(4),
            limit: 1,
            starts: true,
        })];
        assert!(matches!(run_inproc(roles), Err(ProtocolError::Unroutable(_))));
    }
}
