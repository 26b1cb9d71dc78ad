//! Consortium registry: user registration into equal-size groups, loan
//! records with their borrower/lender seeds, and the per-lender sparse
//! databases built from a group snapshot.
//!
//! Every write is appended to a record log using the wire frame layout, so a
//! registry can be rebuilt by replaying its log.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::crypto::{Label, PedersenParams, PrfSeed};
use crate::encoding::{self, DecodeError, Reader};
use crate::pir::{PirError, QueryShape, SparseDatabase};
use crate::protocol::wire::Frame;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("user {0:?} is already registered")]
    DuplicateUser(String),
    #[error("lender {0} is already registered")]
    DuplicateLender(u32),
    #[error("unknown lender {0}")]
    UnknownLender(u32),
    #[error("amount {amount} exceeds the limit {limit}")]
    AmountTooLarge { amount: u64, limit: u64 },
    #[error("group size must be positive")]
    EmptyGroups,
    #[error("group of {group_size} users does not fit a database of capacity {capacity}")]
    GroupTooLarge { group_size: usize, capacity: usize },
    #[error(transparent)]
    Pir(#[from] PirError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserRecord {
    pub uid: String,
    pub gid: u32,
    pub pid: u32,
    /// Shared with the exchanger.
    pub tau_eu: PrfSeed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoanRecord {
    pub uid: String,
    pub lender_id: u32,
    pub amount: u64,
    /// Shared between the borrower and the lender.
    pub tau_iu: PrfSeed,
}

/// The layout of one group as of a date.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSnapshot {
    pub gid: u32,
    /// `(pid, uid)` with strictly increasing pids.
    pub occupancy: Vec<(u32, String)>,
    pub as_of_date: String,
}

impl GroupSnapshot {
    pub fn pid_of(&self, uid: &str) -> Option<u32> {
        self.occupancy.iter().find(|(_, u)| u == uid).map(|(p, _)| *p)
    }
}

/// What a database column commits to for a loan of amount `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Column {
    /// `x`
    Amount,
    /// `1` for every loan, including zero balances.
    Indicator,
    /// `x²`
    Square,
}

impl Column {
    pub fn prf_tag(self) -> &'static str {
        match self {
            Column::Amount => "rc",
            Column::Indicator => "rn",
            Column::Square => "rs",
        }
    }

    pub fn value(self, amount: u64) -> BigUint {
        match self {
            Column::Amount => BigUint::from(amount),
            Column::Indicator => BigUint::from(1u32),
            Column::Square => BigUint::from(amount) * amount,
        }
    }
}

/// Commitment randomness for one loan and column; both the lender and the
/// borrower derive it from their shared seed.
pub fn commitment_randomness(
    pp: &PedersenParams,
    tau: &PrfSeed,
    column: Column,
    uid: &str,
    amount: u64,
    date: &str,
) -> BigUint {
    let label = Label::new(column.prf_tag()).str(uid).u64(amount).str(date);
    tau.eval(&label, pp.q())
}

/// Largest amount such that the sum over `max_lenders` loans stays below `q/2`.
pub fn amount_limit(pp: &PedersenParams, max_lenders: u64) -> u64 {
    let limit = pp.q() / (2 * max_lenders.max(1));
    u64::try_from(limit).unwrap_or(u64::MAX)
}

/// One lender's database for `snapshot`: a payload of `columns` commitments
/// at each pid where the lender holds a loan, nothing elsewhere.
pub fn build_lender_database<'a>(
    pp: &PedersenParams,
    shape: &QueryShape,
    snapshot: &GroupSnapshot,
    loans: impl IntoIterator<Item = &'a LoanRecord>,
    columns: &[Column],
) -> Result<SparseDatabase, RegistryError> {
    let mut db = SparseDatabase::new(shape.clone(), columns.len() * pp.element_width());
    let by_uid: HashMap<&str, &LoanRecord> = loans.into_iter().map(|l| (l.uid.as_str(), l)).collect();
    for (pid, uid) in &snapshot.occupancy {
        let Some(loan) = by_uid.get(uid.as_str()) else {
            continue;
        };
        let mut payload = Vec::with_capacity(db.payload_len());
        for &col in columns {
            let r = commitment_randomness(pp, &loan.tau_iu, col, uid, loan.amount, &snapshot.as_of_date);
            payload.extend(pp.commit(&col.value(loan.amount), &r).to_payload(pp));
        }
        db.insert(*pid as usize, payload)?;
    }
    Ok(db)
}

const LOG_CONFIG: u8 = 1;
const LOG_LENDER: u8 = 2;
const LOG_USER: u8 = 3;
const LOG_LOAN: u8 = 4;

#[derive(Debug)]
pub struct Registry {
    group_size: usize,
    amount_limit: u64,
    users: Vec<UserRecord>,
    by_uid: HashMap<String, usize>,
    lenders: BTreeSet<u32>,
    loans: BTreeMap<(u32, String), LoanRecord>,
    log: Vec<u8>,
    sink: Option<File>,
}

/// Writers take the lock exclusively; snapshot readers share it.
pub type SharedRegistry = Arc<RwLock<Registry>>;

impl Registry {
    pub fn new(group_size: usize, amount_limit: u64) -> Result<Self, RegistryError> {
        if group_size == 0 {
            return Err(RegistryError::EmptyGroups);
        }
        let mut reg = Registry {
            group_size,
            amount_limit,
            users: Vec::new(),
            by_uid: HashMap::new(),
            lenders: BTreeSet::new(),
            loans: BTreeMap::new(),
            log: Vec::new(),
            sink: None,
        };
        let mut body = Vec::new();
        encoding::put_u64(&mut body, group_size as u64);
        encoding::put_u64(&mut body, amount_limit);
        reg.append(LOG_CONFIG, body)?;
        Ok(reg)
    }

    pub fn shared(self) -> SharedRegistry {
        Arc::new(RwLock::new(self))
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn amount_limit(&self) -> u64 {
        self.amount_limit
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// `⌈N / N_g⌉`.
    pub fn group_count(&self) -> usize {
        self.users.len().div_ceil(self.group_size)
    }

    pub fn register_lender(&mut self, lender_id: u32) -> Result<(), RegistryError> {
        if self.lenders.contains(&lender_id) {
            return Err(RegistryError::DuplicateLender(lender_id));
        }
        let mut body = Vec::new();
        encoding::put_u32(&mut body, lender_id);
        self.append(LOG_LENDER, body)?;
        self.lenders.insert(lender_id);
        Ok(())
    }

    pub fn lenders(&self) -> impl Iterator<Item = u32> + '_ {
        self.lenders.iter().copied()
    }

    /// Assigns the next free `(gid, pid)` in fill order and a fresh exchanger seed.
    pub fn register_user<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        uid: &str,
        rng: &mut R,
    ) -> Result<UserRecord, RegistryError> {
        if self.by_uid.contains_key(uid) {
            return Err(RegistryError::DuplicateUser(uid.to_string()));
        }
        let index = self.users.len();
        let record = UserRecord {
            uid: uid.to_string(),
            gid: (index / self.group_size) as u32,
            pid: (index % self.group_size) as u32,
            tau_eu: PrfSeed::random(rng),
        };
        self.append(LOG_USER, encode_user(&record))?;
        self.insert_user(record.clone());
        Ok(record)
    }

    fn insert_user(&mut self, record: UserRecord) {
        self.by_uid.insert(record.uid.clone(), self.users.len());
        self.users.push(record);
    }

    pub fn user(&self, uid: &str) -> Option<&UserRecord> {
        self.by_uid.get(uid).map(|&i| &self.users[i])
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn group_members(&self, gid: u32) -> impl Iterator<Item = &UserRecord> + '_ {
        let start = (gid as usize).saturating_mul(self.group_size).min(self.users.len());
        let end = (start + self.group_size).min(self.users.len());
        self.users[start..end].iter()
    }

    /// Records (or replaces) the single loan between `uid` and `lender_id`.
    /// The borrower need not be registered; such a loan has no slot in any
    /// database.
    pub fn record_loan<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        uid: &str,
        lender_id: u32,
        amount: u64,
        rng: &mut R,
    ) -> Result<LoanRecord, RegistryError> {
        if !self.lenders.contains(&lender_id) {
            return Err(RegistryError::UnknownLender(lender_id));
        }
        if amount > self.amount_limit {
            return Err(RegistryError::AmountTooLarge {
                amount,
                limit: self.amount_limit,
            });
        }
        let record = LoanRecord {
            uid: uid.to_string(),
            lender_id,
            amount,
            tau_iu: PrfSeed::random(rng),
        };
        self.append(LOG_LOAN, encode_loan(&record))?;
        self.loans.insert((lender_id, uid.to_string()), record.clone());
        Ok(record)
    }

    pub fn loan(&self, lender_id: u32, uid: &str) -> Option<&LoanRecord> {
        self.loans.get(&(lender_id, uid.to_string()))
    }

    pub fn loans_of_lender(&self, lender_id: u32) -> impl Iterator<Item = &LoanRecord> + '_ {
        self.loans
            .range((lender_id, String::new())..)
            .take_while(move |((l, _), _)| *l == lender_id)
            .map(|(_, rec)| rec)
    }

    pub fn loans_of_user<'a>(&'a self, uid: &'a str) -> impl Iterator<Item = &'a LoanRecord> + 'a {
        self.loans.values().filter(move |l| l.uid == uid)
    }

    /// Layout of every group as of `date`. Any lender may sync; what it keeps
    /// is decided by [`build_lender_database`].
    pub fn sync_groups(&self, _lender_id: u32, date: &str) -> Vec<GroupSnapshot> {
        (0..self.group_count() as u32)
            .map(|gid| self.snapshot(gid, date))
            .collect()
    }

    pub fn snapshot(&self, gid: u32, date: &str) -> GroupSnapshot {
        GroupSnapshot {
            gid,
            occupancy: self.group_members(gid).map(|u| (u.pid, u.uid.clone())).collect(),
            as_of_date: date.to_string(),
        }
    }

    /// A lender's database for group `gid` on `date`.
    pub fn lender_database(
        &self,
        pp: &PedersenParams,
        shape: &QueryShape,
        lender_id: u32,
        gid: u32,
        date: &str,
        columns: &[Column],
    ) -> Result<SparseDatabase, RegistryError> {
        if !self.lenders.contains(&lender_id) {
            return Err(RegistryError::UnknownLender(lender_id));
        }
        if self.group_size > shape.capacity() {
            return Err(RegistryError::GroupTooLarge {
                group_size: self.group_size,
                capacity: shape.capacity(),
            });
        }
        build_lender_database(pp, shape, &self.snapshot(gid, date), self.loans_of_lender(lender_id), columns)
    }

    pub fn log_bytes(&self) -> &[u8] {
        &self.log
    }

    fn append(&mut self, tag: u8, body: Vec<u8>) -> Result<(), RegistryError> {
        let bytes = Frame::new(tag, [0; 16], body).to_bytes();
        if let Some(f) = self.sink.as_mut() {
            f.write_all(&bytes)?;
            f.flush()?;
        }
        self.log.extend_from_slice(&bytes);
        Ok(())
    }

    /// Rebuilds a registry from its record log.
    pub fn replay(bytes: &[u8]) -> Result<Self, RegistryError> {
        let mut r = Reader::new(bytes);
        let first = Frame::decode(&mut r)?;
        if first.tag != LOG_CONFIG {
            return Err(DecodeError::invalid("registry log must start with its configuration").into());
        }
        let mut cr = Reader::new(&first.body);
        let group_size = cr.u64()? as usize;
        let limit = cr.u64()?;
        cr.finish()?;
        let mut reg = Registry::new(group_size, limit)?;
        while r.remaining() > 0 {
            let frame = Frame::decode(&mut r)?;
            let mut br = Reader::new(&frame.body);
            match frame.tag {
                LOG_LENDER => {
                    let id = br.u32()?;
                    if !reg.lenders.insert(id) {
                        return Err(RegistryError::DuplicateLender(id));
                    }
                }
                LOG_USER => {
                    let user = decode_user(&mut br)?;
                    let expected = reg.users.len();
                    if reg.by_uid.contains_key(&user.uid)
                        || user.gid as usize != expected / group_size
                        || user.pid as usize != expected % group_size
                    {
                        return Err(DecodeError::invalid(format!("log entry for {:?} breaks fill order", user.uid)).into());
                    }
                    reg.insert_user(user);
                }
                LOG_LOAN => {
                    let loan = decode_loan(&mut br)?;
                    reg.loans.insert((loan.lender_id, loan.uid.clone()), loan);
                }
                other => return Err(DecodeError::invalid(format!("registry log tag {other}")).into()),
            }
            br.finish()?;
        }
        reg.log = bytes.to_vec();
        Ok(reg)
    }

    /// Opens the log at `path`, replaying existing entries, and appends every
    /// later write to it. A missing file starts a fresh registry.
    pub fn open(path: &Path, group_size: usize, amount_limit: u64) -> Result<Self, RegistryError> {
        let mut reg = if path.exists() {
            Registry::replay(&std::fs::read(path)?)?
        } else {
            let reg = Registry::new(group_size, amount_limit)?;
            std::fs::write(path, &reg.log)?;
            reg
        };
        reg.sink = Some(OpenOptions::new().append(true).open(path)?);
        Ok(reg)
    }
}

fn encode_user(u: &UserRecord) -> Vec<u8> {
    let mut body = Vec::new();
    encoding::put_str(&mut body, &u.uid);
    encoding::put_u32(&mut body, u.gid);
    encoding::put_u32(&mut body, u.pid);
    body.extend_from_slice(u.tau_eu.expose());
    body
}

fn decode_user(r: &mut Reader<'_>) -> Result<UserRecord, DecodeError> {
    Ok(UserRecord {
        uid: r.string()?,
        gid: r.u32()?,
        pid: r.u32()?,
        tau_eu: read_seed(r)?,
    })
}

fn encode_loan(l: &LoanRecord) -> Vec<u8> {
    let mut body = Vec::new();
    encoding::put_str(&mut body, &l.uid);
    encoding::put_u32(&mut body, l.lender_id);
    encoding::put_u64(&mut body, l.amount);
    body.extend_from_slice(l.tau_iu.expose());
    body
}

fn decode_loan(r: &mut Reader<'_>) -> Result<LoanRecord, DecodeError> {
    Ok(LoanRecord {
        uid: r.string()?,
        lender_id: r.u32()?,
        amount: r.u64()?,
        tau_iu: read_seed(r)?,
    })
}

fn read_seed(r: &mut Reader<'_>) -> Result<PrfSeed, DecodeError> {
    let mut s = [0u8; 32];
    s.copy_from_slice(r.take(32)?);
    Ok(PrfSeed::from_bytes(s))
}
