//! Scenario configuration: defaults, flat `key = value` files and the
//! `OCTO_SEED` override.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use octopus_core::pir::QueryShape;
use octopus_core::protocol::{AdversaryFlags, QueryKind, TransportKind};

use crate::HarnessError;

pub const SEED_ENV: &str = "OCTO_SEED";

/// Where the exchanger's dummy responses come from in a scenario run.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseMode {
    Online,
    /// `k` dummies of every reachable type.
    Fixed(u64),
    /// A file written by `pregen-noise` for the same key.
    Cache(PathBuf),
}

impl FromStr for NoiseMode {
    type Err = String;

    /// `online`, `fixed:<k>` or `cache:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "online" => Ok(NoiseMode::Online),
            Some(("fixed", k)) => k
                .trim()
                .parse()
                .map(NoiseMode::Fixed)
                .map_err(|_| format!("bad noise count {k:?}")),
            Some(("cache", path)) if !path.is_empty() => Ok(NoiseMode::Cache(PathBuf::from(path))),
            _ => Err(format!("noise must be online, fixed:<k> or cache:<path>, got {s:?}")),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseMode::Online => f.write_str("online"),
            NoiseMode::Fixed(k) => write!(f, "fixed:{k}"),
            NoiseMode::Cache(p) => write!(f, "cache:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    /// Number of lenders `n`.
    pub lenders: u32,
    pub shape: QueryShape,
    pub s: usize,
    /// Fraction of group slots each lender has a loan in.
    pub sparsity: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k: u64,
    pub kind: QueryKind,
    pub key_bits: u64,
    /// Load the originator key from here instead of generating one.
    pub key_file: Option<PathBuf>,
    pub adversary: AdversaryFlags,
    pub seed: u64,
    pub transport: TransportKind,
    pub noise: NoiseMode,
    /// Position of the queried borrower in its group.
    pub borrower_pid: usize,
    /// Loan amounts are drawn uniformly from `1..=max_amount`.
    pub max_amount: u64,
    pub range_bits: usize,
    /// Session date; today (UTC) when unset.
    pub date: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            lenders: 3,
            shape: QueryShape::new(vec![3, 4]).expect("valid shape"),
            s: 1,
            sparsity: 0.25,
            epsilon: 0.7,
            delta: 1e-4,
            k: 5,
            kind: QueryKind::CmpPublic(1500),
            key_bits: 1024,
            key_file: None,
            adversary: AdversaryFlags::default(),
            seed: 1,
            transport: TransportKind::Inproc,
            noise: NoiseMode::Online,
            borrower_pid: 0,
            max_amount: 1000,
            range_bits: 32,
            date: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(HarnessError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl ScenarioConfig {
    /// Sets one field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let value = value.trim();
        match key {
            "lenders" | "n" => self.lenders = parse(key, value)?,
            "shape" => self.shape = QueryShape::parse(value).map_err(|e| HarnessError::Config(e.to_string()))?,
            "s" => self.s = parse(key, value)?,
            "sparsity" => self.sparsity = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "query" | "kind" => {
                let threshold = match self.kind {
                    QueryKind::CmpPublic(t) => Some(t),
                    _ => None,
                };
                self.kind = QueryKind::parse(value, threshold).map_err(HarnessError::Config)?;
            }
            "threshold" | "t" => {
                let t = parse(key, value)?;
                if let QueryKind::CmpPublic(_) = self.kind {
                    self.kind = QueryKind::CmpPublic(t);
                } else {
                    return Err(HarnessError::Config(format!("threshold set for a {} query", self.kind)));
                }
            }
            "key_bits" => self.key_bits = parse(key, value)?,
            "key_file" => self.key_file = Some(PathBuf::from(value)),
            "lie_sum" => self.adversary.lie_sum = parse_bool(key, value)?,
            "bad_query" => self.adversary.bad_query = parse_bool(key, value)?,
            "impostor" => self.adversary.impostor = parse_bool(key, value)?,
            "replay_proof" => self.adversary.replay_proof = parse_bool(key, value)?,
            "wrong_target" => self.adversary.wrong_target = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "transport" => self.transport = value.parse().map_err(HarnessError::Config)?,
            "noise" => self.noise = value.parse().map_err(HarnessError::Config)?,
            "borrower_pid" => self.borrower_pid = parse(key, value)?,
            "max_amount" => self.max_amount = parse(key, value)?,
            "range_bits" => self.range_bits = parse(key, value)?,
            "date" => self.date = Some(value.to_string()),
            other => return Err(HarnessError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat config: one `key = value` per line, `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), HarnessError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        self.apply_str(&text)
    }

    /// Replaces the seed with `OCTO_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<(), HarnessError> {
        match std::env::var(SEED_ENV) {
            Ok(v) => self.set("seed", &v),
            Err(std::env::VarError::NotPresent) => Ok(()),
            Err(e) => Err(HarnessError::Config(format!("{SEED_ENV}: {e}"))),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(0.0..=1.0).contains(&self.sparsity) {
            return bad(format!("sparsity {} outside [0, 1]", self.sparsity));
        }
        if self.s == 0 || self.s > self.shape.d() {
            return bad(format!("s = {} outside 1..={}", self.s, self.shape.d()));
        }
        if self.borrower_pid >= self.shape.capacity() {
            return bad(format!(
                "borrower pid {} outside the group of {}",
                self.borrower_pid,
                self.shape.capacity()
            ));
        }
        if self.max_amount == 0 {
            return bad("max_amount must be positive".into());
        }
        Ok(())
    }

    /// The session date: the configured one, or today in UTC.
    pub fn session_date(&self) -> String {
        self.date
            .clone()
            .unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%d").to_string())
    }
}
