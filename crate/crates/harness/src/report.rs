//! Run reports: a CSV table for tooling and a short human summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use octopus_core::pir::ResponseType;
use octopus_core::protocol::{tag_name, AbortKind, Party, QueryResult, SessionReport, Verdicts, START_STEP};

use crate::ScenarioConfig;

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub outcome: Result<QueryResult, AbortKind>,
    /// Plaintext re-computation, for honest comparison.
    pub expected: Option<QueryResult>,
    pub verdicts: Verdicts,
    pub type_counts: BTreeMap<ResponseType, usize>,
    pub noise_counts: BTreeMap<ResponseType, usize>,
    /// Bytes per direction as counted by the transport.
    pub bytes: BTreeMap<(Party, Party), u64>,
    /// Total handling time per `(party, step)`.
    pub steps: BTreeMap<(Party, u8), Duration>,
    pub frames: usize,
    pub wall: Duration,
    /// The session's full transcript, concatenated.
    pub transcript: Vec<u8>,
    pub notes: Vec<(Party, String)>,
}

fn step_name(tag: u8) -> &'static str {
    if tag == START_STEP {
        "start"
    } else {
        tag_name(tag)
    }
}

fn verdict(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "-",
    }
}

impl RunReport {
    pub fn new(config: &ScenarioConfig, expected: Option<QueryResult>, session: SessionReport, wall: Duration) -> Self {
        let mut steps = BTreeMap::new();
        for t in &session.transcript.timings {
            *steps.entry((t.party, t.tag)).or_insert(Duration::ZERO) += t.elapsed;
        }
        RunReport {
            config: config.clone(),
            outcome: session.outcome,
            expected,
            verdicts: session.verdicts,
            type_counts: session.type_counts,
            noise_counts: session.noise_counts,
            bytes: session.transcript.byte_counter.clone(),
            steps,
            frames: session.transcript.entries.len(),
            wall,
            transcript: session.transcript.concat(),
            notes: session.notes,
        }
    }

    /// Whether an honest run released the plaintext result. `None` for runs
    /// that injected a fault or asked an unsupported query.
    pub fn correct(&self) -> Option<bool> {
        if self.config.adversary.any() {
            return None;
        }
        let expected = self.expected.as_ref()?;
        Some(self.outcome.as_ref() == Ok(expected))
    }

    /// Whether the outcome is the one the configuration calls for: the
    /// oracle result when honest, the fault's abort otherwise.
    pub fn as_expected(&self) -> bool {
        match self.config.adversary.expected_abort() {
            Some(kind) => self.outcome == Err(kind),
            None => match &self.expected {
                Some(e) => self.outcome.as_ref() == Ok(e),
                None => self.outcome == Err(AbortKind::UnsupportedQuery),
            },
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes.values().sum()
    }

    /// `section,name,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,value\n");
        let c = &self.config;
        let mut row = |section: &str, name: &str, value: String| {
            let _ = writeln!(out, "{section},{name},{value}");
        };
        row("config", "query", c.kind.to_string());
        row("config", "lenders", c.lenders.to_string());
        row("config", "shape", c.shape.to_string());
        row("config", "s", c.s.to_string());
        row("config", "sparsity", c.sparsity.to_string());
        row("config", "key_bits", c.key_bits.to_string());
        row("config", "transport", format!("{:?}", c.transport).to_lowercase());
        row("config", "noise", c.noise.to_string());
        row("config", "seed", c.seed.to_string());
        row("verdict", "z1", verdict(self.verdicts.z1).into());
        row("verdict", "z2", verdict(self.verdicts.z2).into());
        row("verdict", "z3", verdict(self.verdicts.z3).into());
        match &self.outcome {
            Ok(r) => row("result", "value", r.to_string()),
            Err(k) => row("result", "abort", k.to_string()),
        }
        if let Some(e) = &self.expected {
            row("result", "expected", e.to_string());
        }
        for (t, n) in &self.type_counts {
            row("types_seen", &t.to_string(), n.to_string());
        }
        for (t, n) in &self.noise_counts {
            row("noise", &t.to_string(), n.to_string());
        }
        for ((from, to), n) in &self.bytes {
            row("bytes", &format!("{from}->{to}"), n.to_string());
        }
        row("bytes", "total", self.total_bytes().to_string());
        for ((party, tag), d) in &self.steps {
            row("step_ms", &format!("{party}:{}", step_name(*tag)), format!("{:.3}", d.as_secs_f64() * 1e3));
        }
        row("time_ms", "wall", format!("{:.3}", self.wall.as_secs_f64() * 1e3));
        out
    }

    pub fn summary(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} query, {} lenders, shape {}, s={}, {}-bit key, {:?} transport",
            c.kind, c.lenders, c.shape, c.s, c.key_bits, c.transport
        );
        let _ = writeln!(
            s,
            "verdicts: valid query {}, authorized {}, consistent {}",
            verdict(self.verdicts.z1),
            verdict(self.verdicts.z2),
            verdict(self.verdicts.z3)
        );
        match &self.outcome {
            Ok(r) => {
                let _ = write!(s, "result: {r}");
            }
            Err(k) => {
                let _ = write!(s, "aborted: {k}");
            }
        }
        match self.correct() {
            Some(true) => s.push_str(" (matches plaintext)\n"),
            Some(false) => {
                let _ = writeln!(s, " (MISMATCH, expected {})", self.expected.as_ref().unwrap());
            }
            None => s.push('\n'),
        }
        let noise: usize = self.noise_counts.values().sum();
        let _ = writeln!(
            s,
            "{} frames, {} bytes, {} noise responses, {:.2} s",
            self.frames,
            self.total_bytes(),
            noise,
            self.wall.as_secs_f64()
        );
        for (party, note) in &self.notes {
            let _ = writeln!(s, "note from {party}: {note}");
        }
        s
    }
}
