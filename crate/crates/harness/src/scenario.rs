//! Builds a consortium from a [`ScenarioConfig`] and runs one session on it.

use std::time::Instant;

use octopus_core::crypto::paillier::paillier_keygen;
use octopus_core::crypto::{PaillierSecretKey, PedersenParams};
use octopus_core::dp::DpParams;
use octopus_core::protocol::{run_octopus, NoiseSource, QueryResult, SessionConfig};
use octopus_core::registry::{amount_limit, Registry, SharedRegistry};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::NoiseMode;
use crate::report::RunReport;
use crate::{keyfile, noise_cache, HarnessError, ScenarioConfig};

const KEY_STREAM: u64 = 1;
const WORLD_STREAM: u64 = 2;
const SESSION_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn dp_params(cfg: &ScenarioConfig) -> DpParams {
    DpParams {
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        k: cfg.k,
        s: cfg.s,
        d: cfg.shape.d(),
        m: cfg.shape.capacity() as u64,
    }
}

/// The originator key a scenario uses: loaded from `key_file`, otherwise
/// generated from the seed.
pub fn scenario_key(cfg: &ScenarioConfig) -> Result<PaillierSecretKey, HarnessError> {
    match &cfg.key_file {
        Some(path) => keyfile::load(path),
        None => Ok(paillier_keygen(cfg.key_bits, &mut stream(cfg.seed, KEY_STREAM))?.1),
    }
}

/// One full group of the shape's capacity, `n` lenders, and loans placed at
/// random with probability `sparsity`.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub sk: PaillierSecretKey,
    pub registry: SharedRegistry,
    pub borrower_uid: String,
    pub date: String,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self, HarnessError> {
        let sk = scenario_key(config)?;
        Self::with_key(config, sk)
    }

    pub fn with_key(config: &ScenarioConfig, sk: PaillierSecretKey) -> Result<Self, HarnessError> {
        config.validate()?;
        let pp = PedersenParams::for_key_bits(sk.public_key().bit_length())?;
        let capacity = config.shape.capacity();
        let mut registry = Registry::new(capacity, amount_limit(&pp, u64::from(config.lenders.max(1))))?;
        let mut rng = stream(config.seed, WORLD_STREAM);
        for pid in 0..capacity {
            registry.register_user(&format!("user-{pid}"), &mut rng)?;
        }
        for lender in 1..=config.lenders {
            registry.register_lender(lender)?;
            for pid in 0..capacity {
                if rng.gen_bool(config.sparsity) {
                    let amount = rng.gen_range(1..=config.max_amount);
                    registry.record_loan(&format!("user-{pid}"), lender, amount, &mut rng)?;
                }
            }
        }
        Ok(Scenario {
            config: config.clone(),
            sk,
            registry: registry.shared(),
            borrower_uid: format!("user-{}", config.borrower_pid),
            date: config.session_date(),
        })
    }

    pub fn session_config(&self) -> SessionConfig {
        let c = &self.config;
        let mut session_id = [0u8; 16];
        stream(c.seed, SESSION_STREAM).fill_bytes(&mut session_id);
        let mut cfg = SessionConfig::new(&self.borrower_uid, c.kind, c.shape.clone());
        cfg.session_id = session_id;
        cfg.s = c.s;
        cfg.epsilon = c.epsilon;
        cfg.delta = c.delta;
        cfg.k = c.k;
        cfg.lenders = (1..=c.lenders).collect();
        cfg.date = self.date.clone();
        cfg.range_bits = c.range_bits;
        cfg.adversary = c.adversary;
        cfg.seed = c.seed;
        cfg
    }

    /// The queried borrower's loan amounts, in lender order.
    pub fn borrower_amounts(&self) -> Vec<u64> {
        let reg = self.registry.read().expect("registry lock");
        let mut loans: Vec<_> = reg
            .loans_of_user(&self.borrower_uid)
            .map(|l| (l.lender_id, l.amount))
            .collect();
        loans.sort_unstable();
        loans.into_iter().map(|(_, a)| a).collect()
    }

    /// What an honest run must release, computed in the clear.
    pub fn expected(&self) -> Option<QueryResult> {
        QueryResult::oracle(self.config.kind, &self.borrower_amounts(), self.config.lenders as usize)
    }

    pub fn noise_source(&self) -> Result<NoiseSource, HarnessError> {
        Ok(match &self.config.noise {
            NoiseMode::Online => NoiseSource::Online,
            NoiseMode::Fixed(k) => NoiseSource::Fixed(*k),
            NoiseMode::Cache(path) => NoiseSource::Cached(noise_cache::load(path, self.sk.public_key())?),
        })
    }

    /// Runs the session. Protocol aborts end up in the report, not as errors.
    pub fn run(&self) -> Result<RunReport, HarnessError> {
        let noise = self.noise_source()?;
        let session = self.session_config();
        let started = Instant::now();
        let report = run_octopus(&self.registry, &self.sk, noise, &session, self.config.transport)?;
        let elapsed = started.elapsed();
        Ok(RunReport::new(&self.config, self.expected(), report, elapsed))
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport, HarnessError> {
    Scenario::build(config)?.run()
}
