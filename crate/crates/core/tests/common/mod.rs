#![allow(dead_code)]

use std::sync::OnceLock;

use octopus_core::crypto::paillier::paillier_keygen;
use octopus_core::crypto::{PaillierPublicKey, PaillierSecretKey, PedersenParams};
use octopus_core::pir::QueryShape;
use octopus_core::protocol::{QueryKind, SessionConfig};
use octopus_core::registry::{amount_limit, Registry, SharedRegistry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn keys512() -> &'static (PaillierPublicKey, PaillierSecretKey) {
    static KEYS: OnceLock<(PaillierPublicKey, PaillierSecretKey)> = OnceLock::new();
    KEYS.get_or_init(|| paillier_keygen(512, &mut rng(0x5e55)).unwrap())
}

/// A consortium with one full group of the shape's capacity.
pub struct World {
    pub registry: SharedRegistry,
    pub shape: QueryShape,
    pub lenders: Vec<u32>,
}

impl World {
    /// `lenders` lenders, each lending to a random `sparsity` fraction of the group.
    pub fn build(
        shape: &[usize],
        lenders: u32,
        sparsity: f64,
        max_amount: u64,
        seed: u64,
    ) -> World {
        let shape = QueryShape::new(shape.to_vec()).unwrap();
        let pp = PedersenParams::p504();
        let mut registry = Registry::new(shape.capacity(), amount_limit(&pp, 1000)).unwrap();
        let mut r = rng(seed);
        for uid in 0..shape.capacity() {
            registry.register_user(&format!("user-{uid}"), &mut r).unwrap();
        }
        let ids: Vec<u32> = (1..=lenders).collect();
        for &l in &ids {
            registry.register_lender(l).unwrap();
            for uid in 0..shape.capacity() {
                if r.gen_bool(sparsity) {
                    let amount = r.gen_range(0..=max_amount);
                    registry.record_loan(&format!("user-{uid}"), l, amount, &mut r).unwrap();
                }
            }
        }
        World {
            registry: registry.shared(),
            shape,
            lenders: ids,
        }
    }

    pub fn amounts_of(&self, uid: &str) -> Vec<u64> {
        let reg = self.registry.read().unwrap();
        let mut loans: Vec<_> = reg.loans_of_user(uid).map(|l| (l.lender_id, l.amount)).collect();
        loans.sort_unstable();
        loans.into_iter().map(|(_, a)| a).collect()
    }

    pub fn config(&self, uid: &str, kind: QueryKind, seed: u64) -> SessionConfig {
        let mut cfg = SessionConfig::new(uid, kind, self.shape.clone());
        cfg.lenders = self.lenders.clone();
        cfg.seed = seed;
        cfg.session_id = session_id(seed);
        cfg
    }
}

pub fn session_id(seed: u64) -> [u8; 16] {
    let mut id = [0u8; 16];
    id[..8].copy_from_slice(&seed.to_be_bytes());
    id[8..].copy_from_slice(b"session!");
    id
}
