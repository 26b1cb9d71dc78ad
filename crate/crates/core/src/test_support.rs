use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::crypto::paillier::{paillier_keygen, PaillierPublicKey, PaillierSecretKey};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// A 512-bit key pair shared by the unit tests.
pub fn test_keypair() -> (PaillierPublicKey, PaillierSecretKey) {
    static KEYS: OnceLock<(PaillierPublicKey, PaillierSecretKey)> = OnceLock::new();
    KEYS.get_or_init(|| paillier_keygen(512, &mut rng(0x0c70)).expect("512 is supported"))
        .clone()
}
