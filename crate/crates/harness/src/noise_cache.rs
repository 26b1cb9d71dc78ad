//! Offline noise generation for one originator key and session layout.

use std::path::Path;

use octopus_core::crypto::{PaillierPublicKey, PedersenParams};
use octopus_core::dp::NoiseCache;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::{HarnessError, ScenarioConfig};

/// `count` noise batches matching the scenario's query kind, shape and budget.
pub fn pregenerate(pk: &PaillierPublicKey, cfg: &ScenarioConfig, count: usize) -> Result<NoiseCache, HarnessError> {
    let pp = PedersenParams::for_key_bits(pk.bit_length())?;
    let params = crate::scenario::dp_params(cfg);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x6e6f697365);
    Ok(NoiseCache::generate(pk, &pp, &params, cfg.kind.columns().len(), count, &mut rng)?)
}

pub fn save(path: &Path, pk: &PaillierPublicKey, cache: &NoiseCache) -> Result<(), HarnessError> {
    std::fs::write(path, cache.to_bytes(pk)).map_err(|e| HarnessError::io(path, e))
}

/// Loads a cache, refusing one generated under a different key.
pub fn load(path: &Path, pk: &PaillierPublicKey) -> Result<NoiseCache, HarnessError> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(NoiseCache::from_bytes(pk, &bytes)?)
}
