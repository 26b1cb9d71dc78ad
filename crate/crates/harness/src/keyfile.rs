//! Originator key files: the two Paillier primes behind a magic tag.

use std::path::Path;

use octopus_core::crypto::PaillierSecretKey;
use octopus_core::encoding::{self, DecodeError, Reader};

use crate::HarnessError;

const MAGIC: &[u8; 8] = b"OCTOKEY1";

pub fn to_bytes(sk: &PaillierSecretKey) -> Vec<u8> {
    let (p, q) = sk.primes();
    let mut buf = MAGIC.to_vec();
    encoding::put_uint(&mut buf, p);
    encoding::put_uint(&mut buf, q);
    buf
}

pub fn from_bytes(bytes: &[u8]) -> Result<PaillierSecretKey, HarnessError> {
    let mut r = Reader::new(bytes);
    if r.take(MAGIC.len())? != MAGIC {
        return Err(DecodeError::invalid("not a key file").into());
    }
    let p = r.uint()?;
    let q = r.uint()?;
    r.finish()?;
    Ok(PaillierSecretKey::from_primes(p, q)?)
}

pub fn save(path: &Path, sk: &PaillierSecretKey) -> Result<(), HarnessError> {
    std::fs::write(path, to_bytes(sk)).map_err(|e| HarnessError::io(path, e))
}

pub fn load(path: &Path) -> Result<PaillierSecretKey, HarnessError> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use octopus_core::crypto::paillier::toy_keypair;

    #[test]
    fn round_trip() {
        let (pk, sk) = toy_keypair();
        let back = from_bytes(&to_bytes(&sk)).unwrap();
        assert_eq!(back.public_key(), &pk);
        assert!(from_bytes(b"OCTOKEY0").is_err());
        let mut truncated = to_bytes(&sk);
        truncated.pop();
        assert!(from_bytes(&truncated).is_err());
    }
}
