use num_bigint::BigUint;
use sha2::{Digest, Sha256};

pub const CHALLENGE_BITS: u32 = 128;

/// A 128-bit Fiat-Shamir challenge.
pub type Challenge = u128;

/// SHA-256 over a domain tag followed by length-prefixed, labelled items.
#[derive(Clone)]
pub struct Transcript {
    hasher: Sha256,
}

impl Transcript {
    pub fn new(domain_tag: &str) -> Self {
        let mut t = Transcript {
            hasher: Sha256::new(),
        };
        t.absorb("domain", domain_tag.as_bytes());
        t
    }

    pub fn absorb(&mut self, label: &str, bytes: &[u8]) {
        self.hasher.update((label.len() as u32).to_be_bytes());
        self.hasher.update(label.as_bytes());
        self.hasher.update((bytes.len() as u64).to_be_bytes());
        self.hasher.update(bytes);
    }

    pub fn absorb_uint(&mut self, label: &str, x: &BigUint) {
        self.absorb(label, &x.to_bytes_be());
    }

    pub fn absorb_u64(&mut self, label: &str, v: u64) {
        self.absorb(label, &v.to_be_bytes());
    }

    /// The first 128 bits of the digest of everything absorbed so far.
    pub fn challenge(&self) -> Challenge {
        let digest = self.hasher.clone().finalize();
        let mut first = [0u8; 16];
        first.copy_from_slice(&digest[..16]);
        u128::from_be_bytes(first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_absorptions_agree() {
        let mut a = Transcript::new("t");
        let mut b = Transcript::new("t");
        a.absorb_uint("x", &BigUint::from(5u32));
        b.absorb_uint("x", &BigUint::from(5u32));
        assert_eq!(a.challenge(), b.challenge());
    }

    #[test]
    fn any_change_moves_the_challenge() {
        let base = {
            let mut t = Transcript::new("t");
            t.absorb("a", b"xy");
            t.absorb("b", b"z");
            t.challenge()
        };
        let variants = [
            ("u", "a", &b"xy"[..], "b", &b"z"[..]),
            ("t", "a", &b"x"[..], "b", &b"yz"[..]),
            ("t", "c", &b"xy"[..], "b", &b"z"[..]),
            ("t", "a", &b"xy"[..], "b", &b"w"[..]),
        ];
        for (d, l1, v1, l2, v2) in variants {
            let mut t = Transcript::new(d);
            t.absorb(l1, v1);
            t.absorb(l2, v2);
            assert_ne!(t.challenge(), base);
        }
    }
}
