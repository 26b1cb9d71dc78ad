//! Keyed PRF: HMAC-SHA256 in counter mode with rejection sampling into a range.

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

type HmacSha256 = Hmac<Sha256>;

/// A 32-byte secret shared between two roles. It has no serializer, and its
/// `Debug` output is redacted.
#[derive(Clone, PartialEq, Eq)]
pub struct PrfSeed([u8; 32]);

impl std::fmt::Debug for PrfSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PrfSeed(..)")
    }
}

impl PrfSeed {
    pub fn from_bytes(secret: [u8; 32]) -> Self {
        PrfSeed(secret)
    }

    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        PrfSeed(secret)
    }

    /// Raw secret bytes, for at-rest storage and leak scanning only.
    pub fn expose(&self) -> &[u8; 32] {
        &self.0
    }

    fn block(&self, label: &[u8], attempt: u32, counter: u32) -> [u8; 32] {
        let mut mac = HmacSha256::new_from_slice(&self.0).expect("hmac accepts any key length");
        mac.update(label);
        mac.update(&attempt.to_be_bytes());
        mac.update(&counter.to_be_bytes());
        mac.finalize().into_bytes().into()
    }

    /// Uniform-looking integer in `[0, range)`.
    ///
    /// Panics on an empty label or a zero range.
    pub fn eval(&self, label: &Label, range: &BigUint) -> BigUint {
        assert!(!label.is_empty(), "PRF label must be non-empty");
        assert!(!range.is_zero(), "PRF range must be positive");
        let bits = range.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let excess = (nbytes as u64) * 8 - bits;
        let mut attempt = 0u32;
        loop {
            let mut bytes = Vec::with_capacity(nbytes + 32);
            let mut counter = 0u32;
            while bytes.len() < nbytes {
                bytes.extend_from_slice(&self.block(label.as_bytes(), attempt, counter));
                counter += 1;
            }
            bytes.truncate(nbytes);
            if excess > 0 {
                bytes[0] &= 0xff >> excess;
            }
            let v = BigUint::from_bytes_be(&bytes);
            if &v < range {
                return v;
            }
            attempt += 1;
        }
    }

    /// A unit of `Z_n`, sampled by rejection on top of [`PrfSeed::eval`].
    pub fn eval_unit(&self, label: &Label, n: &BigUint) -> BigUint {
        let mut attempt = 0u32;
        loop {
            let l = label.clone().u32(attempt);
            let v = self.eval(&l, n);
            if !v.is_zero() && v.gcd(n).is_one() {
                return v;
            }
            attempt += 1;
        }
    }
}

/// Length-prefixed concatenation of label parts, so that `"ab"‖"c"` and
/// `"a"‖"bc"` never collide.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Label(Vec<u8>);

impl Label {
    pub fn new(tag: &str) -> Self {
        Label::default().str(tag)
    }

    pub fn bytes(mut self, part: &[u8]) -> Self {
        self.0.extend_from_slice(&(part.len() as u32).to_be_bytes());
        self.0.extend_from_slice(part);
        self
    }

    pub fn str(self, part: &str) -> Self {
        self.bytes(part.as_bytes())
    }

    pub fn u32(self, v: u32) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn uint(self, v: &BigUint) -> Self {
        self.bytes(&v.to_bytes_be())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn prf_eval(seed: &PrfSeed, label: &Label, range: &BigUint) -> BigUint {
    seed.eval(label, range)
}
