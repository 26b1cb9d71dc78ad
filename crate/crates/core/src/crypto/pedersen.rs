//! Pedersen commitments `F(x, r) = g^x h^r mod p` in the order-`q` subgroup of `Z*_p`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::arith;
use super::CryptoError;
use crate::encoding::{self, DecodeError, Reader};

#[derive(Clone, PartialEq, Eq)]
pub struct PedersenParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    h: BigUint,
    cofactor: BigUint,
}

impl std::fmt::Debug for PedersenParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PedersenParams")
            .field("p_bits", &self.p.bits())
            .field("q_bits", &self.q.bits())
            .finish()
    }
}

// Fixed groups with a 256-bit prime-order subgroup. p = k·q + 1 was found by
// searching hash-derived k; g = 2^k mod p; h is derived from g by hashing.
const P504_P: &str = "8f7cf84381eb852498c3427d033ca98adcbcd93459d76161dba70cbf261ffdefe6746f02dc53c05ef7d4c0e5a58fac3b94bc7d63272d44b95792169bf9fa5d";
const P504_Q: &str = "d13fc51bed90032c283b956c4d801c0b1d382b3c8db40bea4c424bf765ece265";
const P504_G: &str = "1713d25e82cef5ff98702a9f5ee4dc3f82867af545ed7f2f966b6a00f6651f92155be0befe324bb1f0a77b53e1dda75d0c58ec463afc3e516619b7d4bf9f52";

const P1016_P: &str = "895c4ac963f3481c7a459427d35f09e483a463a4e2b99e9b062dbb1236035c34783d52375cb5786afb7aed1fbeb9615407f30ce58f1faf242bc720dba8529b01c60af5c004486ec1983c01515bb06b670ad121cec47fa092ae5c9cdf0ff8b61bf754c224d2ed0d7033f06bdf379952dcec84761c9f78e1ecb53d6f77dd15b7";
const P1016_Q: &str = "e24d946c019be47352f7aa658936f9e9ca622c269bc537cb4421c584d1e39153";
const P1016_G: &str = "7501536cf1bba7b48d574fe4208c508ecc850ffc3d768f1b9e092537e448e1a54e13fae5ac5ec2491806a9347cb6ea8f371b9cc18bab6d00b22cd3338f45b4ef44c5a4fbf98215484616aba53a3a3e722bcda43bd4fe30855a3a9ef12fd305244e2c6ae44baddfcff1c0ae6575a6cfba712d0ea01065dd0f06c6a8c08bffe3";

fn hex(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("valid hex constant")
}

impl PedersenParams {
    /// Validates a parameter set.
    pub fn new(p: BigUint, q: BigUint, g: BigUint, h: BigUint) -> Result<Self, CryptoError> {
        let one = BigUint::one();
        if p <= BigUint::from(3u32) || q < BigUint::from(2u32) {
            return Err(CryptoError::InvalidParams("p and q too small"));
        }
        let (cofactor, rem) = (&p - 1u32).div_rem(&q);
        if !rem.is_zero() {
            return Err(CryptoError::InvalidParams("q does not divide p - 1"));
        }
        for (name, x) in [("g", &g), ("h", &h)] {
            if x.is_zero() || x >= &p || *x == one || x.modpow(&q, &p) != one {
                return Err(CryptoError::InvalidParams(if name == "g" {
                    "g is not a generator of the order-q subgroup"
                } else {
                    "h is not a generator of the order-q subgroup"
                }));
            }
        }
        if g == h {
            return Err(CryptoError::InvalidParams("g and h must differ"));
        }
        Ok(PedersenParams { p, q, g, h, cofactor })
    }

    /// Builds parameters from `(p, q, g)` with `h` derived from `g` by hashing.
    pub fn with_derived_h(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, CryptoError> {
        let h = derive_h(&p, &q, &g)?;
        Self::new(p, q, g, h)
    }

    /// Fixed group with a 504-bit `p`; commitments fit one digit of a 512-bit Paillier key.
    pub fn p504() -> Self {
        Self::with_derived_h(hex(P504_P), hex(P504_Q), hex(P504_G)).expect("fixed group is valid")
    }

    /// Fixed group with a 1016-bit `p`, for 1024- and 2048-bit Paillier keys.
    pub fn p1016() -> Self {
        Self::with_derived_h(hex(P1016_P), hex(P1016_Q), hex(P1016_G)).expect("fixed group is valid")
    }

    /// The fixed group whose elements fit one payload digit of a `key_bits` Paillier key.
    pub fn for_key_bits(key_bits: u64) -> Result<Self, CryptoError> {
        match key_bits {
            512 => Ok(Self::p504()),
            1024 | 2048 => Ok(Self::p1016()),
            other => Err(CryptoError::UnsupportedKeySize(other)),
        }
    }

    /// Generates a fresh group with `p_bits`-bit `p` and `q_bits`-bit `q`.
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(
        p_bits: u64,
        q_bits: u64,
        rng: &mut R,
    ) -> Result<Self, CryptoError> {
        if q_bits < 8 || p_bits <= q_bits + 1 {
            return Err(CryptoError::InvalidParams("p must be larger than q"));
        }
        let q = loop {
            let c = arith::random_bits(rng, q_bits) | BigUint::one();
            if arith::is_probable_prime(&c) {
                break c;
            }
        };
        let k_bits = p_bits - q_bits;
        let p = loop {
            let mut k = arith::random_bits(rng, k_bits);
            k.set_bit(0, false);
            let p = &k * &q + 1u32;
            if p.bits() == p_bits && arith::is_probable_prime(&p) {
                break p;
            }
        };
        let cofactor = (&p - 1u32) / &q;
        let mut x = BigUint::from(2u32);
        let g = loop {
            let g = x.modpow(&cofactor, &p);
            if !g.is_one() {
                break g;
            }
            x += 1u32;
        };
        Self::with_derived_h(p, q, g)
    }

    /// The hand-checkable group `p = 23, q = 11, g = 4, h = 9`.
    #[cfg(any(test, feature = "toy-params"))]
    pub fn toy() -> Self {
        Self::new(
            BigUint::from(23u32),
            BigUint::from(11u32),
            BigUint::from(4u32),
            BigUint::from(9u32),
        )
        .expect("toy group is valid")
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn h(&self) -> &BigUint {
        &self.h
    }

    /// Serialized width of a commitment value.
    pub fn element_width(&self) -> usize {
        encoding::byte_width(&self.p)
    }

    pub fn is_member(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.p && x.modpow(&self.q, &self.p).is_one()
    }

    /// `F(x, r) = g^x h^r mod p`; both exponents are reduced mod `q`.
    pub fn commit(&self, x: &BigUint, r: &BigUint) -> Commitment {
        let gx = self.g.modpow(&(x % &self.q), &self.p);
        let hr = self.h.modpow(&(r % &self.q), &self.p);
        Commitment(gx * hr % &self.p)
    }

    pub fn verify_open(&self, c: &Commitment, x: &BigUint, r: &BigUint) -> bool {
        self.commit(x, r) == *c
    }

    pub fn random_scalar<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> BigUint {
        arith::random_below(rng, &self.q)
    }

    pub fn identity(&self) -> Commitment {
        Commitment(BigUint::one())
    }

    pub fn mul(&self, a: &Commitment, b: &Commitment) -> Commitment {
        Commitment(&a.0 * &b.0 % &self.p)
    }

    pub fn pow(&self, a: &Commitment, k: &BigUint) -> Commitment {
        Commitment(a.0.modpow(&(k % &self.q), &self.p))
    }

    pub fn inverse(&self, a: &Commitment) -> Commitment {
        // a^(q-1) = a^(-1) inside the subgroup.
        Commitment(a.0.modpow(&(&self.q - 1u32), &self.p))
    }

    pub fn g_pow(&self, k: &BigUint) -> BigUint {
        self.g.modpow(&(k % &self.q), &self.p)
    }

    pub fn h_pow(&self, k: &BigUint) -> BigUint {
        self.h.modpow(&(k % &self.q), &self.p)
    }

    /// Exponent arithmetic mod `q`.
    pub fn add_scalar(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.q
    }

    pub fn sub_scalar(&self, a: &BigUint, b: &BigUint) -> BigUint {
        arith::mod_sub(a, b, &self.q)
    }

    pub fn mul_scalar(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.q
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        for x in [&self.p, &self.q, &self.g, &self.h] {
            encoding::put_uint(buf, x);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let p = r.uint()?;
        let q = r.uint()?;
        let g = r.uint()?;
        let h = r.uint()?;
        Self::new(p, q, g, h).map_err(|e| DecodeError::invalid(e.to_string()))
    }
}

/// Maps `g` into the subgroup by hashing until a non-identity element appears.
pub fn derive_h(p: &BigUint, q: &BigUint, g: &BigUint) -> Result<BigUint, CryptoError> {
    let cofactor = (p - 1u32) / q;
    let width = encoding::byte_width(p) + 16;
    for counter in 0u32..1024 {
        let mut bytes = Vec::with_capacity(width);
        let mut block = 0u32;
        while bytes.len() < width {
            let mut hasher = Sha256::new();
            hasher.update(b"octopus/pedersen-h");
            hasher.update(g.to_bytes_be());
            hasher.update(counter.to_be_bytes());
            hasher.update(block.to_be_bytes());
            bytes.extend_from_slice(&hasher.finalize());
            block += 1;
        }
        let x = BigUint::from_bytes_be(&bytes[..width]) % p;
        if x.is_zero() {
            continue;
        }
        let h = x.modpow(&cofactor, p);
        if !h.is_one() && &h != g {
            return Ok(h);
        }
    }
    Err(CryptoError::InvalidParams("could not derive h"))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Commitment(BigUint);

impl Commitment {
    /// Wraps a value after checking subgroup membership.
    pub fn from_value(params: &PedersenParams, v: BigUint) -> Result<Self, CryptoError> {
        if params.is_member(&v) {
            Ok(Commitment(v))
        } else {
            Err(CryptoError::NotInSubgroup)
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Fixed-width big-endian bytes (no length prefix); this is the PIR payload form.
    pub fn to_payload(&self, params: &PedersenParams) -> Vec<u8> {
        encoding::to_fixed_bytes(&self.0, params.element_width())
    }

    pub fn from_payload(params: &PedersenParams, bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != params.element_width() {
            return Err(CryptoError::NotInSubgroup);
        }
        Self::from_value(params, BigUint::from_bytes_be(bytes))
    }

    pub fn encode(&self, params: &PedersenParams, buf: &mut Vec<u8>) {
        encoding::put_uint_fixed(buf, &self.0, params.element_width());
    }

    pub fn decode(params: &PedersenParams, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let v = r.uint_fixed(params.element_width())?;
        Self::from_value(params, v).map_err(|e| DecodeError::invalid(e.to_string()))
    }
}
