//! Paillier encryption with the generator fixed to `n + 1`.
//!
//! With `g = n + 1` we have `g^m = 1 + m·n (mod n^2)` and `g^n = 1`, so
//! encryption is `(1 + m·n)·r^n` and exponents of `g` reduce mod `n`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::arith::{self, mod_inverse};
use super::CryptoError;
use crate::encoding::{self, DecodeError, Reader};

pub const SUPPORTED_KEY_BITS: [u64; 3] = [512, 1024, 2048];

#[derive(Clone, PartialEq, Eq)]
pub struct PaillierPublicKey {
    n: BigUint,
    n_squared: BigUint,
    bit_length: u64,
}

impl std::fmt::Debug for PaillierPublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaillierPublicKey")
            .field("bit_length", &self.bit_length)
            .field("fingerprint", &hex_prefix(&self.fingerprint()))
            .finish()
    }
}

fn hex_prefix(bytes: &[u8]) -> String {
    bytes.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

impl PaillierPublicKey {
    pub fn from_modulus(n: BigUint) -> Result<Self, CryptoError> {
        if n.is_even() || n <= BigUint::from(3u32) {
            return Err(CryptoError::InvalidParams("paillier modulus must be odd and > 3"));
        }
        let n_squared = &n * &n;
        let bit_length = n.bits();
        Ok(PaillierPublicKey {
            n,
            n_squared,
            bit_length,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bit_length(&self) -> u64 {
        self.bit_length
    }

    /// `g = n + 1`.
    pub fn generator(&self) -> BigUint {
        &self.n + 1u32
    }

    /// Byte width of a serialized base ciphertext (magnitude only).
    pub fn ciphertext_width(&self) -> usize {
        encoding::byte_width(&self.n_squared)
    }

    /// SHA-256 over the serialized modulus.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"octopus/paillier-pk");
        h.update(self.to_bytes());
        h.finalize().into()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.encode(&mut buf);
        buf
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        encoding::put_uint(buf, &self.n);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.uint()?;
        Self::from_modulus(n).map_err(|e| DecodeError::invalid(e.to_string()))
    }

    pub fn random_unit<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> BigUint {
        arith::random_unit(rng, &self.n)
    }

    pub fn encrypt<R: RngCore + CryptoRng + ?Sized>(
        &self,
        m: &BigUint,
        rng: &mut R,
    ) -> Result<BigUint, CryptoError> {
        let r = self.random_unit(rng);
        self.encrypt_with(m, &r)
    }

    /// `c = (1 + m·n)·r^n mod n^2`.
    pub fn encrypt_with(&self, m: &BigUint, r: &BigUint) -> Result<BigUint, CryptoError> {
        if m >= &self.n {
            return Err(CryptoError::PlaintextOutOfRange);
        }
        if r.is_zero() || r >= &self.n || !r.gcd(&self.n).is_one() {
            return Err(CryptoError::RandomnessNotUnit);
        }
        let gm = (BigUint::one() + m * &self.n) % &self.n_squared;
        Ok(gm * r.modpow(&self.n, &self.n_squared) % &self.n_squared)
    }

    fn check_operand(&self, c: &BigUint) -> Result<(), CryptoError> {
        if c >= &self.n_squared {
            Err(CryptoError::ModulusMismatch)
        } else {
            Ok(())
        }
    }

    /// Homomorphic addition: decrypts to `(m1 + m2) mod n`.
    pub fn add(&self, c1: &BigUint, c2: &BigUint) -> Result<BigUint, CryptoError> {
        self.check_operand(c1)?;
        self.check_operand(c2)?;
        Ok(c1 * c2 % &self.n_squared)
    }

    /// Homomorphic scaling: decrypts to `(m·k) mod n`.
    pub fn scale(&self, c: &BigUint, k: &BigUint) -> Result<BigUint, CryptoError> {
        self.check_operand(c)?;
        Ok(c.modpow(k, &self.n_squared))
    }

    /// Multiplies in a fresh encryption of zero.
    pub fn rerandomize<R: RngCore + CryptoRng + ?Sized>(
        &self,
        c: &BigUint,
        rng: &mut R,
    ) -> Result<BigUint, CryptoError> {
        self.check_operand(c)?;
        let r = self.random_unit(rng);
        Ok(c * r.modpow(&self.n, &self.n_squared) % &self.n_squared)
    }

    /// Inverse of a ciphertext in `Z*_(n^2)` (homomorphic negation).
    pub fn invert(&self, c: &BigUint) -> Result<BigUint, CryptoError> {
        self.check_operand(c)?;
        mod_inverse(c, &self.n_squared).ok_or(CryptoError::InvalidCiphertext)
    }

    /// `g^{-1} mod n^2 = 1 - n`.
    pub fn generator_inverse(&self) -> BigUint {
        &self.n_squared - &self.n + 1u32
    }
}

#[derive(Clone)]
pub struct PaillierSecretKey {
    public: PaillierPublicKey,
    p: BigUint,
    q: BigUint,
    lambda: BigUint,
    mu: BigUint,
    p_squared: BigUint,
    q_squared: BigUint,
    hp: BigUint,
    hq: BigUint,
    q_inv_p: BigUint,
}

impl std::fmt::Debug for PaillierSecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaillierSecretKey")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

fn l_function(u: &BigUint, d: &BigUint) -> BigUint {
    (u - 1u32) / d
}

impl PaillierSecretKey {
    /// Builds a key pair from two distinct primes.
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self, CryptoError> {
        if p == q {
            return Err(CryptoError::InvalidParams("paillier primes must differ"));
        }
        let n = &p * &q;
        let phi = (&p - 1u32) * (&q - 1u32);
        if !n.gcd(&phi).is_one() {
            return Err(CryptoError::InvalidParams("gcd(n, (p-1)(q-1)) must be 1"));
        }
        let public = PaillierPublicKey::from_modulus(n)?;
        let lambda = arith::lcm(&(&p - 1u32), &(&q - 1u32));
        let g = public.generator();
        let u = g.modpow(&lambda, public.n_squared());
        let mu = mod_inverse(&l_function(&u, public.n()), public.n())
            .ok_or(CryptoError::InvalidParams("L(g^lambda) not invertible"))?;

        let p_squared = &p * &p;
        let q_squared = &q * &q;
        let hp = mod_inverse(
            &l_function(&g.modpow(&(&p - 1u32), &p_squared), &p),
            &p,
        )
        .ok_or(CryptoError::InvalidParams("hp not invertible"))?;
        let hq = mod_inverse(
            &l_function(&g.modpow(&(&q - 1u32), &q_squared), &q),
            &q,
        )
        .ok_or(CryptoError::InvalidParams("hq not invertible"))?;
        let q_inv_p = mod_inverse(&q, &p).ok_or(CryptoError::InvalidParams("q not invertible mod p"))?;
        Ok(PaillierSecretKey {
            public,
            p,
            q,
            lambda,
            mu,
            p_squared,
            q_squared,
            hp,
            hq,
            q_inv_p,
        })
    }

    pub fn public_key(&self) -> &PaillierPublicKey {
        &self.public
    }

    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    pub fn primes(&self) -> (&BigUint, &BigUint) {
        (&self.p, &self.q)
    }

    fn check_ciphertext(&self, c: &BigUint) -> Result<(), CryptoError> {
        let n = self.public.n();
        if c.is_zero() || c >= self.public.n_squared() || !c.gcd(n).is_one() {
            return Err(CryptoError::InvalidCiphertext);
        }
        Ok(())
    }

    /// CRT decryption.
    pub fn decrypt(&self, c: &BigUint) -> Result<BigUint, CryptoError> {
        self.check_ciphertext(c)?;
        let mp = l_function(&c.modpow(&(&self.p - 1u32), &self.p_squared), &self.p) * &self.hp % &self.p;
        let mq = l_function(&c.modpow(&(&self.q - 1u32), &self.q_squared), &self.q) * &self.hq % &self.q;
        let diff = arith::mod_sub(&mp, &mq, &self.p);
        Ok(mq + (diff * &self.q_inv_p % &self.p) * &self.q)
    }

    /// `L(c^lambda mod n^2)·mu mod n`, the textbook route.
    pub fn decrypt_textbook(&self, c: &BigUint) -> Result<BigUint, CryptoError> {
        self.check_ciphertext(c)?;
        let n = self.public.n();
        let u = c.modpow(&self.lambda, self.public.n_squared());
        Ok(l_function(&u, n) * &self.mu % n)
    }

    /// Encryption with CRT-accelerated `r^n`; identical output to the public-key route.
    pub fn encrypt_with(&self, m: &BigUint, r: &BigUint) -> Result<BigUint, CryptoError> {
        let pk = &self.public;
        if m >= pk.n() {
            return Err(CryptoError::PlaintextOutOfRange);
        }
        if r.is_zero() || r >= pk.n() || !r.gcd(pk.n()).is_one() {
            return Err(CryptoError::RandomnessNotUnit);
        }
        let n = pk.n();
        // r^n mod p^2 and mod q^2, recombined.
        let a = r.modpow(n, &self.p_squared);
        let b = r.modpow(n, &self.q_squared);
        let q2_inv = mod_inverse(&self.q_squared, &self.p_squared).expect("coprime squares");
        let diff = arith::mod_sub(&a, &b, &self.p_squared);
        let rn = b + (diff * q2_inv % &self.p_squared) * &self.q_squared;
        let gm = (BigUint::one() + m * n) % pk.n_squared();
        Ok(gm * rn % pk.n_squared())
    }
}

/// Generates a key pair whose modulus has exactly `bits` bits.
pub fn paillier_keygen<R: RngCore + CryptoRng + ?Sized>(
    bits: u64,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierSecretKey), CryptoError> {
    if !SUPPORTED_KEY_BITS.contains(&bits) {
        return Err(CryptoError::UnsupportedKeySize(bits));
    }
    loop {
        let p = arith::random_prime(rng, bits / 2);
        let q = arith::random_prime(rng, bits / 2);
        match PaillierSecretKey::from_primes(p, q) {
            Ok(sk) if sk.public_key().bit_length() == bits => {
                return Ok((sk.public_key().clone(), sk));
            }
            _ => continue,
        }
    }
}

/// The hand-checkable `n = 15` key (p = 3, q = 5).
#[cfg(any(test, feature = "toy-params"))]
pub fn toy_keypair() -> (PaillierPublicKey, PaillierSecretKey) {
    let sk = PaillierSecretKey::from_primes(BigUint::from(3u32), BigUint::from(5u32))
        .expect("toy primes are valid");
    (sk.public_key().clone(), sk)
}
