//! Σ-protocols over Paillier ciphertexts (`g = n + 1`).

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{CryptoRng, Rng, RngCore};

use crate::crypto::PaillierPublicKey;
use crate::encoding::{DecodeError, Reader};

use super::transcript::{Challenge, Transcript};
use super::{expect_tag, put_len, put_uints, read_len, ZkError};
use super::{TAG_BINARY, TAG_NTH_ROOT, TAG_OR_NTH_ROOT, TAG_PLAINTEXT_KNOWLEDGE};

/// `g^z = 1 + z·n (mod n^2)`.
pub(crate) fn g_pow(pk: &PaillierPublicKey, z: &BigUint) -> BigUint {
    (BigUint::from(1u32) + (z % pk.n()) * pk.n()) % pk.n_squared()
}

pub(crate) fn nth_power(pk: &PaillierPublicKey, u: &BigUint) -> BigUint {
    u.modpow(pk.n(), pk.n_squared())
}

fn valid_element(pk: &PaillierPublicKey, x: &BigUint) -> bool {
    !x.is_zero() && x < pk.n_squared()
}

fn valid_response(pk: &PaillierPublicKey, z: &BigUint) -> bool {
    !z.is_zero() && z < pk.n()
}

fn start(domain: &str, pk: &PaillierPublicKey, ctx: &[u8]) -> Transcript {
    let mut t = Transcript::new(domain);
    t.absorb("ctx", ctx);
    t.absorb_uint("n", pk.n());
    t
}

fn put_challenge(buf: &mut Vec<u8>, e: Challenge) {
    buf.extend_from_slice(&e.to_be_bytes());
}

fn read_challenge(r: &mut Reader<'_>) -> Result<Challenge, DecodeError> {
    let mut b = [0u8; 16];
    b.copy_from_slice(r.take(16)?);
    Ok(u128::from_be_bytes(b))
}

/// Knowledge of `(x, r)` with `c = g^x r^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaintextKnowledgeProof {
    pub t: BigUint,
    pub z: BigUint,
    pub w: BigUint,
}

const PK_DOMAIN: &str = "octopus/zk/plaintext-knowledge";

pub fn prove_plaintext_knowledge<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    c: &BigUint,
    x: &BigUint,
    r: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> PlaintextKnowledgeProof {
    let n = pk.n();
    let a = crate::crypto::arith::random_below(rng, n);
    let s = pk.random_unit(rng);
    let t = g_pow(pk, &a) * nth_power(pk, &s) % pk.n_squared();
    let mut tr = start(PK_DOMAIN, pk, ctx);
    tr.absorb_uint("c", c);
    tr.absorb_uint("T", &t);
    let e = BigUint::from(tr.challenge());
    let z = (a + &e * x) % n;
    let w = s * r.modpow(&e, n) % n;
    PlaintextKnowledgeProof { t, z, w }
}

/// Checks `g^z·w^n = T·c^e (mod n^2)`.
pub fn verify_plaintext_knowledge(
    pk: &PaillierPublicKey,
    c: &BigUint,
    proof: &PlaintextKnowledgeProof,
    ctx: &[u8],
) -> bool {
    if !valid_element(pk, c) || !valid_element(pk, &proof.t) || proof.z >= *pk.n() || !valid_response(pk, &proof.w) {
        return false;
    }
    let mut tr = start(PK_DOMAIN, pk, ctx);
    tr.absorb_uint("c", c);
    tr.absorb_uint("T", &proof.t);
    let e = BigUint::from(tr.challenge());
    let n2 = pk.n_squared();
    let lhs = g_pow(pk, &proof.z) * nth_power(pk, &proof.w) % n2;
    let rhs = &proof.t * c.modpow(&e, n2) % n2;
    lhs == rhs
}

impl PlaintextKnowledgeProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_PLAINTEXT_KNOWLEDGE);
        put_uints(buf, &[&self.t, &self.z, &self.w]);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_PLAINTEXT_KNOWLEDGE)?;
        Ok(PlaintextKnowledgeProof {
            t: r.uint()?,
            z: r.uint()?,
            w: r.uint()?,
        })
    }
}

/// Knowledge of `v` with `c = v^n (mod n^2)`, i.e. `c` encrypts 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NthRootProof {
    pub t: BigUint,
    pub z: BigUint,
}

const NTH_DOMAIN: &str = "octopus/zk/nth-root";

pub fn prove_nth_root<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    c: &BigUint,
    v: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> NthRootProof {
    let u = pk.random_unit(rng);
    let t = nth_power(pk, &u);
    let mut tr = start(NTH_DOMAIN, pk, ctx);
    tr.absorb_uint("c", c);
    tr.absorb_uint("T", &t);
    let e = BigUint::from(tr.challenge());
    let z = u * v.modpow(&e, pk.n()) % pk.n();
    NthRootProof { t, z }
}

/// Checks `z^n = T·c^e (mod n^2)`.
pub fn verify_nth_root(pk: &PaillierPublicKey, c: &BigUint, proof: &NthRootProof, ctx: &[u8]) -> bool {
    if !valid_element(pk, c) || !valid_element(pk, &proof.t) || !valid_response(pk, &proof.z) {
        return false;
    }
    let mut tr = start(NTH_DOMAIN, pk, ctx);
    tr.absorb_uint("c", c);
    tr.absorb_uint("T", &proof.t);
    let e = BigUint::from(tr.challenge());
    let n2 = pk.n_squared();
    nth_power(pk, &proof.z) == &proof.t * c.modpow(&e, n2) % n2
}

impl NthRootProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_NTH_ROOT);
        put_uints(buf, &[&self.t, &self.z]);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_NTH_ROOT)?;
        Ok(NthRootProof {
            t: r.uint()?,
            z: r.uint()?,
        })
    }
}

/// One branch of an OR proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrBranch {
    pub t: BigUint,
    pub e: Challenge,
    pub z: BigUint,
}

/// At least one of `X_1 … X_k` is an n-th residue with a known root. The
/// branch challenges XOR to the transcript challenge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrNthRootProof {
    pub branches: Vec<OrBranch>,
}

const OR_DOMAIN: &str = "octopus/zk/or-nth-root";

pub fn prove_or_nth_root<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    statements: &[BigUint],
    index: usize,
    root: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> Result<OrNthRootProof, ZkError> {
    prove_or_in(OR_DOMAIN, pk, statements, index, root, ctx, rng)
}

pub fn verify_or_nth_root(
    pk: &PaillierPublicKey,
    statements: &[BigUint],
    proof: &OrNthRootProof,
    ctx: &[u8],
) -> bool {
    verify_or_in(OR_DOMAIN, pk, statements, proof, ctx)
}

fn or_transcript(domain: &str, pk: &PaillierPublicKey, statements: &[BigUint], ts: &[&BigUint], ctx: &[u8]) -> Challenge {
    let mut tr = start(domain, pk, ctx);
    tr.absorb_u64("k", statements.len() as u64);
    for x in statements {
        tr.absorb_uint("X", x);
    }
    for t in ts {
        tr.absorb_uint("T", t);
    }
    tr.challenge()
}

pub(crate) fn prove_or_in<R: RngCore + CryptoRng + ?Sized>(
    domain: &str,
    pk: &PaillierPublicKey,
    statements: &[BigUint],
    index: usize,
    root: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> Result<OrNthRootProof, ZkError> {
    if index >= statements.len() {
        return Err(ZkError::WitnessIndex);
    }
    let n2 = pk.n_squared();
    let mut branches = Vec::with_capacity(statements.len());
    let u = pk.random_unit(rng);
    let mut sim_xor: Challenge = 0;
    for (i, x) in statements.iter().enumerate() {
        if i == index {
            branches.push(OrBranch {
                t: nth_power(pk, &u),
                e: 0,
                z: BigUint::zero(),
            });
            continue;
        }
        let e: Challenge = rng.gen();
        let z = pk.random_unit(rng);
        let x_inv_e = match x.modinv(n2) {
            Some(inv) => inv.modpow(&BigUint::from(e), n2),
            None => BigUint::from(1u32),
        };
        sim_xor ^= e;
        branches.push(OrBranch {
            t: nth_power(pk, &z) * x_inv_e % n2,
            e,
            z,
        });
    }
    let ts: Vec<&BigUint> = branches.iter().map(|b| &b.t).collect();
    let e_total = or_transcript(domain, pk, statements, &ts, ctx);
    let e_real = e_total ^ sim_xor;
    let real = &mut branches[index];
    real.e = e_real;
    real.z = u * root.modpow(&BigUint::from(e_real), pk.n()) % pk.n();
    Ok(OrNthRootProof { branches })
}

pub(crate) fn verify_or_in(
    domain: &str,
    pk: &PaillierPublicKey,
    statements: &[BigUint],
    proof: &OrNthRootProof,
    ctx: &[u8],
) -> bool {
    if statements.is_empty() || proof.branches.len() != statements.len() {
        return false;
    }
    if statements.iter().any(|x| !valid_element(pk, x))
        || proof
            .branches
            .iter()
            .any(|b| !valid_element(pk, &b.t) || !valid_response(pk, &b.z))
    {
        return false;
    }
    let ts: Vec<&BigUint> = proof.branches.iter().map(|b| &b.t).collect();
    let e_total = or_transcript(domain, pk, statements, &ts, ctx);
    if proof.branches.iter().fold(0, |acc, b| acc ^ b.e) != e_total {
        return false;
    }
    let n2 = pk.n_squared();
    statements.iter().zip(&proof.branches).all(|(x, b)| {
        nth_power(pk, &b.z) == &b.t * x.modpow(&BigUint::from(b.e), n2) % n2
    })
}

impl OrNthRootProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_OR_NTH_ROOT);
        put_len(buf, self.branches.len());
        for b in &self.branches {
            put_uints(buf, &[&b.t]);
            put_challenge(buf, b.e);
            put_uints(buf, &[&b.z]);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_OR_NTH_ROOT)?;
        let k = read_len(r, 1 << 24)?;
        let branches = (0..k)
            .map(|_| {
                Ok(OrBranch {
                    t: r.uint()?,
                    e: read_challenge(r)?,
                    z: r.uint()?,
                })
            })
            .collect::<Result<_, DecodeError>>()?;
        Ok(OrNthRootProof { branches })
    }
}

/// `c` encrypts 0 or 1: an OR over `c` and `c·g^{-1}` being n-th residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryPlaintextProof(pub OrNthRootProof);

const BIN_DOMAIN: &str = "octopus/zk/binary";

fn binary_statements(pk: &PaillierPublicKey, c: &BigUint) -> [BigUint; 2] {
    [c.clone(), c * pk.generator_inverse() % pk.n_squared()]
}

/// Proves `c = g^bit r^n` with `bit ∈ {0, 1}`. Any other `bit` yields a proof that fails.
pub fn prove_binary<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    c: &BigUint,
    bit: &BigUint,
    r: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> BinaryPlaintextProof {
    let index = usize::from(bit == &BigUint::from(1u32));
    let proof = prove_or_in(BIN_DOMAIN, pk, &binary_statements(pk, c), index, r, ctx, rng)
        .expect("index is 0 or 1");
    BinaryPlaintextProof(proof)
}

pub fn verify_binary(pk: &PaillierPublicKey, c: &BigUint, proof: &BinaryPlaintextProof, ctx: &[u8]) -> bool {
    proof.0.branches.len() == 2 && verify_or_in(BIN_DOMAIN, pk, &binary_statements(pk, c), &proof.0, ctx)
}

impl BinaryPlaintextProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_BINARY);
        self.0.encode(buf);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_BINARY)?;
        Ok(BinaryPlaintextProof(OrNthRootProof::decode(r)?))
    }
}
