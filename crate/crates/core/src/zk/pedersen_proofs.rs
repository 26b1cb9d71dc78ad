//! Σ-protocols over Pedersen commitments: opening, bit, product and range
//! proofs, plus comparison against a public threshold built from range proofs.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{CryptoRng, Rng, RngCore};

use crate::crypto::{Commitment, PedersenParams};
use crate::encoding::{DecodeError, Reader};

use super::transcript::{Challenge, Transcript};
use super::{expect_tag, put_len, put_uints, read_len, ZkError};
use super::{TAG_COMPARISON, TAG_PED_BIT, TAG_PED_MULTIPLICATION, TAG_PED_OPENING, TAG_PED_RANGE};

fn start(domain: &str, pp: &PedersenParams, ctx: &[u8]) -> Transcript {
    let mut t = Transcript::new(domain);
    t.absorb("ctx", ctx);
    for (label, x) in [("p", pp.p()), ("q", pp.q()), ("g", pp.g()), ("h", pp.h())] {
        t.absorb_uint(label, x);
    }
    t
}

fn scalar(pp: &PedersenParams, e: Challenge) -> BigUint {
    BigUint::from(e) % pp.q()
}

fn in_group(pp: &PedersenParams, x: &BigUint) -> bool {
    !x.is_zero() && x < pp.p()
}

fn below_q(pp: &PedersenParams, xs: &[&BigUint]) -> bool {
    xs.iter().all(|x| *x < pp.q())
}

fn mulp(pp: &PedersenParams, a: &BigUint, b: &BigUint) -> BigUint {
    a * b % pp.p()
}

fn powp(pp: &PedersenParams, a: &BigUint, e: &BigUint) -> BigUint {
    a.modpow(e, pp.p())
}

fn put_challenge(buf: &mut Vec<u8>, e: Challenge) {
    buf.extend_from_slice(&e.to_be_bytes());
}

fn read_challenge(r: &mut Reader<'_>) -> Result<Challenge, DecodeError> {
    let mut b = [0u8; 16];
    b.copy_from_slice(r.take(16)?);
    Ok(u128::from_be_bytes(b))
}

/// Knowledge of an opening `(x, r)` of `C = g^x h^r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpeningProof {
    pub t: BigUint,
    pub z_x: BigUint,
    pub z_r: BigUint,
}

const OPEN_DOMAIN: &str = "octopus/zk/ped-opening";

pub fn prove_ped_opening<R: RngCore + CryptoRng + ?Sized>(
    pp: &PedersenParams,
    c: &Commitment,
    x: &BigUint,
    r: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> OpeningProof {
    let (a, b) = (pp.random_scalar(rng), pp.random_scalar(rng));
    let t = mulp(pp, &pp.g_pow(&a), &pp.h_pow(&b));
    let mut tr = start(OPEN_DOMAIN, pp, ctx);
    tr.absorb_uint("C", c.value());
    tr.absorb_uint("T", &t);
    let e = scalar(pp, tr.challenge());
    OpeningProof {
        t,
        z_x: (a + &e * x) % pp.q(),
        z_r: (b + &e * r) % pp.q(),
    }
}

pub fn verify_ped_opening(pp: &PedersenParams, c: &Commitment, proof: &OpeningProof, ctx: &[u8]) -> bool {
    if !in_group(pp, &proof.t) || !below_q(pp, &[&proof.z_x, &proof.z_r]) {
        return false;
    }
    let mut tr = start(OPEN_DOMAIN, pp, ctx);
    tr.absorb_uint("C", c.value());
    tr.absorb_uint("T", &proof.t);
    let e = scalar(pp, tr.challenge());
    mulp(pp, &pp.g_pow(&proof.z_x), &pp.h_pow(&proof.z_r)) == mulp(pp, &proof.t, &powp(pp, c.value(), &e))
}

impl OpeningProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_PED_OPENING);
        put_uints(buf, &[&self.t, &self.z_x, &self.z_r]);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_PED_OPENING)?;
        Ok(OpeningProof {
            t: r.uint()?,
            z_x: r.uint()?,
            z_r: r.uint()?,
        })
    }
}

/// `C` commits to 0 or 1: an OR of discrete logs base `h` of `C` and `C·g^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitProof {
    pub t: [BigUint; 2],
    pub e: [Challenge; 2],
    pub z: [BigUint; 2],
}

const BIT_DOMAIN: &str = "octopus/zk/ped-bit";

fn bit_statements(pp: &PedersenParams, c: &BigUint) -> [BigUint; 2] {
    let g_inv = pp.g().modpow(&(pp.q() - 1u32), pp.p());
    [c.clone(), mulp(pp, c, &g_inv)]
}

fn bit_challenge(pp: &PedersenParams, c: &BigUint, t: &[BigUint; 2], ctx: &[u8]) -> Challenge {
    let mut tr = start(BIT_DOMAIN, pp, ctx);
    tr.absorb_uint("C", c);
    tr.absorb_uint("T0", &t[0]);
    tr.absorb_uint("T1", &t[1]);
    tr.challenge()
}

/// Proves `C = g^bit h^r`. A `bit` outside {0, 1} yields a proof that fails.
pub fn prove_ped_bit<R: RngCore + CryptoRng + ?Sized>(
    pp: &PedersenParams,
    c: &BigUint,
    bit: &BigUint,
    r: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> BitProof {
    let real = usize::from(bit.is_one());
    let sim = 1 - real;
    let ys = bit_statements(pp, c);
    let u = pp.random_scalar(rng);
    let e_sim: Challenge = rng.gen();
    let z_sim = pp.random_scalar(rng);
    let y_inv = ys[sim].modpow(&(pp.q() - 1u32), pp.p());
    let mut t = [BigUint::zero(), BigUint::zero()];
    t[real] = pp.h_pow(&u);
    t[sim] = mulp(pp, &pp.h_pow(&z_sim), &powp(pp, &y_inv, &scalar(pp, e_sim)));
    let e_real = bit_challenge(pp, c, &t, ctx) ^ e_sim;
    let mut e = [0; 2];
    e[real] = e_real;
    e[sim] = e_sim;
    let mut z = [BigUint::zero(), BigUint::zero()];
    z[real] = (u + scalar(pp, e_real) * r) % pp.q();
    z[sim] = z_sim;
    BitProof { t, e, z }
}

pub fn verify_ped_bit(pp: &PedersenParams, c: &BigUint, proof: &BitProof, ctx: &[u8]) -> bool {
    if !in_group(pp, c) || proof.t.iter().any(|t| !in_group(pp, t)) || !below_q(pp, &[&proof.z[0], &proof.z[1]]) {
        return false;
    }
    if proof.e[0] ^ proof.e[1] != bit_challenge(pp, c, &proof.t, ctx) {
        return false;
    }
    let ys = bit_statements(pp, c);
    (0..2).all(|i| pp.h_pow(&proof.z[i]) == mulp(pp, &proof.t[i], &powp(pp, &ys[i], &scalar(pp, proof.e[i]))))
}

impl BitProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_PED_BIT);
        for i in 0..2 {
            put_uints(buf, &[&self.t[i]]);
            put_challenge(buf, self.e[i]);
            put_uints(buf, &[&self.z[i]]);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_PED_BIT)?;
        let (t0, e0, z0) = (r.uint()?, read_challenge(r)?, r.uint()?);
        let (t1, e1, z1) = (r.uint()?, read_challenge(r)?, r.uint()?);
        Ok(BitProof {
            t: [t0, t1],
            e: [e0, e1],
            z: [z0, z1],
        })
    }
}

/// `C_z` commits to the product of the values in `C_x` and `C_y`.
///
/// The prover shows knowledge of openings of `C_x` and `C_y` and that
/// `C_z = C_y^x·h^t` for the same `x`, where `t = r_z − x·r_y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicationProof {
    pub t1: BigUint,
    pub t2: BigUint,
    pub t3: BigUint,
    pub z_x: BigUint,
    pub z_rx: BigUint,
    pub z_y: BigUint,
    pub z_ry: BigUint,
    pub z_t: BigUint,
}

const MUL_DOMAIN: &str = "octopus/zk/ped-multiplication";

fn mul_challenge(
    pp: &PedersenParams,
    cs: [&Commitment; 3],
    ts: [&BigUint; 3],
    ctx: &[u8],
) -> BigUint {
    let mut tr = start(MUL_DOMAIN, pp, ctx);
    for (label, c) in ["Cx", "Cy", "Cz"].iter().zip(cs) {
        tr.absorb_uint(label, c.value());
    }
    for (label, t) in ["T1", "T2", "T3"].iter().zip(ts) {
        tr.absorb_uint(label, t);
    }
    scalar(pp, tr.challenge())
}

/// Openings are `(x, r_x)`, `(y, r_y)` and the randomness `r_z` of `C_z`.
#[allow(clippy::too_many_arguments)]
pub fn prove_ped_multiplication<R: RngCore + CryptoRng + ?Sized>(
    pp: &PedersenParams,
    c_x: &Commitment,
    c_y: &Commitment,
    c_z: &Commitment,
    (x, r_x): (&BigUint, &BigUint),
    (y, r_y): (&BigUint, &BigUint),
    r_z: &BigUint,
    ctx: &[u8],
    rng: &mut R,
) -> MultiplicationProof {
    let q = pp.q();
    let t_wit = pp.sub_scalar(r_z, &pp.mul_scalar(x, r_y));
    let [a_x, b_x, a_y, b_y, b_t] = [(); 5].map(|_| pp.random_scalar(rng));
    let t1 = mulp(pp, &pp.g_pow(&a_x), &pp.h_pow(&b_x));
    let t2 = mulp(pp, &pp.g_pow(&a_y), &pp.h_pow(&b_y));
    let t3 = mulp(pp, &powp(pp, c_y.value(), &a_x), &pp.h_pow(&b_t));
    let e = mul_challenge(pp, [c_x, c_y, c_z], [&t1, &t2, &t3], ctx);
    MultiplicationProof {
        z_x: (a_x + &e * x) % q,
        z_rx: (b_x + &e * r_x) % q,
        z_y: (a_y + &e * y) % q,
        z_ry: (b_y + &e * r_y) % q,
        z_t: (b_t + &e * t_wit) % q,
        t1,
        t2,
        t3,
    }
}

pub fn verify_ped_multiplication(
    pp: &PedersenParams,
    c_x: &Commitment,
    c_y: &Commitment,
    c_z: &Commitment,
    proof: &MultiplicationProof,
    ctx: &[u8],
) -> bool {
    let p = proof;
    if [&p.t1, &p.t2, &p.t3].iter().any(|t| !in_group(pp, t))
        || !below_q(pp, &[&p.z_x, &p.z_rx, &p.z_y, &p.z_ry, &p.z_t])
    {
        return false;
    }
    let e = mul_challenge(pp, [c_x, c_y, c_z], [&p.t1, &p.t2, &p.t3], ctx);
    let check1 = mulp(pp, &pp.g_pow(&p.z_x), &pp.h_pow(&p.z_rx)) == mulp(pp, &p.t1, &powp(pp, c_x.value(), &e));
    let check2 = mulp(pp, &pp.g_pow(&p.z_y), &pp.h_pow(&p.z_ry)) == mulp(pp, &p.t2, &powp(pp, c_y.value(), &e));
    let check3 = mulp(pp, &powp(pp, c_y.value(), &p.z_x), &pp.h_pow(&p.z_t))
        == mulp(pp, &p.t3, &powp(pp, c_z.value(), &e));
    check1 && check2 && check3
}

impl MultiplicationProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_PED_MULTIPLICATION);
        put_uints(
            buf,
            &[&self.t1, &self.t2, &self.t3, &self.z_x, &self.z_rx, &self.z_y, &self.z_ry, &self.z_t],
        );
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_PED_MULTIPLICATION)?;
        Ok(MultiplicationProof {
            t1: r.uint()?,
            t2: r.uint()?,
            t3: r.uint()?,
            z_x: r.uint()?,
            z_rx: r.uint()?,
            z_y: r.uint()?,
            z_ry: r.uint()?,
            z_t: r.uint()?,
        })
    }
}

/// `C` commits to a value in `[0, 2^L)`: `L` bit commitments `c_j` whose
/// weighted product `Π c_j^{2^j}` equals `C`, each with a bit proof.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeProof {
    pub bits: Vec<(BigUint, BitProof)>,
}

fn range_fits(pp: &PedersenParams, bits: usize) -> bool {
    bits >= 1 && (BigUint::one() << (bits + 1)) < *pp.q()
}

fn bit_ctx(ctx: &[u8], j: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(ctx.len() + 16);
    out.extend_from_slice(&(ctx.len() as u32).to_be_bytes());
    out.extend_from_slice(ctx);
    out.extend_from_slice(b"range-bit");
    out.extend_from_slice(&(j as u64).to_be_bytes());
    out
}

/// Randomness of the bit commitments sums (weighted) to `r`, so the product
/// relation holds exactly. Values of `x` at or above `2^L` produce a proof
/// that fails.
pub fn prove_ped_range<R: RngCore + CryptoRng + ?Sized>(
    pp: &PedersenParams,
    c: &Commitment,
    x: &BigUint,
    r: &BigUint,
    bits: usize,
    ctx: &[u8],
    rng: &mut R,
) -> Result<RangeProof, ZkError> {
    if !range_fits(pp, bits) {
        return Err(ZkError::RangeTooWide(bits));
    }
    let mut rs: Vec<BigUint> = (0..bits).map(|_| pp.random_scalar(rng)).collect();
    let tail = rs
        .iter()
        .enumerate()
        .skip(1)
        .fold(BigUint::zero(), |acc, (j, rj)| (acc + (rj << j)) % pp.q());
    rs[0] = pp.sub_scalar(r, &tail);
    let mut ctx_full = ctx.to_vec();
    ctx_full.extend_from_slice(&c.value().to_bytes_be());
    let out = rs
        .iter()
        .enumerate()
        .map(|(j, rj)| {
            let b = BigUint::from(u8::from(x.bit(j as u64)));
            let cj = pp.commit(&b, rj).value().clone();
            let proof = prove_ped_bit(pp, &cj, &b, rj, &bit_ctx(&ctx_full, j), rng);
            (cj, proof)
        })
        .collect();
    Ok(RangeProof { bits: out })
}

pub fn verify_ped_range(pp: &PedersenParams, c: &Commitment, bits: usize, proof: &RangeProof, ctx: &[u8]) -> bool {
    if !range_fits(pp, bits) || proof.bits.len() != bits {
        return false;
    }
    // Horner: Π c_j^{2^j}.
    let mut acc = BigUint::one();
    for (cj, _) in proof.bits.iter().rev() {
        if !in_group(pp, cj) {
            return false;
        }
        acc = mulp(pp, &mulp(pp, &acc, &acc), cj);
    }
    if &acc != c.value() {
        return false;
    }
    let mut ctx_full = ctx.to_vec();
    ctx_full.extend_from_slice(&c.value().to_bytes_be());
    proof
        .bits
        .iter()
        .enumerate()
        .all(|(j, (cj, p))| verify_ped_bit(pp, cj, p, &bit_ctx(&ctx_full, j)))
}

impl RangeProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_PED_RANGE);
        put_len(buf, self.bits.len());
        for (c, p) in &self.bits {
            put_uints(buf, &[c]);
            p.encode(buf);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_PED_RANGE)?;
        let l = read_len(r, 4096)?;
        let bits = (0..l)
            .map(|_| Ok((r.uint()?, BitProof::decode(r)?)))
            .collect::<Result<_, DecodeError>>()?;
        Ok(RangeProof { bits })
    }
}

/// Which side of a public threshold `t` the committed value lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// `x < t`
    Below,
    /// `x ≥ t`
    AtOrAbove,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonProof {
    pub claim: Comparison,
    pub ranges: Vec<RangeProof>,
}

/// The commitments whose ranges establish `claim`, with their randomness
/// expressed through the original `r`.
fn comparison_targets(pp: &PedersenParams, c: &Commitment, t: u64, claim: Comparison) -> Vec<Commitment> {
    let t = BigUint::from(t);
    match claim {
        Comparison::Below => {
            // g^{t−1}·C^{-1} commits to t − 1 − x under randomness −r.
            let t_minus_1 = pp.sub_scalar(&t, &BigUint::one());
            let shifted = pp.mul(&pp.commit(&t_minus_1, &BigUint::zero()), &pp.inverse(c));
            vec![c.clone(), shifted]
        }
        Comparison::AtOrAbove => {
            let g_neg_t = pp.commit(&pp.sub_scalar(&BigUint::zero(), &t), &BigUint::zero());
            vec![pp.mul(c, &g_neg_t)]
        }
    }
}

/// Proves the claim that matches `x`: `Below` as `x ∈ [0, 2^L)` and
/// `t − 1 − x ∈ [0, 2^L)`, `AtOrAbove` as `x − t ∈ [0, 2^L)`.
#[allow(clippy::too_many_arguments)]
pub fn prove_comparison<R: RngCore + CryptoRng + ?Sized>(
    pp: &PedersenParams,
    c: &Commitment,
    x: &BigUint,
    r: &BigUint,
    t: u64,
    bits: usize,
    claim: Comparison,
    ctx: &[u8],
    rng: &mut R,
) -> Result<ComparisonProof, ZkError> {
    let targets = comparison_targets(pp, c, t, claim);
    let tb = BigUint::from(t);
    let witnesses: Vec<(BigUint, BigUint)> = match claim {
        Comparison::Below => vec![
            (x.clone(), r.clone()),
            (
                pp.sub_scalar(&pp.sub_scalar(&tb, &BigUint::one()), x),
                pp.sub_scalar(&BigUint::zero(), r),
            ),
        ],
        Comparison::AtOrAbove => vec![(pp.sub_scalar(x, &tb), r.clone())],
    };
    let ranges = targets
        .iter()
        .zip(&witnesses)
        .enumerate()
        .map(|(i, (target, (v, rv)))| prove_ped_range(pp, target, v, rv, bits, &bit_ctx(ctx, i), rng))
        .collect::<Result<_, _>>()?;
    Ok(ComparisonProof { claim, ranges })
}

pub fn verify_comparison(
    pp: &PedersenParams,
    c: &Commitment,
    t: u64,
    bits: usize,
    proof: &ComparisonProof,
    ctx: &[u8],
) -> bool {
    let targets = comparison_targets(pp, c, t, proof.claim);
    targets.len() == proof.ranges.len()
        && targets
            .iter()
            .zip(&proof.ranges)
            .enumerate()
            .all(|(i, (target, p))| verify_ped_range(pp, target, bits, p, &bit_ctx(ctx, i)))
}

impl ComparisonProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_COMPARISON);
        buf.push(match self.claim {
            Comparison::Below => 0,
            Comparison::AtOrAbove => 1,
        });
        put_len(buf, self.ranges.len());
        for p in &self.ranges {
            p.encode(buf);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_COMPARISON)?;
        let claim = match r.u8()? {
            0 => Comparison::Below,
            1 => Comparison::AtOrAbove,
            other => return Err(DecodeError::invalid(format!("comparison claim {other}"))),
        };
        let k = read_len(r, 2)?;
        let ranges = (0..k).map(|_| RangeProof::decode(r)).collect::<Result<_, _>>()?;
        Ok(ComparisonProof { claim, ranges })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::rng;

    const CTX: &[u8] = b"sid";

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn opening_complete_and_sound() {
        let pp = PedersenParams::p504();
        let mut r = rng(111);
        let (x, rr) = (pp.random_scalar(&mut r), pp.random_scalar(&mut r));
        let c = pp.commit(&x, &rr);
        let p = prove_ped_opening(&pp, &c, &x, &rr, CTX, &mut r);
        assert!(verify_ped_opening(&pp, &c, &p, CTX));
        let mut bad = p.clone();
        bad.z_r = (&bad.z_r + 1u32) % pp.q();
        assert!(!verify_ped_opening(&pp, &c, &bad, CTX));
        let mut buf = Vec::new();
        p.encode(&mut buf);
        assert_eq!(OpeningProof::decode(&mut Reader::new(&buf)).unwrap(), p);
    }

    #[test]
    fn toy_multiplication() {
        let pp = PedersenParams::toy();
        let mut r = rng(112);
        let (rx, ry, rz) = (big(2), big(5), big(7));
        let cx = pp.commit(&big(3), &rx);
        let cy = pp.commit(&big(3), &ry);
        let cz = pp.commit(&big(9), &rz);
        let p = prove_ped_multiplication(&pp, &cx, &cy, &cz, (&big(3), &rx), (&big(3), &ry), &rz, CTX, &mut r);
        assert!(verify_ped_multiplication(&pp, &cx, &cy, &cz, &p, CTX));
        // x = 0 forces z = 0.
        let c0 = pp.commit(&big(0), &rx);
        let cz0 = pp.commit(&big(0), &rz);
        let p = prove_ped_multiplication(&pp, &c0, &cy, &cz0, (&big(0), &rx), (&big(3), &ry), &rz, CTX, &mut r);
        assert!(verify_ped_multiplication(&pp, &c0, &cy, &cz0, &p, CTX));
    }

    #[test]
    fn wrong_product_is_rejected() {
        let pp = PedersenParams::p504();
        let mut r = rng(113);
        let (rx, ry, rz) = (pp.random_scalar(&mut r), pp.random_scalar(&mut r), pp.random_scalar(&mut r));
        let cx = pp.commit(&big(3), &rx);
        let cy = pp.commit(&big(3), &ry);
        let cz = pp.commit(&big(8), &rz);
        for _ in 0..20 {
            let p = prove_ped_multiplication(&pp, &cx, &cy, &cz, (&big(3), &rx), (&big(3), &ry), &rz, CTX, &mut r);
            assert!(!verify_ped_multiplication(&pp, &cx, &cy, &cz, &p, CTX));
        }
    }

    #[test]
    fn bit_proofs() {
        let pp = PedersenParams::p504();
        let mut r = rng(114);
        for b in [0u64, 1] {
            let rr = pp.random_scalar(&mut r);
            let c = pp.commit(&big(b), &rr);
            let p = prove_ped_bit(&pp, c.value(), &big(b), &rr, CTX, &mut r);
            assert!(verify_ped_bit(&pp, c.value(), &p, CTX));
            let mut buf = Vec::new();
            p.encode(&mut buf);
            assert_eq!(BitProof::decode(&mut Reader::new(&buf)).unwrap(), p);
        }
        let rr = pp.random_scalar(&mut r);
        let c2 = pp.commit(&big(2), &rr);
        let p = prove_ped_bit(&pp, c2.value(), &big(2), &rr, CTX, &mut r);
        assert!(!verify_ped_bit(&pp, c2.value(), &p, CTX));
    }

    #[test]
    fn range_examples() {
        let pp = PedersenParams::p504();
        let mut r = rng(115);
        for (x, l, ok) in [(5u64, 3usize, true), (0, 1, true), (9, 3, false), (7, 3, true), (8, 3, false)] {
            let rr = pp.random_scalar(&mut r);
            let c = pp.commit(&big(x), &rr);
            let p = prove_ped_range(&pp, &c, &big(x), &rr, l, CTX, &mut r).unwrap();
            assert_eq!(verify_ped_range(&pp, &c, l, &p, CTX), ok, "x={x} L={l}");
        }
        assert_eq!(
            prove_ped_range(&PedersenParams::toy(), &pp.identity(), &big(0), &big(0), 3, CTX, &mut r),
            Err(ZkError::RangeTooWide(3))
        );
    }

    #[test]
    fn range_proof_is_bound_to_its_commitment() {
        let pp = PedersenParams::p504();
        let mut r = rng(116);
        let rr = pp.random_scalar(&mut r);
        let c = pp.commit(&big(5), &rr);
        let p = prove_ped_range(&pp, &c, &big(5), &rr, 3, CTX, &mut r).unwrap();
        let other = pp.commit(&big(5), &pp.random_scalar(&mut r));
        assert!(!verify_ped_range(&pp, &other, 3, &p, CTX));
        let mut buf = Vec::new();
        p.encode(&mut buf);
        assert_eq!(RangeProof::decode(&mut Reader::new(&buf)).unwrap(), p);
    }

    #[test]
    fn comparison_against_public_threshold() {
        let pp = PedersenParams::p504();
        let mut r = rng(117);
        let rr = pp.random_scalar(&mut r);
        let c5 = pp.commit(&big(5), &rr);
        let p = prove_comparison(&pp, &c5, &big(5), &rr, 7, 3, Comparison::Below, CTX, &mut r).unwrap();
        assert!(verify_comparison(&pp, &c5, 7, 3, &p, CTX));
        let lie = prove_comparison(&pp, &c5, &big(5), &rr, 7, 3, Comparison::AtOrAbove, CTX, &mut r).unwrap();
        assert!(!verify_comparison(&pp, &c5, 7, 3, &lie, CTX));

        let c9 = pp.commit(&big(9), &rr);
        let lie = prove_comparison(&pp, &c9, &big(9), &rr, 7, 3, Comparison::Below, CTX, &mut r).unwrap();
        assert!(!verify_comparison(&pp, &c9, 7, 3, &lie, CTX));
        let honest = prove_comparison(&pp, &c9, &big(9), &rr, 7, 3, Comparison::AtOrAbove, CTX, &mut r).unwrap();
        assert!(verify_comparison(&pp, &c9, 7, 3, &honest, CTX));

        let mut buf = Vec::new();
        honest.encode(&mut buf);
        assert_eq!(ComparisonProof::decode(&mut Reader::new(&buf)).unwrap(), honest);
    }
}
