//! Noise calibration and generation for hiding response types.
//!
//! The exchanger mixes `ñ_i` fake responses of every reachable type into the
//! lenders' responses, with each `ñ_i` drawn from `⌈max(0, Lap(μ, λ))⌉`.
//! With `t = e^((1−μ)/λ)` the guarantee is `ε = 2/λ` and
//! `δ = t·(1 − t/4)`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{CryptoRng, Rng, RngCore};
use thiserror::Error;

use crate::crypto::arith::ceil_root;
use crate::crypto::laplace::{ceiled_mean, sample_truncated_laplace};
use crate::crypto::layered::{self, LayeredCiphertext};
use crate::crypto::{CryptoError, PaillierPublicKey, PedersenParams};
use crate::encoding::{self, DecodeError, Reader};
use crate::pir::{reachable_types, ResponseType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("invalid privacy parameters: {0}")]
    InvalidParams(String),
    #[error("noise cache was generated for a different key")]
    FingerprintMismatch,
    #[error("noise cache does not match the session: {0}")]
    CacheMismatch(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Maximum number of queries about one borrower.
    pub k: u64,
    /// Replace iteration.
    pub s: usize,
    pub d: usize,
    /// Group capacity.
    pub m: u64,
}

impl DpParams {
    pub fn validate(&self) -> Result<(), DpError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DpError::InvalidParams(format!("epsilon = {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(DpError::InvalidParams(format!("delta = {} outside (0, 1)", self.delta)));
        }
        if self.k == 0 {
            return Err(DpError::InvalidParams("k must be at least 1".into()));
        }
        if self.s == 0 || self.s > self.d {
            return Err(DpError::InvalidParams(format!("s = {} outside 1..={}", self.s, self.d)));
        }
        if self.m < 2 {
            return Err(DpError::InvalidParams("group capacity below 2".into()));
        }
        Ok(())
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        encoding::put_f64(buf, self.epsilon);
        encoding::put_f64(buf, self.delta);
        encoding::put_u64(buf, self.k);
        encoding::put_u8(buf, self.s as u8);
        encoding::put_u8(buf, self.d as u8);
        encoding::put_u64(buf, self.m);
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(DpParams {
            epsilon: r.f64()?,
            delta: r.f64()?,
            k: r.u64()?,
            s: r.u8()? as usize,
            d: r.u8()? as usize,
            m: r.u64()?,
        })
    }
}

/// `λ = 2/ε`, and `μ = 1 − λ·ln t` where `t = 2(1 − √(1 − δ))` solves
/// `δ = t(1 − t/4)`; `t` is capped at 1 once `δ ≥ 3/4`.
pub fn derive_laplace_params(epsilon: f64, delta: f64) -> Result<(f64, f64), DpError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(DpError::InvalidParams(format!("epsilon = {epsilon}")));
    }
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(DpError::InvalidParams(format!("delta = {delta} outside (0, 1)")));
    }
    let lambda = 2.0 / epsilon;
    let t = if delta >= 0.75 {
        1.0
    } else {
        // 2(1 − √(1 − δ)) rewritten to avoid cancellation for tiny δ.
        2.0 * delta / (1.0 + (1.0 - delta).sqrt())
    };
    let mu = 1.0 - lambda * t.ln();
    Ok((mu, lambda))
}

/// The guarantee `(ε, δ)` provided by `(μ, λ)`.
pub fn privacy_of(mu: f64, lambda: f64) -> (f64, f64) {
    let t = ((1.0 - mu) / lambda).exp();
    (2.0 / lambda, t * (1.0 - t / 4.0))
}

pub fn split_budget(epsilon: f64, delta: f64, k: u64, l_affect: u64) -> (f64, f64) {
    let parts = (k * l_affect) as f64;
    (epsilon / parts, delta / parts)
}

/// `⌈m^((s−1)/d)⌉`, computed exactly.
pub fn affected_bound(m: u64, d: usize, s: usize) -> u64 {
    assert!(s >= 1 && s <= d, "replace iteration outside 1..=d");
    let power = num_traits::pow(BigUint::from(m), s - 1);
    let root = ceil_root(&power, d as u32);
    u64::try_from(root).expect("bound fits in u64")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplacePlan {
    pub mu: f64,
    pub lambda: f64,
    pub per_type_counts: BTreeMap<ResponseType, u64>,
}

impl LaplacePlan {
    pub fn total(&self) -> u64 {
        self.per_type_counts.values().sum()
    }

    /// Expected count per type.
    pub fn mean_count(&self) -> f64 {
        ceiled_mean(self.mu, self.lambda)
    }

    pub fn with_counts(mu: f64, lambda: f64, counts: &[(ResponseType, u64)]) -> Self {
        LaplacePlan {
            mu,
            lambda,
            per_type_counts: counts.iter().copied().collect(),
        }
    }
}

/// Location and scale for `params` after the affected-borrower budget split.
pub fn laplace_params_for(params: &DpParams) -> Result<(f64, f64), DpError> {
    params.validate()?;
    let l_affect = affected_bound(params.m, params.d, params.s);
    let (eps, delta) = split_budget(params.epsilon, params.delta, params.k, l_affect);
    derive_laplace_params(eps, delta)
}

/// One truncated-Laplace draw for each reachable type.
pub fn plan_noise<R: Rng + ?Sized>(params: &DpParams, rng: &mut R) -> Result<LaplacePlan, DpError> {
    let (mu, lambda) = laplace_params_for(params)?;
    let per_type_counts = reachable_types(params.d, params.s)
        .into_iter()
        .map(|t| (t, sample_truncated_laplace(mu, lambda, rng)))
        .collect();
    Ok(LaplacePlan {
        mu,
        lambda,
        per_type_counts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoiseBatch {
    pub responses: Vec<(ResponseType, LayeredCiphertext)>,
    /// Per payload column, the sum of the randomness of all Type0 noise
    /// commitments (mod q).
    pub r_z: Vec<BigUint>,
}

impl NoiseBatch {
    pub fn count(&self, t: ResponseType) -> usize {
        self.responses.iter().filter(|(tag, _)| *tag == t).count()
    }

    pub fn encode(&self, pk: &PaillierPublicKey, buf: &mut Vec<u8>) {
        encoding::put_u32(buf, self.responses.len() as u32);
        for (tag, lc) in &self.responses {
            tag.encode(buf);
            lc.encode(pk, buf);
        }
        encoding::put_u8(buf, self.r_z.len() as u8);
        for r in &self.r_z {
            encoding::put_uint(buf, r);
        }
    }

    pub fn decode(pk: &PaillierPublicKey, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.u32()? as usize;
        let mut responses = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let tag = ResponseType::decode(r)?;
            responses.push((tag, LayeredCiphertext::decode(pk, r)?));
        }
        let cols = r.u8()? as usize;
        let r_z = (0..cols).map(|_| r.uint()).collect::<Result<_, _>>()?;
        Ok(NoiseBatch { responses, r_z })
    }
}

/// Materializes a plan: Type0 noise is `columns` commitments to 0 under
/// fresh randomness, TypeI(i) is `E^(d−i)(0_i)` and TypeD is `E^d(0)`.
pub fn gen_noise_batch<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    pp: &PedersenParams,
    plan: &LaplacePlan,
    d: usize,
    columns: usize,
    rng: &mut R,
) -> Result<NoiseBatch, DpError> {
    let payload_len = columns * pp.element_width();
    let mut responses = Vec::new();
    let mut r_z = vec![BigUint::zero(); columns];
    let zero = BigUint::zero();
    for (&tag, &count) in &plan.per_type_counts {
        for _ in 0..count {
            let lc = match tag {
                ResponseType::Type0 => {
                    let mut payload = Vec::with_capacity(payload_len);
                    for acc in r_z.iter_mut() {
                        let r = pp.random_scalar(rng);
                        payload.extend(pp.commit(&zero, &r).to_payload(pp));
                        *acc = pp.add_scalar(acc, &r);
                    }
                    layered::layered_encrypt(pk, &payload, d as u8, rng)?
                }
                ResponseType::TypeI(i) => {
                    let inner = LayeredCiphertext::zero_string(pk, i, payload_len)?;
                    layered::wrap(pk, &inner, d as u8 - i, rng)?
                }
                ResponseType::TypeD => layered::layered_encrypt(pk, &vec![0u8; payload_len], d as u8, rng)?,
            };
            responses.push((tag, lc));
        }
    }
    Ok(NoiseBatch { responses, r_z })
}

/// Pre-generated batches bound to one originator key and session layout.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCache {
    pub fingerprint: [u8; 32],
    pub d: usize,
    pub payload_len: usize,
    pub params: DpParams,
    pub batches: Vec<NoiseBatch>,
}

const CACHE_MAGIC: &[u8; 8] = b"OCTNOISE";

impl NoiseCache {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(
        pk: &PaillierPublicKey,
        pp: &PedersenParams,
        params: &DpParams,
        columns: usize,
        count: usize,
        rng: &mut R,
    ) -> Result<Self, DpError> {
        let mut batches = Vec::with_capacity(count);
        for _ in 0..count {
            let plan = plan_noise(params, rng)?;
            batches.push(gen_noise_batch(pk, pp, &plan, params.d, columns, rng)?);
        }
        Ok(NoiseCache {
            fingerprint: pk.fingerprint(),
            d: params.d,
            payload_len: columns * pp.element_width(),
            params: params.clone(),
            batches,
        })
    }

    pub fn to_bytes(&self, pk: &PaillierPublicKey) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&self.fingerprint);
        encoding::put_u8(&mut buf, self.d as u8);
        encoding::put_u32(&mut buf, self.payload_len as u32);
        self.params.encode(&mut buf);
        encoding::put_u32(&mut buf, self.batches.len() as u32);
        for b in &self.batches {
            b.encode(pk, &mut buf);
        }
        buf
    }

    /// Parses a cache, rejecting one generated under a different key.
    pub fn from_bytes(pk: &PaillierPublicKey, bytes: &[u8]) -> Result<Self, DpError> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != CACHE_MAGIC {
            return Err(DecodeError::invalid("not a noise cache").into());
        }
        let mut fingerprint = [0u8; 32];
        fingerprint.copy_from_slice(r.take(32)?);
        if fingerprint != pk.fingerprint() {
            return Err(DpError::FingerprintMismatch);
        }
        let d = r.u8()? as usize;
        let payload_len = r.u32()? as usize;
        let params = DpParams::decode(&mut r)?;
        let count = r.u32()? as usize;
        let batches = (0..count)
            .map(|_| NoiseBatch::decode(pk, &mut r))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(NoiseCache {
            fingerprint,
            d,
            payload_len,
            params,
            batches,
        })
    }
}
