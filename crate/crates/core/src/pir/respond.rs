use std::collections::btree_map::{BTreeMap, Entry};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

use crate::crypto::layered::{self, LayeredCiphertext};
use crate::crypto::PaillierPublicKey;
use crate::encoding::{DecodeError, Reader};

use super::{PirError, PirQuery, SparseDatabase};

/// A lender's answer: a layer-`d` ciphertext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PirResponse {
    pub body: LayeredCiphertext,
}

impl PirResponse {
    pub fn encode(&self, pk: &PaillierPublicKey, buf: &mut Vec<u8>) {
        self.body.encode(pk, buf);
    }

    pub fn to_bytes(&self, pk: &PaillierPublicKey) -> Vec<u8> {
        self.body.to_bytes(pk)
    }

    pub fn decode(pk: &PaillierPublicKey, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(PirResponse {
            body: LayeredCiphertext::decode(pk, r)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RespondOutcome {
    Response(PirResponse),
    /// Nothing survived the last iteration; the caller substitutes `E^d(0)`.
    EmptySentinel,
}

/// Item-level `hom_scale` counts, one entry per iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RespondStats {
    pub scale_ops: Vec<usize>,
}

/// A fresh `E^d(0)` of the all-zero payload.
pub fn empty_sentinel_response<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    payload_len: usize,
    d: usize,
    rng: &mut R,
) -> Result<PirResponse, PirError> {
    let body = layered::layered_encrypt(pk, &vec![0u8; payload_len], d as u8, rng)?;
    Ok(PirResponse { body })
}

fn check(query: &PirQuery, db: &SparseDatabase, s: usize) -> Result<(), PirError> {
    let d = query.shape.d();
    if &query.shape != db.shape() {
        return Err(PirError::ShapeMismatch);
    }
    if query
        .subqueries
        .iter()
        .zip(query.shape.dims())
        .any(|(row, m)| row.len() != *m)
    {
        return Err(PirError::ShapeMismatch);
    }
    if s == 0 || s > d {
        return Err(PirError::InvalidReplaceIteration { s, d });
    }
    Ok(())
}

/// `Π_t q^{digit_t}` folded into `acc`, one `hom_scale` + `hom_add` per digit.
fn fold_into(
    pk: &PaillierPublicKey,
    acc: &mut [BigUint],
    q: &BigUint,
    digits: &[BigUint],
) -> Result<(), PirError> {
    for (a, digit) in acc.iter_mut().zip(digits) {
        if digit.is_zero() {
            continue;
        }
        let scaled = pk.scale(q, digit)?;
        *a = pk.add(a, &scaled)?;
    }
    Ok(())
}

fn rerandomize<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    chunks: Vec<BigUint>,
    rng: &mut R,
) -> Result<Vec<BigUint>, PirError> {
    chunks
        .into_iter()
        .map(|c| pk.rerandomize(&c, rng).map_err(PirError::from))
        .collect()
}

fn fresh_zero<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    payload_len: usize,
    layers: usize,
    rng: &mut R,
) -> Result<Vec<BigUint>, PirError> {
    Ok(layered::layered_encrypt(pk, &vec![0u8; payload_len], layers as u8, rng)?.into_chunks())
}

/// Sparsity-aware recursive PIR.
///
/// Iteration `i` folds every present item into its output column using the
/// row selector `q_{i,r}`; empty slots are skipped, so the cost of the first
/// iteration is proportional to the number of non-empty entries. Every
/// output column is rerandomized. Right after iteration `s` (when `s < d`)
/// each absent column is replaced by a fresh layered encryption `E^s(0)`, so
/// later iterations see a full array.
pub fn sparse_respond<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    db: &SparseDatabase,
    s: usize,
    rng: &mut R,
) -> Result<RespondOutcome, PirError> {
    sparse_respond_instrumented(pk, query, db, s, rng).map(|(out, _)| out)
}

pub fn sparse_respond_instrumented<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    db: &SparseDatabase,
    s: usize,
    rng: &mut R,
) -> Result<(RespondOutcome, RespondStats), PirError> {
    check(query, db, s)?;
    let shape = &query.shape;
    let d = shape.d();
    let mut stats = RespondStats::default();

    // Digits of every present item at the current layer, keyed by index.
    let mut items: BTreeMap<usize, Vec<BigUint>> = db
        .iter()
        .map(|(pid, payload)| (pid, layered::payload_to_digits(pk, payload)))
        .collect();
    let mut size = shape.capacity();

    for (i, (m_i, selectors)) in shape.dims().iter().zip(&query.subqueries).enumerate() {
        let iteration = i + 1;
        let row_len = size / m_i;
        let mut columns: BTreeMap<usize, Vec<BigUint>> = BTreeMap::new();
        let mut scale_ops = 0;
        for (ind, digits) in &items {
            let (row, col) = (ind / row_len, ind % row_len);
            let acc = columns
                .entry(col)
                .or_insert_with(|| vec![BigUint::one(); digits.len()]);
            fold_into(pk, acc, &selectors[row], digits)?;
            scale_ops += 1;
        }
        stats.scale_ops.push(scale_ops);

        let mut next: BTreeMap<usize, LayeredCiphertext> = BTreeMap::new();
        for (col, acc) in columns {
            let chunks = rerandomize(pk, acc, rng)?;
            next.insert(col, LayeredCiphertext::new(iteration as u8, chunks)?);
        }
        if iteration == s && s < d {
            for col in 0..row_len {
                if let Entry::Vacant(slot) = next.entry(col) {
                    let chunks = fresh_zero(pk, db.payload_len(), s, rng)?;
                    slot.insert(LayeredCiphertext::new(s as u8, chunks)?);
                }
            }
        }
        items = next.into_iter().map(|(k, lc)| (k, lc.digits(pk))).collect();
        size = row_len;
    }

    match items.remove(&0) {
        None => Ok((RespondOutcome::EmptySentinel, stats)),
        Some(digits) => {
            // Digits of the final layer were taken for the next fold; rebuild chunks.
            let n = pk.n();
            let chunks = digits.chunks_exact(2).map(|p| &p[0] * n + &p[1]).collect();
            let body = LayeredCiphertext::new(d as u8, chunks)?;
            Ok((RespondOutcome::Response(PirResponse { body }), stats))
        }
    }
}

/// A dense database slot for the reference responder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DenseSlot {
    Payload(Vec<u8>),
    Zero,
}

/// Reference responder: the textbook dense product over every row of every
/// column, with empty slots materialized as zero digits and the same
/// replacement step after iteration `s`.
pub fn naive_respond<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    dense: &[DenseSlot],
    payload_len: usize,
    s: usize,
    rng: &mut R,
) -> Result<RespondOutcome, PirError> {
    let shape = &query.shape;
    let d = shape.d();
    if dense.len() != shape.capacity() {
        return Err(PirError::ShapeMismatch);
    }
    if s == 0 || s > d {
        return Err(PirError::InvalidReplaceIteration { s, d });
    }
    let k0 = layered::payload_digit_count(pk, payload_len);
    // None marks a slot whose whole subtree is empty.
    let mut slots: Vec<Option<Vec<BigUint>>> = dense
        .iter()
        .map(|slot| match slot {
            DenseSlot::Payload(p) => Some(layered::payload_to_digits(pk, p)),
            DenseSlot::Zero => None,
        })
        .collect();
    let mut digit_len = k0;

    for (i, (m_i, selectors)) in shape.dims().iter().zip(&query.subqueries).enumerate() {
        let iteration = i + 1;
        let row_len = slots.len() / m_i;
        let zeros = vec![BigUint::zero(); digit_len];
        let mut next = Vec::with_capacity(row_len);
        for col in 0..row_len {
            let column: Vec<&Option<Vec<BigUint>>> =
                (0..*m_i).map(|row| &slots[row * row_len + col]).collect();
            if column.iter().all(|s| s.is_none()) {
                next.push(None);
                continue;
            }
            let mut acc = vec![BigUint::one(); digit_len];
            for (row, slot) in column.iter().enumerate() {
                let digits = slot.as_ref().unwrap_or(&zeros);
                for (a, digit) in acc.iter_mut().zip(digits) {
                    let scaled = pk.scale(&selectors[row], digit)?;
                    *a = pk.add(a, &scaled)?;
                }
            }
            let chunks = rerandomize(pk, acc, rng)?;
            next.push(Some(chunks));
        }
        if iteration == s && s < d {
            for slot in next.iter_mut().filter(|s| s.is_none()) {
                *slot = Some(fresh_zero(pk, payload_len, s, rng)?);
            }
        }
        let n = pk.n();
        slots = next
            .into_iter()
            .map(|slot| slot.map(|chunks| chunks.iter().flat_map(|c| [c / n, c % n]).collect()))
            .collect();
        digit_len *= 2;
    }

    match slots.pop().flatten() {
        None => Ok(RespondOutcome::EmptySentinel),
        Some(digits) => {
            let n = pk.n();
            let chunks = digits.chunks_exact(2).map(|p| &p[0] * n + &p[1]).collect();
            Ok(RespondOutcome::Response(PirResponse {
                body: LayeredCiphertext::new(d as u8, chunks)?,
            }))
        }
    }
}
