//! Proofs about a recursive PIR query: every sub-query is one-hot, and the
//! queried slot holds the same secret as a ciphertext supplied by the
//! borrower.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use crate::crypto::PaillierPublicKey;
use crate::encoding::{DecodeError, Reader};
use crate::pir::{PirQuery, QueryShape, QueryWitness};

use super::paillier_proofs::{prove_or_in, verify_or_in};
use super::{
    expect_tag, prove_binary, prove_nth_root, put_len, read_len, verify_binary, verify_nth_root,
    BinaryPlaintextProof, NthRootProof, OrNthRootProof, ZkError, TAG_CORRESPONDENCE,
    TAG_VALID_QUERY,
};

fn sub_ctx(ctx: &[u8], label: &str, i: usize, j: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(ctx.len() + label.len() + 24);
    out.extend_from_slice(&(ctx.len() as u32).to_be_bytes());
    out.extend_from_slice(ctx);
    out.extend_from_slice(&(label.len() as u32).to_be_bytes());
    out.extend_from_slice(label.as_bytes());
    out.extend_from_slice(&(i as u64).to_be_bytes());
    out.extend_from_slice(&(j as u64).to_be_bytes());
    out
}

/// Per dimension: a binary proof for every slot and an n-th-root proof that
/// `(Π_j q_ij)·g^{-1}` encrypts 0, i.e. the slots sum to exactly 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidQueryProof {
    pub dims: Vec<(Vec<BinaryPlaintextProof>, NthRootProof)>,
}

fn row_sum_statement(pk: &PaillierPublicKey, row: &[BigUint]) -> BigUint {
    let n2 = pk.n_squared();
    row.iter().fold(pk.generator_inverse(), |acc, q| acc * q % n2)
}

pub fn prove_valid_query<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    witness: &QueryWitness,
    ctx: &[u8],
    rng: &mut R,
) -> Result<ValidQueryProof, ZkError> {
    if witness.plaintexts.len() != query.subqueries.len() || witness.randomness.len() != query.subqueries.len() {
        return Err(ZkError::SizeMismatch("witness dimension count".into()));
    }
    let mut dims = Vec::with_capacity(query.subqueries.len());
    for (i, ((row, bits), rs)) in query
        .subqueries
        .iter()
        .zip(&witness.plaintexts)
        .zip(&witness.randomness)
        .enumerate()
    {
        if bits.len() != row.len() || rs.len() != row.len() {
            return Err(ZkError::SizeMismatch(format!("witness row {i}")));
        }
        let slots = row
            .iter()
            .zip(bits.iter().zip(rs))
            .enumerate()
            .map(|(j, (c, (b, r)))| prove_binary(pk, c, b, r, &sub_ctx(ctx, "vq-slot", i, j), rng))
            .collect();
        let root = rs.iter().fold(BigUint::from(1u32), |acc, r| acc * r % pk.n());
        let sum = prove_nth_root(pk, &row_sum_statement(pk, row), &root, &sub_ctx(ctx, "vq-sum", i, 0), rng);
        dims.push((slots, sum));
    }
    Ok(ValidQueryProof { dims })
}

pub fn verify_valid_query(pk: &PaillierPublicKey, query: &PirQuery, proof: &ValidQueryProof, ctx: &[u8]) -> bool {
    if proof.dims.len() != query.subqueries.len()
        || query.subqueries.len() != query.shape.d()
        || query
            .subqueries
            .iter()
            .zip(query.shape.dims())
            .any(|(row, m)| row.len() != *m)
    {
        return false;
    }
    query
        .subqueries
        .iter()
        .zip(&proof.dims)
        .enumerate()
        .all(|(i, (row, (slots, sum)))| {
            slots.len() == row.len()
                && row
                    .iter()
                    .zip(slots)
                    .enumerate()
                    .all(|(j, (c, p))| verify_binary(pk, c, p, &sub_ctx(ctx, "vq-slot", i, j)))
                && verify_nth_root(pk, &row_sum_statement(pk, row), sum, &sub_ctx(ctx, "vq-sum", i, 0))
        })
}

impl ValidQueryProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_VALID_QUERY);
        put_len(buf, self.dims.len());
        for (slots, sum) in &self.dims {
            put_len(buf, slots.len());
            for p in slots {
                p.encode(buf);
            }
            sum.encode(buf);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_VALID_QUERY)?;
        let d = read_len(r, 255)?;
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            let m = read_len(r, 1 << 24)?;
            let slots = (0..m)
                .map(|_| BinaryPlaintextProof::decode(r))
                .collect::<Result<_, _>>()?;
            dims.push((slots, NthRootProof::decode(r)?));
        }
        Ok(ValidQueryProof { dims })
    }
}

/// The pid whose coordinates are `others` (all dimensions but `i`, most
/// significant first) with coordinate `k` inserted at dimension `i`.
fn pid_with(shape: &QueryShape, i: usize, k: usize, j: usize) -> usize {
    let dims = shape.dims();
    let mut coords = vec![0usize; dims.len()];
    let mut rest = j;
    for (pos, m) in dims.iter().enumerate().rev() {
        if pos == i {
            continue;
        }
        coords[pos] = rest % m;
        rest /= m;
    }
    coords[i] = k;
    shape.coords_to_pid(&coords).expect("coordinates in range")
}

/// Index `j` of `pid` among the `m / m_i` selections of dimension `i`.
fn other_index(shape: &QueryShape, i: usize, pid: usize) -> usize {
    let coords = shape.pid_to_coords(pid).expect("pid in range");
    coords
        .iter()
        .zip(shape.dims())
        .enumerate()
        .filter(|(pos, _)| *pos != i)
        .fold(0, |acc, (_, (c, m))| acc * m + c)
}

fn check_dataset(shape: &QueryShape, dataset: &[BigUint]) -> Result<(), ZkError> {
    if dataset.len() != shape.capacity() {
        return Err(ZkError::SizeMismatch(format!(
            "dataset has {} items for capacity {}",
            dataset.len(),
            shape.capacity()
        )));
    }
    let distinct: BTreeSet<&BigUint> = dataset.iter().collect();
    if distinct.len() != dataset.len() {
        return Err(ZkError::DuplicateDataset);
    }
    Ok(())
}

/// For every dimension `i` and selection `j`, `c*_ij·c^{-1}` where
/// `c*_ij = Π_k q_ik^{A[pid(i, k, j)]}` encrypts the dataset item picked by
/// sub-query `i` along selection `j`.
pub fn correspondence_statements(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    c: &BigUint,
    dataset: &[BigUint],
) -> Result<Vec<Vec<BigUint>>, ZkError> {
    let shape = &query.shape;
    check_dataset(shape, dataset)?;
    let n2 = pk.n_squared();
    let c_inv = c
        .modinv(n2)
        .ok_or_else(|| ZkError::SizeMismatch("ciphertext is not invertible".into()))?;
    let capacity = shape.capacity();
    Ok(shape
        .dims()
        .iter()
        .zip(&query.subqueries)
        .enumerate()
        .map(|(i, (m_i, row))| {
            (0..capacity / m_i)
                .map(|j| {
                    let star = row.iter().enumerate().fold(BigUint::from(1u32), |acc, (k, q)| {
                        acc * q.modpow(&dataset[pid_with(shape, i, k, j)], n2) % n2
                    });
                    star * &c_inv % n2
                })
                .collect()
        })
        .collect())
}

/// Per dimension, an OR over selections `j` that `c*_ij·c^{-1}` is an n-th residue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrespondenceProof {
    pub dims: Vec<OrNthRootProof>,
}

const CORR_DOMAIN: &str = "octopus/zk/correspondence";

/// `c = g^{A[pid]}·r_c^n` and the query targets `pid`; the real branch of
/// dimension `i` uses root `r*_ij·r_c^{-1}` with `r*_ij = Π_k r_ik^{A[...]}`.
#[allow(clippy::too_many_arguments)]
pub fn prove_correspondence<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    witness: &QueryWitness,
    pid: usize,
    c: &BigUint,
    r_c: &BigUint,
    dataset: &[BigUint],
    ctx: &[u8],
    rng: &mut R,
) -> Result<CorrespondenceProof, ZkError> {
    let shape = &query.shape;
    let statements = correspondence_statements(pk, query, c, dataset)?;
    if pid >= shape.capacity() || witness.randomness.len() != shape.d() {
        return Err(ZkError::WitnessIndex);
    }
    let n = pk.n();
    let rc_inv = r_c
        .modinv(n)
        .ok_or_else(|| ZkError::SizeMismatch("r_c is not a unit".into()))?;
    let mut dims = Vec::with_capacity(shape.d());
    for (i, stmts) in statements.iter().enumerate() {
        let j = other_index(shape, i, pid);
        let r_star = witness.randomness[i]
            .iter()
            .enumerate()
            .fold(BigUint::from(1u32), |acc, (k, r)| {
                acc * r.modpow(&dataset[pid_with(shape, i, k, j)], n) % n
            });
        let root = r_star * &rc_inv % n;
        dims.push(prove_or_in(CORR_DOMAIN, pk, stmts, j, &root, &sub_ctx(ctx, "corr", i, 0), rng)?);
    }
    Ok(CorrespondenceProof { dims })
}

/// Rejects datasets of the wrong size or with repeated items.
pub fn verify_correspondence(
    pk: &PaillierPublicKey,
    query: &PirQuery,
    c: &BigUint,
    dataset: &[BigUint],
    proof: &CorrespondenceProof,
    ctx: &[u8],
) -> bool {
    let Ok(statements) = correspondence_statements(pk, query, c, dataset) else {
        return false;
    };
    proof.dims.len() == statements.len()
        && statements
            .iter()
            .zip(&proof.dims)
            .enumerate()
            .all(|(i, (stmts, p))| verify_or_in(CORR_DOMAIN, pk, stmts, p, &sub_ctx(ctx, "corr", i, 0)))
}

impl CorrespondenceProof {
    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(TAG_CORRESPONDENCE);
        put_len(buf, self.dims.len());
        for p in &self.dims {
            p.encode(buf);
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_CORRESPONDENCE)?;
        let d = read_len(r, 255)?;
        let dims = (0..d).map(|_| OrNthRootProof::decode(r)).collect::<Result<_, _>>()?;
        Ok(CorrespondenceProof { dims })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::{gen_query, gen_query_with_plaintexts};
    use crate::test_support::{rng, test_keypair};
    use rand::Rng;

    const CTX: &[u8] = b"sid";

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn dataset<R: Rng>(m: usize, r: &mut R) -> Vec<BigUint> {
        (0..m).map(|_| BigUint::from(r.gen::<u128>())).collect()
    }

    #[test]
    fn honest_query_is_valid() {
        let (pk, _) = test_keypair();
        let mut r = rng(101);
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        let (q, w) = gen_query(&pk, &shape, 6, &mut r).unwrap();
        let p = prove_valid_query(&pk, &q, &w, CTX, &mut r).unwrap();
        assert!(verify_valid_query(&pk, &q, &p, CTX));
        assert!(!verify_valid_query(&pk, &q, &p, b"other"));
        let mut buf = Vec::new();
        p.encode(&mut buf);
        assert_eq!(ValidQueryProof::decode(&mut Reader::new(&buf)).unwrap(), p);
    }

    #[test]
    fn two_ones_in_a_dimension_is_rejected() {
        let (pk, _) = test_keypair();
        let mut r = rng(102);
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        let bits = vec![vec![big(1), big(1), big(0)], vec![big(0), big(0), big(1), big(0)]];
        let (q, w) = gen_query_with_plaintexts(&pk, &shape, bits, &mut r).unwrap();
        let p = prove_valid_query(&pk, &q, &w, CTX, &mut r).unwrap();
        assert!(!verify_valid_query(&pk, &q, &p, CTX));
    }

    #[test]
    fn two_and_minus_one_is_rejected() {
        let (pk, _) = test_keypair();
        let mut r = rng(103);
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        let minus_one = pk.n() - 1u32;
        let bits = vec![vec![big(2), minus_one, big(0)], vec![big(0), big(0), big(1), big(0)]];
        let (q, w) = gen_query_with_plaintexts(&pk, &shape, bits, &mut r).unwrap();
        let p = prove_valid_query(&pk, &q, &w, CTX, &mut r).unwrap();
        // The sum proof alone would pass; the slot proofs catch it.
        assert!(verify_nth_root(
            &pk,
            &row_sum_statement(&pk, &q.subqueries[0]),
            &p.dims[0].1,
            &sub_ctx(CTX, "vq-sum", 0, 0)
        ));
        assert!(!verify_valid_query(&pk, &q, &p, CTX));
    }

    #[test]
    fn selection_indexing_is_consistent() {
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        for pid in 0..12 {
            let coords = shape.pid_to_coords(pid).unwrap();
            for (i, &k) in coords.iter().enumerate() {
                let j = other_index(&shape, i, pid);
                assert_eq!(pid_with(&shape, i, k, j), pid);
            }
        }
    }

    #[test]
    fn correspondence_for_a_three_by_four_target() {
        let (pk, _) = test_keypair();
        let mut r = rng(104);
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        let a = dataset(12, &mut r);
        let (q, w) = gen_query(&pk, &shape, 6, &mut r).unwrap();
        let r_c = pk.random_unit(&mut r);
        let c = pk.encrypt_with(&a[6], &r_c).unwrap();
        let p = prove_correspondence(&pk, &q, &w, 6, &c, &r_c, &a, CTX, &mut r).unwrap();
        assert!(verify_correspondence(&pk, &q, &c, &a, &p, CTX));
        let mut buf = Vec::new();
        p.encode(&mut buf);
        assert_eq!(CorrespondenceProof::decode(&mut Reader::new(&buf)).unwrap(), p);
    }

    #[test]
    fn correspondence_rejects_every_wrong_secret() {
        let (pk, _) = test_keypair();
        let mut r = rng(105);
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        let a = dataset(12, &mut r);
        let (q, w) = gen_query(&pk, &shape, 6, &mut r).unwrap();
        for other in (0..12).filter(|p| *p != 6) {
            let r_c = pk.random_unit(&mut r);
            let c = pk.encrypt_with(&a[other], &r_c).unwrap();
            let p = prove_correspondence(&pk, &q, &w, 6, &c, &r_c, &a, CTX, &mut r).unwrap();
            assert!(!verify_correspondence(&pk, &q, &c, &a, &p, CTX));
        }
    }

    #[test]
    fn single_dimension_reduces_to_one_branch() {
        let (pk, _) = test_keypair();
        let mut r = rng(106);
        let shape = QueryShape::new(vec![5]).unwrap();
        let a = dataset(5, &mut r);
        let (q, w) = gen_query(&pk, &shape, 3, &mut r).unwrap();
        let r_c = pk.random_unit(&mut r);
        let c = pk.encrypt_with(&a[3], &r_c).unwrap();
        let p = prove_correspondence(&pk, &q, &w, 3, &c, &r_c, &a, CTX, &mut r).unwrap();
        assert_eq!(p.dims[0].branches.len(), 1);
        assert!(verify_correspondence(&pk, &q, &c, &a, &p, CTX));
    }

    #[test]
    fn duplicate_datasets_are_rejected() {
        let (pk, _) = test_keypair();
        let mut r = rng(107);
        let shape = QueryShape::new(vec![2, 2]).unwrap();
        let mut a = dataset(4, &mut r);
        let (q, w) = gen_query(&pk, &shape, 0, &mut r).unwrap();
        let r_c = pk.random_unit(&mut r);
        let c = pk.encrypt_with(&a[0], &r_c).unwrap();
        let p = prove_correspondence(&pk, &q, &w, 0, &c, &r_c, &a, CTX, &mut r).unwrap();
        assert!(verify_correspondence(&pk, &q, &c, &a, &p, CTX));
        a[3] = a[1].clone();
        assert!(!verify_correspondence(&pk, &q, &c, &a, &p, CTX));
        assert_eq!(
            prove_correspondence(&pk, &q, &w, 0, &c, &r_c, &a, CTX, &mut r),
            Err(ZkError::DuplicateDataset)
        );
    }
}
