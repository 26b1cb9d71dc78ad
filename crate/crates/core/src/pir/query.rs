use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

use crate::crypto::PaillierPublicKey;
use crate::encoding::{self, DecodeError, Reader};

use super::{PirError, QueryShape};

/// `d` sub-queries of base ciphertexts; sub-query `i` has `m_i` slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PirQuery {
    pub shape: QueryShape,
    pub subqueries: Vec<Vec<BigUint>>,
}

/// Slot plaintexts and randomness, kept by the querier for the proofs.
#[derive(Clone, Debug)]
pub struct QueryWitness {
    pub coords: Vec<usize>,
    pub plaintexts: Vec<Vec<BigUint>>,
    pub randomness: Vec<Vec<BigUint>>,
}

/// One-hot query for `pid`: sub-query `i` encrypts 1 at coordinate `k_i`.
pub fn gen_query<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    shape: &QueryShape,
    pid: usize,
    rng: &mut R,
) -> Result<(PirQuery, QueryWitness), PirError> {
    let coords = shape.pid_to_coords(pid)?;
    let plaintexts = shape
        .dims()
        .iter()
        .zip(&coords)
        .map(|(m, k)| {
            (0..*m)
                .map(|j| if j == *k { BigUint::one() } else { BigUint::zero() })
                .collect()
        })
        .collect();
    let (query, mut witness) = gen_query_with_plaintexts(pk, shape, plaintexts, rng)?;
    witness.coords = coords;
    Ok((query, witness))
}

/// Encrypts arbitrary slot plaintexts. Used by fault injection and tests;
/// `witness.coords` is left empty.
pub fn gen_query_with_plaintexts<R: RngCore + CryptoRng + ?Sized>(
    pk: &PaillierPublicKey,
    shape: &QueryShape,
    plaintexts: Vec<Vec<BigUint>>,
    rng: &mut R,
) -> Result<(PirQuery, QueryWitness), PirError> {
    if plaintexts.len() != shape.d()
        || plaintexts.iter().zip(shape.dims()).any(|(row, m)| row.len() != *m)
    {
        return Err(PirError::ShapeMismatch);
    }
    let mut subqueries = Vec::with_capacity(shape.d());
    let mut randomness = Vec::with_capacity(shape.d());
    for row in &plaintexts {
        let mut cts = Vec::with_capacity(row.len());
        let mut rs = Vec::with_capacity(row.len());
        for m in row {
            let r = pk.random_unit(rng);
            cts.push(pk.encrypt_with(m, &r)?);
            rs.push(r);
        }
        subqueries.push(cts);
        randomness.push(rs);
    }
    Ok((
        PirQuery {
            shape: shape.clone(),
            subqueries,
        },
        QueryWitness {
            coords: Vec::new(),
            plaintexts,
            randomness,
        },
    ))
}

impl PirQuery {
    pub fn slots(&self) -> impl Iterator<Item = &BigUint> {
        self.subqueries.iter().flatten()
    }

    /// Shape, then every slot as a fixed-width ciphertext.
    pub fn encode(&self, pk: &PaillierPublicKey, buf: &mut Vec<u8>) {
        self.shape.encode(buf);
        let width = pk.ciphertext_width();
        for c in self.slots() {
            encoding::put_uint_fixed(buf, c, width);
        }
    }

    pub fn to_bytes(&self, pk: &PaillierPublicKey) -> Vec<u8> {
        let mut buf = Vec::new();
        self.encode(pk, &mut buf);
        buf
    }

    pub fn decode(pk: &PaillierPublicKey, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let shape = QueryShape::decode(r)?;
        let width = pk.ciphertext_width();
        let mut subqueries = Vec::with_capacity(shape.d());
        for m in shape.dims() {
            let mut row = Vec::with_capacity(*m);
            for _ in 0..*m {
                let c = r.uint_fixed(width)?;
                if &c >= pk.n_squared() {
                    return Err(DecodeError::invalid("query slot exceeds n^2"));
                }
                row.push(c);
            }
            subqueries.push(row);
        }
        Ok(PirQuery { shape, subqueries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{rng, test_keypair};

    #[test]
    fn three_by_four_query_decrypts_to_one_hots() {
        let (pk, sk) = test_keypair();
        let shape = QueryShape::new(vec![3, 4]).unwrap();
        let (q, w) = gen_query(&pk, &shape, 6, &mut rng(51)).unwrap();
        assert_eq!(q.slots().count(), 7);
        assert_eq!(w.coords, vec![1, 2]);
        let bits: Vec<Vec<u32>> = q
            .subqueries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| sk.decrypt(c).unwrap().try_into().unwrap())
                    .collect()
            })
            .collect();
        assert_eq!(bits, vec![vec![0, 1, 0], vec![0, 0, 1, 0]]);
    }

    #[test]
    fn slot_counts_match_shapes() {
        let (pk, _) = test_keypair();
        let mut r = rng(52);
        for (dims, count) in [(vec![10, 10, 10, 10], 40), (vec![100, 100], 200)] {
            let shape = QueryShape::new(dims).unwrap();
            let (q, _) = gen_query(&pk, &shape, 17, &mut r).unwrap();
            assert_eq!(q.slots().count(), count);
        }
    }

    #[test]
    fn wire_form_round_trips() {
        let (pk, _) = test_keypair();
        let shape = QueryShape::new(vec![2, 3]).unwrap();
        let (q, _) = gen_query(&pk, &shape, 4, &mut rng(53)).unwrap();
        let bytes = q.to_bytes(&pk);
        let mut rd = Reader::new(&bytes);
        assert_eq!(PirQuery::decode(&pk, &mut rd).unwrap(), q);
        rd.finish().unwrap();
    }
}
