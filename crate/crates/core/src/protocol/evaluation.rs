//! Evaluating the committed total: the borrower's side builds an
//! [`EvalMessage`] for the session's query kind, the originator's side checks
//! it against the borrower's commitments.

use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{CryptoRng, RngCore};

use crate::crypto::{Commitment, PedersenParams};
use crate::encoding::{self, DecodeError, Reader};
use crate::zk::{
    prove_comparison, prove_ped_multiplication, verify_comparison, verify_ped_multiplication, Comparison,
    ComparisonProof, MultiplicationProof, ZkError,
};

use super::QueryKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalMessage {
    /// Opening of the single committed column (sum and count).
    Opening { value: BigUint, randomness: BigUint },
    /// `F_2` commits to the square of the total; `F_3 = F_1^n·F_2^{-1}` is opened.
    Variance {
        f2: Commitment,
        product: MultiplicationProof,
        f3_value: BigUint,
        f3_randomness: BigUint,
    },
    Comparison(ComparisonProof),
}

const EVAL_OPENING: u8 = 0;
const EVAL_VARIANCE: u8 = 1;
const EVAL_COMPARISON: u8 = 2;

impl EvalMessage {
    pub fn encode(&self, pp: &PedersenParams, buf: &mut Vec<u8>) {
        match self {
            EvalMessage::Opening { value, randomness } => {
                encoding::put_u8(buf, EVAL_OPENING);
                encoding::put_uint(buf, value);
                encoding::put_uint(buf, randomness);
            }
            EvalMessage::Variance {
                f2,
                product,
                f3_value,
                f3_randomness,
            } => {
                encoding::put_u8(buf, EVAL_VARIANCE);
                f2.encode(pp, buf);
                product.encode(buf);
                encoding::put_uint(buf, f3_value);
                encoding::put_uint(buf, f3_randomness);
            }
            EvalMessage::Comparison(p) => {
                encoding::put_u8(buf, EVAL_COMPARISON);
                p.encode(buf);
            }
        }
    }

    pub fn decode(pp: &PedersenParams, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.u8()? {
            EVAL_OPENING => EvalMessage::Opening {
                value: r.uint()?,
                randomness: r.uint()?,
            },
            EVAL_VARIANCE => EvalMessage::Variance {
                f2: Commitment::decode(pp, r)?,
                product: MultiplicationProof::decode(r)?,
                f3_value: r.uint()?,
                f3_randomness: r.uint()?,
            },
            EVAL_COMPARISON => EvalMessage::Comparison(ComparisonProof::decode(r)?),
            other => return Err(DecodeError::invalid(format!("evaluation kind {other}"))),
        })
    }
}

/// The value the originator learns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryResult {
    Sum(BigUint),
    Count(BigUint),
    /// `numerator / denominator` with `denominator = n²` for `n` lenders.
    Variance { numerator: BigUint, denominator: u64 },
    /// Whether the total lies below the public threshold.
    Below(bool),
}

impl QueryResult {
    pub fn as_f64(&self) -> f64 {
        match self {
            QueryResult::Sum(v) | QueryResult::Count(v) => v.to_f64().unwrap_or(f64::INFINITY),
            QueryResult::Variance { numerator, denominator } => {
                numerator.to_f64().unwrap_or(f64::INFINITY) / *denominator as f64
            }
            QueryResult::Below(b) => f64::from(u8::from(*b)),
        }
    }

    /// The result for a borrower with `amounts` at `n` session lenders.
    pub fn oracle(kind: QueryKind, amounts: &[u64], n: usize) -> Option<Self> {
        let total: BigUint = amounts.iter().map(|&a| BigUint::from(a)).sum();
        Some(match kind {
            QueryKind::Sum => QueryResult::Sum(total),
            QueryKind::Count => QueryResult::Count(BigUint::from(amounts.len())),
            QueryKind::Variance => {
                let squares: BigUint = amounts.iter().map(|&a| BigUint::from(a) * a).sum();
                QueryResult::Variance {
                    numerator: squares * n - &total * &total,
                    denominator: (n * n) as u64,
                }
            }
            QueryKind::CmpPublic(t) => QueryResult::Below(total < BigUint::from(t)),
            QueryKind::CmpPrivate => return None,
        })
    }
}

impl fmt::Display for QueryResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryResult::Sum(v) => write!(f, "sum={v}"),
            QueryResult::Count(v) => write!(f, "count={v}"),
            QueryResult::Variance { numerator, denominator } => {
                write!(f, "variance={numerator}/{denominator} ({:.6})", self.as_f64())
            }
            QueryResult::Below(b) => write!(f, "below={b}"),
        }
    }
}

/// What the borrower committed to in `c_b`: per column, value and randomness.
pub(crate) struct CommittedTotals<'a> {
    pub values: &'a [BigUint],
    pub randomness: &'a [BigUint],
    pub commitments: &'a [Commitment],
}

/// Builds the borrower's evaluation for `kind`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn prove_evaluation<R: RngCore + CryptoRng + ?Sized>(
    pp: &PedersenParams,
    kind: QueryKind,
    lenders: usize,
    range_bits: usize,
    totals: &CommittedTotals<'_>,
    ctx: &[u8],
    rng: &mut R,
) -> Result<Option<EvalMessage>, ZkError> {
    let (x, r) = (&totals.values[0], &totals.randomness[0]);
    Ok(Some(match kind {
        QueryKind::Sum | QueryKind::Count => EvalMessage::Opening {
            value: x.clone(),
            randomness: r.clone(),
        },
        QueryKind::Variance => {
            let (s2, r1) = (&totals.values[1], &totals.randomness[1]);
            let n = BigUint::from(lenders);
            let x2 = pp.mul_scalar(x, x);
            let r2 = pp.random_scalar(rng);
            let f2 = pp.commit(&x2, &r2);
            let f4 = &totals.commitments[0];
            let product = prove_ped_multiplication(pp, f4, f4, &f2, (x, r), (x, r), &r2, ctx, rng);
            EvalMessage::Variance {
                f2,
                product,
                f3_value: pp.sub_scalar(&pp.mul_scalar(&n, s2), &x2),
                f3_randomness: pp.sub_scalar(&pp.mul_scalar(&n, r1), &r2),
            }
        }
        QueryKind::CmpPublic(t) => {
            let claim = if *x < BigUint::from(t) {
                Comparison::Below
            } else {
                Comparison::AtOrAbove
            };
            EvalMessage::Comparison(prove_comparison(pp, &totals.commitments[0], x, r, t, range_bits, claim, ctx, rng)?)
        }
        QueryKind::CmpPrivate => return Ok(None),
    }))
}

/// Checks the borrower's evaluation against `c_b`; `None` means rejection.
pub(crate) fn verify_evaluation(
    pp: &PedersenParams,
    kind: QueryKind,
    lenders: usize,
    range_bits: usize,
    c_b: &[Commitment],
    msg: &EvalMessage,
    ctx: &[u8],
) -> Option<QueryResult> {
    match (kind, msg) {
        (QueryKind::Sum | QueryKind::Count, EvalMessage::Opening { value, randomness }) => {
            if c_b.len() != 1 || !pp.verify_open(&c_b[0], value, randomness) {
                return None;
            }
            Some(if kind == QueryKind::Sum {
                QueryResult::Sum(value.clone())
            } else {
                QueryResult::Count(value.clone())
            })
        }
        (
            QueryKind::Variance,
            EvalMessage::Variance {
                f2,
                product,
                f3_value,
                f3_randomness,
            },
        ) => {
            if c_b.len() != 2 || lenders == 0 {
                return None;
            }
            let (f4, f1) = (&c_b[0], &c_b[1]);
            if !verify_ped_multiplication(pp, f4, f4, f2, product, ctx) {
                return None;
            }
            let f3 = pp.mul(&pp.pow(f1, &BigUint::from(lenders)), &pp.inverse(f2));
            if !pp.verify_open(&f3, f3_value, f3_randomness) {
                return None;
            }
            // A non-negative variance times n² never reaches q/2.
            if f3_value > &(pp.q() >> 1u32) {
                return None;
            }
            Some(QueryResult::Variance {
                numerator: f3_value.clone(),
                denominator: (lenders * lenders) as u64,
            })
        }
        (QueryKind::CmpPublic(t), EvalMessage::Comparison(p)) => {
            if c_b.len() != 1 || !verify_comparison(pp, &c_b[0], t, range_bits, p, ctx) {
                return None;
            }
            Some(QueryResult::Below(p.claim == Comparison::Below))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::rng;
    use rand_chacha::ChaCha20Rng;

    const CTX: &[u8] = b"eval";

    fn commit_columns(
        pp: &PedersenParams,
        values: &[u64],
        rng: &mut ChaCha20Rng,
    ) -> (Vec<BigUint>, Vec<BigUint>, Vec<Commitment>) {
        let vs: Vec<BigUint> = values.iter().map(|&v| BigUint::from(v)).collect();
        let rs: Vec<BigUint> = vs.iter().map(|_| pp.random_scalar(rng)).collect();
        let cs = vs.iter().zip(&rs).map(|(v, r)| pp.commit(v, r)).collect();
        (vs, rs, cs)
    }

    fn round_trip(kind: QueryKind, lenders: usize, values: &[u64], seed: u64) -> Option<QueryResult> {
        let pp = PedersenParams::p504();
        let mut r = rng(seed);
        let (vs, rs, cs) = commit_columns(&pp, values, &mut r);
        let totals = CommittedTotals {
            values: &vs,
            randomness: &rs,
            commitments: &cs,
        };
        let msg = prove_evaluation(&pp, kind, lenders, 3, &totals, CTX, &mut r).unwrap()?;
        let mut buf = Vec::new();
        msg.encode(&pp, &mut buf);
        let back = EvalMessage::decode(&pp, &mut Reader::new(&buf)).unwrap();
        assert_eq!(back, msg);
        verify_evaluation(&pp, kind, lenders, 3, &cs, &back, CTX)
    }

    #[test]
    fn variance_example() {
        // Amounts [1, 2] at two lenders: Σx = 3, Σx² = 5.
        let res = round_trip(QueryKind::Variance, 2, &[3, 5], 301).unwrap();
        assert_eq!(
            res,
            QueryResult::Variance {
                numerator: BigUint::from(1u32),
                denominator: 4
            }
        );
        assert_eq!(res.as_f64(), 0.25);
        assert_eq!(QueryResult::oracle(QueryKind::Variance, &[1, 2], 2), Some(res));
    }

    #[test]
    fn sum_and_count_open() {
        assert_eq!(round_trip(QueryKind::Sum, 3, &[42], 302), Some(QueryResult::Sum(BigUint::from(42u32))));
        assert_eq!(round_trip(QueryKind::Sum, 3, &[0], 303), Some(QueryResult::Sum(BigUint::from(0u32))));
        assert_eq!(round_trip(QueryKind::Count, 3, &[2], 304), Some(QueryResult::Count(BigUint::from(2u32))));
    }

    #[test]
    fn comparison_results() {
        assert_eq!(round_trip(QueryKind::CmpPublic(7), 1, &[5], 305), Some(QueryResult::Below(true)));
        assert_eq!(round_trip(QueryKind::CmpPublic(7), 1, &[7], 306), Some(QueryResult::Below(false)));
        assert_eq!(round_trip(QueryKind::CmpPublic(7), 1, &[9], 307), Some(QueryResult::Below(false)));
    }

    #[test]
    fn false_below_claim_is_rejected() {
        let pp = PedersenParams::p504();
        let mut r = rng(308);
        let (vs, rs, cs) = commit_columns(&pp, &[9], &mut r);
        let p = prove_comparison(&pp, &cs[0], &vs[0], &rs[0], 7, 3, Comparison::Below, CTX, &mut r).unwrap();
        assert_eq!(
            verify_evaluation(&pp, QueryKind::CmpPublic(7), 1, 3, &cs, &EvalMessage::Comparison(p), CTX),
            None
        );
    }

    #[test]
    fn variance_with_wrong_square_is_rejected() {
        let pp = PedersenParams::p504();
        let mut r = rng(309);
        let (vs, rs, cs) = commit_columns(&pp, &[3, 5], &mut r);
        let totals = CommittedTotals {
            values: &vs,
            randomness: &rs,
            commitments: &cs,
        };
        let Some(EvalMessage::Variance { product, .. }) =
            prove_evaluation(&pp, QueryKind::Variance, 2, 3, &totals, CTX, &mut r).unwrap()
        else {
            panic!("variance message expected");
        };
        // Claim X² = 8 instead of 9: opening F3 to 2 would need a forged product proof.
        let r2 = pp.random_scalar(&mut r);
        let f2 = pp.commit(&BigUint::from(8u32), &r2);
        let msg = EvalMessage::Variance {
            f2,
            product,
            f3_value: BigUint::from(2u32),
            f3_randomness: pp.sub_scalar(&pp.mul_scalar(&BigUint::from(2u32), &rs[1]), &r2),
        };
        assert_eq!(verify_evaluation(&pp, QueryKind::Variance, 2, 3, &cs, &msg, CTX), None);
    }

    #[test]
    fn mismatched_kind_is_rejected() {
        let pp = PedersenParams::p504();
        let mut r = rng(310);
        let (vs, rs, cs) = commit_columns(&pp, &[4], &mut r);
        let msg = EvalMessage::Opening {
            value: vs[0].clone(),
            randomness: rs[0].clone(),
        };
        assert_eq!(verify_evaluation(&pp, QueryKind::CmpPublic(5), 1, 3, &cs, &msg, CTX), None);
    }
}
