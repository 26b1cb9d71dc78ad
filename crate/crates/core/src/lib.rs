//! Privacy-preserving loan-stacking evaluation.
//!
//! An originator privately aggregates Pedersen-committed loan amounts held by
//! many lenders through a sparsity-aware recursive PIR, an exchanger verifies
//! anonymous borrower authorization and mixes in differentially private
//! noise, and the originator evaluates sum, count, variance and threshold
//! queries against the committed aggregate.

pub mod crypto;
pub mod dp;
pub mod encoding;
pub mod pir;
pub mod protocol;
pub mod registry;
pub mod zk;

#[cfg(test)]
pub(crate) mod test_support;
