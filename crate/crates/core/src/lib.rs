//! Trapping set enumerators for repeat multiple accumulate code ensembles.
//!
//! Finite-length counts are exact (big integers and rationals) with an
//! optional log-domain mode; asymptotic spectral shapes come from a
//! constrained maximization of entropy terms; brute-force oracles check the
//! closed forms on small instances.

pub mod accumulator;
pub mod asymptotic;
pub mod cli;
pub mod combinatorics;
pub mod ensemble;
pub mod error;
pub mod oracle;

pub use error::{Error, Result};
