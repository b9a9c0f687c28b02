//! Dense, small-scale quantum Harmony operators.
//!
//! Operators live on the Fock space of `R` roles with `N` fillers each
//! (dimension `(N+1)^R`) or on `m` qubits (dimension `2^m`). Everything is
//! a dense complex matrix, capped at [`operator::DEFAULT_DENSE_LIMIT`].

pub mod circuit;
pub mod linalg;
pub mod operator;
pub mod qbm;
pub mod toric;
pub mod zeno;

use harmonia_core::fock::FockError;
use harmonia_core::grammar::GrammarError;
use thiserror::Error;

pub use linalg::{CMatrix, CVector, Spectrum};
pub use num_complex::Complex64;
pub use operator::HermitianOperator;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("term {term} does not commute with the label projector of example {example}")]
    Commutation { term: usize, example: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

pub type Result<T> = std::result::Result<T, QuantumError>;
