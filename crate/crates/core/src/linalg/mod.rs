//! Pairing-aware dense linear algebra.
//!
//! Every space here is a coordinate space `R^d`. A dual space shares the
//! coordinates of its primal; the [`Pairing`] Gram matrix decides how the two
//! evaluate against each other, `<x, a> = x^T G a`.

mod operator;
mod pairing;
mod subspace;

use thiserror::Error;

pub use operator::{LinearOperator, INVERTIBILITY_BOUND};
pub use pairing::Pairing;
pub use subspace::{
    annihilator, orthonormal_span, orthonormal_span_in, quotient_projection, rank_report,
    QuotientMap, RankReport, Side, Subspace,
};

/// Relative singular-value cutoff used for rank decisions unless a caller
/// passes its own.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Entrywise orthonormality tolerance for subspace bases.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Distance tolerance for subspace containment tests.
pub const CONTAINMENT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot infer the ambient dimension of an empty vector list")]
    DimensionUnspecified,

    #[error("relative tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),

    #[error("gram matrix must be square, got {rows}x{cols}")]
    NonSquareGram { rows: usize, cols: usize },

    #[error("degenerate pairing: smallest singular value {smallest:e} vs largest {largest:e}")]
    SingularPairing { smallest: f64, largest: f64 },

    #[error("basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("subspace is not contained in the enclosing subspace (distance {0:e})")]
    NotContained(f64),

    #[error("operator is not invertible (condition number {0:e})")]
    NotInvertible(f64),

    #[error("non-finite entry in input")]
    NonFinite,
}
