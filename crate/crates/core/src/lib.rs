//! Finite-dimensional toolkit for the orthogonality equation
//!
//! ```text
//! <f(x), g(a)> = <x, a>      for all x in E, a in E*
//! ```
//!
//! for maps `f: E -> F` and `g: E* -> F*` between real coordinate spaces whose
//! pairings with their duals are arbitrary nondegenerate bilinear forms.
//!
//! A pair `(f, g)` solves the equation exactly when it factors as
//! `f = phi . A` and `g = psi . I . (A*)^{-1}` where `M ⊆ L ⊆ F` are
//! subspaces, `A: E -> L/M` is invertible, `phi` is any section of the
//! quotient projection `L -> L/M` and `psi` any section of the restriction
//! `F* -> L*`. This crate runs that statement in both directions:
//!
//! * [`decomposition::synthesize`] builds sampled solution pairs from a
//!   certificate,
//! * [`decomposition::extract`] recovers a certificate from sampled pairs,
//! * [`decomposition::hilbert_decompose`] specializes to inner-product
//!   spaces, splitting `F = F1 ⊕ F2 ⊕ F3` with `f = B + mu` and
//!   `g = (B*)^{-1} + nu`.
//!
//! Maps are finite sample tables ([`equation::PointMap`]); everything is
//! checked on the sampled grid only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decomposition;
pub mod equation;
pub mod generators;
pub mod linalg;

pub use decomposition::{
    extract, hilbert_decompose, synthesize, verify_decomposition, Decomposition,
    HilbertDecomposition,
};
pub use equation::{fit_linear, residual, Instance, PointMap, ResidualReport};
pub use generators::{gen_decomposition, gen_instance, GenConfig, PairingMode, SectionMode};
pub use linalg::{LinearOperator, Pairing, Subspace};
