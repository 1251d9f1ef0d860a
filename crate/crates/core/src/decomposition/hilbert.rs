use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::extract::{extract_with_diagnostics, ExtractError};
use crate::equation::{EquationError, Instance, PointMap};
use crate::linalg::{
    annihilator, orthonormal_span_in, LinalgError, LinearOperator, Pairing, Side, Subspace,
    INVERTIBILITY_BOUND,
};

/// Offsets must lie in their slack space to `1e-9 * (1 + |offset|)`.
pub const SLACK_TOL: f64 = 1e-9;
/// `f = B + mu`, `g = (B*)^{-1} + nu` must hold to this on the grid.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("{0} pairing is not symmetric positive definite")]
    NotHilbert(&'static str),

    #[error(transparent)]
    Extract(#[from] ExtractError),

    #[error("{which} sample {index} leaves its slack space by {gap:e}")]
    OffsetOutsideSlack {
        which: &'static str,
        index: usize,
        gap: f64,
    },

    #[error("core map onto F1 is not invertible (condition number {0:e})")]
    NotInvertible(f64),

    #[error("reconstruction of {which} fails by {gap:e}")]
    Reconstruction { which: &'static str, gap: f64 },

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Equation(#[from] EquationError),
}

/// `F = F1 ⊕ F2 ⊕ F3` (orthogonal for the inner product on `F`) with
/// `f = B + mu`, `g = (B*)^{-1} + nu`, `B: E -> F1` invertible,
/// `mu: E -> F2` and `nu: E -> F3`.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertDecomposition {
    core_space: Subspace,
    primal_slack: Subspace,
    dual_slack: Subspace,
    /// `B` in `F1`-coordinates, pairings `(G_E, G_F restricted to F1)`.
    core: LinearOperator,
    /// `(B*)^{-1}` in `F1`-coordinates.
    inverse_adjoint: DMatrix<f64>,
    primal_offset: PointMap,
    dual_offset: PointMap,
}

impl HilbertDecomposition {
    /// `F1`, carrying the invertible part.
    pub fn core_space(&self) -> &Subspace {
        &self.core_space
    }

    /// `F2`, where `mu` lives.
    pub fn primal_slack(&self) -> &Subspace {
        &self.primal_slack
    }

    /// `F3`, where `nu` lives.
    pub fn dual_slack(&self) -> &Subspace {
        &self.dual_slack
    }

    pub fn core(&self) -> &LinearOperator {
        &self.core
    }

    /// `B` as an `m x n` matrix in `F`-coordinates.
    pub fn core_matrix(&self) -> DMatrix<f64> {
        self.core_space.basis() * self.core.matrix()
    }

    /// `B x` in `F`-coordinates.
    pub fn apply_core(&self, x: &DVector<f64>) -> DVector<f64> {
        self.core_space.embed(&self.core.apply(x))
    }

    /// `(B*)^{-1} a` in `F`-coordinates.
    pub fn apply_inverse_adjoint(&self, alpha: &DVector<f64>) -> DVector<f64> {
        self.core_space.embed(&(&self.inverse_adjoint * alpha))
    }

    /// `mu` as a table on the `f` grid.
    pub fn primal_offset(&self) -> &PointMap {
        &self.primal_offset
    }

    /// `nu` as a table on the `g` grid.
    pub fn dual_offset(&self) -> &PointMap {
        &self.dual_offset
    }
}

/// Splits a solution pair between inner-product spaces into an invertible
/// linear part plus offsets in mutually orthogonal slack spaces.
///
/// `F2 = M`, `F1` is the orthogonal complement of `M` in `L`, and `F3` that
/// of `L` in `F`, all taken in the inner product `G_F`.
pub fn hilbert_decompose(inst: &Instance, rel_tol: f64) -> Result<HilbertDecomposition, HilbertError> {
    if !inst.e_pairing().is_spd() {
        return Err(HilbertError::NotHilbert("E"));
    }
    if !inst.f_pairing().is_spd() {
        return Err(HilbertError::NotHilbert("F"));
    }
    let n = inst.n();
    let m = inst.m();
    let ge = inst.e_pairing();
    let gf = inst.f_pairing();
    let dec = extract_with_diagnostics(inst, rel_tol)?.decomposition;

    let span = dec.image_span();
    let primal_slack = dec.collapsed().clone();

    // F1: G_F-orthogonal complement of M inside L, solved in L-coordinates.
    let span_gram = Pairing::new(span.basis().tr_mul(&(gf.gram() * span.basis())))?;
    let collapsed_coords = orthonormal_span_in(
        span.rank(),
        &primal_slack
            .vectors()
            .iter()
            .map(|v| span.coords(v))
            .collect::<Vec<_>>(),
        rel_tol,
    )?;
    let core_coords = annihilator(&collapsed_coords, &span_gram, Side::Left)?;
    let core_space = orthonormal_span_in(
        m,
        &core_coords
            .vectors()
            .iter()
            .map(|c| span.embed(c))
            .collect::<Vec<_>>(),
        rel_tol,
    )?;
    let dual_slack = annihilator(span, gf, Side::Left)?;

    // B = (G_F-orthogonal projection onto F1) . (representative of A x).
    let f1 = core_space.basis();
    let f1_gram = f1.tr_mul(&(gf.gram() * f1));
    let rep_of_core =
        dec.quotient().representatives().basis() * dec.core().matrix();
    let rhs = f1.tr_mul(&(gf.gram() * rep_of_core));
    let core_coords_matrix = f1_gram
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(HilbertError::NotInvertible(f64::INFINITY))?;
    let core = LinearOperator::new(core_coords_matrix, ge.clone(), Pairing::new(f1_gram)?)?;
    let cond = core.condition_number();
    if !(cond < INVERTIBILITY_BOUND) {
        return Err(HilbertError::NotInvertible(cond));
    }
    let inverse_adjoint = core
        .adjoint()
        .inverse()
        .map_err(|_| HilbertError::NotInvertible(cond))?
        .matrix()
        .clone();

    let apply_core = |x: &DVector<f64>| core_space.embed(&core.apply(x));
    let apply_inverse_adjoint = |a: &DVector<f64>| core_space.embed(&(&inverse_adjoint * a));

    let primal_offset = PointMap::new(
        n,
        m,
        inst.f()
            .samples()
            .iter()
            .map(|(x, fx)| (x.clone(), fx - apply_core(x)))
            .collect(),
    )?;
    let dual_offset = PointMap::new(
        n,
        m,
        inst.g()
            .samples()
            .iter()
            .map(|(a, ga)| (a.clone(), ga - apply_inverse_adjoint(a)))
            .collect(),
    )?;

    for (which, table, slack) in [
        ("mu", &primal_offset, &primal_slack),
        ("nu", &dual_offset, &dual_slack),
    ] {
        for (index, (_, out)) in table.samples().iter().enumerate() {
            let gap = slack.distance(out);
            if gap > SLACK_TOL * (1.0 + out.norm()) {
                return Err(HilbertError::OffsetOutsideSlack { which, index, gap });
            }
        }
    }

    let f_gap = inst
        .f()
        .samples()
        .iter()
        .zip(primal_offset.samples())
        .map(|((x, fx), (_, mu))| (apply_core(x) + mu - fx).norm())
        .fold(0.0, f64::max);
    if f_gap > RECONSTRUCTION_TOL {
        return Err(HilbertError::Reconstruction { which: "f", gap: f_gap });
    }
    let g_gap = inst
        .g()
        .samples()
        .iter()
        .zip(dual_offset.samples())
        .map(|((a, ga), (_, nu))| (apply_inverse_adjoint(a) + nu - ga).norm())
        .fold(0.0, f64::max);
    if g_gap > RECONSTRUCTION_TOL {
        return Err(HilbertError::Reconstruction { which: "g", gap: g_gap });
    }

    Ok(HilbertDecomposition {
        core_space,
        primal_slack,
        dual_slack,
        core,
        inverse_adjoint,
        primal_offset,
        dual_offset,
    })
}
