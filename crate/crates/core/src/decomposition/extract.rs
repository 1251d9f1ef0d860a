use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{Decomposition, DecompositionError, DecompositionParts};
use crate::equation::{fit_linear, residual, EquationError, Instance, PointMap};
use crate::linalg::{
    annihilator, orthonormal_span_in, quotient_projection, LinalgError, LinearOperator, Pairing,
    Side, INVERTIBILITY_BOUND,
};

/// `A* Q0^ = id` must hold to this, entrywise.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Pipeline step at which extraction stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Precondition,
    Span,
    FitQ0,
    Annihilator,
    FitQ1,
    Invertibility,
    IdentityCheck,
    Certificate,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Precondition => "precondition",
            Stage::Span => "span",
            Stage::FitQ0 => "fit-Q0",
            Stage::Annihilator => "annihilator",
            Stage::FitQ1 => "fit-Q1",
            Stage::Invertibility => "invertibility",
            Stage::IdentityCheck => "identity-check",
            Stage::Certificate => "certificate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("not a solution pair: residual {residual:e} exceeds {threshold:e}")]
    NotASolution { residual: f64, threshold: f64 },

    #[error("{map} sample inputs span dimension {rank}, need {needed}")]
    Underdetermined {
        map: &'static str,
        rank: usize,
        needed: usize,
    },

    #[error(transparent)]
    Equation(EquationError),

    #[error("span of f outputs: {0}")]
    Span(LinalgError),

    #[error("restricted g is not linear: {0}")]
    DualNotLinear(EquationError),

    #[error("annihilator of the dual range: {0}")]
    Annihilator(LinalgError),

    #[error("projected f is not linear: {0}")]
    PrimalNotLinear(EquationError),

    #[error("quotient L/M has dimension {quotient} but E has dimension {domain}")]
    QuotientDimension { quotient: usize, domain: usize },

    #[error("core map condition number {0:e} is not below 1e8")]
    IllConditioned(f64),

    #[error("A* Q0^ deviates from the identity by {0:e}")]
    IdentityDefect(f64),

    #[error("extracted certificate is invalid: {0}")]
    Certificate(DecompositionError),
}

impl ExtractError {
    pub fn stage(&self) -> Stage {
        match self {
            ExtractError::NotASolution { .. }
            | ExtractError::Underdetermined { .. }
            | ExtractError::Equation(_) => Stage::Precondition,
            ExtractError::Span(_) => Stage::Span,
            ExtractError::DualNotLinear(_) => Stage::FitQ0,
            ExtractError::Annihilator(_) => Stage::Annihilator,
            ExtractError::PrimalNotLinear(_) => Stage::FitQ1,
            ExtractError::QuotientDimension { .. } | ExtractError::IllConditioned(_) => {
                Stage::Invertibility
            }
            ExtractError::IdentityDefect(_) => Stage::IdentityCheck,
            ExtractError::Certificate(_) => Stage::Certificate,
        }
    }
}

/// Internal quantities of one extraction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractDiagnostics {
    pub span_rank: usize,
    pub collapsed_rank: usize,
    /// `Q0^`: `E*` to `(L/M)*`, the restricted `g` with codomain cut down to
    /// the quotient dual.
    pub dual_core: DMatrix<f64>,
    /// `max |A* Q0^ - I|`.
    pub identity_defect: f64,
    /// `|Q0^|` with `E*` normed dually to the Euclidean norm on `E`.
    pub dual_core_norm: f64,
    /// `min_x (|Q0^| |A x| - |x|)` over the `f` sample inputs; the lower bound
    /// `|x| <= |Q0^| |A x|` holds iff this is non-negative.
    pub norm_bound_slack: f64,
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub decomposition: Decomposition,
    pub diagnostics: ExtractDiagnostics,
}

/// Recovers a certificate `(L, M, A, phi, psi)` from a sampled solution pair.
pub fn extract(inst: &Instance, rel_tol: f64) -> Result<Decomposition, ExtractError> {
    extract_with_diagnostics(inst, rel_tol).map(|e| e.decomposition)
}

/// Runs the construction step by step:
///
/// 1. `L` = span of the `f` outputs;
/// 2. `R b = B_L^T G_F b`;
/// 3. `Q0` = linear fit of `R g`;
/// 4. `M` = vectors of `L` annihilated by the range of `Q0`;
/// 5. `(P, reps)` = quotient of `L` by `M`;
/// 6. `Q1` = linear fit of `P f`;
/// 7. `A = Q1`, checked for invertibility and `A* Q0^ = id`;
/// 8. `phi` and `psi` tabulated at the induced keys.
pub fn extract_with_diagnostics(inst: &Instance, rel_tol: f64) -> Result<Extraction, ExtractError> {
    let n = inst.n();
    let m = inst.m();
    let e_pairing = inst.e_pairing();
    let f_pairing = inst.f_pairing();

    let report = residual(inst).map_err(ExtractError::Equation)?;
    let threshold = rel_tol * inst.scale();
    if !(report.max_abs_residual <= threshold) {
        return Err(ExtractError::NotASolution {
            residual: report.max_abs_residual,
            threshold,
        });
    }
    for (map, table) in [("f", inst.f()), ("g", inst.g())] {
        let rank = orthonormal_span_in(n, &table.inputs(), rel_tol)
            .map_err(|e| ExtractError::Equation(e.into()))?
            .rank();
        if rank < n {
            return Err(ExtractError::Underdetermined { map, rank, needed: n });
        }
    }

    // 1
    let span = orthonormal_span_in(m, &inst.f().outputs(), rel_tol).map_err(ExtractError::Span)?;
    let l = span.rank();

    // 2, 3
    let restrict = span.basis().transpose() * f_pairing.gram();
    let restricted_g = inst
        .g()
        .map_outputs(l, |beta| &restrict * beta)
        .map_err(ExtractError::DualNotLinear)?;
    let q0 = fit_linear(&restricted_g, rel_tol).map_err(ExtractError::DualNotLinear)?;

    // 4: in L-coordinates L pairs with L* by the dot product.
    let range = orthonormal_span_in(l, &column_vectors(q0.matrix()), rel_tol)
        .map_err(ExtractError::Annihilator)?;
    let collapsed_coords = annihilator(&range, &Pairing::standard(l), Side::Right)
        .map_err(ExtractError::Annihilator)?;
    let collapsed_vectors: Vec<DVector<f64>> = collapsed_coords
        .vectors()
        .iter()
        .map(|c| span.embed(c))
        .collect();
    let collapsed = orthonormal_span_in(m, &collapsed_vectors, rel_tol)
        .map_err(ExtractError::Annihilator)?;

    // 5
    let quotient = quotient_projection(&span, &collapsed).map_err(ExtractError::Annihilator)?;
    let q = quotient.dim();

    // 6
    let projected_f = inst
        .f()
        .map_outputs(q, |fx| quotient.project(&span.coords(fx)))
        .map_err(ExtractError::PrimalNotLinear)?;
    let q1 = fit_linear(&projected_f, rel_tol).map_err(ExtractError::PrimalNotLinear)?;

    // 7
    if q != n {
        return Err(ExtractError::QuotientDimension { quotient: q, domain: n });
    }
    let core = q1
        .with_pairings(e_pairing.clone(), Pairing::standard(n))
        .map_err(|e| ExtractError::Certificate(e.into()))?;
    let condition_number = core.condition_number();
    if !(condition_number < INVERTIBILITY_BOUND) {
        return Err(ExtractError::IllConditioned(condition_number));
    }
    let dual_core = quotient.rep_coords().transpose() * q0.matrix();
    let identity_defect =
        (core.adjoint().matrix() * &dual_core - DMatrix::<f64>::identity(n, n)).amax();
    if !(identity_defect <= IDENTITY_TOL) {
        return Err(ExtractError::IdentityDefect(identity_defect));
    }

    // |Q0^| = sup |Q0^ a| / |G_E a| = |Q0^ G_E^{-1}|
    let dual_core_norm = LinearOperator::with_standard_pairings(
        e_pairing.transposed().solve(&dual_core.transpose()).transpose(),
    )
    .operator_norm();
    let norm_bound_slack = inst
        .f()
        .samples()
        .iter()
        .map(|(x, _)| dual_core_norm * core.apply(x).norm() - x.norm())
        .fold(f64::INFINITY, f64::min);

    // 8: keys computed exactly as the certificate will recompute them.
    let parts_core = core.matrix().clone();
    let dual_section_keys = {
        let adjoint_inverse = core
            .adjoint()
            .inverse()
            .map_err(|_| ExtractError::IllConditioned(condition_number))?;
        move |alpha: &DVector<f64>| quotient.lift(&(adjoint_inverse.matrix() * alpha))
    };
    let phi = PointMap::new(
        n,
        l,
        inst.f()
            .samples()
            .iter()
            .map(|(x, fx)| (&parts_core * x, span.coords(fx)))
            .collect(),
    )
    .map_err(|e| ExtractError::Certificate(e.into()))?;
    let psi = PointMap::new(
        l,
        m,
        inst.g()
            .samples()
            .iter()
            .map(|(alpha, ga)| (dual_section_keys(alpha), ga.clone()))
            .collect(),
    )
    .map_err(|e| ExtractError::Certificate(e.into()))?;

    let collapsed_rank = collapsed.rank();
    let decomposition = Decomposition::new(DecompositionParts {
        e_pairing: e_pairing.clone(),
        f_pairing: f_pairing.clone(),
        image_span: span,
        collapsed,
        core: parts_core,
        primal_section: phi,
        dual_section: psi,
    })
    .map_err(ExtractError::Certificate)?;

    Ok(Extraction {
        decomposition,
        diagnostics: ExtractDiagnostics {
            span_rank: l,
            collapsed_rank,
            dual_core,
            identity_defect,
            dual_core_norm,
            norm_bound_slack,
            condition_number,
        },
    })
}

fn column_vectors(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    m.column_iter().map(|c| c.into_owned()).collect()
}
