//! Certificates `(L, M, A, phi, psi)` for solution pairs, and both directions
//! of the characterization: [`synthesize`] builds `(f, g)` from a
//! certificate, [`extract`] recovers a certificate from sampled `(f, g)`.
//!
//! Coordinates used throughout, with `B_L` the orthonormal basis of `L` and
//! `K` the representative basis of `L/M` in `L`-coordinates:
//!
//! * `L`-coordinates `y` stand for `B_L y`; `L*`-coordinates are values on the
//!   basis, so the restriction is `R b = B_L^T G_F b` and `L` pairs with `L*`
//!   by the plain dot product.
//! * `L/M` and `(L/M)*` likewise pair by the dot product, the projection is
//!   `P y = K^T y` and the injection into `L*` is `I z = K z`.

mod extract;
mod hilbert;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::equation::{residual, EquationError, Instance, PointMap};
use crate::linalg::{
    quotient_projection, LinalgError, LinearOperator, Pairing, QuotientMap, Subspace,
    CONTAINMENT_TOL, INVERTIBILITY_BOUND,
};

pub use extract::{extract, extract_with_diagnostics, ExtractDiagnostics, ExtractError, Extraction, Stage};
pub use hilbert::{hilbert_decompose, HilbertDecomposition, HilbertError};

/// Section tables are keyed by computed points; lookups match within this.
pub const SECTION_KEY_TOL: f64 = 1e-9;
/// Section identities `P phi = id`, `R psi = id` must hold to this
/// (relative to `1 + |input|`).
pub const SECTION_TOL: f64 = 1e-9;
/// Clause threshold in [`verify_decomposition`], relative to the instance
/// scale.
pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("{what} has dimension {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("collapsed subspace is not inside the span: {0}")]
    NotNested(LinalgError),

    #[error("core map is not invertible (condition number {0:e})")]
    NotInvertible(f64),

    #[error("primal section sample {index} is not a right inverse of the projection (defect {defect:e})")]
    PrimalSection { index: usize, defect: f64 },

    #[error("dual section sample {index} is not a right inverse of the restriction (defect {defect:e})")]
    DualSection { index: usize, defect: f64 },

    #[error("{map} table has no sample at the point required by grid entry {index}")]
    Coverage { map: &'static str, index: usize },

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Equation(#[from] EquationError),
}

/// Raw certificate data, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionParts {
    pub e_pairing: Pairing,
    pub f_pairing: Pairing,
    /// `L`, the span of `f`.
    pub image_span: Subspace,
    /// `M ⊆ L`, the directions every `g(a)` ignores.
    pub collapsed: Subspace,
    /// `A: E -> L/M`, `dim E x dim E` in representative coordinates.
    pub core: DMatrix<f64>,
    /// `phi`: `L/M` coordinates to `L`-coordinates.
    pub primal_section: PointMap,
    /// `psi`: `L*`-coordinates to `F*`-coordinates.
    pub dual_section: PointMap,
}

/// A validated certificate: `f = phi A` and `g = psi I (A*)^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    parts: DecompositionParts,
    quotient: QuotientMap,
    core: LinearOperator,
    /// `(A*)^{-1}`: `E*` to `(L/M)*`.
    inverse_adjoint: DMatrix<f64>,
}

impl Decomposition {
    pub fn new(parts: DecompositionParts) -> Result<Self, DecompositionError> {
        let n = parts.e_pairing.dim();
        let m = parts.f_pairing.dim();
        if n == 0 {
            return Err(DecompositionError::Dimension { what: "E", expected: 1, found: 0 });
        }
        if m == 0 {
            return Err(DecompositionError::Dimension { what: "F", expected: 1, found: 0 });
        }
        for (what, space) in [("L", &parts.image_span), ("M", &parts.collapsed)] {
            if space.ambient_dim() != m {
                return Err(DecompositionError::Dimension {
                    what,
                    expected: m,
                    found: space.ambient_dim(),
                });
            }
        }
        let quotient = quotient_projection(&parts.image_span, &parts.collapsed)
            .map_err(DecompositionError::NotNested)?;
        let l = parts.image_span.rank();
        let q = quotient.dim();
        if q != n {
            return Err(DecompositionError::Dimension {
                what: "L/M",
                expected: n,
                found: q,
            });
        }
        if parts.core.shape() != (n, n) {
            return Err(DecompositionError::Dimension {
                what: "A rows",
                expected: n,
                found: parts.core.nrows(),
            });
        }
        let dims = [
            ("phi domain", q, parts.primal_section.domain_dim()),
            ("phi codomain", l, parts.primal_section.codomain_dim()),
            ("psi domain", l, parts.dual_section.domain_dim()),
            ("psi codomain", m, parts.dual_section.codomain_dim()),
        ];
        for (what, expected, found) in dims {
            if expected != found {
                return Err(DecompositionError::Dimension { what, expected, found });
            }
        }

        let core = LinearOperator::new(
            parts.core.clone(),
            parts.e_pairing.clone(),
            Pairing::standard(n),
        )?;
        let cond = core.condition_number();
        if !(cond < INVERTIBILITY_BOUND) {
            return Err(DecompositionError::NotInvertible(cond));
        }
        let inverse_adjoint = core
            .adjoint()
            .inverse()
            .map_err(|_| DecompositionError::NotInvertible(cond))?
            .matrix()
            .clone();

        let dec = Self {
            parts,
            quotient,
            core,
            inverse_adjoint,
        };
        if let Some((index, defect)) = dec.worst_primal_section() {
            if defect > SECTION_TOL * (1.0 + dec.parts.primal_section.samples()[index].0.norm()) {
                return Err(DecompositionError::PrimalSection { index, defect });
            }
        }
        if let Some((index, defect)) = dec.worst_dual_section() {
            if defect > SECTION_TOL * (1.0 + dec.parts.dual_section.samples()[index].0.norm()) {
                return Err(DecompositionError::DualSection { index, defect });
            }
        }
        Ok(dec)
    }

    pub fn parts(&self) -> &DecompositionParts {
        &self.parts
    }

    pub fn into_parts(self) -> DecompositionParts {
        self.parts
    }

    pub fn e_pairing(&self) -> &Pairing {
        &self.parts.e_pairing
    }

    pub fn f_pairing(&self) -> &Pairing {
        &self.parts.f_pairing
    }

    pub fn image_span(&self) -> &Subspace {
        &self.parts.image_span
    }

    pub fn collapsed(&self) -> &Subspace {
        &self.parts.collapsed
    }

    pub fn quotient(&self) -> &QuotientMap {
        &self.quotient
    }

    /// `A` with pairings `(G_E, standard)`.
    pub fn core(&self) -> &LinearOperator {
        &self.core
    }

    pub fn inverse_adjoint(&self) -> &DMatrix<f64> {
        &self.inverse_adjoint
    }

    pub fn primal_section(&self) -> &PointMap {
        &self.parts.primal_section
    }

    pub fn dual_section(&self) -> &PointMap {
        &self.parts.dual_section
    }

    pub fn n(&self) -> usize {
        self.parts.e_pairing.dim()
    }

    pub fn m(&self) -> usize {
        self.parts.f_pairing.dim()
    }

    /// `A x`, the point where `phi` is evaluated for `f(x)`.
    pub fn primal_key(&self, x: &DVector<f64>) -> DVector<f64> {
        self.core.apply(x)
    }

    /// `I (A*)^{-1} a`, the point where `psi` is evaluated for `g(a)`.
    pub fn dual_key(&self, alpha: &DVector<f64>) -> DVector<f64> {
        self.quotient.lift(&(&self.inverse_adjoint * alpha))
    }

    /// Canonical restriction `R: F* -> L*`.
    pub fn restrict(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.parts
            .image_span
            .basis()
            .tr_mul(&(self.parts.f_pairing.gram() * beta))
    }

    /// Quotient projection of `L`-coordinates.
    pub fn project(&self, l_coords: &DVector<f64>) -> DVector<f64> {
        self.quotient.project(l_coords)
    }

    /// The extension of `lambda in L*` that vanishes on the pairing-orthogonal
    /// complement `{y : y^T G_F b = 0 for b in L}`, i.e. `B_L (B_L^T G_F B_L)^{-1} lambda`.
    ///
    /// When that complement is not a complement (possible for indefinite
    /// pairings) the extension vanishing on the Euclidean complement,
    /// `G_F^{-1} B_L lambda`, is used instead.
    pub fn zero_extension(&self, lambda: &DVector<f64>) -> DVector<f64> {
        zero_extension(&self.parts.image_span, &self.parts.f_pairing, lambda)
    }

    /// `f(x) = B_L phi(A x)`, if `phi` has a sample at `A x`.
    pub fn eval_f(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.parts
            .primal_section
            .lookup(&self.primal_key(x), SECTION_KEY_TOL)
            .map(|y| self.parts.image_span.embed(y))
    }

    /// `g(a) = psi(I (A*)^{-1} a)`, if `psi` has a sample there.
    pub fn eval_g(&self, alpha: &DVector<f64>) -> Option<DVector<f64>> {
        self.parts
            .dual_section
            .lookup(&self.dual_key(alpha), SECTION_KEY_TOL)
            .cloned()
    }

    /// Largest `|P phi(z) - z|` over the samples of `phi`, with its index.
    pub fn worst_primal_section(&self) -> Option<(usize, f64)> {
        worst(self.parts.primal_section.samples().iter().map(|(z, y)| {
            (self.project(y) - z).norm()
        }))
    }

    /// Largest `|R psi(lambda) - lambda|` over the samples of `psi`.
    pub fn worst_dual_section(&self) -> Option<(usize, f64)> {
        worst(self.parts.dual_section.samples().iter().map(|(lambda, beta)| {
            (self.restrict(beta) - lambda).norm()
        }))
    }
}

fn worst(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
}

pub(crate) fn zero_extension(
    span: &Subspace,
    f_pairing: &Pairing,
    lambda: &DVector<f64>,
) -> DVector<f64> {
    let basis = span.basis();
    let compressed = basis.tr_mul(&(f_pairing.gram() * basis));
    let op = LinearOperator::with_standard_pairings(compressed.clone());
    if op.condition_number() < INVERTIBILITY_BOUND {
        if let Some(c) = compressed.lu().solve(lambda) {
            return basis * c;
        }
    }
    f_pairing.solve_vec(&(basis * lambda))
}

/// Builds the instance `f(x) = phi(A x)`, `g(a) = psi(I (A*)^{-1} a)` on the
/// given grids. Every grid point must hit a sample of the section tables.
pub fn synthesize(
    dec: &Decomposition,
    x_grid: &[DVector<f64>],
    alpha_grid: &[DVector<f64>],
) -> Result<Instance, DecompositionError> {
    let n = dec.n();
    let m = dec.m();
    let mut f_samples = Vec::with_capacity(x_grid.len());
    for (index, x) in x_grid.iter().enumerate() {
        if x.len() != n {
            return Err(DecompositionError::Dimension { what: "x grid point", expected: n, found: x.len() });
        }
        let fx = dec
            .eval_f(x)
            .ok_or(DecompositionError::Coverage { map: "phi", index })?;
        f_samples.push((x.clone(), fx));
    }
    let mut g_samples = Vec::with_capacity(alpha_grid.len());
    for (index, alpha) in alpha_grid.iter().enumerate() {
        if alpha.len() != n {
            return Err(DecompositionError::Dimension {
                what: "alpha grid point",
                expected: n,
                found: alpha.len(),
            });
        }
        let ga = dec
            .eval_g(alpha)
            .ok_or(DecompositionError::Coverage { map: "psi", index })?;
        g_samples.push((alpha.clone(), ga));
    }
    let f = PointMap::new(n, m, f_samples)?;
    let g = PointMap::new(n, m, g_samples)?;
    Ok(Instance::new(
        dec.e_pairing().clone(),
        dec.f_pairing().clone(),
        f,
        g,
    )?)
}

/// One checked clause of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Clause {
    fn new(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub scale: f64,
    pub clauses: Vec<Clause>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

pub const CLAUSE_NESTED: &str = "M in L";
pub const CLAUSE_INVERTIBLE: &str = "A invertible";
pub const CLAUSE_PRIMAL_SECTION: &str = "P phi = id";
pub const CLAUSE_DUAL_SECTION: &str = "R psi = id";
pub const CLAUSE_F: &str = "f = phi A";
pub const CLAUSE_G: &str = "g = psi I (A*)^-1";
pub const CLAUSE_EQUATION: &str = "equation residual";

/// Checks every clause of the certificate against `inst`. Failures are
/// reported, never raised; a missing section sample counts as an infinite
/// residual.
pub fn verify_decomposition(dec: &Decomposition, inst: &Instance) -> VerificationReport {
    let scale = inst.scale();
    let tol = VERIFY_TOL * scale;
    if inst.n() != dec.n() || inst.m() != dec.m() {
        return VerificationReport {
            scale,
            clauses: vec![Clause::new("dimensions", f64::INFINITY, 0.0)],
        };
    }
    let mut clauses = Vec::with_capacity(7);
    clauses.push(Clause::new(
        CLAUSE_NESTED,
        dec.image_span().containment_gap(dec.collapsed()),
        CONTAINMENT_TOL.max(tol),
    ));
    clauses.push(Clause {
        name: CLAUSE_INVERTIBLE,
        value: dec.core().condition_number(),
        threshold: INVERTIBILITY_BOUND,
        passed: dec.core().condition_number() < INVERTIBILITY_BOUND,
    });
    clauses.push(Clause::new(
        CLAUSE_PRIMAL_SECTION,
        dec.worst_primal_section().map_or(0.0, |(_, v)| v),
        tol,
    ));
    clauses.push(Clause::new(
        CLAUSE_DUAL_SECTION,
        dec.worst_dual_section().map_or(0.0, |(_, v)| v),
        tol,
    ));
    let f_defect = inst
        .f()
        .samples()
        .iter()
        .map(|(x, fx)| dec.eval_f(x).map_or(f64::INFINITY, |y| (y - fx).norm()))
        .fold(0.0, f64::max);
    clauses.push(Clause::new(CLAUSE_F, f_defect, tol));
    let g_defect = inst
        .g()
        .samples()
        .iter()
        .map(|(a, ga)| dec.eval_g(a).map_or(f64::INFINITY, |b| (b - ga).norm()))
        .fold(0.0, f64::max);
    clauses.push(Clause::new(CLAUSE_G, g_defect, tol));
    let eq = residual(inst).map_or(f64::INFINITY, |r| r.max_abs_residual);
    clauses.push(Clause::new(CLAUSE_EQUATION, eq, tol));
    VerificationReport { scale, clauses }
}
