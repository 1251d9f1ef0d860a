use nalgebra::{DMatrix, DVector};

use super::{LinalgError, Pairing, DEFAULT_REL_TOL};

/// Condition numbers at or above this count as "not invertible".
pub const INVERTIBILITY_BOUND: f64 = 1e8;

/// A dense matrix between two coordinate spaces, each carrying the pairing
/// with its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    matrix: DMatrix<f64>,
    domain_pairing: Pairing,
    codomain_pairing: Pairing,
}

impl LinearOperator {
    pub fn new(
        matrix: DMatrix<f64>,
        domain_pairing: Pairing,
        codomain_pairing: Pairing,
    ) -> Result<Self, LinalgError> {
        if matrix.ncols() != domain_pairing.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: domain_pairing.dim(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != codomain_pairing.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: codomain_pairing.dim(),
                found: matrix.nrows(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self {
            matrix,
            domain_pairing,
            codomain_pairing,
        })
    }

    pub fn with_standard_pairings(matrix: DMatrix<f64>) -> Self {
        let domain_pairing = Pairing::standard(matrix.ncols());
        let codomain_pairing = Pairing::standard(matrix.nrows());
        Self {
            matrix,
            domain_pairing,
            codomain_pairing,
        }
    }

    /// Same matrix, new pairings.
    pub fn with_pairings(self, domain: Pairing, codomain: Pairing) -> Result<Self, LinalgError> {
        Self::new(self.matrix, domain, codomain)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn domain_pairing(&self) -> &Pairing {
        &self.domain_pairing
    }

    pub fn codomain_pairing(&self) -> &Pairing {
        &self.codomain_pairing
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// The operator `S*` with `<S x, b> = <x, S* b>`, i.e.
    /// `G_dom^{-1} S^T G_cod`.
    ///
    /// `S*` runs from the codomain's dual to the domain's dual, so its
    /// pairings are the transposed originals. Transposition keeps
    /// `adjoint(adjoint(S)) == S` for non-symmetric Gram matrices.
    pub fn adjoint(&self) -> LinearOperator {
        let rhs = self.matrix.transpose() * self.codomain_pairing.gram();
        let matrix = self.domain_pairing.solve(&rhs);
        LinearOperator {
            matrix,
            domain_pairing: self.codomain_pairing.transposed(),
            codomain_pairing: self.domain_pairing.transposed(),
        }
    }

    /// Descending singular values.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.matrix.is_empty() {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self.matrix.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Largest singular value (Euclidean operator norm).
    pub fn operator_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// `sigma_max / sigma_min`; infinite for non-square matrices, the zero
    /// matrix, or `sigma_min <= DEFAULT_REL_TOL * sigma_max`.
    pub fn condition_number(&self) -> f64 {
        if self.matrix.nrows() != self.matrix.ncols() {
            return f64::INFINITY;
        }
        let sv = self.singular_values();
        let (Some(&largest), Some(&smallest)) = (sv.first(), sv.last()) else {
            return f64::INFINITY;
        };
        if !(largest > 0.0) || smallest <= DEFAULT_REL_TOL * largest {
            return f64::INFINITY;
        }
        largest / smallest
    }

    pub fn is_invertible(&self) -> bool {
        self.condition_number() < INVERTIBILITY_BOUND
    }

    /// `S^{-1}`, with pairings swapped to match.
    pub fn inverse(&self) -> Result<LinearOperator, LinalgError> {
        let cond = self.condition_number();
        if !(cond < INVERTIBILITY_BOUND) {
            return Err(LinalgError::NotInvertible(cond));
        }
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(LinalgError::NotInvertible(cond))?;
        Ok(LinearOperator {
            matrix: inv,
            domain_pairing: self.codomain_pairing.clone(),
            codomain_pairing: self.domain_pairing.clone(),
        })
    }
}
