use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{LinalgError, DEFAULT_REL_TOL};

/// A nondegenerate bilinear form between a space and its dual,
/// `<x, a> = x^T G a`.
///
/// Dimension zero is allowed for the coordinate spaces that show up inside
/// pipelines (for instance a quotient by the whole space).
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    gram: DMatrix<f64>,
}

impl Pairing {
    pub fn new(gram: DMatrix<f64>) -> Result<Self, LinalgError> {
        if gram.nrows() != gram.ncols() {
            return Err(LinalgError::NonSquareGram {
                rows: gram.nrows(),
                cols: gram.ncols(),
            });
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        if gram.nrows() > 0 {
            let sv = gram.singular_values();
            let largest = sv.max();
            let smallest = sv.min();
            if !(largest > 0.0) || smallest <= DEFAULT_REL_TOL * largest {
                return Err(LinalgError::SingularPairing { smallest, largest });
            }
        }
        Ok(Self { gram })
    }

    /// The standard pairing `<x, a> = x . a`.
    pub fn standard(dim: usize) -> Self {
        Self {
            gram: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_rows(dim: usize, rows: &[f64]) -> Result<Self, LinalgError> {
        if rows.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                found: rows.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `x^T G a`.
    pub fn eval(&self, x: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(alpha.len(), self.dim());
        x.dot(&(&self.gram * alpha))
    }

    /// The pairing seen from the dual side: `<a, x>' = <x, a>`.
    pub fn transposed(&self) -> Self {
        Self {
            gram: self.gram.transpose(),
        }
    }

    pub fn is_standard(&self) -> bool {
        self.gram == DMatrix::identity(self.dim(), self.dim())
    }

    /// Symmetric within `1e-12` (relative to the largest entry) with strictly
    /// positive spectrum.
    pub fn is_spd(&self) -> bool {
        let d = self.dim();
        if d == 0 {
            return true;
        }
        let scale = self.gram.amax().max(1.0);
        let asym = (&self.gram - self.gram.transpose()).amax();
        if asym > 1e-12 * scale {
            return false;
        }
        let sym = (&self.gram + self.gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        eig.eigenvalues.iter().all(|&l| l > 0.0)
    }

    /// `G^{-1} rhs`.
    pub(crate) fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        if self.dim() == 0 {
            return DMatrix::zeros(0, rhs.ncols());
        }
        self.gram
            .clone()
            .lu()
            .solve(rhs)
            .expect("pairing gram is invertible by construction")
    }

    /// `G^{-1} v`.
    pub(crate) fn solve_vec(&self, rhs: &DVector<f64>) -> DVector<f64> {
        if self.dim() == 0 {
            return DVector::zeros(0);
        }
        self.gram
            .clone()
            .lu()
            .solve(rhs)
            .expect("pairing gram is invertible by construction")
    }
}
