use nalgebra::{DMatrix, DVector};

use super::{LinalgError, LinearOperator, Pairing, CONTAINMENT_TOL, ORTHONORMAL_TOL};

/// A linear subspace of `R^d` held as an orthonormal basis (columns).
///
/// Bases produced by this module are canonical for the subspace: they come
/// from a pivoted sweep over the coordinate axes, so `R^d` itself always gets
/// the standard basis and a line gets the unit vector whose largest entry is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

/// Singular-value summary behind a rank decision.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Absolute cutoff: values at or below it count as zero.
    pub tolerance_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `{a : <x, a> = 0 for all x in V}`, a subspace of the dual.
    Left,
    /// `{x : <x, a> = 0 for all a in V}`, a subspace of the primal.
    Right,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps an existing basis after checking `B^T B = I` entrywise.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self, LinalgError> {
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        if basis.ncols() > basis.nrows() {
            return Err(LinalgError::DimensionMismatch {
                expected: basis.nrows(),
                found: basis.ncols(),
            });
        }
        let r = basis.ncols();
        let dev = (basis.transpose() * &basis - DMatrix::<f64>::identity(r, r)).amax();
        if dev > ORTHONORMAL_TOL {
            return Err(LinalgError::NotOrthonormal(dev));
        }
        Ok(Self::from_basis_unchecked(basis))
    }

    pub(crate) fn from_basis_unchecked(basis: DMatrix<f64>) -> Self {
        Self {
            ambient_dim: basis.nrows(),
            basis,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    /// `ambient_dim x rank`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        self.basis
            .column_iter()
            .map(|c| c.into_owned())
            .collect()
    }

    /// Coordinates of `v` in this basis, `B^T v`.
    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(v)
    }

    /// `B c`.
    pub fn embed(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords
    }

    /// Euclidean orthogonal projection onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.embed(&self.coords(v))
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest distance from a basis vector of `other` to `self`.
    pub fn containment_gap(&self, other: &Subspace) -> f64 {
        other
            .basis
            .column_iter()
            .map(|c| self.distance(&c.into_owned()))
            .fold(0.0, f64::max)
    }

    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim && self.containment_gap(other) <= tol
    }

    /// Mutual containment, which also forces equal rank.
    pub fn same_span(&self, other: &Subspace, tol: f64) -> bool {
        self.rank() == other.rank()
            && self.contains_subspace(other, tol)
            && other.contains_subspace(self, tol)
    }

    /// The Euclidean orthogonal complement in `R^d`.
    pub fn orthogonal_complement(&self) -> Subspace {
        let d = self.ambient_dim;
        let w = DMatrix::<f64>::identity(d, d) - &self.basis * self.basis.transpose();
        Subspace::from_basis_unchecked(canonical_basis(w, d - self.rank()))
    }
}

/// Span of `vectors`; fails on an empty list since the ambient dimension is
/// then unknown. Use [`orthonormal_span_in`] to span possibly-empty lists.
pub fn orthonormal_span(vectors: &[DVector<f64>], rel_tol: f64) -> Result<Subspace, LinalgError> {
    let d = vectors
        .first()
        .map(|v| v.len())
        .ok_or(LinalgError::DimensionUnspecified)?;
    orthonormal_span_in(d, vectors, rel_tol)
}

/// Span of `vectors` in `R^ambient_dim`. Singular values at or below
/// `rel_tol * sigma_max` count as zero.
pub fn orthonormal_span_in(
    ambient_dim: usize,
    vectors: &[DVector<f64>],
    rel_tol: f64,
) -> Result<Subspace, LinalgError> {
    check_tol(rel_tol)?;
    for v in vectors {
        if v.len() != ambient_dim {
            return Err(LinalgError::DimensionMismatch {
                expected: ambient_dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
    }
    if vectors.is_empty() || ambient_dim == 0 {
        return Ok(Subspace::zero(ambient_dim));
    }
    let stacked = DMatrix::from_columns(vectors);
    let (u, report) = left_singular_basis(&stacked, rel_tol);
    let u = u.columns(0, report.rank).into_owned();
    Ok(Subspace::from_basis_unchecked(canonical_basis(u, report.rank)))
}

/// Rank of `matrix` with singular values at or below `rel_tol * sigma_max`
/// treated as zero.
pub fn rank_report(matrix: &DMatrix<f64>, rel_tol: f64) -> RankReport {
    if matrix.is_empty() {
        return RankReport {
            rank: 0,
            singular_values: Vec::new(),
            tolerance_used: 0.0,
        };
    }
    let mut sv: Vec<f64> = matrix.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    summarize(sv, rel_tol)
}

fn summarize(singular_values: Vec<f64>, rel_tol: f64) -> RankReport {
    let largest = singular_values.first().copied().unwrap_or(0.0);
    let tolerance_used = rel_tol * largest;
    let rank = if largest > 0.0 {
        singular_values.iter().filter(|&&s| s > tolerance_used).count()
    } else {
        0
    };
    RankReport {
        rank,
        singular_values,
        tolerance_used,
    }
}

/// Annihilator of `v` under `pairing`; see [`Side`]. The result always has
/// rank `ambient_dim - rank(v)`.
pub fn annihilator(v: &Subspace, pairing: &Pairing, side: Side) -> Result<Subspace, LinalgError> {
    let d = pairing.dim();
    if v.ambient_dim() != d {
        return Err(LinalgError::DimensionMismatch {
            expected: d,
            found: v.ambient_dim(),
        });
    }
    let r = v.rank();
    if r == 0 {
        return Ok(Subspace::full(d));
    }
    // Left:  x^T G a = 0 for x in V  <=>  (G^T x) . a = 0
    // Right: x^T G a = 0 for a in V  <=>  (G a) . x = 0
    let image = match side {
        Side::Left => pairing.gram().transpose() * v.basis(),
        Side::Right => pairing.gram() * v.basis(),
    };
    let (u, _) = left_singular_basis(&image, f64::MIN_POSITIVE);
    let u = u.columns(0, r).into_owned();
    let w = DMatrix::<f64>::identity(d, d) - &u * u.transpose();
    Ok(Subspace::from_basis_unchecked(canonical_basis(w, d - r)))
}

/// Concrete model of `L / M`: representatives are the Euclidean complement of
/// `M` inside `L`, so the quotient norm of a coset is the norm of its
/// representative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientMap {
    projection: LinearOperator,
    representatives: Subspace,
    rep_coords: DMatrix<f64>,
}

impl QuotientMap {
    /// `P`: `L`-coordinates to representative coordinates.
    pub fn projection(&self) -> &LinearOperator {
        &self.projection
    }

    /// Representatives as a subspace of the ambient space.
    pub fn representatives(&self) -> &Subspace {
        &self.representatives
    }

    /// Representative basis in `L`-coordinates (`rank L x dim L/M`).
    pub fn rep_coords(&self) -> &DMatrix<f64> {
        &self.rep_coords
    }

    pub fn dim(&self) -> usize {
        self.rep_coords.ncols()
    }

    /// `P y` for `L`-coordinates `y`.
    pub fn project(&self, l_coords: &DVector<f64>) -> DVector<f64> {
        self.rep_coords.tr_mul(l_coords)
    }

    /// The representative of quotient coordinates `z`, in `L`-coordinates.
    pub fn lift(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.rep_coords * z
    }
}

pub fn quotient_projection(l: &Subspace, m: &Subspace) -> Result<QuotientMap, LinalgError> {
    if l.ambient_dim() != m.ambient_dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: l.ambient_dim(),
            found: m.ambient_dim(),
        });
    }
    let gap = l.containment_gap(m);
    if gap > CONTAINMENT_TOL {
        return Err(LinalgError::NotContained(gap));
    }
    let lr = l.rank();
    let mr = m.rank();
    if mr > lr {
        return Err(LinalgError::NotContained(f64::INFINITY));
    }
    let m_in_l = l.basis().tr_mul(m.basis());
    let w = if mr == 0 {
        DMatrix::identity(lr, lr)
    } else {
        let (u, _) = left_singular_basis(&m_in_l, f64::MIN_POSITIVE);
        let u = u.columns(0, mr).into_owned();
        DMatrix::<f64>::identity(lr, lr) - &u * u.transpose()
    };
    let rep_coords = canonical_basis(w, lr - mr);
    let representatives = Subspace::from_basis_unchecked(l.basis() * &rep_coords);
    let projection = LinearOperator::with_standard_pairings(rep_coords.transpose());
    Ok(QuotientMap {
        projection,
        representatives,
        rep_coords,
    })
}

fn check_tol(rel_tol: f64) -> Result<(), LinalgError> {
    if rel_tol > 0.0 && rel_tol.is_finite() {
        Ok(())
    } else {
        Err(LinalgError::BadTolerance(rel_tol))
    }
}

/// Left singular vectors sorted by descending singular value (all of them,
/// callers truncate) with the rank summary at `rel_tol`.
fn left_singular_basis(matrix: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, RankReport) {
    let svd = matrix.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let report = summarize(sv, rel_tol);
    let cols: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| u.column(i).into_owned())
        .collect();
    let basis = if cols.is_empty() {
        DMatrix::zeros(matrix.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    (basis, report)
}

/// Canonical orthonormal basis of the range of the projector `W W^T`.
///
/// Pivoted sweep: at each step take the coordinate axis with the largest
/// remaining projection, normalize its image and deflate. `rank` is the rank
/// of the projector.
fn canonical_basis(mut w: DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let d = w.nrows();
    let mut out = DMatrix::zeros(d, rank);
    for k in 0..rank {
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..d {
            let n2 = w.row(i).norm_squared();
            if n2 > best {
                best = n2;
                pivot = i;
            }
        }
        let row = w.row(pivot).transpose();
        let mut q: DVector<f64> = &w * row;
        for j in 0..k {
            let c = out.column(j).dot(&q);
            q.axpy(-c, &out.column(j), 1.0);
        }
        let norm = q.norm();
        if norm > 0.0 {
            q /= norm;
        }
        if q[pivot] < 0.0 {
            q = -q;
        }
        // rounding dust on axis-aligned spans
        q.apply(|e| {
            if e.abs() < 8.0 * f64::EPSILON {
                *e = 0.0;
            }
        });
        let norm = q.norm();
        if norm > 0.0 {
            q /= norm;
        }
        let coeffs = q.tr_mul(&w);
        w -= &q * coeffs;
        out.set_column(k, &q);
    }
    out
}
