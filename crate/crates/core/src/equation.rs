//! Sampled map pairs and residual checks for `<f(x), g(a)> = <x, a>`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{LinalgError, LinearOperator, Pairing};

/// Inputs closer than this are treated as the same point.
pub const DUPLICATE_INPUT_TOL: f64 = 1e-12;
/// Duplicate inputs must carry outputs this close.
pub const WELL_DEFINED_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquationError {
    #[error("sample {index}: {side} has {found} entries, expected {expected}")]
    SampleDimension {
        index: usize,
        side: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("sample {index}: non-finite entry")]
    NonFinite { index: usize },

    #[error("samples {first} and {second} share an input but their outputs differ by {gap:e}")]
    IllDefined { first: usize, second: usize, gap: f64 },

    #[error("{which} has dimension {found}, expected {expected}")]
    InstanceDimension {
        which: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("instance has no {0} samples")]
    EmptyInstance(&'static str),

    #[error("cannot fit a linear map to an empty sample table")]
    EmptySamples,

    #[error("map is not linear: fit residual {residual:e} exceeds {threshold:e}")]
    NotLinear { residual: f64, threshold: f64 },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A finite sample table of a possibly nonlinear map `R^p -> R^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    domain_dim: usize,
    codomain_dim: usize,
    samples: Vec<(DVector<f64>, DVector<f64>)>,
}

impl PointMap {
    pub fn new(
        domain_dim: usize,
        codomain_dim: usize,
        samples: Vec<(DVector<f64>, DVector<f64>)>,
    ) -> Result<Self, EquationError> {
        for (index, (x, y)) in samples.iter().enumerate() {
            if x.len() != domain_dim {
                return Err(EquationError::SampleDimension {
                    index,
                    side: "input",
                    expected: domain_dim,
                    found: x.len(),
                });
            }
            if y.len() != codomain_dim {
                return Err(EquationError::SampleDimension {
                    index,
                    side: "output",
                    expected: codomain_dim,
                    found: y.len(),
                });
            }
            if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
                return Err(EquationError::NonFinite { index });
            }
        }
        for i in 0..samples.len() {
            for j in (i + 1)..samples.len() {
                if (&samples[i].0 - &samples[j].0).norm() <= DUPLICATE_INPUT_TOL {
                    let gap = (&samples[i].1 - &samples[j].1).norm();
                    if gap > WELL_DEFINED_TOL {
                        return Err(EquationError::IllDefined {
                            first: i,
                            second: j,
                            gap,
                        });
                    }
                }
            }
        }
        Ok(Self {
            domain_dim,
            codomain_dim,
            samples,
        })
    }

    /// Tabulates `map` on `inputs`.
    pub fn tabulate<F>(
        domain_dim: usize,
        codomain_dim: usize,
        inputs: &[DVector<f64>],
        mut map: F,
    ) -> Result<Self, EquationError>
    where
        F: FnMut(&DVector<f64>) -> DVector<f64>,
    {
        let samples = inputs.iter().map(|x| (x.clone(), map(x))).collect();
        Self::new(domain_dim, codomain_dim, samples)
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn samples(&self) -> &[(DVector<f64>, DVector<f64>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn inputs(&self) -> Vec<DVector<f64>> {
        self.samples.iter().map(|(x, _)| x.clone()).collect()
    }

    pub fn outputs(&self) -> Vec<DVector<f64>> {
        self.samples.iter().map(|(_, y)| y.clone()).collect()
    }

    /// Output of the first sample whose input lies within `tol` of `key`.
    pub fn lookup(&self, key: &DVector<f64>, tol: f64) -> Option<&DVector<f64>> {
        self.samples
            .iter()
            .find(|(x, _)| x.len() == key.len() && (x - key).norm() <= tol)
            .map(|(_, y)| y)
    }

    /// Applies `transform` to every output.
    pub fn map_outputs<F>(&self, codomain_dim: usize, mut transform: F) -> Result<Self, EquationError>
    where
        F: FnMut(&DVector<f64>) -> DVector<f64>,
    {
        let samples = self
            .samples
            .iter()
            .map(|(x, y)| (x.clone(), transform(y)))
            .collect();
        Self::new(self.domain_dim, codomain_dim, samples)
    }
}

/// The data of one equation: pairings on `E` (dim `n`) and `F` (dim `m`),
/// `f: E -> F` and `g: E* -> F*` as sample tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    e_pairing: Pairing,
    f_pairing: Pairing,
    f: PointMap,
    g: PointMap,
}

impl Instance {
    pub fn new(
        e_pairing: Pairing,
        f_pairing: Pairing,
        f: PointMap,
        g: PointMap,
    ) -> Result<Self, EquationError> {
        let n = e_pairing.dim();
        let m = f_pairing.dim();
        if n == 0 {
            return Err(EquationError::InstanceDimension {
                which: "E",
                expected: 1,
                found: 0,
            });
        }
        if m == 0 {
            return Err(EquationError::InstanceDimension {
                which: "F",
                expected: 1,
                found: 0,
            });
        }
        let checks = [
            ("f domain", n, f.domain_dim()),
            ("f codomain", m, f.codomain_dim()),
            ("g domain", n, g.domain_dim()),
            ("g codomain", m, g.codomain_dim()),
        ];
        for (which, expected, found) in checks {
            if expected != found {
                return Err(EquationError::InstanceDimension {
                    which,
                    expected,
                    found,
                });
            }
        }
        Ok(Self {
            e_pairing,
            f_pairing,
            f,
            g,
        })
    }

    pub fn e_pairing(&self) -> &Pairing {
        &self.e_pairing
    }

    pub fn f_pairing(&self) -> &Pairing {
        &self.f_pairing
    }

    pub fn f(&self) -> &PointMap {
        &self.f
    }

    pub fn g(&self) -> &PointMap {
        &self.g
    }

    /// `dim E`.
    pub fn n(&self) -> usize {
        self.e_pairing.dim()
    }

    /// `dim F`.
    pub fn m(&self) -> usize {
        self.f_pairing.dim()
    }

    /// `1 + max |<x, a>|` over the sample grid; the reference magnitude for
    /// relative tolerances.
    pub fn scale(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (x, _) in self.f.samples() {
            for (a, _) in self.g.samples() {
                best = best.max(self.e_pairing.eval(x, a).abs());
            }
        }
        1.0 + best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    /// `(f sample index, g sample index)` of the worst pair.
    pub argmax_pair: (usize, usize),
    pub pair_count: usize,
}

/// Worst violation of the equation over every pair of samples.
pub fn residual(inst: &Instance) -> Result<ResidualReport, EquationError> {
    if inst.f.is_empty() {
        return Err(EquationError::EmptyInstance("f"));
    }
    if inst.g.is_empty() {
        return Err(EquationError::EmptyInstance("g"));
    }
    // Precompute G_F g(a) and G_E a so each pair is two dot products.
    let g_images: Vec<(DVector<f64>, DVector<f64>)> = inst
        .g
        .samples()
        .iter()
        .map(|(a, ga)| (inst.e_pairing.gram() * a, inst.f_pairing.gram() * ga))
        .collect();
    let mut worst = ResidualReport {
        max_abs_residual: 0.0,
        argmax_pair: (0, 0),
        pair_count: inst.f.len() * inst.g.len(),
    };
    for (i, (x, fx)) in inst.f.samples().iter().enumerate() {
        for (j, (ga_e, ga_f)) in g_images.iter().enumerate() {
            let r = (fx.dot(ga_f) - x.dot(ga_e)).abs();
            if r > worst.max_abs_residual {
                worst.max_abs_residual = r;
                worst.argmax_pair = (i, j);
            }
        }
    }
    Ok(worst)
}

/// Least-squares linear fit `S` minimizing `sum |S x_i - y_i|^2`, taking the
/// minimal-Frobenius-norm solution when the inputs do not span.
///
/// Succeeds iff `max |S x_i - y_i| <= rel_tol * (1 + max |y_i|)`. The result
/// carries standard pairings.
pub fn fit_linear(pm: &PointMap, rel_tol: f64) -> Result<LinearOperator, EquationError> {
    if pm.is_empty() {
        return Err(EquationError::EmptySamples);
    }
    let inputs = DMatrix::from_columns(&pm.inputs());
    let outputs = DMatrix::from_columns(&pm.outputs());
    let matrix = &outputs * pseudo_inverse(&inputs);

    let mut worst: f64 = 0.0;
    let mut largest: f64 = 0.0;
    for (x, y) in pm.samples() {
        worst = worst.max((&matrix * x - y).norm());
        largest = largest.max(y.norm());
    }
    let threshold = rel_tol * (1.0 + largest);
    if !(worst <= threshold) {
        return Err(EquationError::NotLinear {
            residual: worst,
            threshold,
        });
    }
    Ok(LinearOperator::with_standard_pairings(matrix))
}

/// Moore-Penrose pseudo-inverse with the usual `max(rows, cols) * eps`
/// relative cutoff.
fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let cutoff = largest * rows.max(cols) as f64 * f64::EPSILON;
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += v_t.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}
