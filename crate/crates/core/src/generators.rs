//! Seeded, reproducible certificates and instances.
//!
//! # Random source
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`, consumed one `u64` at a time. Standard normals use
//! Box-Muller on two consecutive words: `u = ((w >> 11) + 1) * 2^-53` gives a
//! uniform in `(0, 1]`, and `z = sqrt(-2 ln u1) cos(2 pi u2)`. Only the cosine
//! branch is used, so every normal consumes exactly two words.
//!
//! # Draw order
//!
//! 1. `G_E` then `G_F` (nothing drawn for standard pairings),
//! 2. `rank_L` vectors in `R^m` spanning `L`,
//! 3. `rank_M` coefficient vectors in `R^rank_L` spanning `M`,
//! 4. the `n x n` core matrix `A`,
//! 5. the `rank_M x n` weights of the primal nonlinearity,
//! 6. the `(m - rank_L) x rank_L` weights of the dual nonlinearity,
//! 7. the `x` grid, then the `a` grid (`grid_size` points each).
//!
//! Matrices are drawn row-major. Random matrices have their singular values
//! clamped into `[0.5, 2]`, which keeps condition numbers at most 4.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::decomposition::{
    synthesize, zero_extension, Decomposition, DecompositionError, DecompositionParts,
};
use crate::equation::{EquationError, Instance, PointMap};
use crate::linalg::{
    annihilator, orthonormal_span_in, quotient_projection, LinalgError, Pairing, Side,
    DEFAULT_REL_TOL,
};

const CLAMP_MIN: f64 = 0.5;
const CLAMP_MAX: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("rank equation violated: rank_L - rank_M = {rank_l} - {rank_m} must equal n = {n}")]
    RankEquation { n: usize, rank_l: usize, rank_m: usize },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("degenerate draw: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Equation(#[from] EquationError),

    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairingMode {
    Standard,
    RandomSpd,
    RandomInvertible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectionMode {
    Zero,
    Polynomial,
    Trigonometric,
}

impl PairingMode {
    pub const ALL: [PairingMode; 3] = [
        PairingMode::Standard,
        PairingMode::RandomSpd,
        PairingMode::RandomInvertible,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairingMode::Standard => "standard",
            PairingMode::RandomSpd => "random-spd",
            PairingMode::RandomInvertible => "random-invertible",
        }
    }
}

impl SectionMode {
    pub const ALL: [SectionMode; 3] = [
        SectionMode::Zero,
        SectionMode::Polynomial,
        SectionMode::Trigonometric,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionMode::Zero => "zero",
            SectionMode::Polynomial => "polynomial",
            SectionMode::Trigonometric => "trigonometric",
        }
    }
}

impl fmt::Display for PairingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for SectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown pairing mode `{s}`"))
    }
}

impl FromStr for SectionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown section mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// `dim E`.
    pub n: usize,
    /// `dim F`.
    pub m: usize,
    pub rank_l: usize,
    pub rank_m: usize,
    pub pairing_mode: PairingMode,
    pub section_mode: SectionMode,
    pub seed: u64,
    /// Samples per map.
    pub grid_size: usize,
}

impl GenConfig {
    /// `rank_L = m`, `rank_M = m - n`, standard pairings, polynomial sections
    /// and `n + 4` grid points.
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            rank_l: m,
            rank_m: m.saturating_sub(n),
            pairing_mode: PairingMode::Standard,
            section_mode: SectionMode::Polynomial,
            seed,
            grid_size: n + 4,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 || self.m == 0 {
            return Err(GenError::Invalid(format!(
                "dimensions must be positive, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if self.rank_l > self.m {
            return Err(GenError::Invalid(format!(
                "rank_L = {} exceeds m = {}",
                self.rank_l, self.m
            )));
        }
        if self.rank_m > self.rank_l || self.rank_l - self.rank_m != self.n {
            return Err(GenError::RankEquation {
                n: self.n,
                rank_l: self.rank_l,
                rank_m: self.rank_m,
            });
        }
        if self.grid_size < self.n {
            return Err(GenError::Invalid(format!(
                "grid_size = {} cannot span E of dimension {}",
                self.grid_size, self.n
            )));
        }
        Ok(())
    }
}

/// Box-Muller normals over ChaCha8; see the module docs for the exact recipe.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn vector(&mut self, len: usize) -> DVector<f64> {
        DVector::from_iterator(len, (0..len).map(|_| self.normal()))
    }

    /// Row-major draw.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        DMatrix::from_row_slice(rows, cols, &data)
    }

    /// Square matrix with singular values clamped into `[0.5, 2]`.
    pub fn clamped_matrix(&mut self, dim: usize) -> DMatrix<f64> {
        let raw = self.matrix(dim, dim);
        let svd = raw.svd(true, true);
        let s = svd.singular_values.map(|s| s.clamp(CLAMP_MIN, CLAMP_MAX));
        let u = svd.u.expect("requested");
        let v_t = svd.v_t.expect("requested");
        u * DMatrix::from_diagonal(&s) * v_t
    }

    /// Symmetric positive definite with eigenvalues clamped into `[0.5, 2]`.
    pub fn clamped_spd(&mut self, dim: usize) -> DMatrix<f64> {
        let raw = self.matrix(dim, dim);
        let sym = (&raw + raw.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let s = eig.eigenvalues.map(|l| l.abs().clamp(CLAMP_MIN, CLAMP_MAX));
        let q = eig.eigenvectors;
        let g = &q * DMatrix::from_diagonal(&s) * q.transpose();
        // exact symmetry
        (&g + g.transpose()) * 0.5
    }

    fn pairing(&mut self, mode: PairingMode, dim: usize) -> Result<Pairing, GenError> {
        Ok(match mode {
            PairingMode::Standard => Pairing::standard(dim),
            PairingMode::RandomSpd => Pairing::new(self.clamped_spd(dim))?,
            PairingMode::RandomInvertible => Pairing::new(self.clamped_matrix(dim))?,
        })
    }
}

/// A certificate together with the grids its section tables were built on.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub decomposition: Decomposition,
    pub x_grid: Vec<DVector<f64>>,
    pub alpha_grid: Vec<DVector<f64>>,
}

impl Generated {
    pub fn instance(&self) -> Result<Instance, GenError> {
        Ok(synthesize(&self.decomposition, &self.x_grid, &self.alpha_grid)?)
    }
}

fn nonlinearity(mode: SectionMode, weights: &DMatrix<f64>, z: &DVector<f64>) -> DVector<f64> {
    match mode {
        SectionMode::Zero => DVector::zeros(weights.nrows()),
        SectionMode::Polynomial => weights * z.map(|t| t * t),
        SectionMode::Trigonometric => weights * z.map(f64::sin),
    }
}

/// Draws a certificate and its sample grids.
pub fn generate(cfg: &GenConfig) -> Result<Generated, GenError> {
    cfg.validate()?;
    let GenConfig { n, m, rank_l, rank_m, .. } = *cfg;
    let mut src = GaussianSource::new(cfg.seed);

    let e_pairing = src.pairing(cfg.pairing_mode, n)?;
    let f_pairing = src.pairing(cfg.pairing_mode, m)?;

    let span_draws: Vec<DVector<f64>> = (0..rank_l).map(|_| src.vector(m)).collect();
    let span = orthonormal_span_in(m, &span_draws, DEFAULT_REL_TOL)?;
    if span.rank() != rank_l {
        return Err(GenError::Degenerate(format!("L has rank {} < {rank_l}", span.rank())));
    }
    let collapsed_draws: Vec<DVector<f64>> =
        (0..rank_m).map(|_| span.embed(&src.vector(rank_l))).collect();
    let collapsed = orthonormal_span_in(m, &collapsed_draws, DEFAULT_REL_TOL)?;
    if collapsed.rank() != rank_m {
        return Err(GenError::Degenerate(format!(
            "M has rank {} < {rank_m}",
            collapsed.rank()
        )));
    }
    let quotient = quotient_projection(&span, &collapsed)?;
    let core = src.clamped_matrix(n);

    let primal_weights = src.matrix(rank_m, n);
    let dual_slack = annihilator(&span, &f_pairing, Side::Left)?;
    let dual_weights = src.matrix(m - rank_l, rank_l);

    let x_grid: Vec<DVector<f64>> = (0..cfg.grid_size).map(|_| src.vector(n)).collect();
    let alpha_grid: Vec<DVector<f64>> = (0..cfg.grid_size).map(|_| src.vector(n)).collect();

    // phi(z) = K z + (M in L-coordinates) eta(z)
    let collapsed_in_span = span.basis().tr_mul(collapsed.basis());
    let phi = |z: &DVector<f64>| {
        quotient.lift(z) + &collapsed_in_span * nonlinearity(cfg.section_mode, &primal_weights, z)
    };
    // psi(l) = zero-extension(l) + (annihilator of L) theta(l)
    let psi = |l: &DVector<f64>| {
        zero_extension(&span, &f_pairing, l)
            + dual_slack.basis() * nonlinearity(cfg.section_mode, &dual_weights, l)
    };

    // Keys are computed through a provisional certificate so they match the
    // lookups made by `synthesize` bit for bit.
    let probe = Decomposition::new(DecompositionParts {
        e_pairing: e_pairing.clone(),
        f_pairing: f_pairing.clone(),
        image_span: span.clone(),
        collapsed: collapsed.clone(),
        core: core.clone(),
        primal_section: PointMap::new(n, rank_l, vec![])?,
        dual_section: PointMap::new(rank_l, m, vec![])?,
    })?;
    let phi_keys: Vec<DVector<f64>> = x_grid.iter().map(|x| probe.primal_key(x)).collect();
    let psi_keys: Vec<DVector<f64>> = alpha_grid.iter().map(|a| probe.dual_key(a)).collect();

    let decomposition = Decomposition::new(DecompositionParts {
        e_pairing,
        f_pairing: f_pairing.clone(),
        image_span: span.clone(),
        collapsed: collapsed.clone(),
        core,
        primal_section: PointMap::tabulate(n, rank_l, &phi_keys, phi)?,
        dual_section: PointMap::tabulate(rank_l, m, &psi_keys, psi)?,
    })?;
    Ok(Generated {
        decomposition,
        x_grid,
        alpha_grid,
    })
}

pub fn gen_decomposition(cfg: &GenConfig) -> Result<Decomposition, GenError> {
    generate(cfg).map(|g| g.decomposition)
}

/// `synthesize(gen_decomposition(cfg))` on the generated grids.
pub fn gen_instance(cfg: &GenConfig) -> Result<Instance, GenError> {
    generate(cfg)?.instance()
}

/// A spread of valid configurations: `n` in `1..=4`, `m` in `n..=n+4`, every
/// pairing and section mode, seeds `base_seed..`.
pub fn config_sweep(count: usize, base_seed: u64, pairing_modes: &[PairingMode]) -> Vec<GenConfig> {
    let mut out = Vec::with_capacity(count);
    let mut src = GaussianSource::new(base_seed);
    for i in 0..count {
        let n = 1 + i % 4;
        let m = n + (i / 4) % 5;
        let rank_l = n + (src.rng.next_u64() % (m - n + 1) as u64) as usize;
        out.push(GenConfig {
            n,
            m,
            rank_l,
            rank_m: rank_l - n,
            pairing_mode: pairing_modes[(i / 20) % pairing_modes.len()],
            section_mode: SectionMode::ALL[(i / 60 + i) % 3],
            seed: base_seed.wrapping_add(i as u64),
            grid_size: n + 2 + (i % 3),
        });
    }
    out
}
