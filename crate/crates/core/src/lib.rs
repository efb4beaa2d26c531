//! Numerical laboratory for block-observable scaling analysis of many-body
//! correlation functions.
//!
//! The crate computes renormalized l-point correlations of block observables
//! `A_R = R^{-γ} ∫ A(x) f(x/R) dx` at finite scale `R`, extracts scaling
//! exponents from geometric scale sweeps, evaluates the closed scaling-limit
//! integrals, and checks the structural properties of the underlying
//! quasifree thermal models: detailed balance, temperature independence of
//! commutator spectra, clustering of higher cumulants, commutator decay, and
//! critical slowing down with dynamic time rescaling.
//!
//! Module map:
//! - [`kernels`]: averaging kernels (smooth bump / sharp ball), their Fourier
//!   transforms, scaling identities and self-convolutions.
//! - [`correlation`]: full ↔ truncated correlation conversion over the
//!   partition lattice and quasifree (pairing) hierarchies.
//! - [`spectral`]: the quasifree KMS model class in (ω, k) space.
//! - [`scaling`]: scaled block correlations, scale sweeps, exponent fits,
//!   critical-limit formulas, commutator bounds.
//! - [`dynamics`]: time-dependent block correlations, slowdown flatness and
//!   dynamic-exponent recovery.

pub mod correlation;
pub mod dynamics;
pub mod kernels;
pub mod quad;
pub mod scaling;
pub mod special;
pub mod spectral;
pub mod table;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension n = {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("missing correlation value for index tuple {0:?}")]
    MissingValue(Vec<usize>),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },
    #[error("not integrable: {0}")]
    NotIntegrable(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Surface area of the unit sphere S^{n-1} in ℝⁿ: 2, 2π, 4π for n = 1, 2, 3.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("sphere_area: unsupported dimension {n}"),
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}
