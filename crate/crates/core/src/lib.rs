//! Dirichlet problems on doubly connected planar domains bounded by two
//! circles, solved by recasting the Schwarz alternating method as a
//! contraction on bounded harmonic functions.
//!
//! The domain `D` is slit twice: once along `σ`, giving the simply connected
//! piece `D₁ = D − σ`, and once along `τ`, giving `D₂ = D − τ`. Each piece is
//! the image of the unit disk under an explicit conformal map built from
//! Jacobi elliptic functions, so harmonic functions on `D₁`, `D₂` are Poisson
//! integrals over arcs of the unit circle. The affine operator
//!
//! ```text
//! F(v)(z) = h(z) + (2π)⁻² ∫_{B₂} K(z, ζ₁) v(φ₂(ζ₁)) ds
//! ```
//!
//! is a contraction with constant `m / 2π`, and its fixed point glues with a
//! companion function on `D₂` into the solution on all of `D`.
//!
//! Module map:
//!
//! - [`geometry`]: circles, annular domains, cut arcs, piecewise boundary data.
//! - [`conformal`]: Möbius normalization, elliptic functions, the slit-annulus maps.
//! - [`poisson`]: Poisson kernel and graded Gauss–Legendre panel rules.
//! - [`operator`]: harmonic pieces, kernel `K`, contraction constant, fixed point, gluing.
//! - [`kernels`]: iterated kernels, truncated Neumann series and its tail bound.
//! - [`oracle`]: analytic solutions and a polar finite-difference solver for verification.

pub mod conformal;
pub mod geometry;
pub mod kernels;
pub mod operator;
pub mod oracle;
pub mod poisson;

pub use num_complex::Complex64;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("cut angles coincide (sigma = {sigma}, tau = {tau})")]
    AnglesCoincide { sigma: f64, tau: f64 },
    #[error("invalid cut system: {0}")]
    InvalidCuts(String),
    #[error("boundary data is discontinuous at angle {angle}; a side must be given")]
    AtDiscontinuity { angle: f64 },
    #[error("invalid boundary data: {0}")]
    InvalidBoundaryData(String),
    #[error("degenerate Möbius transform (ad - bc = 0)")]
    DegenerateMobius,
    #[error("elliptic modulus {0} outside the admissible range")]
    ModulusOutOfRange(f64),
    #[error("argument {re} + {im}i is within 1e-8 of a pole of sn")]
    PoleProximity { re: f64, im: f64 },
    #[error("{0} did not converge")]
    NonConvergent(&'static str),
    #[error("point with |w| = {0} lies outside the closed unit disk")]
    OutsideDisk(f64),
    #[error("point lies on the interior of a slit; a side must be given")]
    OnSlit,
    #[error("point with |z| = {0} is too close to the unit circle for the Poisson kernel")]
    TooCloseToBoundary(f64),
    #[error("integrand is not finite at angle {0}")]
    NonFiniteIntegrand(f64),
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("point {re} + {im}i is outside the subdomain")]
    OutsideSubdomain { re: f64, im: f64 },
    #[error("point {re} + {im}i is outside the domain")]
    OutsideDomain { re: f64, im: f64 },
    #[error("point is within the exclusion zone of a slit tip")]
    TooCloseToSlitTip,
    #[error("contraction violated: m_hat = {m_hat} >= 2π")]
    ContractionViolated { m_hat: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear system I - M is singular")]
    SingularSystem,
    #[error("work estimate {work} exceeds the budget {budget}")]
    BudgetExceeded { work: f64, budget: f64 },
    #[error("analytic solution evaluated at its singularity")]
    AtSingularity,
}

pub type Result<T> = std::result::Result<T, Error>;
