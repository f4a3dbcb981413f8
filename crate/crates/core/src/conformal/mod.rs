//! Conformal maps of the unit disk onto the slit subdomains.
//!
//! Each subdomain is a concentric annulus (after Möbius normalization) with
//! one radial slit. In logarithmic coordinates that is a rectangle, and
//! `sn` carries a rectangle onto the upper half-plane, so the composition
//! disk → half-plane → rectangle → slit annulus → `D` is explicit.

pub mod elliptic;
pub mod mobius;
pub mod slit_map;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::Result;

pub use elliptic::{
    carlson_rf, elliptic_f, elliptic_k, jacobi_parts, jacobi_sn, EllipticParams, JacobiParts,
};
pub use mobius::{mobius_normalize, MobiusTransform};
pub use slit_map::{build_phi, SlitAnnulusMap};

/// Which slit subdomain: `One` is `D − σ`, `Two` is `D − τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Subdomain {
    One,
    Two,
}

impl Subdomain {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Subdomain::One),
            2 => Some(Subdomain::Two),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Subdomain::One => Subdomain::Two,
            Subdomain::Two => Subdomain::One,
        }
    }
}

/// Side of a slit, looking along it from the inner circle to the outer one.
/// `Left` is the side of larger polar angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SlitSide {
    Left,
    Right,
}

/// Counterclockwise arc of the unit circle from `start_angle` to `end_angle`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitCircleArc {
    pub start_angle: f64,
    pub end_angle: f64,
}

impl UnitCircleArc {
    pub fn new(start_angle: f64, end_angle: f64) -> Self {
        debug_assert!(end_angle > start_angle && end_angle - start_angle <= TAU + 1e-12);
        UnitCircleArc { start_angle, end_angle }
    }

    pub fn measure(&self) -> f64 {
        self.end_angle - self.start_angle
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start_angle + self.end_angle)
    }

    pub fn contains_angle(&self, angle: f64) -> bool {
        let offset = (angle - self.start_angle).rem_euclid(TAU);
        offset <= self.measure()
    }
}

/// The four sides of a slit subdomain's boundary, in the order met by the
/// preimage traversing the unit circle from `w = i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BoundaryPiece {
    /// Outer circle.
    Outer,
    /// Slit side of smaller angle.
    SlitRight,
    /// Inner circle.
    Inner,
    /// Slit side of larger angle.
    SlitLeft,
}

impl BoundaryPiece {
    pub const ALL: [BoundaryPiece; 4] =
        [BoundaryPiece::Outer, BoundaryPiece::SlitRight, BoundaryPiece::Inner, BoundaryPiece::SlitLeft];

    pub fn is_circle(self) -> bool {
        matches!(self, BoundaryPiece::Outer | BoundaryPiece::Inner)
    }

    pub fn is_slit(self) -> bool {
        !self.is_circle()
    }
}

/// A boundary point given by its piece parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundarySample {
    /// Preimage on the unit circle.
    pub w: Complex64,
    /// Image in the physical plane.
    pub z: Complex64,
    /// Image in normalized coordinates.
    pub normalized: Complex64,
    /// `|dw/dp|`, the arclength density of the preimage per unit parameter.
    pub speed: f64,
}

/// A map `φ` from the closed unit disk onto the closure of a simply
/// connected subdomain of `D`, plus the boundary bookkeeping the Poisson
/// quadrature needs.
pub trait SubdomainMap: Send + Sync {
    /// `φ(w)` for `|w| ≤ 1`.
    fn map_forward(&self, w: Complex64) -> Result<Complex64>;

    /// `φ'(w)` for `|w| < 1`.
    fn derivative(&self, w: Complex64) -> Result<Complex64>;

    /// `φ⁻¹(z)`; a side is required for points on the slit.
    fn map_inverse(&self, z: Complex64, side: Option<SlitSide>) -> Result<Complex64>;

    /// Preimages of `∂D` and of the slit.
    fn preimage_arcs(&self) -> (Vec<UnitCircleArc>, Vec<UnitCircleArc>);

    /// Parameter interval of a boundary piece.
    fn piece_range(&self, piece: BoundaryPiece) -> (f64, f64);

    /// Boundary point at parameter `p` of `piece`.
    fn boundary_sample(&self, piece: BoundaryPiece, p: f64) -> BoundarySample;

    /// Whether `z` lies in the open subdomain.
    fn contains(&self, z: Complex64) -> bool;
}
