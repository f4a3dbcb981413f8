use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::AnnularDomain;
use crate::{Error, Result};

/// `z ↦ (a z + b) / (c z + d)` with `ad − bc ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MobiusTransform {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusTransform {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() <= 1e-300 || !det.is_finite() {
            return Err(Error::DegenerateMobius);
        }
        Ok(MobiusTransform { a, b, c, d })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MobiusTransform { a: one, b: zero, c: zero, d: one }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        if self.c == Complex64::new(0.0, 0.0) {
            return (self.a * z + self.b) / self.d;
        }
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        (self.a * self.d - self.b * self.c) / (den * den)
    }

    /// Inverse by coefficient inversion.
    pub fn inverse(&self) -> Self {
        MobiusTransform { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MobiusTransform) -> Self {
        MobiusTransform {
            a: self.a * inner.a + self.b * inner.c,
            b: self.a * inner.b + self.b * inner.d,
            c: self.c * inner.a + self.d * inner.c,
            d: self.c * inner.b + self.d * inner.d,
        }
    }
}

/// Transform taking the domain conformally onto `{r < |z| < 1}`, with `r`.
///
/// The outer circle is first scaled to the unit circle; when the inner circle
/// is then off-center, the disk automorphism `(z − α)/(1 − ᾱz)` whose fixed
/// points `α`, `1/ᾱ` are symmetric with respect to both circles moves it to a
/// centered circle.
pub fn mobius_normalize(domain: &AnnularDomain) -> (MobiusTransform, f64) {
    let outer = domain.outer();
    let inner = domain.inner();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let scale = MobiusTransform {
        a: one,
        b: -outer.center,
        c: zero,
        d: Complex64::new(outer.radius, 0.0),
    };
    let center = (inner.center - outer.center) / outer.radius;
    let rho = inner.radius / outer.radius;
    let dist = center.norm();
    if dist == 0.0 {
        return (scale, rho);
    }
    // a is the root inside the disk of d a² − (1 + d² − ρ²) a + d = 0.
    let p = 1.0 + dist * dist - rho * rho;
    let a = 2.0 * dist / (p + (p * p - 4.0 * dist * dist).sqrt());
    let alpha = center / dist * a;
    let automorphism = MobiusTransform { a: one, b: -alpha, c: -alpha.conj(), d: one };
    let t = automorphism.compose(&scale);
    let r = t.apply(inner.center + inner.radius * center / dist).norm();
    (t, r)
}
