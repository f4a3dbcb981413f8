use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use super::elliptic::{carlson_rf, sncndn_real, EllipticParams, arcsn};
use super::mobius::MobiusTransform;
use super::{BoundaryPiece, BoundarySample, SlitSide, SubdomainMap, Subdomain, UnitCircleArc};
use crate::geometry::{wrap_angle, AnnularDomain, CutSystem};
use crate::{Error, Result};

/// Points with `|w|` at least this close to one use the boundary formulas.
const BOUNDARY_BAND: f64 = 1e-14;
/// Angular and radial tolerance for recognising slit and circle points.
const ON_SET_TOL: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 20;

/// `φ_j` for an annulus slit along one cut.
///
/// In normalized coordinates `ξ` the subdomain is `{r < |ξ| < 1}` minus the
/// radius at angle `α`. With `s = K/π` the rectangle coordinate is
/// `Z = s(arg ξ − α − π) − i s ln|ξ|`, `arg ξ ∈ (α, α + 2π)`, which fills
/// `[−K, K] × [0, K']`; then `W = sn Z` and `w = (W − i)/(W + i)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlitAnnulusMap {
    pub normalization: MobiusTransform,
    to_physical: MobiusTransform,
    pub inner_radius: f64,
    pub slit_angle: f64,
    pub elliptic: EllipticParams,
    pub subdomain: Subdomain,
    scale: f64,
    domain: AnnularDomain,
}

/// `φ₁` (slit along `σ`) or `φ₂` (slit along `τ`).
pub fn build_phi(domain: &AnnularDomain, cuts: &CutSystem, which: Subdomain) -> Result<SlitAnnulusMap> {
    let slit_angle = match which {
        Subdomain::One => cuts.sigma().angle,
        Subdomain::Two => cuts.tau().angle,
    };
    let r = cuts.normalized_inner_radius();
    let elliptic = EllipticParams::for_inner_radius(r)?;
    let normalization = *cuts.normalization();
    Ok(SlitAnnulusMap {
        normalization,
        to_physical: normalization.inverse(),
        inner_radius: r,
        slit_angle: wrap_angle(slit_angle),
        elliptic,
        subdomain: which,
        scale: elliptic.complete_k / PI,
        domain: *domain,
    })
}

fn real_arcsn(x: f64, kprime: f64) -> Result<f64> {
    let x2 = x * x;
    let first = (1.0 - x) * (1.0 + x);
    let rf = carlson_rf(
        Complex64::new(first.max(0.0), 0.0),
        Complex64::new(first.max(0.0) + kprime * kprime * x2, 0.0),
        Complex64::new(1.0, 0.0),
    )?;
    Ok(x * rf.re)
}

impl SlitAnnulusMap {
    pub fn domain(&self) -> &AnnularDomain {
        &self.domain
    }

    /// `(K, K')`, the rectangle half-width and height.
    pub fn rectangle(&self) -> (f64, f64) {
        (self.elliptic.complete_k, self.elliptic.complete_kprime)
    }

    /// Rectangle coordinate to normalized coordinate.
    pub fn rect_to_normalized(&self, zr: Complex64) -> Complex64 {
        let angle = self.slit_angle + PI + zr.re / self.scale;
        Complex64::from_polar((-zr.im / self.scale).exp(), angle)
    }

    /// Parameter on a circle piece of the point at normalized angle `angle`.
    pub fn circle_parameter(&self, angle: f64) -> f64 {
        self.scale * (wrap_angle(angle - self.slit_angle) - PI)
    }

    /// Parameter on a slit piece of the point at normalized radius `rho`.
    pub fn slit_parameter(&self, rho: f64) -> f64 {
        -self.scale * rho.ln()
    }

    /// Rectangle coordinate `Z ∈ [−K, K] × [0, K']` of a physical point.
    pub fn rectangle_coordinate(&self, z: Complex64, side: Option<SlitSide>) -> Result<Complex64> {
        Ok(self.rect_of_normalized(self.normalization.apply(z), side)?.0)
    }

    fn rect_of_disk(&self, w: Complex64) -> Result<Complex64> {
        let (k, kp) = (self.elliptic.modulus, self.elliptic.complementary_modulus);
        let (big_k, big_kp) = self.rectangle();
        if w.norm() < 1.0 - BOUNDARY_BAND {
            let one = Complex64::new(1.0, 0.0);
            let big_w = Complex64::new(0.0, 1.0) * (one + w) / (one - w);
            return arcsn(big_w, kp);
        }
        let theta = wrap_angle(w.arg());
        if theta == 0.0 {
            return Ok(Complex64::new(0.0, big_kp));
        }
        let half = 0.5 * theta;
        let big_w = -half.cos() / half.sin();
        let a = big_w.abs();
        // The map has square-root behaviour at the rectangle corners, so a
        // rounding-level offset there would move the image far along the slit.
        let snap = 8.0 * f64::EPSILON;
        if (a - 1.0).abs() <= snap {
            return Ok(Complex64::new(big_k.copysign(big_w), 0.0));
        }
        if (a * k - 1.0).abs() <= snap {
            return Ok(Complex64::new(big_k.copysign(big_w), big_kp));
        }
        if a <= 1.0 {
            return Ok(Complex64::new(real_arcsn(big_w, kp)?, 0.0));
        }
        if a * k <= 1.0 {
            // sn(v | k'²) from dn = 1/|W|
            let sn2 = ((a * a - 1.0) / (a * a * kp * kp)).min(1.0);
            let v = real_arcsn(sn2.sqrt(), k)?;
            return Ok(Complex64::new(big_k.copysign(big_w), v));
        }
        Ok(Complex64::new(real_arcsn(1.0 / (k * big_w), kp)?, big_kp))
    }

    fn disk_of_rect(&self, zr: Complex64) -> Complex64 {
        let p = self.elliptic.parts(zr);
        let i = Complex64::new(0.0, 1.0);
        (p.sn_num - i * p.den) / (p.sn_num + i * p.den)
    }

    /// `dw/dZ` at a rectangle point.
    fn disk_rect_derivative(&self, zr: Complex64) -> Complex64 {
        let p = self.elliptic.parts(zr);
        let i = Complex64::new(0.0, 1.0);
        let q = p.sn_num + i * p.den;
        2.0 * i * p.cn_num * p.dn_num / (q * q)
    }

    /// Rectangle coordinate of a normalized point in the closed subdomain.
    fn rect_of_normalized(&self, xi: Complex64, side: Option<SlitSide>) -> Result<(Complex64, bool)> {
        let rho = xi.norm();
        let r = self.inner_radius;
        if !(rho <= 1.0 + ON_SET_TOL && rho >= r * (1.0 - ON_SET_TOL)) || !rho.is_finite() {
            let z = self.to_physical.apply(xi);
            return Err(Error::OutsideSubdomain { re: z.re, im: z.im });
        }
        let mut t = wrap_angle(xi.arg() - self.slit_angle);
        let on_slit = t.min(TAU - t) * rho <= ON_SET_TOL;
        if on_slit {
            t = match side {
                Some(SlitSide::Left) => 0.0,
                Some(SlitSide::Right) => TAU,
                None => return Err(Error::OnSlit),
            };
        }
        let (_, big_kp) = self.rectangle();
        let v = (-self.scale * rho.ln()).clamp(0.0, big_kp);
        let on_circle = (rho - 1.0).abs() <= ON_SET_TOL || (rho - r).abs() <= ON_SET_TOL * r;
        Ok((Complex64::new(self.scale * (t - PI), v), on_slit || on_circle))
    }
}

impl SubdomainMap for SlitAnnulusMap {
    fn map_forward(&self, w: Complex64) -> Result<Complex64> {
        let n = w.norm();
        if !n.is_finite() || n > 1.0 + 1e-12 {
            return Err(Error::OutsideDisk(n));
        }
        let zr = self.rect_of_disk(w)?;
        Ok(self.to_physical.apply(self.rect_to_normalized(zr)))
    }

    fn derivative(&self, w: Complex64) -> Result<Complex64> {
        let n = w.norm();
        if !(n < 1.0) {
            return Err(Error::OutsideDisk(n));
        }
        let zr = self.rect_of_disk(w)?;
        let xi = self.rect_to_normalized(zr);
        let dxi_dz = Complex64::new(0.0, 1.0 / self.scale) * xi;
        Ok(self.to_physical.derivative(xi) * dxi_dz / self.disk_rect_derivative(zr))
    }

    fn map_inverse(&self, z: Complex64, side: Option<SlitSide>) -> Result<Complex64> {
        let xi = self.normalization.apply(z);
        let (target, on_boundary) = self.rect_of_normalized(xi, side)?;
        let mut w = self.disk_of_rect(target);
        if on_boundary {
            return Ok(w / w.norm());
        }
        let mut residual = match self.rect_of_disk(w) {
            Ok(zr) => (zr - target).norm(),
            Err(_) => return Ok(w),
        };
        for _ in 0..NEWTON_MAX {
            if residual <= NEWTON_TOL {
                break;
            }
            let Ok(zr) = self.rect_of_disk(w) else { break };
            let step = (zr - target) * self.disk_rect_derivative(zr);
            let candidate = w - step;
            if candidate.norm() >= 1.0 {
                break;
            }
            let Ok(next) = self.rect_of_disk(candidate) else { break };
            let next_residual = (next - target).norm();
            if next_residual >= residual {
                break;
            }
            w = candidate;
            residual = next_residual;
        }
        Ok(w)
    }

    fn preimage_arcs(&self) -> (Vec<UnitCircleArc>, Vec<UnitCircleArc>) {
        let k = self.elliptic.modulus;
        let left_top = 2.0 * 1.0f64.atan2(1.0 / k);
        let right_top = 2.0 * 1.0f64.atan2(-1.0 / k);
        let outer = UnitCircleArc::new(0.5 * PI, 1.5 * PI);
        let inner = UnitCircleArc::new(right_top, left_top + TAU);
        let right = UnitCircleArc::new(1.5 * PI, right_top);
        let left = UnitCircleArc::new(left_top, 0.5 * PI);
        (vec![outer, inner], vec![right, left])
    }

    fn piece_range(&self, piece: BoundaryPiece) -> (f64, f64) {
        let (big_k, big_kp) = self.rectangle();
        if piece.is_circle() {
            (-big_k, big_k)
        } else {
            (0.0, big_kp)
        }
    }

    fn boundary_sample(&self, piece: BoundaryPiece, p: f64) -> BoundarySample {
        let e = &self.elliptic;
        let (k, kp) = (e.modulus, e.complementary_modulus);
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let (w, speed, zr) = match piece {
            BoundaryPiece::Outer => {
                let (sn, cn, dn) = sncndn_real(p, kp * kp);
                let w = (sn - i) / (sn + i);
                (w, 2.0 * (cn * dn).abs() / (1.0 + sn * sn), Complex64::new(p, 0.0))
            }
            BoundaryPiece::Inner => {
                let (sn, cn, dn) = sncndn_real(p, kp * kp);
                let ks = k * sn;
                let w = (one - i * ks) / (one + i * ks);
                (w, 2.0 * k * (cn * dn).abs() / (1.0 + ks * ks), Complex64::new(p, e.complete_kprime))
            }
            BoundaryPiece::SlitRight | BoundaryPiece::SlitLeft => {
                let (sn1, cn1, dn1) = sncndn_real(p, k * k);
                let sign = if piece == BoundaryPiece::SlitRight { 1.0 } else { -1.0 };
                let w = (sign - i * dn1) / (sign + i * dn1);
                let speed = 2.0 * kp * kp * (sn1 * cn1).abs() / (dn1 * dn1 + 1.0);
                (w, speed, Complex64::new(sign * e.complete_k, p))
            }
        };
        let normalized = self.rect_to_normalized(zr);
        BoundarySample { w, z: self.to_physical.apply(normalized), normalized, speed }
    }

    fn contains(&self, z: Complex64) -> bool {
        if !self.domain.contains(z) {
            return false;
        }
        let xi = self.normalization.apply(z);
        let t = wrap_angle(xi.arg() - self.slit_angle);
        t.min(TAU - t) * xi.norm() > ON_SET_TOL
    }
}
