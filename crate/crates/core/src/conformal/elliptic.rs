//! Complete elliptic integrals, Carlson's `R_F`, and Jacobi elliptic
//! functions of complex argument.
//!
//! Moduli close to one are common here (a slit annulus of modest width maps
//! to a long rectangle), so most internal routines take the modulus `k` and
//! the complementary modulus `k' = √(1 − k²)` separately instead of
//! recomputing one from the other.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

const AGM_MAX_ITER: usize = 64;
const RF_MAX_ITER: usize = 100;

/// Arithmetic–geometric mean of two non-negative reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// `√(1 − k²)` without cancellation near `k = 1`.
pub fn complementary_modulus(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).sqrt()
}

/// Complete elliptic integral of the first kind `K(k)`, modulus convention.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::ModulusOutOfRange(k));
    }
    Ok(complete_k_from_kprime(complementary_modulus(k)))
}

/// `K` expressed through the complementary modulus; accurate for tiny `k'`.
pub fn complete_k_from_kprime(kprime: f64) -> f64 {
    PI / (2.0 * agm(1.0, kprime))
}

/// Carlson's symmetric elliptic integral of the first kind,
/// `R_F(x, y, z) = ½ ∫₀^∞ [(t + x)(t + y)(t + z)]^{-1/2} dt`,
/// by the duplication theorem. Principal square roots are used throughout,
/// so arguments must lie in `ℂ \ (−∞, 0)` with at most one of them zero.
/// Arguments on the negative real axis are accepted when the sign of their
/// zero imaginary part selects the intended side of the cut.
pub fn carlson_rf(x: Complex64, y: Complex64, z: Complex64) -> Result<Complex64> {
    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..RF_MAX_ITER {
        let mean = (x + y + z) / 3.0;
        let spread = (mean - x).norm().max((mean - y).norm()).max((mean - z).norm());
        if spread <= 1e-3 * mean.norm() {
            let dx = (mean - x) / mean;
            let dy = (mean - y) / mean;
            let dz = -dx - dy;
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            let series =
                1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0;
            return Ok(series / mean.sqrt());
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * sy + sx * sz + sy * sz;
        x = (x + lambda) * 0.25;
        y = (y + lambda) * 0.25;
        z = (z + lambda) * 0.25;
    }
    Err(Error::NonConvergent("Carlson R_F duplication"))
}

/// Incomplete integral of the first kind `F(φ, k) = sin φ · R_F(cos²φ, 1 − k² sin²φ, 1)`.
pub fn elliptic_f(phi: Complex64, k: f64) -> Result<Complex64> {
    let s = phi.sin();
    let c = phi.cos();
    carlson_rf(c * c, Complex64::new(1.0, 0.0) - k * k * s * s, Complex64::new(1.0, 0.0))
        .map(|rf| s * rf)
}

/// Inverse of `sn` on the upper half-plane: `W · R_F(1 − W², 1 − k²W², 1)`.
///
/// For `Im W > 0` the result lies in the rectangle `[−K, K] × [0, K']`.
pub(crate) fn arcsn(w: Complex64, kprime: f64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let w2 = w * w;
    let first = one - w2;
    let second = first + kprime * kprime * w2;
    carlson_rf(first, second, one).map(|rf| w * rf)
}

/// Real Jacobi functions `(sn, cn, dn)(u | m)` given `m_c = 1 − m`, by the
/// descending Landen (Gauss) transformation.
pub fn sncndn_real(u: f64, mc: f64) -> (f64, f64, f64) {
    if mc == 0.0 {
        let sech = 1.0 / u.cosh();
        return (u.tanh(), sech, sech);
    }
    const TOL: f64 = 1e-9;
    let mut em = [0.0; 16];
    let mut en = [0.0; 16];
    let mut a = 1.0;
    let mut emc = mc;
    let mut c = 1.0;
    let mut levels = 0;
    for i in 0..16 {
        levels = i + 1;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= TOL * a {
            break;
        }
        emc *= a;
        a = c;
    }
    let scaled = u * c;
    let mut sn = scaled.sin();
    let mut cn = scaled.cos();
    let mut dn = 1.0;
    if sn != 0.0 {
        let mut ratio = cn / sn;
        c *= ratio;
        for i in (0..levels).rev() {
            let b = em[i];
            ratio *= c;
            c *= dn;
            dn = (en[i] + ratio) / (b + ratio);
            ratio = c / b;
        }
        let mag = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { mag } else { -mag };
        cn = c * sn;
    }
    (sn, cn, dn)
}

/// Numerators and common denominator of `(sn, cn, dn)(x + iy | k)`:
/// `sn = sn_num / den`, and so on. The denominator is real and vanishes only
/// at the poles, so ratios such as `(sn − i)/(sn + i)` stay finite there.
#[derive(Clone, Copy, Debug)]
pub struct JacobiParts {
    pub sn_num: Complex64,
    pub cn_num: Complex64,
    pub dn_num: Complex64,
    pub den: f64,
}

impl JacobiParts {
    pub fn sn(&self) -> Complex64 {
        self.sn_num / self.den
    }

    pub fn cn(&self) -> Complex64 {
        self.cn_num / self.den
    }

    pub fn dn(&self) -> Complex64 {
        self.dn_num / self.den
    }
}

/// Complex-argument Jacobi functions from the real-argument ones through the
/// addition formulas with Jacobi's imaginary transformation.
pub fn jacobi_parts(z: Complex64, k: f64, kprime: f64) -> JacobiParts {
    let m = k * k;
    let (s, c, d) = sncndn_real(z.re, kprime * kprime);
    let (s1, c1, d1) = sncndn_real(z.im, m);
    JacobiParts {
        sn_num: Complex64::new(s * d1, c * d * s1 * c1),
        cn_num: Complex64::new(c * c1, -s * d * s1 * d1),
        dn_num: Complex64::new(d * c1 * d1, -m * s * c * s1),
        den: c1 * c1 + m * s * s * s1 * s1,
    }
}

/// Jacobi `sn(z, k)` for complex `z`, `0 < k < 1`.
pub fn jacobi_sn(z: Complex64, k: f64) -> Result<Complex64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::ModulusOutOfRange(k));
    }
    let kprime = complementary_modulus(k);
    let big_k = complete_k_from_kprime(kprime);
    let big_kp = complete_k_from_kprime(k);
    // poles at 2mK + (2n + 1)iK'
    let m = (z.re / (2.0 * big_k)).round();
    let n = ((z.im / big_kp - 1.0) / 2.0).round();
    let pole = Complex64::new(2.0 * m * big_k, (2.0 * n + 1.0) * big_kp);
    if (z - pole).norm() < 1e-8 {
        return Err(Error::PoleProximity { re: z.re, im: z.im });
    }
    Ok(jacobi_parts(z, k, kprime).sn())
}

fn theta_ratios(q: f64) -> (f64, f64) {
    // (θ₂/θ₃)², (θ₄/θ₃)² for a small nome q.
    let mut t2 = 0.0;
    let mut t3 = 1.0;
    let mut t4 = 1.0;
    for n in 0..40 {
        let nf = n as f64;
        let a = q.powf(nf * (nf + 1.0));
        t2 += a;
        if n >= 1 {
            let b = q.powf(nf * nf);
            t3 += 2.0 * b;
            t4 += if n % 2 == 0 { 2.0 * b } else { -2.0 * b };
        }
        if a < 1e-300 {
            break;
        }
    }
    t2 *= 2.0 * q.powf(0.25);
    ((t2 / t3).powi(2), (t4 / t3).powi(2))
}

/// Smallest complementary modulus accepted, reached near `r ≈ 0.72`.
pub const MIN_COMPLEMENTARY_MODULUS: f64 = 1e-6;

/// Modulus data of the rectangle-to-half-plane map for a slit annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipticParams {
    pub modulus: f64,
    pub complementary_modulus: f64,
    pub complete_k: f64,
    pub complete_kprime: f64,
}

impl EllipticParams {
    /// Parameters with `K'/K = −ln(r)/π`, i.e. nome `q = r`. The annulus
    /// `r < |z| < 1` cut along a radius is the rectangle `2π × ln(1/r)` in
    /// logarithmic coordinates, and `[−K, K] × [0, K']` has the same shape.
    pub fn for_inner_radius(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidGeometry(format!("inner radius {r} not in (0, 1)")));
        }
        // Use whichever of q and its dual nome is smaller.
        let dual = (PI * PI / r.ln()).exp();
        let (k, kprime) = if r <= dual {
            let (k2, kp2) = theta_ratios(r);
            (k2, kp2)
        } else {
            let (kp2, k2) = theta_ratios(dual);
            (k2, kp2)
        };
        // Disk positions near the slits resolve only to about ε/k'².
        if !(kprime >= MIN_COMPLEMENTARY_MODULUS) {
            return Err(Error::InvalidGeometry(format!(
                "normalized inner radius {r} gives k' = {kprime:.3e}, below {MIN_COMPLEMENTARY_MODULUS:e}; the annulus is too thin for the slit maps"
            )));
        }
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::ModulusOutOfRange(k));
        }
        Ok(EllipticParams {
            modulus: k,
            complementary_modulus: kprime,
            complete_k: complete_k_from_kprime(kprime),
            complete_kprime: complete_k_from_kprime(k),
        })
    }

    /// `(sn, cn, dn)` parts at a complex argument.
    pub fn parts(&self, z: Complex64) -> JacobiParts {
        jacobi_parts(z, self.modulus, self.complementary_modulus)
    }
}
