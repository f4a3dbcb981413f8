//! Circle-bounded doubly connected domains, the cut arcs that slit them into
//! simply connected pieces, and piecewise continuous boundary data.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::mobius::{mobius_normalize, MobiusTransform};
use crate::{Error, Result};

/// A point of the plane.
pub type PlanarPoint = Complex64;

/// Tolerance used to decide that an angle sits on a breakpoint or a cut.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BoundaryKind {
    Outer,
    Inner,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Circle {
    pub center: PlanarPoint,
    pub radius: f64,
    pub orientation: BoundaryKind,
}

impl Circle {
    pub fn outer(center: PlanarPoint, radius: f64) -> Self {
        Circle { center, radius, orientation: BoundaryKind::Outer }
    }

    pub fn inner(center: PlanarPoint, radius: f64) -> Self {
        Circle { center, radius, orientation: BoundaryKind::Inner }
    }

    pub fn point_at(&self, angle: f64) -> PlanarPoint {
        self.center + Complex64::from_polar(self.radius, angle)
    }

    /// Angle of `z` about the center, in `[0, 2π)`.
    pub fn angle_of(&self, z: PlanarPoint) -> f64 {
        wrap_angle((z - self.center).arg())
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Closed inner disk strictly inside the open outer disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnularDomain {
    outer: Circle,
    inner: Circle,
}

impl AnnularDomain {
    pub fn new(outer: Circle, inner: Circle) -> Result<Self> {
        let finite = |c: &Circle| c.center.re.is_finite() && c.center.im.is_finite() && c.radius.is_finite();
        if !finite(&outer) || !finite(&inner) {
            return Err(Error::InvalidGeometry("non-finite circle parameters".into()));
        }
        if !(outer.radius > 0.0 && inner.radius > 0.0) {
            return Err(Error::InvalidGeometry("radii must be positive".into()));
        }
        if (inner.center - outer.center).norm() + inner.radius >= outer.radius {
            return Err(Error::InvalidGeometry(
                "inner circle must lie strictly inside the outer circle".into(),
            ));
        }
        Ok(AnnularDomain {
            outer: Circle { orientation: BoundaryKind::Outer, ..outer },
            inner: Circle { orientation: BoundaryKind::Inner, ..inner },
        })
    }

    /// `{r < |z| < 1}`.
    pub fn concentric(r: f64) -> Result<Self> {
        Self::new(
            Circle::outer(Complex64::new(0.0, 0.0), 1.0),
            Circle::inner(Complex64::new(0.0, 0.0), r),
        )
    }

    pub fn outer(&self) -> &Circle {
        &self.outer
    }

    pub fn inner(&self) -> &Circle {
        &self.inner
    }

    pub fn circle(&self, kind: BoundaryKind) -> &Circle {
        match kind {
            BoundaryKind::Outer => &self.outer,
            BoundaryKind::Inner => &self.inner,
        }
    }

    /// Open membership: strictly between the two circles.
    pub fn contains(&self, z: PlanarPoint) -> bool {
        z.re.is_finite()
            && z.im.is_finite()
            && (z - self.outer.center).norm() < self.outer.radius
            && (z - self.inner.center).norm() > self.inner.radius
    }

    /// Distance from `z` to `∂D`.
    pub fn boundary_distance(&self, z: PlanarPoint) -> f64 {
        let to_outer = (self.outer.radius - (z - self.outer.center).norm()).abs();
        let to_inner = ((z - self.inner.center).norm() - self.inner.radius).abs();
        to_outer.min(to_inner)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CutKind {
    Sigma,
    Tau,
}

/// A cut from the inner circle to the outer circle: the preimage under the
/// normalizing transform of a radial segment at a fixed normalized angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutArc {
    pub kind: CutKind,
    /// Angle of the radial segment in normalized coordinates, in `[0, 2π)`.
    pub angle: f64,
    inner_radius: f64,
    to_physical: MobiusTransform,
}

impl CutArc {
    /// Point at parameter `t ∈ [0, 1]`, from the inner circle (`t = 0`) to the outer (`t = 1`).
    pub fn point(&self, t: f64) -> PlanarPoint {
        let rho = self.inner_radius + t * (1.0 - self.inner_radius);
        self.to_physical.apply(Complex64::from_polar(rho, self.angle))
    }

    pub fn inner_endpoint(&self) -> PlanarPoint {
        self.point(0.0)
    }

    pub fn outer_endpoint(&self) -> PlanarPoint {
        self.point(1.0)
    }

    /// Distance in normalized coordinates from a normalized point to the segment.
    pub fn normalized_distance(&self, w: Complex64) -> f64 {
        let dir = Complex64::from_polar(1.0, self.angle);
        let along = (w * dir.conj()).re.clamp(self.inner_radius, 1.0);
        (w - dir * along).norm()
    }

    /// Samples `n + 1` equally spaced parameters.
    pub fn sample(&self, n: usize) -> Vec<PlanarPoint> {
        (0..=n).map(|i| self.point(i as f64 / n as f64)).collect()
    }
}

/// The `σ` and `τ` cuts. Removing the `σ` arcs leaves `D₁`, removing the `τ`
/// arcs leaves `D₂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutSystem {
    pub sigma_arcs: Vec<CutArc>,
    pub tau_arcs: Vec<CutArc>,
    normalization: MobiusTransform,
    inner_radius: f64,
}

impl CutSystem {
    /// From explicit arc lists; validates one arc of each kind per inner
    /// boundary curve and pairwise disjointness.
    pub fn from_arcs(domain: &AnnularDomain, sigma_arcs: Vec<CutArc>, tau_arcs: Vec<CutArc>) -> Result<Self> {
        if sigma_arcs.len() != 1 || tau_arcs.len() != 1 {
            return Err(Error::InvalidCuts(format!(
                "a doubly connected domain needs exactly one sigma and one tau arc, got {} and {}",
                sigma_arcs.len(),
                tau_arcs.len()
            )));
        }
        if sigma_arcs.iter().any(|a| a.kind != CutKind::Sigma) || tau_arcs.iter().any(|a| a.kind != CutKind::Tau) {
            return Err(Error::InvalidCuts("arc kinds do not match their lists".into()));
        }
        let (normalization, inner_radius) = mobius_normalize(domain);
        let (s, t) = (sigma_arcs[0].angle, tau_arcs[0].angle);
        if angular_gap(s, t) <= ANGLE_TOL {
            return Err(Error::AnglesCoincide { sigma: s, tau: t });
        }
        Ok(CutSystem { sigma_arcs, tau_arcs, normalization, inner_radius })
    }

    pub fn sigma(&self) -> &CutArc {
        &self.sigma_arcs[0]
    }

    pub fn tau(&self) -> &CutArc {
        &self.tau_arcs[0]
    }

    /// Physical to normalized (concentric) coordinates.
    pub fn normalization(&self) -> &MobiusTransform {
        &self.normalization
    }

    pub fn normalized_inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn normalize(&self, z: PlanarPoint) -> Complex64 {
        self.normalization.apply(z)
    }
}

/// Smallest angular separation of two angles.
pub fn angular_gap(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Radial cuts at the given normalized angles.
pub fn build_cut_system(domain: &AnnularDomain, sigma_angle: f64, tau_angle: f64) -> Result<CutSystem> {
    if !sigma_angle.is_finite() || !tau_angle.is_finite() {
        return Err(Error::InvalidCuts("cut angles must be finite".into()));
    }
    if angular_gap(sigma_angle, tau_angle) <= ANGLE_TOL {
        return Err(Error::AnglesCoincide { sigma: sigma_angle, tau: tau_angle });
    }
    let (normalization, r) = mobius_normalize(domain);
    let to_physical = normalization.inverse();
    let arc = |kind, angle: f64| CutArc { kind, angle: wrap_angle(angle), inner_radius: r, to_physical };
    CutSystem::from_arcs(domain, vec![arc(CutKind::Sigma, sigma_angle)], vec![arc(CutKind::Tau, tau_angle)])
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Limit from smaller angles.
    Before,
    /// Limit from larger angles.
    After,
}

/// Value of one segment of boundary data as a function of the angle about
/// the circle's center.
#[derive(Clone)]
pub enum SegmentFn {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SegmentFn {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SegmentFn::Function(Arc::new(f))
    }

    pub fn eval(&self, angle: f64) -> f64 {
        match self {
            SegmentFn::Constant(c) => *c,
            SegmentFn::Function(f) => f(angle),
        }
    }
}

impl fmt::Debug for SegmentFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentFn::Constant(c) => write!(f, "Constant({c})"),
            SegmentFn::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Data on one boundary circle: sorted breakpoints in `[0, 2π)` and one
/// segment per gap; segment `i` covers `[b_i, b_{i+1}]`, the last one wraps
/// around. With no breakpoints a single segment covers the whole circle.
#[derive(Clone, Debug)]
pub struct CurveData {
    breakpoints: Vec<f64>,
    segments: Vec<SegmentFn>,
}

impl CurveData {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<SegmentFn>) -> Result<Self> {
        let expected = breakpoints.len().max(1);
        if segments.len() != expected {
            return Err(Error::InvalidBoundaryData(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                expected,
                segments.len()
            )));
        }
        let mut pairs: Vec<(f64, SegmentFn)> = breakpoints
            .into_iter()
            .map(wrap_angle)
            .zip(segments.iter().cloned())
            .collect();
        if pairs.iter().any(|(b, _)| !b.is_finite()) {
            return Err(Error::InvalidBoundaryData("non-finite breakpoint".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            if w[1].0 - w[0].0 <= ANGLE_TOL {
                return Err(Error::InvalidBoundaryData("repeated breakpoint".into()));
            }
        }
        if pairs.is_empty() {
            return Ok(CurveData { breakpoints: Vec::new(), segments });
        }
        let (breakpoints, segments) = pairs.into_iter().unzip();
        Ok(CurveData { breakpoints, segments })
    }

    pub fn constant(value: f64) -> Self {
        CurveData { breakpoints: Vec::new(), segments: vec![SegmentFn::Constant(value)] }
    }

    pub fn continuous(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CurveData { breakpoints: Vec::new(), segments: vec![SegmentFn::function(f)] }
    }

    /// Piecewise constant: `(start_angle, value)` pairs, each value holding
    /// until the next start angle.
    pub fn piecewise_constant(pieces: &[(f64, f64)]) -> Result<Self> {
        if pieces.len() == 1 {
            return Ok(Self::constant(pieces[0].1));
        }
        Self::new(
            pieces.iter().map(|p| p.0).collect(),
            pieces.iter().map(|p| SegmentFn::Constant(p.1)).collect(),
        )
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn eval(&self, angle: f64, side: Option<Side>) -> Result<f64> {
        if !angle.is_finite() {
            return Err(Error::InvalidBoundaryData("non-finite angle".into()));
        }
        let a = wrap_angle(angle);
        if self.breakpoints.is_empty() {
            return Ok(self.segments[0].eval(a));
        }
        let n = self.breakpoints.len();
        if let Some(hit) = self.breakpoints.iter().position(|&b| angular_gap(a, b) <= ANGLE_TOL) {
            let seg = match side {
                None => return Err(Error::AtDiscontinuity { angle: a }),
                Some(Side::After) => hit,
                Some(Side::Before) => (hit + n - 1) % n,
            };
            return Ok(self.segments[seg].eval(a));
        }
        let seg = match self.breakpoints.iter().rposition(|&b| b < a) {
            Some(i) => i,
            None => n - 1,
        };
        Ok(self.segments[seg].eval(a))
    }

    /// Supremum of `|f|`: exact for constants, sampled otherwise.
    pub fn sup_norm(&self) -> f64 {
        let n = self.segments.len();
        let mut sup: f64 = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            match seg {
                SegmentFn::Constant(c) => sup = sup.max(c.abs()),
                SegmentFn::Function(f) => {
                    let (lo, hi) = if self.breakpoints.is_empty() {
                        (0.0, TAU)
                    } else {
                        let lo = self.breakpoints[i];
                        let hi = if i + 1 < n { self.breakpoints[i + 1] } else { self.breakpoints[0] + TAU };
                        (lo, hi)
                    };
                    const SAMPLES: usize = 4096;
                    for j in 0..=SAMPLES {
                        let t = lo + (hi - lo) * j as f64 / SAMPLES as f64;
                        sup = sup.max(f(t).abs());
                    }
                }
            }
        }
        sup
    }
}

/// Piecewise continuous data on both boundary circles.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub outer: CurveData,
    pub inner: CurveData,
}

impl BoundaryData {
    pub fn new(outer: CurveData, inner: CurveData) -> Self {
        BoundaryData { outer, inner }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        BoundaryData { outer: CurveData::constant(c), inner: CurveData::constant(c) }
    }

    /// `value_outer` on the outer circle, `value_inner` on the inner.
    pub fn two_level(value_outer: f64, value_inner: f64) -> Self {
        BoundaryData { outer: CurveData::constant(value_outer), inner: CurveData::constant(value_inner) }
    }

    pub fn curve(&self, kind: BoundaryKind) -> &CurveData {
        match kind {
            BoundaryKind::Outer => &self.outer,
            BoundaryKind::Inner => &self.inner,
        }
    }

    /// `‖f‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.outer.sup_norm().max(self.inner.sup_norm())
    }
}

/// `f(ζ)` for `ζ` the point of `curve` at `angle` about its center.
pub fn eval_boundary_data(f: &BoundaryData, curve: &Circle, angle: f64) -> Result<f64> {
    f.curve(curve.orientation).eval(angle, None)
}

/// One-sided variant of [`eval_boundary_data`].
pub fn eval_boundary_data_sided(f: &BoundaryData, curve: &Circle, angle: f64, side: Side) -> Result<f64> {
    f.curve(curve.orientation).eval(angle, Some(side))
}

/// `π` as a convenience for antipodal cuts.
pub const ANTIPODAL: f64 = PI;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn concentric_cuts_are_opposite_radii() {
        let d = AnnularDomain::concentric(0.5).unwrap();
        let cuts = build_cut_system(&d, 0.0, PI).unwrap();
        assert!((cuts.sigma().inner_endpoint() - c(0.5, 0.0)).norm() < 1e-15);
        assert!((cuts.sigma().outer_endpoint() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((cuts.tau().outer_endpoint() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coincident_angles_rejected() {
        let d = AnnularDomain::concentric(0.5).unwrap();
        assert!(matches!(build_cut_system(&d, 0.0, 0.0), Err(Error::AnglesCoincide { .. })));
        assert!(matches!(build_cut_system(&d, 0.3, 0.3 + TAU), Err(Error::AnglesCoincide { .. })));
    }

    #[test]
    fn eccentric_cuts_disjoint_and_end_on_circles() {
        let d = AnnularDomain::new(Circle::outer(c(0.0, 0.0), 1.0), Circle::inner(c(0.2, 0.0), 0.3)).unwrap();
        let cuts = build_cut_system(&d, 0.0, PI).unwrap();
        let s = cuts.sigma().sample(1000);
        let t = cuts.tau().sample(1000);
        let min = s
            .iter()
            .flat_map(|p| t.iter().map(move |q| (p - q).norm()))
            .fold(f64::INFINITY, f64::min);
        assert!(min > 1e-3);
        for arc in [cuts.sigma(), cuts.tau()] {
            assert!(((arc.inner_endpoint() - c(0.2, 0.0)).norm() - 0.3).abs() < 1e-12);
            assert!((arc.outer_endpoint().norm() - 1.0).abs() < 1e-12);
            for p in arc.sample(50).iter().skip(1).take(49) {
                assert!(d.contains(*p));
            }
        }
    }

    #[test]
    fn contains_matches_sign_checks() {
        let d = AnnularDomain::new(Circle::outer(c(0.0, 0.0), 1.0), Circle::inner(c(0.1, -0.2), 0.4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let z = c(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2));
            let expected = z.norm() - 1.0 < 0.0 && (z - c(0.1, -0.2)).norm() - 0.4 > 0.0;
            assert_eq!(d.contains(z), expected);
        }
        let d = AnnularDomain::concentric(0.5).unwrap();
        assert!(d.contains(c(0.75, 0.0)));
        assert!(!d.contains(c(0.0, 0.0)));
        assert!(!d.contains(c(0.5, 0.0)));
    }

    #[test]
    fn invalid_domains() {
        assert!(AnnularDomain::new(Circle::outer(c(0.0, 0.0), 1.0), Circle::inner(c(0.5, 0.0), 0.5)).is_err());
        assert!(AnnularDomain::concentric(0.0).is_err());
        assert!(AnnularDomain::concentric(1.0).is_err());
    }

    #[test]
    fn boundary_data_lookup() {
        let d = AnnularDomain::concentric(0.5).unwrap();
        let f = BoundaryData::new(
            CurveData::piecewise_constant(&[(0.0, 1.0), (PI, 0.0)]).unwrap(),
            CurveData::constant(1.0),
        );
        assert_eq!(eval_boundary_data(&f, d.inner(), 2.3).unwrap(), 1.0);
        assert_eq!(eval_boundary_data(&f, d.outer(), PI / 2.0).unwrap(), 1.0);
        assert_eq!(eval_boundary_data(&f, d.outer(), 3.0 * PI / 2.0).unwrap(), 0.0);
        assert!(matches!(eval_boundary_data(&f, d.outer(), 0.0), Err(Error::AtDiscontinuity { .. })));
        assert_eq!(eval_boundary_data_sided(&f, d.outer(), 0.0, Side::After).unwrap(), 1.0);
        assert_eq!(eval_boundary_data_sided(&f, d.outer(), 0.0, Side::Before).unwrap(), 0.0);
        assert_eq!(eval_boundary_data(&f, d.outer(), TAU - 1e-3).unwrap(), 0.0);
        assert_eq!(f.sup_norm(), 1.0);
    }

    #[test]
    fn sup_norm_of_functions() {
        let f = BoundaryData::new(CurveData::continuous(|t| 2.0 * t.cos()), CurveData::constant(-0.5));
        assert!((f.sup_norm() - 2.0).abs() < 1e-12);
    }
}
