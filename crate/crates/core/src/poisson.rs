//! Poisson kernel of the unit disk and composite Gauss–Legendre rules on
//! arcs of the unit circle.
//!
//! A rule may be built directly in the angle, or through any monotone
//! parametrization of an arc: each node then carries the angle of its point
//! and the weight `ω_GL · |dw/dp|`, so sums over the rule still approximate
//! integrals against arclength `ds`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::conformal::UnitCircleArc;
use crate::{Error, Result};

/// Grading levels after which neighbouring panels stop growing.
const GRADING_LEVELS: i32 = 3;

/// `P(z, ζ) = (1 − |z|²)/|z − ζ|²`.
pub fn poisson_kernel(z: Complex64, zeta: Complex64) -> Result<f64> {
    let n2 = z.norm_sqr();
    if n2.sqrt() >= 1.0 - 1e-14 {
        return Err(Error::TooCloseToBoundary(n2.sqrt()));
    }
    Ok(poisson_kernel_unchecked(z, zeta))
}

#[inline]
pub(crate) fn poisson_kernel_unchecked(z: Complex64, zeta: Complex64) -> f64 {
    (1.0 - z.norm_sqr()) / (z - zeta).norm_sqr()
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDiscretization(format!("nodes per panel must be at least 2, got {n}")));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel boundaries of `[lo, hi]` split into `panels` panels whose widths
/// shrink geometrically toward both ends by `grading²` per panel, for at most
/// three levels. `grading = 1` gives equal panels.
pub fn graded_breakpoints(lo: f64, hi: f64, panels: usize, grading: f64) -> Vec<f64> {
    let n = panels.max(1);
    let ratio = grading * grading;
    let widths: Vec<f64> = (0..n)
        .map(|i| {
            let level = i.min(n - 1 - i) as i32;
            ratio.powi(level.min(GRADING_LEVELS))
        })
        .collect();
    let total: f64 = widths.iter().sum();
    let mut out = Vec::with_capacity(n + 1);
    out.push(lo);
    let mut acc = 0.0;
    for w in &widths[..n - 1] {
        acc += w;
        out.push(lo + (hi - lo) * (acc / total));
    }
    out.push(hi);
    out
}

/// One node of a rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleNode {
    /// Angle of the node on the unit circle.
    pub angle: f64,
    /// Arclength weight.
    pub weight: f64,
    /// Index of the arc the node belongs to.
    pub arc: usize,
    /// Value of the arc's parameter at the node.
    pub param: f64,
}

impl RuleNode {
    pub fn point(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }
}

/// Composite graded Gauss–Legendre rule over a list of arcs.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub arcs: Vec<UnitCircleArc>,
    pub nodes: Vec<RuleNode>,
    pub nodes_per_panel: usize,
    pub grading: f64,
    gl: GaussLegendre,
}

impl QuadratureRule {
    /// A rule with no nodes yet, to be filled with [`QuadratureRule::add_interval`].
    pub fn empty(arcs: Vec<UnitCircleArc>, nodes_per_panel: usize, grading: f64) -> Result<Self> {
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidDiscretization(format!("grading must be >= 1, got {grading}")));
        }
        Ok(QuadratureRule { arcs, nodes: Vec::new(), nodes_per_panel, grading, gl: GaussLegendre::new(nodes_per_panel)? })
    }

    /// Adds `panels` graded panels over the parameter interval `[lo, hi]` of
    /// arc `arc`. `sample(p)` returns the angle at `p` and `|dw/dp|`.
    pub fn add_interval(
        &mut self,
        arc: usize,
        lo: f64,
        hi: f64,
        panels: usize,
        sample: impl Fn(f64) -> (f64, f64),
    ) {
        let bps = graded_breakpoints(lo, hi, panels, self.grading);
        for pair in bps.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in self.gl.nodes.iter().zip(&self.gl.weights) {
                let p = mid + half * x;
                let (angle, speed) = sample(p);
                self.nodes.push(RuleNode { angle, weight: w * half * speed, arc, param: p });
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of the weights on arc `arc`.
    pub fn arc_weight(&self, arc: usize) -> f64 {
        self.nodes.iter().filter(|n| n.arc == arc).map(|n| n.weight).sum()
    }
}

/// Angle-parametrized rule: `panels_per_arc` graded panels on every arc.
pub fn build_rule(
    arcs: &[UnitCircleArc],
    panels_per_arc: usize,
    nodes_per_panel: usize,
    grading: f64,
) -> Result<QuadratureRule> {
    if panels_per_arc < 1 {
        return Err(Error::InvalidDiscretization("panels per arc must be at least 1".into()));
    }
    let mut rule = QuadratureRule::empty(arcs.to_vec(), nodes_per_panel, grading)?;
    for (i, arc) in arcs.iter().enumerate() {
        rule.add_interval(i, arc.start_angle, arc.end_angle, panels_per_arc, |t| (t, 1.0));
    }
    Ok(rule)
}

/// `Σ ω_i f(θ_i)`.
pub fn integrate(rule: &QuadratureRule, integrand: impl Fn(f64) -> f64) -> Result<f64> {
    integrate_nodes(rule, |n| integrand(n.angle))
}

/// [`integrate`] with access to the full node.
pub fn integrate_nodes(rule: &QuadratureRule, integrand: impl Fn(&RuleNode) -> f64) -> Result<f64> {
    let mut sum = 0.0;
    for node in &rule.nodes {
        let v = integrand(node);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand(node.angle));
        }
        sum += node.weight * v;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn full_circle() -> Vec<UnitCircleArc> {
        vec![UnitCircleArc::new(0.0, TAU)]
    }

    #[test]
    fn kernel_values() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(poisson_kernel(Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, 0.7)).unwrap(), 1.0);
        assert!((poisson_kernel(Complex64::new(0.5, 0.0), one).unwrap() - 3.0).abs() < 1e-15);
        assert!((poisson_kernel(Complex64::new(0.5, 0.0), -one).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(poisson_kernel(one, -one), Err(Error::TooCloseToBoundary(_))));
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [2, 5, 12, 20] {
            let gl = GaussLegendre::new(n).unwrap();
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
        assert!(GaussLegendre::new(1).is_err());
    }

    #[test]
    fn constant_and_cosine() {
        let rule = build_rule(&[UnitCircleArc::new(0.0, PI)], 8, 12, 3.0).unwrap();
        assert!((integrate(&rule, |_| 1.0).unwrap() - PI).abs() < 1e-12);
        assert!((rule.arc_weight(0) - PI).abs() < 1e-12);
        let rule = build_rule(&[UnitCircleArc::new(0.0, FRAC_PI_2)], 8, 12, 3.0).unwrap();
        assert!((integrate(&rule, f64::cos).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(integrate(&rule, |_| 0.0).unwrap(), 0.0);
    }

    #[test]
    fn nodes_interior_to_arcs() {
        let arcs = [UnitCircleArc::new(0.2, 1.0), UnitCircleArc::new(1.0, 4.0)];
        let rule = build_rule(&arcs, 5, 7, 2.0).unwrap();
        for n in &rule.nodes {
            let arc = arcs[n.arc];
            assert!(n.angle > arc.start_angle && n.angle < arc.end_angle);
        }
    }

    #[test]
    fn non_finite_integrand_rejected() {
        let rule = build_rule(&full_circle(), 2, 4, 1.0).unwrap();
        assert!(matches!(integrate(&rule, |_| f64::NAN), Err(Error::NonFiniteIntegrand(_))));
    }

    #[test]
    fn poisson_normalization_and_reproduction() {
        // periodic integrand: equal panels, resolving |z| = 0.95
        let rule = build_rule(&full_circle(), 64, 16, 1.0).unwrap();
        for i in 0..100 {
            let z = Complex64::from_polar(0.95 * (i as f64 / 99.0), 0.37 * i as f64);
            let total = integrate(&rule, |t| poisson_kernel_unchecked(z, Complex64::from_polar(1.0, t))).unwrap();
            assert!((total / TAU - 1.0).abs() < 1e-10, "|z| = {}", z.norm());
        }
        for i in 0..20 {
            let z = Complex64::from_polar(0.9 * (i as f64 / 19.0), 1.3 * i as f64);
            for n in 1..=4 {
                let v = integrate(&rule, |t| {
                    let zeta = Complex64::from_polar(1.0, t);
                    poisson_kernel_unchecked(z, zeta) * zeta.powi(n).re
                })
                .unwrap();
                assert!((v / TAU - z.powi(n).re).abs() < 1e-8);
            }
        }
    }

    fn sqrt_error(panels: usize, grading: f64) -> f64 {
        let rule = build_rule(&[UnitCircleArc::new(0.0, 1.0)], panels, 12, grading).unwrap();
        (integrate(&rule, f64::sqrt).unwrap() - 2.0 / 3.0).abs()
    }

    #[test]
    fn grading_pays_off_at_endpoint_singularity() {
        let uniform = sqrt_error(8, 1.0);
        let graded = sqrt_error(8, 3.0);
        assert!(graded * 1e3 <= uniform, "graded {graded:e} uniform {uniform:e}");
        let mut last = f64::INFINITY;
        for panels in [2, 4, 8, 16] {
            let e = sqrt_error(panels, 3.0);
            assert!(e < last, "panels {panels}: {e:e} !< {last:e}");
            last = e;
        }
    }

    #[test]
    fn graded_breakpoints_shape() {
        let b = graded_breakpoints(0.0, 1.0, 8, 3.0);
        assert_eq!(b.len(), 9);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[8], 1.0);
        let w: Vec<f64> = b.windows(2).map(|p| p[1] - p[0]).collect();
        assert!((w[1] / w[0] - 9.0).abs() < 1e-9);
        assert!((w[0] - w[7]).abs() < 1e-15);
        let u = graded_breakpoints(2.0, 4.0, 4, 1.0);
        assert_eq!(u, vec![2.0, 2.5, 3.0, 3.5, 4.0]);
    }
}
