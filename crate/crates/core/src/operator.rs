//! The harmonic pieces `H₁, H₂, H₃, h`, the kernel `K`, the contraction
//! constant `m`, the discrete operator `F`, its fixed point, the companion
//! function `g` on `D₂`, and the glued solution on `D`.
//!
//! Every integral is a Poisson integral over arcs of the unit circle. The
//! rules are built in rectangle coordinates of the slit maps (see
//! [`crate::conformal::slit_map`]), where the integrands are smooth up to the
//! slit tips.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::{build_phi, BoundaryPiece, BoundarySample, SlitAnnulusMap, Subdomain, SubdomainMap};
use crate::geometry::{
    angular_gap, eval_boundary_data, eval_boundary_data_sided, AnnularDomain, BoundaryData, BoundaryKind, CutSystem, Side,
};
use crate::poisson::{poisson_kernel_unchecked, QuadratureRule};
use crate::{Error, Result};

/// Poisson integrals are not attempted at preimages closer than this to the unit circle.
const DISK_MARGIN: f64 = 1e-14;
/// Radius, in normalized coordinates, of the exclusion zone around slit tips.
pub const TIP_EXCLUSION: f64 = 1e-6;
/// Offset of the `m` sampling grid from the slit tips.
const M_TIP_OFFSET: f64 = 1e-6;
const MAX_PICARD: usize = 100_000;

/// Quadrature and estimation parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discretization {
    /// Panels per slit side; circle pieces get proportionally more.
    pub panels: usize,
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Grading toward panel-interval ends, `≥ 1`.
    pub grading: f64,
    /// Radial samples of `σ` for estimating `m`.
    pub m_samples: usize,
    /// Factor `≥ 1` applied to the estimate of `m` before use.
    pub m_inflation: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization { panels: 8, nodes: 12, grading: 3.0, m_samples: 256, m_inflation: 1.0 }
    }
}

impl Discretization {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 1 {
            return Err(Error::InvalidDiscretization("panels must be at least 1".into()));
        }
        if self.nodes < 2 {
            return Err(Error::InvalidDiscretization("nodes must be at least 2".into()));
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return Err(Error::InvalidDiscretization("grading must be a finite number >= 1".into()));
        }
        if self.m_samples < 16 {
            return Err(Error::InvalidDiscretization("m_samples must be at least 16".into()));
        }
        if !(self.m_inflation >= 1.0 && self.m_inflation.is_finite()) {
            return Err(Error::InvalidDiscretization("m_inflation must be a finite number >= 1".into()));
        }
        Ok(())
    }
}

/// Quadrature nodes on some arcs with their images.
#[derive(Clone, Debug)]
pub struct NodeSet {
    pub rule: QuadratureRule,
    pub pieces: Vec<BoundaryPiece>,
    pub samples: Vec<BoundarySample>,
    /// `f` at the image of each node (zero on slit pieces).
    pub data: Vec<f64>,
    /// Per arc, its piece and the parameter breakpoints between which panels were laid.
    ends: Vec<(BoundaryPiece, Vec<f64>)>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.rule.nodes.iter().map(|n| n.weight)
    }

    /// `(1/2π) Σ ω_i P(b, ζ_i) values_i`.
    fn poisson_sum(&self, b: Complex64, values: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((node, sample), v) in self.rule.nodes.iter().zip(&self.samples).zip(values) {
            s += node.weight * poisson_kernel_unchecked(b, sample.w) * v;
        }
        s / TAU
    }
}

fn slit_nodes(map: &SlitAnnulusMap, disc: &Discretization) -> Result<NodeSet> {
    let (_, arcs) = map.preimage_arcs();
    let mut rule = QuadratureRule::empty(arcs, disc.nodes, disc.grading)?;
    let pieces = [BoundaryPiece::SlitRight, BoundaryPiece::SlitLeft];
    for (i, piece) in pieces.into_iter().enumerate() {
        let (lo, hi) = map.piece_range(piece);
        rule.add_interval(i, lo, hi, disc.panels, |p| {
            let s = map.boundary_sample(piece, p);
            (s.w.arg(), s.speed)
        });
    }
    let node_pieces: Vec<_> = rule.nodes.iter().map(|n| pieces[n.arc]).collect();
    let samples = rule.nodes.iter().zip(&node_pieces).map(|(n, &p)| map.boundary_sample(p, n.param)).collect();
    let data = vec![0.0; rule.nodes.len()];
    let ends = pieces
        .iter()
        .map(|&p| {
            let (lo, hi) = map.piece_range(p);
            (p, vec![lo, hi])
        })
        .collect();
    Ok(NodeSet { rule, pieces: node_pieces, samples, data, ends })
}

/// Breakpoints at `center ± d0·2^{-j}` for `j = 0, 1, …` while the offset is
/// at least `floor`, resolving Poisson integrals at targets whose preimages
/// approach the circle piece at parameter `center`.
fn foot_ladder(center: f64, d0: f64, floor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = d0;
    while d >= floor {
        out.push(center - d);
        out.push(center + d);
        d *= 0.5;
    }
    out
}

/// Graded panels between consecutive `ends`, about `panels` per slit length.
fn lay_panels(
    rule: &mut QuadratureRule,
    map: &SlitAnnulusMap,
    arc: usize,
    piece: BoundaryPiece,
    ends: &[f64],
    panels: usize,
    unit: f64,
) {
    for pair in ends.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let count = ((panels as f64) * (hi - lo) / unit).ceil().max(1.0) as usize;
        rule.add_interval(arc, lo, hi, count, |p| {
            let s = map.boundary_sample(piece, p);
            (s.w.arg(), s.speed)
        });
    }
}

fn circle_nodes(
    map: &SlitAnnulusMap,
    domain: &AnnularDomain,
    cuts: &CutSystem,
    data: &BoundaryData,
    disc: &Discretization,
    feet: &[f64],
    foot_floor: f64,
) -> Result<NodeSet> {
    let (arcs, _) = map.preimage_arcs();
    let (big_k, big_kp) = map.rectangle();
    let mut rule = QuadratureRule::empty(arcs, disc.nodes, disc.grading)?;
    let pieces = [BoundaryPiece::Outer, BoundaryPiece::Inner];
    let d0 = big_kp / disc.panels as f64;
    let mut all_ends = Vec::with_capacity(2);
    for (i, piece) in pieces.into_iter().enumerate() {
        let kind = if piece == BoundaryPiece::Outer { BoundaryKind::Outer } else { BoundaryKind::Inner };
        let circle = domain.circle(kind);
        let mut cuts_at: Vec<f64> = data
            .curve(kind)
            .breakpoints()
            .iter()
            .map(|&b| map.circle_parameter(cuts.normalize(circle.point_at(b)).arg()))
            .collect();
        for &angle in feet {
            cuts_at.extend(foot_ladder(map.circle_parameter(angle), d0, foot_floor));
        }
        cuts_at.retain(|&p| p > -big_k + 1e-12 && p < big_k - 1e-12);
        cuts_at.sort_by(f64::total_cmp);
        cuts_at.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        let mut ends = vec![-big_k];
        ends.extend(cuts_at);
        ends.push(big_k);
        lay_panels(&mut rule, map, i, piece, &ends, disc.panels, big_kp);
        all_ends.push((piece, ends));
    }
    let node_pieces: Vec<_> = rule.nodes.iter().map(|n| pieces[n.arc]).collect();
    let samples: Vec<BoundarySample> =
        rule.nodes.iter().zip(&node_pieces).map(|(n, &p)| map.boundary_sample(p, n.param)).collect();
    let mut values = Vec::with_capacity(samples.len());
    for ((s, &piece), node) in samples.iter().zip(&node_pieces).zip(&rule.nodes) {
        values.push(circle_datum(map, domain, cuts, data, piece, s, node.param)?);
    }
    Ok(NodeSet { rule, pieces: node_pieces, samples, data: values, ends: all_ends })
}

/// `f` at a circle node. A node that rounds onto a breakpoint of `f` takes
/// the one-sided value from its own side, read off the node parameter.
fn circle_datum(
    map: &SlitAnnulusMap,
    domain: &AnnularDomain,
    cuts: &CutSystem,
    data: &BoundaryData,
    piece: BoundaryPiece,
    sample: &BoundarySample,
    param: f64,
) -> Result<f64> {
    let kind = if piece == BoundaryPiece::Outer { BoundaryKind::Outer } else { BoundaryKind::Inner };
    let circle = domain.circle(kind);
    let angle = circle.angle_of(sample.z);
    match eval_boundary_data(data, circle, angle) {
        Err(Error::AtDiscontinuity { .. }) => {
            let nearest = data
                .curve(kind)
                .breakpoints()
                .iter()
                .copied()
                .min_by(|a, b| angular_gap(angle, *a).total_cmp(&angular_gap(angle, *b)))
                .ok_or(Error::AtDiscontinuity { angle })?;
            let (big_k, _) = map.rectangle();
            let at = map.circle_parameter(cuts.normalize(circle.point_at(nearest)).arg());
            // a breakpoint at the slit sits at both ends of the parameter range
            let before = if big_k - at.abs() <= 1e-9 * big_k { param > 0.0 } else { param < at };
            eval_boundary_data_sided(data, circle, angle, if before { Side::Before } else { Side::After })
        }
        other => other,
    }
}

/// A preimage in the disk together with its rectangle coordinate.
#[derive(Clone, Copy, Debug)]
struct Target {
    w: Complex64,
    rect: Complex64,
}

/// Distance from a rectangle coordinate to a boundary piece and the
/// parameter of its foot on that piece.
fn piece_distance(piece: BoundaryPiece, rect: Complex64, big_k: f64, big_kp: f64) -> (f64, f64) {
    match piece {
        BoundaryPiece::Outer => (rect.im, rect.re),
        BoundaryPiece::Inner => (big_kp - rect.im, rect.re),
        BoundaryPiece::SlitRight => (big_k - rect.re, rect.im),
        BoundaryPiece::SlitLeft => (rect.re + big_k, rect.im),
    }
}

/// Which harmonic piece to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HarmonicPiece {
    H1,
    H2,
    H3,
    H,
}

/// Sampled estimate of `m` with its refinement history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionEstimate {
    pub m_hat: f64,
    pub sample_count: usize,
    /// `(radial samples, running maximum)` for 16, 32, …, `sample_count`.
    pub refinement_history: Vec<(usize, f64)>,
}

impl ContractionEstimate {
    pub fn q(&self) -> f64 {
        self.m_hat / TAU
    }
}

/// Everything that depends on the domain, the cuts, the data and the rules,
/// but not on the fixed point.
#[derive(Clone, Debug)]
pub struct SchwarzSetup {
    pub domain: AnnularDomain,
    pub cuts: CutSystem,
    pub discretization: Discretization,
    pub phi1: SlitAnnulusMap,
    pub phi2: SlitAnnulusMap,
    /// `A₁`, preimages of `∂D` under `φ₁`.
    pub a1: NodeSet,
    /// `B₁`, preimages of `σ` under `φ₁`.
    pub b1: NodeSet,
    pub a2: NodeSet,
    /// `B₂`, preimages of `τ` under `φ₂`.
    pub b2: NodeSet,
    data: BoundaryData,
    f_sup: f64,
    /// `φ₂⁻¹` of the `σ` nodes.
    sigma_pre2: Vec<Complex64>,
    /// `φ₁⁻¹` of the `τ` nodes.
    tau_pre1: Vec<Complex64>,
    /// `H₂` at the `σ` nodes.
    h2_sigma: Vec<f64>,
    /// `q[k·N₂ + j] = ω_k P(φ₂⁻¹(σ_k), ζ₁ʲ)`.
    q: Vec<f64>,
}

impl SchwarzSetup {
    pub fn new(domain: AnnularDomain, cuts: CutSystem, data: BoundaryData, disc: Discretization) -> Result<Self> {
        disc.validate()?;
        let phi1 = build_phi(&domain, &cuts, Subdomain::One)?;
        let phi2 = build_phi(&domain, &cuts, Subdomain::Two)?;
        let b1 = slit_nodes(&phi1, &disc)?;
        let b2 = slit_nodes(&phi2, &disc)?;
        let (_, big_kp) = phi1.rectangle();
        let foot_floor = b1
            .rule
            .nodes
            .iter()
            .map(|n| n.param.min(big_kp - n.param))
            .fold(f64::INFINITY, f64::min)
            * 0.5;
        let a1 = circle_nodes(&phi1, &domain, &cuts, &data, &disc, &[cuts.tau().angle], foot_floor)?;
        let a2 = circle_nodes(&phi2, &domain, &cuts, &data, &disc, &[cuts.sigma().angle], foot_floor)?;
        let f_sup = data.sup_norm();

        let sigma_pre2 =
            b1.samples.iter().map(|s| phi2.map_inverse(s.z, None)).collect::<Result<Vec<_>>>()?;
        let tau_pre1 = b2.samples.iter().map(|s| phi1.map_inverse(s.z, None)).collect::<Result<Vec<_>>>()?;
        let h2_sigma = sigma_pre2.iter().map(|&a| a2.poisson_sum(a, &a2.data)).collect();
        let n2 = b2.len();
        let mut q = vec![0.0; b1.len() * n2];
        for (k, (node, &a)) in b1.rule.nodes.iter().zip(&sigma_pre2).enumerate() {
            for (j, zeta) in b2.samples.iter().enumerate() {
                q[k * n2 + j] = node.weight * poisson_kernel_unchecked(a, zeta.w);
            }
        }
        Ok(SchwarzSetup {
            domain,
            cuts,
            discretization: disc,
            phi1,
            phi2,
            a1,
            b1,
            a2,
            b2,
            data,
            f_sup,
            sigma_pre2,
            tau_pre1,
            h2_sigma,
            q,
        })
    }

    pub fn boundary_data(&self) -> &BoundaryData {
        &self.data
    }

    /// `‖f‖∞`.
    pub fn f_sup(&self) -> f64 {
        self.f_sup
    }

    /// Number of `τ` nodes, the size of the discrete fixed-point problem.
    pub fn n(&self) -> usize {
        self.b2.len()
    }

    pub fn map(&self, which: Subdomain) -> &SlitAnnulusMap {
        match which {
            Subdomain::One => &self.phi1,
            Subdomain::Two => &self.phi2,
        }
    }

    /// Physical points of the `σ` nodes.
    pub fn sigma_points(&self) -> Vec<Complex64> {
        self.b1.samples.iter().map(|s| s.z).collect()
    }

    /// Physical points of the `τ` nodes.
    pub fn tau_points(&self) -> Vec<Complex64> {
        self.b2.samples.iter().map(|s| s.z).collect()
    }

    /// `φ_j⁻¹(z)` for an interior point of `D_j` outside the tip zones.
    pub fn preimage(&self, which: Subdomain, z: Complex64) -> Result<Complex64> {
        let map = self.map(which);
        if !map.contains(z) {
            return Err(Error::OutsideSubdomain { re: z.re, im: z.im });
        }
        let arc = match which {
            Subdomain::One => self.cuts.sigma(),
            Subdomain::Two => self.cuts.tau(),
        };
        let xi = self.cuts.normalize(z);
        for tip in [arc.inner_endpoint(), arc.outer_endpoint()] {
            if (xi - self.cuts.normalize(tip)).norm() < TIP_EXCLUSION {
                return Err(Error::TooCloseToSlitTip);
            }
        }
        let w = map.map_inverse(z, None)?;
        if w.norm() >= 1.0 - DISK_MARGIN {
            return Err(Error::TooCloseToBoundary(w.norm()));
        }
        Ok(w)
    }

    /// Like [`SchwarzSetup::preimage`], also returning the rectangle coordinate.
    fn target(&self, which: Subdomain, z: Complex64) -> Result<Target> {
        let w = self.preimage(which, z)?;
        Ok(Target { w, rect: self.map(which).rectangle_coordinate(z, None)? })
    }

    /// Target for a point on the other map's cut, without the margin checks.
    fn raw_target(&self, which: Subdomain, z: Complex64) -> Result<Target> {
        let map = self.map(which);
        Ok(Target { w: map.map_inverse(z, None)?, rect: map.rectangle_coordinate(z, None)? })
    }

    /// `(1/2π)∫ P(t, ζ) v(ζ) ds` over the arcs of `set`. Arcs the target is
    /// close to, relative to the panel size, are integrated with a rule
    /// refined toward the target's foot, taking values from `fresh`.
    fn refined_sum(
        &self,
        map: &SlitAnnulusMap,
        set: &NodeSet,
        t: &Target,
        values: &[f64],
        fresh: &dyn Fn(BoundaryPiece, &BoundarySample, f64) -> Result<f64>,
    ) -> Result<f64> {
        let disc = &self.discretization;
        let (big_k, big_kp) = map.rectangle();
        let d0 = big_kp / disc.panels as f64;
        let mut s = 0.0;
        for (arc, (piece, ends)) in set.ends.iter().enumerate() {
            let (delta, foot) = piece_distance(*piece, t.rect, big_k, big_kp);
            if delta >= d0 {
                for ((node, sample), v) in set.rule.nodes.iter().zip(&set.samples).zip(values) {
                    if node.arc == arc {
                        s += node.weight * poisson_kernel_unchecked(t.w, sample.w) * v;
                    }
                }
                continue;
            }
            let (lo, hi) = map.piece_range(*piece);
            let mut cuts: Vec<f64> = ends[1..ends.len() - 1].to_vec();
            cuts.extend(foot_ladder(foot, d0, 0.25 * delta.max(f64::EPSILON * big_k)));
            cuts.retain(|&p| p > lo + 1e-14 && p < hi - 1e-14);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
            let mut fine_ends = vec![lo];
            fine_ends.extend(cuts);
            fine_ends.push(hi);
            let mut rule = QuadratureRule::empty(set.rule.arcs.clone(), disc.nodes, disc.grading)?;
            lay_panels(&mut rule, map, arc, *piece, &fine_ends, disc.panels, big_kp);
            for node in &rule.nodes {
                let sample = map.boundary_sample(*piece, node.param);
                s += node.weight * poisson_kernel_unchecked(t.w, sample.w) * fresh(*piece, &sample, node.param)?;
            }
        }
        Ok(s / TAU)
    }

    fn h1_t(&self, t: &Target) -> Result<f64> {
        let fresh = |p, s: &BoundarySample, x| circle_datum(&self.phi1, &self.domain, &self.cuts, &self.data, p, s, x);
        self.refined_sum(&self.phi1, &self.a1, t, &self.a1.data, &fresh)
    }

    fn h2_t(&self, t: &Target) -> Result<f64> {
        let fresh = |p, s: &BoundarySample, x| circle_datum(&self.phi2, &self.domain, &self.cuts, &self.data, p, s, x);
        self.refined_sum(&self.phi2, &self.a2, t, &self.a2.data, &fresh)
    }

    fn h3_t(&self, t: &Target) -> Result<f64> {
        self.refined_sum(&self.phi1, &self.b1, t, &self.h2_sigma, &|_, s, _| {
            self.h2_t(&self.raw_target(Subdomain::Two, s.z)?)
        })
    }

    fn h1_at(&self, b: Complex64) -> f64 {
        self.a1.poisson_sum(b, &self.a1.data)
    }

    fn h3_at(&self, b: Complex64) -> f64 {
        self.b1.poisson_sum(b, &self.h2_sigma)
    }

    pub fn eval_h1(&self, z: Complex64) -> Result<f64> {
        self.h1_t(&self.target(Subdomain::One, z)?)
    }

    pub fn eval_h2(&self, z: Complex64) -> Result<f64> {
        self.h2_t(&self.target(Subdomain::Two, z)?)
    }

    pub fn eval_h3(&self, z: Complex64) -> Result<f64> {
        self.h3_t(&self.target(Subdomain::One, z)?)
    }

    pub fn eval_h(&self, z: Complex64) -> Result<f64> {
        let t = self.target(Subdomain::One, z)?;
        Ok(self.h1_t(&t)? + self.h3_t(&t)?)
    }

    pub fn eval_piece(&self, which: HarmonicPiece, z: Complex64) -> Result<f64> {
        match which {
            HarmonicPiece::H1 => self.eval_h1(z),
            HarmonicPiece::H2 => self.eval_h2(z),
            HarmonicPiece::H3 => self.eval_h3(z),
            HarmonicPiece::H => self.eval_h(z),
        }
    }

    /// `H₂` at the `σ` nodes.
    pub fn h2_on_sigma(&self) -> &[f64] {
        &self.h2_sigma
    }

    /// `K(z, ζ₁)` for a point `ζ₁` of the unit circle on `B₂`.
    pub fn eval_kernel(&self, z: Complex64, zeta1: Complex64) -> Result<f64> {
        let b = self.preimage(Subdomain::One, z)?;
        let mut s = 0.0;
        for ((node, sample), &a) in self.b1.rule.nodes.iter().zip(&self.b1.samples).zip(&self.sigma_pre2) {
            s += node.weight * poisson_kernel_unchecked(a, zeta1) * poisson_kernel_unchecked(b, sample.w);
        }
        Ok(s)
    }

    /// `K(z, ζ₁ʲ)` at the `j`-th `τ` node.
    pub fn eval_k(&self, z: Complex64, j: usize) -> Result<f64> {
        if j >= self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: j });
        }
        Ok(self.kernel_row(z)?[j])
    }

    /// `[K(z, ζ₁ʲ)]_j` over all `τ` nodes.
    pub fn kernel_row(&self, z: Complex64) -> Result<Vec<f64>> {
        Ok(self.kernel_row_at(self.preimage(Subdomain::One, z)?))
    }

    pub(crate) fn kernel_row_at(&self, b: Complex64) -> Vec<f64> {
        let n2 = self.n();
        let mut row = vec![0.0; n2];
        for (k, sample) in self.b1.samples.iter().enumerate() {
            let pb = poisson_kernel_unchecked(b, sample.w);
            for (r, qk) in row.iter_mut().zip(&self.q[k * n2..(k + 1) * n2]) {
                *r += qk * pb;
            }
        }
        row
    }

    /// `(2π)⁻² K(z, ζ₁ʲ) ω_j`, the weights with which `F` sees the node values.
    pub fn scaled_kernel_row(&self, z: Complex64) -> Result<Vec<f64>> {
        let row = self.kernel_row(z)?;
        Ok(self.scale_row(row))
    }

    fn scale_row(&self, mut row: Vec<f64>) -> Vec<f64> {
        for (r, node) in row.iter_mut().zip(&self.b2.rule.nodes) {
            *r = *r * node.weight / (TAU * TAU);
        }
        row
    }

    /// `∫_{B₂} P(φ₂⁻¹(ζ), ζ₁) ds` for `ζ` the physical point `z` on `σ`.
    fn sigma_b2_mass(&self, a: Complex64) -> f64 {
        self.b2.rule.nodes.iter().zip(&self.b2.samples).map(|(n, s)| n.weight * poisson_kernel_unchecked(a, s.w)).sum()
    }

    /// Maximizes the `B₂` mass over a radial grid of `σ` plus the `σ` nodes.
    pub fn estimate_m(&self, samples: usize) -> Result<ContractionEstimate> {
        if samples < 16 {
            return Err(Error::InvalidDiscretization(format!("m estimate needs at least 16 samples, got {samples}")));
        }
        let r = self.cuts.normalized_inner_radius();
        let dir = Complex64::from_polar(1.0, self.cuts.sigma().angle);
        let to_physical = self.cuts.normalization().inverse();
        let node_max = self.sigma_pre2.iter().map(|&a| self.sigma_b2_mass(a)).fold(0.0, f64::max);
        let mut levels = vec![16];
        while *levels.last().unwrap() * 2 <= samples {
            levels.push(levels.last().unwrap() * 2);
        }
        if *levels.last().unwrap() != samples {
            levels.push(samples);
        }
        let mut history = Vec::with_capacity(levels.len());
        let mut running = node_max;
        let mut seen = std::collections::HashSet::new();
        for &n in &levels {
            for i in 0..=n {
                // nested grids share points: compare in lowest terms
                let g = gcd(i, n);
                if !seen.insert((i / g, n / g)) {
                    continue;
                }
                let rho = r + M_TIP_OFFSET + (1.0 - r - 2.0 * M_TIP_OFFSET) * i as f64 / n as f64;
                let z = to_physical.apply(dir * rho);
                let a = self.phi2.map_inverse(z, None)?;
                running = running.max(self.sigma_b2_mass(a));
            }
            history.push((n, running));
        }
        let estimate = ContractionEstimate { m_hat: running, sample_count: samples, refinement_history: history };
        if !(estimate.m_hat < TAU) {
            return Err(Error::ContractionViolated { m_hat: estimate.m_hat });
        }
        Ok(estimate)
    }

    /// The discrete operator on the `τ` nodes.
    pub fn assemble(&self) -> Result<DiscreteOperator> {
        let estimate = self.estimate_m(self.discretization.m_samples)?;
        let m_used = estimate.m_hat * self.discretization.m_inflation;
        if !(m_used < TAU) {
            return Err(Error::ContractionViolated { m_hat: m_used });
        }
        let n = self.n();
        let mut matrix = DMatrix::zeros(n, n);
        let mut h_tau = Vec::with_capacity(n);
        for (i, &b) in self.tau_pre1.iter().enumerate() {
            let row = self.scale_row(self.kernel_row_at(b));
            for (j, v) in row.into_iter().enumerate() {
                matrix[(i, j)] = v;
            }
            h_tau.push(self.h1_at(b) + self.h3_at(b));
        }
        Ok(DiscreteOperator {
            matrix,
            h_tau,
            weights: self.b2.weights().collect(),
            m_hat: m_used,
            estimate,
            f_sup: self.f_sup,
        })
    }

    /// `u` on `σ` implied by node values `v` on `τ`: `H₂ + (1/2π)∫_{B₂} P v`.
    fn sigma_trace(&self, v: &[f64]) -> Vec<f64> {
        self.sigma_pre2.iter().zip(&self.h2_sigma).map(|(&a, h2)| h2 + self.b2.poisson_sum(a, v)).collect()
    }

    /// `F^{t}(0)` at the `τ` nodes.
    pub fn picard_vector(&self, op: &DiscreteOperator, t: usize) -> Vec<f64> {
        let mut v = vec![0.0; op.n()];
        for _ in 0..t {
            v = op.apply_unchecked(&v);
        }
        v
    }

    /// `F(v)(z) = h(z) + (2π)⁻² Σ_j ω_j K(z, ζ₁ʲ) v_j` at an interior point of `D₁`.
    pub fn apply_f_at(&self, v: &[f64], z: Complex64) -> Result<f64> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: v.len() });
        }
        let t = self.target(Subdomain::One, z)?;
        let row = self.scale_row(self.kernel_row_at(t.w));
        Ok(self.h1_t(&t)? + self.h3_t(&t)? + row.iter().zip(v).map(|(k, x)| k * x).sum::<f64>())
    }

    /// `F^{t+1}(0)(z)`.
    pub fn iterate_field(&self, op: &DiscreteOperator, t: usize, z: Complex64) -> Result<f64> {
        self.apply_f_at(&self.picard_vector(op, t), z)
    }

    /// Binds a fixed point to this setup.
    pub fn solution<'a>(&'a self, fixed_point: FixedPointSolution) -> Result<Solution<'a>> {
        if fixed_point.v_values.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: fixed_point.v_values.len() });
        }
        let sigma_trace = self.sigma_trace(&fixed_point.v_values);
        Ok(Solution { setup: self, fixed_point, sigma_trace })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// `v ↦ M v + h_τ` on the `τ` nodes.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    /// `M[i][j] = (2π)⁻² K(φ₂(ζ₁ⁱ), ζ₁ʲ) ω_j`.
    pub matrix: DMatrix<f64>,
    /// `h(φ₂(ζ₁ⁱ))`.
    pub h_tau: Vec<f64>,
    /// `ω_j`.
    pub weights: Vec<f64>,
    /// Contraction constant in use (estimate times inflation).
    pub m_hat: f64,
    pub estimate: ContractionEstimate,
    pub f_sup: f64,
}

/// How to find the fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    Iterate,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointSolution {
    /// `u` at the `τ` nodes.
    pub v_values: Vec<f64>,
    pub iterations: usize,
    /// `‖M v + h_τ − v‖∞`.
    pub residual: f64,
    pub certified_bound: f64,
    pub method: SolveMethod,
}

impl DiscreteOperator {
    pub fn n(&self) -> usize {
        self.h_tau.len()
    }

    /// `m̂ / 2π`.
    pub fn q(&self) -> f64 {
        self.m_hat / TAU
    }

    /// Max absolute row sum of `M`.
    pub fn matrix_norm_inf(&self) -> f64 {
        self.matrix.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn apply_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let mv = &self.matrix * DVector::from_column_slice(v);
        mv.iter().zip(&self.h_tau).map(|(a, b)| a + b).collect()
    }

    pub fn residual(&self, v: &[f64]) -> f64 {
        sup_diff(&self.apply_unchecked(v), v)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `M v + h_τ`.
pub fn apply_f(op: &DiscreteOperator, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != op.n() {
        return Err(Error::DimensionMismatch { expected: op.n(), got: v.len() });
    }
    Ok(op.apply_unchecked(v))
}

/// Fixed point of `F` on the nodes.
pub fn solve_fixed_point(op: &DiscreteOperator, method: SolveMethod, tol: f64) -> Result<FixedPointSolution> {
    let q = op.q();
    if !(q < 1.0) {
        return Err(Error::ContractionViolated { m_hat: op.m_hat });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidDiscretization(format!("tolerance must be positive, got {tol}")));
    }
    match method {
        SolveMethod::Iterate => {
            let stop = tol * (1.0 - q);
            let mut v = vec![0.0; op.n()];
            for it in 1..=MAX_PICARD {
                let next = op.apply_unchecked(&v);
                let update = sup_diff(&next, &v);
                v = next;
                if update <= stop {
                    let residual = op.residual(&v);
                    let certified_bound = crate::kernels::series_tail_bound(it - 1, op.m_hat, op.f_sup)?;
                    return Ok(FixedPointSolution { v_values: v, iterations: it, residual, certified_bound, method });
                }
            }
            Err(Error::NonConvergent("Picard iteration"))
        }
        SolveMethod::Direct => {
            let n = op.n();
            let a = DMatrix::identity(n, n) - &op.matrix;
            let lu = a.lu();
            let x = lu.solve(&DVector::from_column_slice(&op.h_tau)).ok_or(Error::SingularSystem)?;
            let v: Vec<f64> = x.iter().copied().collect();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::SingularSystem);
            }
            let residual = op.residual(&v);
            Ok(FixedPointSolution { v_values: v, iterations: 0, residual, certified_bound: residual / (1.0 - q), method })
        }
    }
}

/// The fixed point bound to its setup: `u` on `D₁`, `g` on `D₂`, and the
/// glued solution on `D`.
#[derive(Clone, Debug)]
pub struct Solution<'a> {
    pub setup: &'a SchwarzSetup,
    pub fixed_point: FixedPointSolution,
    sigma_trace: Vec<f64>,
}

impl Solution<'_> {
    /// `u` at the `σ` nodes, as seen from `D₂`.
    pub fn sigma_trace(&self) -> &[f64] {
        &self.sigma_trace
    }

    /// `u(z) = H₁(z) + (1/2π)∫_{B₁} P(φ₁⁻¹(z), ζ) u(φ₁(ζ)) ds`.
    pub fn eval_u(&self, z: Complex64) -> Result<f64> {
        self.u_t(&self.setup.target(Subdomain::One, z)?)
    }

    fn u_t(&self, t: &Target) -> Result<f64> {
        let s = self.setup;
        let slit = s.refined_sum(&s.phi1, &s.b1, t, &self.sigma_trace, &|_, sample, _| {
            let a = s.raw_target(Subdomain::Two, sample.z)?;
            Ok(s.h2_t(&a)? + s.b2.poisson_sum(a.w, &self.fixed_point.v_values))
        })?;
        Ok(s.h1_t(t)? + slit)
    }

    /// `g(z)`: data `f` on `A₂`, `u` on `B₂`.
    pub fn eval_g(&self, z: Complex64) -> Result<f64> {
        self.g_t(&self.setup.target(Subdomain::Two, z)?)
    }

    fn g_t(&self, t: &Target) -> Result<f64> {
        let s = self.setup;
        let slit = s.refined_sum(&s.phi2, &s.b2, t, &self.fixed_point.v_values, &|_, sample, _| {
            let b = s.raw_target(Subdomain::One, sample.z)?;
            Ok(s.h1_t(&b)? + s.b1.poisson_sum(b.w, &self.sigma_trace))
        })?;
        Ok(s.h2_t(t)? + slit)
    }

    fn g_at(&self, a: Complex64) -> f64 {
        let s = self.setup;
        s.a2.poisson_sum(a, &s.a2.data) + s.b2.poisson_sum(a, &self.fixed_point.v_values)
    }

    /// `g` at the `σ` nodes.
    pub fn g_on_sigma(&self) -> Vec<f64> {
        self.setup.sigma_pre2.iter().map(|&a| self.g_at(a)).collect()
    }

    /// The solution on `D`: `u` away from `σ`, `g` near it.
    pub fn eval_solution(&self, z: Complex64) -> Result<f64> {
        let s = self.setup;
        if !s.domain.contains(z) {
            return Err(Error::OutsideDomain { re: z.re, im: z.im });
        }
        let xi = s.cuts.normalize(z);
        let d_sigma = s.cuts.sigma().normalized_distance(xi);
        let d_tau = s.cuts.tau().normalized_distance(xi);
        if d_sigma > d_tau {
            self.eval_u(z)
        } else {
            self.eval_g(z)
        }
    }
}
