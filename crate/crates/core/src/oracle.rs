//! Independent references: exact harmonic functions on annuli and a
//! finite-difference Laplace solver on a polar grid.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::{BoundaryData, BoundaryKind, Circle, CurveData, Side};
use crate::{Error, Result};

/// SOR relaxation factor.
pub const SOR_OMEGA: f64 = 1.9;
pub const MAX_SWEEPS: usize = 100_000;

/// Closed-form harmonic functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum AnalyticSolution {
    /// `a + b log|z|`.
    LogRadial { a: f64, b: f64 },
    /// `Re zⁿ`.
    HarmonicPolynomial { n: i32 },
    /// `Re z⁻ⁿ`.
    InversePower { n: i32 },
    Constant(f64),
}

impl AnalyticSolution {
    /// `a + b log|z|` equal to `outer` on `|z| = 1` and `inner` on `|z| = r`.
    pub fn log_between(r: f64, inner: f64, outer: f64) -> Self {
        AnalyticSolution::LogRadial { a: outer, b: (inner - outer) / r.ln() }
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        analytic_eval(self, z)
    }

    /// Traces on both circles of a domain.
    pub fn boundary_data(self, outer: Circle, inner: Circle) -> BoundaryData {
        let trace = move |c: Circle| {
            CurveData::continuous(move |t| analytic_eval(&self, c.point_at(t)).unwrap_or(f64::NAN))
        };
        BoundaryData::new(trace(outer), trace(inner))
    }
}

pub fn analytic_eval(sol: &AnalyticSolution, z: Complex64) -> Result<f64> {
    match *sol {
        AnalyticSolution::LogRadial { a, b } => {
            if z.norm() == 0.0 {
                return Err(Error::AtSingularity);
            }
            Ok(a + b * z.norm().ln())
        }
        AnalyticSolution::HarmonicPolynomial { n } => Ok(z.powi(n).re),
        AnalyticSolution::InversePower { n } => {
            if z.norm() == 0.0 {
                return Err(Error::AtSingularity);
            }
            Ok(z.powi(-n).re)
        }
        AnalyticSolution::Constant(c) => Ok(c),
    }
}

/// Values on `r_i = r_in + i h_r`, `θ_j = j h_θ`, `i = 0..=nr`, `j = 0..nt`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarGrid {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub radial_intervals: usize,
    pub angular_levels: usize,
    pub h_r: f64,
    pub h_theta: f64,
    pub values: Vec<f64>,
    /// Sweeps used by the last solve.
    pub sweeps: usize,
}

impl PolarGrid {
    /// Grid on `{r < |z| < 1}`.
    pub fn new(inner_radius: f64, radial_intervals: usize, angular_levels: usize) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < 1.0) || radial_intervals < 2 || angular_levels < 4 {
            return Err(Error::InvalidDiscretization("polar grid needs 0 < r < 1, nr >= 2, nt >= 4".into()));
        }
        Ok(PolarGrid {
            inner_radius,
            outer_radius: 1.0,
            radial_intervals,
            angular_levels,
            h_r: (1.0 - inner_radius) / radial_intervals as f64,
            h_theta: TAU / angular_levels as f64,
            values: vec![0.0; (radial_intervals + 1) * angular_levels],
            sweeps: 0,
        })
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i == self.radial_intervals {
            self.outer_radius
        } else {
            self.inner_radius + i as f64 * self.h_r
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.h_theta
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.angular_levels + j
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    /// Bilinear interpolation in `(r, θ)`; `None` outside the annulus.
    pub fn interpolate(&self, z: Complex64) -> Option<f64> {
        let rho = z.norm();
        if !(rho >= self.inner_radius && rho <= self.outer_radius) {
            return None;
        }
        let x = ((rho - self.inner_radius) / self.h_r).min(self.radial_intervals as f64);
        let i = (x.floor() as usize).min(self.radial_intervals - 1);
        let fx = x - i as f64;
        let y = z.arg().rem_euclid(TAU) / self.h_theta;
        let j = (y.floor() as usize) % self.angular_levels;
        let fy = y - y.floor();
        let j1 = (j + 1) % self.angular_levels;
        let v = |a: usize, b: usize| self.value(a, b);
        Some(
            (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j1))
                + fx * ((1.0 - fy) * v(i + 1, j) + fy * v(i + 1, j1)),
        )
    }

    /// `(r, θ, value)` rows in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..=self.radial_intervals)
            .flat_map(move |i| (0..self.angular_levels).map(move |j| (self.radius(i), self.angle(j), self.value(i, j))))
    }
}

/// Dirichlet value imposed on one grid ray, modelling a slit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlitCondition {
    pub angle_index: usize,
    pub value: f64,
}

/// Value of piecewise data at a grid angle, averaging one-sided limits at breakpoints.
fn curve_value(curve: &CurveData, angle: f64) -> Result<f64> {
    match curve.eval(angle, None) {
        Err(Error::AtDiscontinuity { .. }) => {
            Ok(0.5 * (curve.eval(angle, Some(Side::Before))? + curve.eval(angle, Some(Side::After))?))
        }
        other => other,
    }
}

/// Five-point polar Laplace solve on a concentric annulus with data given
/// by angle on each circle.
pub fn fd_solve(grid: PolarGrid, f: &BoundaryData, tol: f64) -> Result<PolarGrid> {
    fd_solve_with(grid, |kind, angle| curve_value(f.curve(kind), angle), tol, None)
}

/// [`fd_solve`] with boundary values from a closure and an optional slit ray.
pub fn fd_solve_with(
    mut grid: PolarGrid,
    boundary: impl Fn(BoundaryKind, f64) -> Result<f64>,
    tol: f64,
    slit: Option<SlitCondition>,
) -> Result<PolarGrid> {
    let (nr, nt) = (grid.radial_intervals, grid.angular_levels);
    for j in 0..nt {
        let t = grid.angle(j);
        let inner = boundary(BoundaryKind::Inner, t)?;
        let outer = boundary(BoundaryKind::Outer, t)?;
        let (a, b) = (grid.idx(0, j), grid.idx(nr, j));
        grid.values[a] = inner;
        grid.values[b] = outer;
    }
    // start from radial interpolation of the data
    for i in 1..nr {
        let s = i as f64 / nr as f64;
        for j in 0..nt {
            let v = (1.0 - s) * grid.value(0, j) + s * grid.value(nr, j);
            let k = grid.idx(i, j);
            grid.values[k] = v;
        }
    }
    if let Some(c) = slit {
        if c.angle_index >= nt {
            return Err(Error::InvalidDiscretization("slit ray index outside the grid".into()));
        }
        for i in 1..nr {
            let k = grid.idx(i, c.angle_index);
            grid.values[k] = c.value;
        }
    }
    let ht2 = grid.h_theta * grid.h_theta;
    let hr2 = grid.h_r * grid.h_r;
    let coeffs: Vec<(f64, f64, f64, f64)> = (0..=nr)
        .map(|i| {
            let r = grid.radius(i);
            let east = 1.0 / hr2 + 1.0 / (2.0 * r * grid.h_r);
            let west = 1.0 / hr2 - 1.0 / (2.0 * r * grid.h_r);
            let ang = 1.0 / (r * r * ht2);
            (east, west, ang, 2.0 / hr2 + 2.0 * ang)
        })
        .collect();
    for sweep in 1..=MAX_SWEEPS {
        let mut max_update: f64 = 0.0;
        for i in 1..nr {
            let (east, west, ang, diag) = coeffs[i];
            for j in 0..nt {
                if slit.is_some_and(|c| c.angle_index == j) {
                    continue;
                }
                let jp = (j + 1) % nt;
                let jm = (j + nt - 1) % nt;
                let gs = (east * grid.value(i + 1, j)
                    + west * grid.value(i - 1, j)
                    + ang * (grid.value(i, jp) + grid.value(i, jm)))
                    / diag;
                let k = grid.idx(i, j);
                let update = gs - grid.values[k];
                grid.values[k] += SOR_OMEGA * update;
                max_update = max_update.max(update.abs());
            }
        }
        if !max_update.is_finite() {
            return Err(Error::NonConvergent("SOR sweep"));
        }
        if max_update <= tol {
            grid.sweeps = sweep;
            return Ok(grid);
        }
    }
    Err(Error::NonConvergent("SOR sweep"))
}

/// Max and mean absolute difference of two fields over a point set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub argmax: Complex64,
    pub count: usize,
}

pub fn compare(
    field_a: impl Fn(Complex64) -> Result<f64>,
    field_b: impl Fn(Complex64) -> Result<f64>,
    points: &[Complex64],
) -> Result<FieldStats> {
    let mut stats = FieldStats { max_abs: 0.0, mean_abs: 0.0, argmax: Complex64::new(f64::NAN, f64::NAN), count: 0 };
    for &z in points {
        let d = (field_a(z)? - field_b(z)?).abs();
        if d > stats.max_abs || stats.count == 0 {
            stats.max_abs = d;
            stats.argmax = z;
        }
        stats.mean_abs += d;
        stats.count += 1;
    }
    if stats.count > 0 {
        stats.mean_abs /= stats.count as f64;
    }
    Ok(stats)
}
