//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schwarz_core::conformal::{
    build_phi, elliptic_f, elliptic_k, jacobi_sn, BoundaryPiece, Subdomain, SubdomainMap, UnitCircleArc,
};
use schwarz_core::geometry::{build_cut_system, AnnularDomain, BoundaryData, BoundaryKind, Circle, CurveData};
use schwarz_core::kernels::{closed_form_eval, series_tail_bound, KernelMatrixPower, DEFAULT_BUDGET};
use schwarz_core::operator::{apply_f, solve_fixed_point, Discretization, SchwarzSetup, SolveMethod, Solution};
use schwarz_core::oracle::{compare, fd_solve, fd_solve_with, AnalyticSolution, PolarGrid};
use schwarz_core::poisson::{build_rule, integrate, poisson_kernel};
use schwarz_core::{Complex64, Result};

const QUADRATURE_TOL: f64 = 1e-8;
const SOLVE_TOL: f64 = 1e-13;

struct Check {
    failed: usize,
}

impl Check {
    fn report(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }

    fn run(&mut self, id: usize, name: &str, body: impl FnOnce() -> Result<(bool, String)>) {
        match body() {
            Ok((pass, detail)) => self.report(id, name, pass, detail),
            Err(e) => self.report(id, name, false, format!("error: {e}")),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn log_problem(sigma: f64, tau: f64) -> Result<SchwarzSetup> {
    let d = AnnularDomain::concentric(0.5)?;
    let cuts = build_cut_system(&d, sigma, tau)?;
    SchwarzSetup::new(d, cuts, BoundaryData::two_level(0.0, 1.0), Discretization::default())
}

fn solve(setup: &SchwarzSetup) -> Result<Solution<'_>> {
    let op = setup.assemble()?;
    setup.solution(solve_fixed_point(&op, SolveMethod::Iterate, SOLVE_TOL)?)
}

/// Random points of the concentric annulus `0.5 < |z| < 1`, at least `margin`
/// from both circles and from the rays at the given angles.
fn annulus_points(rng: &mut ChaCha8Rng, n: usize, margin: f64, rays: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let rho = rng.gen_range(0.5 + margin..1.0 - margin);
        let theta = rng.gen_range(0.0..TAU);
        let z = Complex64::from_polar(rho, theta);
        let clear = rays.iter().all(|&a| {
            let dir = Complex64::from_polar(1.0, a);
            let along = (z * dir.conj()).re;
            along <= 0.0 || (z * dir.conj()).im.abs() >= margin
        });
        if clear {
            out.push(z);
        }
    }
    out
}

/// Points of `D₁` well away from `σ`, the circles and the slit tips.
fn bulk_points(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<Complex64> {
    annulus_points(rng, n, 0.05, &[sigma])
}

fn analytic_agreement() -> Result<(bool, String)> {
    let start = Instant::now();
    let setup = log_problem(0.0, PI)?;
    let sol = solve(&setup)?;
    let exact = AnalyticSolution::log_between(0.5, 1.0, 0.0);
    let points = annulus_points(&mut ChaCha8Rng::seed_from_u64(1), 200, 1e-3, &[0.0, PI]);
    let stats = compare(|z| sol.eval_solution(z), |z| exact.eval(z), &points)?;
    let mid = sol.eval_solution(c(0.0, 0.5f64.sqrt()))?;
    let secs = start.elapsed().as_secs_f64();
    let pass = stats.max_abs <= 1e-3 && (mid - 0.5).abs() <= 1e-3 && secs <= 60.0;
    Ok((pass, format!("max err {:.3e} <= 1e-3, u(i/sqrt2) = {mid:.12}, {secs:.1} s <= 60 s", stats.max_abs)))
}

fn contraction() -> Result<(bool, String)> {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut summary = Vec::new();
    for tau in [PI, 1.0] {
        let setup = log_problem(0.0, tau)?;
        let op = setup.assemble()?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ratio: f64 = 0.0;
        for _ in 0..20 {
            let a: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fa = apply_f(&op, &a)?;
            let fb = apply_f(&op, &b)?;
            let num = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let den = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            ratio = ratio.max(num / den);
        }
        worst_gap = worst_gap.max(ratio - op.q() - 1e-9);
        if !(op.m_hat < TAU) {
            worst_gap = f64::INFINITY;
        }
        summary.push(format!("tau={tau:.3}: ratio {ratio:.3e} <= q {:.3e}, m_hat {:.3e}", op.q(), op.m_hat));
    }
    Ok((worst_gap <= 0.0, summary.join("; ")))
}

/// Worst `(measured − allowed)` for the rate bound and the worst
/// series/iteration gap, over `t = 0..=8` and 50 points.
fn series_checks(tau: f64) -> Result<(f64, f64, f64)> {
    let setup = log_problem(0.0, tau)?;
    let op = setup.assemble()?;
    let fp = solve_fixed_point(&op, SolveMethod::Iterate, SOLVE_TOL)?;
    let sol = setup.solution(fp)?;
    let powers = KernelMatrixPower::new(&op, 8, DEFAULT_BUDGET)?;
    let points = bulk_points(&mut ChaCha8Rng::seed_from_u64(3), 50, 0.0);
    let mut rate_excess = f64::NEG_INFINITY;
    let mut equivalence: f64 = 0.0;
    for &z in &points {
        let u = sol.eval_u(z)?;
        for t in 0..=8 {
            let (value, tail) = closed_form_eval(&setup, &op, &powers, z, t)?;
            rate_excess = rate_excess.max((value - u).abs() - tail - 10.0 * QUADRATURE_TOL);
            equivalence = equivalence.max((value - setup.iterate_field(&op, t, z)?).abs());
        }
    }
    Ok((rate_excess, equivalence, op.q()))
}

fn rate_bound() -> Result<(bool, String)> {
    let mut pass = true;
    let mut summary = Vec::new();
    for tau in [PI, 1.0] {
        let (excess, _, q) = series_checks(tau)?;
        pass &= excess <= 0.0;
        summary.push(format!("tau={tau:.3}: q {q:.3e}, max(err - bound - 1e-7) {excess:.3e} <= 0"));
    }
    let strict = series_tail_bound(1, PI, 1.0)?;
    pass &= (strict - 0.5).abs() < 1e-15;
    Ok((pass, summary.join("; ")))
}

fn series_equivalence() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for tau in [PI, 1.0] {
        worst = worst.max(series_checks(tau)?.1);
    }
    Ok((worst <= 1e-10, format!("max |closed form - iterate| {worst:.3e} <= 1e-10")))
}

fn gluing() -> Result<(bool, String)> {
    let (sigma, tau) = (0.0, 1.0);
    let setup = log_problem(sigma, tau)?;
    let op = setup.assemble()?;
    let sol = setup.solution(solve_fixed_point(&op, SolveMethod::Direct, SOLVE_TOL)?)?;
    let overlap = annulus_points(&mut ChaCha8Rng::seed_from_u64(5), 100, 1e-3, &[sigma, tau]);
    let stats = compare(|z| sol.eval_u(z), |z| sol.eval_g(z), &overlap)?;
    // Limit of u onto σ from both sides against g on σ. The two-sided mean
    // is even in the offset, so one Richardson step removes the leading term.
    let mut on_sigma: f64 = 0.0;
    let mean = |rho: f64, e: f64| -> Result<f64> {
        let above = sol.eval_u(Complex64::from_polar(rho, sigma + e))?;
        let below = sol.eval_u(Complex64::from_polar(rho, sigma - e))?;
        Ok(0.5 * (above + below))
    };
    for k in 0..50 {
        let rho = 0.5 + 0.5 * (k as f64 + 0.5) / 50.0;
        let g = sol.eval_g(Complex64::from_polar(rho, sigma))?;
        let limit = (4.0 * mean(rho, 1e-3)? - mean(rho, 2e-3)?) / 3.0;
        on_sigma = on_sigma.max((limit - g).abs());
    }
    let pass = stats.max_abs <= 1e-6 && on_sigma <= 1e-6;
    Ok((pass, format!("overlap {:.3e} <= 1e-6, sigma {on_sigma:.3e} <= 1e-6", stats.max_abs)))
}

fn poisson_normalization() -> Result<(bool, String)> {
    let rule = build_rule(&[UnitCircleArc::new(0.0, TAU)], 64, 16, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let z = Complex64::from_polar(0.95 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
        let mass = integrate(&rule, |t| poisson_kernel(z, Complex64::from_polar(1.0, t)).unwrap_or(f64::NAN))? / TAU;
        worst = worst.max((mass - 1.0).abs());
    }
    Ok((worst <= 1e-10, format!("max |mass - 1| {worst:.3e} <= 1e-10")))
}

fn mean_value() -> Result<(bool, String)> {
    let setup = {
        let d = AnnularDomain::concentric(0.5)?;
        let cuts = build_cut_system(&d, 0.0, 1.0)?;
        let data = BoundaryData::new(
            CurveData::continuous(|t| (2.0 * t).cos() + 0.3 * t.sin()),
            CurveData::piecewise_constant(&[(0.5, 1.0), (3.5, -1.0)])?,
        );
        SchwarzSetup::new(d, cuts, data, Discretization::default())?
    };
    let sol = solve(&setup)?;
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let center = Complex64::from_polar(0.75, 0.3 + TAU * k as f64 / 10.0);
        let radius = 0.2;
        let n = 128;
        let mut avg = 0.0;
        for j in 0..n {
            avg += sol.eval_solution(center + Complex64::from_polar(radius, TAU * j as f64 / n as f64))?;
        }
        avg /= n as f64;
        worst = worst.max((avg - sol.eval_solution(center)?).abs());
    }
    Ok((worst <= 1e-6, format!("max |average - center| {worst:.3e} <= 1e-6 over 10 circles")))
}

fn maximum_principle() -> Result<(bool, String)> {
    let setup = {
        let d = AnnularDomain::concentric(0.5)?;
        let cuts = build_cut_system(&d, 0.0, 1.0)?;
        let data = BoundaryData::new(
            CurveData::piecewise_constant(&[(FRAC_PI_2, 1.0), (3.0 * FRAC_PI_2, -0.5)])?,
            CurveData::continuous(|t| 0.8 * (3.0 * t).sin()),
        );
        SchwarzSetup::new(d, cuts, data, Discretization::default())?
    };
    let sol = solve(&setup)?;
    let f_sup = setup.f_sup();
    let points = annulus_points(&mut ChaCha8Rng::seed_from_u64(8), 500, 1e-4, &[]);
    let mut u_sup: f64 = 0.0;
    let mut h_sup: f64 = 0.0;
    for &z in &points {
        u_sup = u_sup.max(sol.eval_solution(z)?.abs());
        if let Ok(h) = setup.eval_h(z) {
            h_sup = h_sup.max(h.abs());
        }
    }
    let pass = u_sup <= f_sup + 1e-6 && h_sup <= f_sup + 1e-6;
    Ok((pass, format!("sup|u| {u_sup:.6}, sup|h| {h_sup:.6} <= |f| {f_sup:.6} + 1e-6")))
}

fn fd_grid(r: f64) -> Result<PolarGrid> {
    PolarGrid::new(r, 128, 256)
}

/// Max difference between the solver and the grid on interior grid-free points.
fn oracle_gap(sol: &Solution<'_>, grid: &PolarGrid, to_grid: impl Fn(Complex64) -> Complex64, points: &[Complex64]) -> Result<f64> {
    let stats = compare(
        |z| sol.eval_solution(z),
        |z| grid.interpolate(to_grid(z)).ok_or(schwarz_core::Error::OutsideDomain { re: z.re, im: z.im }),
        points,
    )?;
    Ok(stats.max_abs)
}

fn independent_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points = annulus_points(&mut rng, 200, 0.02, &[]);

    let default = log_problem(0.0, PI)?;
    let sol = solve(&default)?;
    let grid = fd_solve(fd_grid(0.5)?, default.boundary_data(), 1e-11)?;
    let e_default = oracle_gap(&sol, &grid, |z| z, &points)?;

    let d = AnnularDomain::concentric(0.5)?;
    let two_segment = BoundaryData::new(
        CurveData::piecewise_constant(&[(0.0, 1.0), (PI, 0.0)])?,
        CurveData::constant(0.5),
    );
    let pw = SchwarzSetup::new(d.clone(), build_cut_system(&d, FRAC_PI_2, 3.0 * FRAC_PI_2)?, two_segment, Discretization::default())?;
    let sol_pw = solve(&pw)?;
    let grid_pw = fd_solve(fd_grid(0.5)?, pw.boundary_data(), 1e-11)?;
    // the data jumps at angles 0 and π on the outer circle; stay clear of them
    let pw_points: Vec<_> =
        points.iter().copied().filter(|z| z.norm() < 0.9 || (z.im.abs() > 0.1 * z.norm())).collect();
    let e_pw = oracle_gap(&sol_pw, &grid_pw, |z| z, &pw_points)?;

    let ecc = AnnularDomain::new(
        Circle::outer(c(0.0, 0.0), 1.0),
        Circle::inner(c(0.2, 0.0), 0.3),
    )?;
    let data = BoundaryData::new(CurveData::continuous(|t| t.cos()), CurveData::constant(1.0));
    let ecc_setup = SchwarzSetup::new(ecc.clone(), build_cut_system(&ecc, 0.0, PI)?, data, Discretization::default())?;
    let sol_ecc = solve(&ecc_setup)?;
    let cuts = ecc_setup.cuts.clone();
    let to_physical = cuts.normalization().inverse();
    let r = cuts.normalized_inner_radius();
    let boundary = |kind: BoundaryKind, angle: f64| {
        let circle = ecc.circle(kind);
        let rho = if kind == BoundaryKind::Outer { 1.0 } else { r };
        let z = to_physical.apply(Complex64::from_polar(rho, angle));
        schwarz_core::geometry::eval_boundary_data(ecc_setup.boundary_data(), circle, circle.angle_of(z))
    };
    let grid_ecc = fd_solve_with(fd_grid(r)?, boundary, 1e-11, None)?;
    let ecc_points: Vec<_> = annulus_points(&mut rng, 400, 0.0, &[])
        .into_iter()
        .map(|z| to_physical.apply(Complex64::from_polar(r + (1.0 - r) * (z.norm() - 0.5) * 2.0, z.arg())))
        .filter(|&z| {
            let xi = cuts.normalize(z);
            xi.norm() > r + 0.02 && xi.norm() < 0.98
        })
        .take(200)
        .collect();
    let e_ecc = oracle_gap(&sol_ecc, &grid_ecc, |z| cuts.normalize(z), &ecc_points)?;

    let pass = e_default <= 5e-3 && e_pw <= 5e-3 && e_ecc <= 5e-3;
    Ok((pass, format!("default {e_default:.3e}, two-segment {e_pw:.3e}, eccentric {e_ecc:.3e}, each <= 5e-3")))
}

fn conformal_maps() -> Result<(bool, String)> {
    let d = AnnularDomain::new(Circle::outer(c(0.0, 0.0), 1.0), Circle::inner(c(0.2, 0.0), 0.3))?;
    let cuts = build_cut_system(&d, 0.0, PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut round_trip: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    for which in [Subdomain::One, Subdomain::Two] {
        let map = build_phi(&d, &cuts, which)?;
        let mut count = 0;
        while count < 100 {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if !map.contains(z) || d.boundary_distance(z) < 1e-3 {
                continue;
            }
            let w = map.map_inverse(z, None)?;
            round_trip = round_trip.max((map.map_forward(w)? - z).norm());
            count += 1;
        }
        let arc = if which == Subdomain::One { cuts.sigma() } else { cuts.tau() };
        for piece in BoundaryPiece::ALL {
            let (lo, hi) = map.piece_range(piece);
            for j in 1..50 {
                let s = map.boundary_sample(piece, lo + (hi - lo) * j as f64 / 50.0);
                let miss = match piece {
                    BoundaryPiece::Outer => (s.z - d.outer().center).norm() - d.outer().radius,
                    BoundaryPiece::Inner => (s.z - d.inner().center).norm() - d.inner().radius,
                    _ => arc.normalized_distance(cuts.normalize(s.z)),
                };
                boundary = boundary.max(miss.abs()).max((map.map_forward(s.w)? - s.z).norm());
            }
        }
    }
    let mut identity: f64 = (elliptic_k(0.0)? - FRAC_PI_2).abs();
    for k in [0.1, 0.5, 0.9, 0.999] {
        let big_k = elliptic_k(k)?;
        identity = identity.max((jacobi_sn(c(big_k, 0.0), k)? - 1.0).norm());
        for phi in [-1.2, 0.3, 0.7, 1.5] {
            let u = elliptic_f(c(phi, 0.0), k)?;
            identity = identity.max((jacobi_sn(u, k)? - phi.sin()).norm());
        }
    }
    let pass = round_trip <= 1e-9 && boundary <= 1e-9 && identity <= 1e-10;
    Ok((pass, format!("round trip {round_trip:.3e}, boundary {boundary:.3e} <= 1e-9, elliptic {identity:.3e} <= 1e-10")))
}

fn iterate_direct() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for tau in [PI, 1.0] {
        let setup = log_problem(0.0, tau)?;
        let op = setup.assemble()?;
        let it = solve_fixed_point(&op, SolveMethod::Iterate, SOLVE_TOL)?;
        let di = solve_fixed_point(&op, SolveMethod::Direct, SOLVE_TOL)?;
        let gap = it.v_values.iter().zip(&di.v_values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    Ok((worst <= 1e-10, format!("max node gap {worst:.3e} <= 1e-10")))
}

fn main() -> ExitCode {
    let mut check = Check { failed: 0 };
    check.run(1, "analytic agreement", analytic_agreement);
    check.run(2, "contraction", contraction);
    check.run(3, "rate bound", rate_bound);
    check.run(4, "series/iteration equivalence", series_equivalence);
    check.run(5, "gluing", gluing);
    check.run(6, "poisson normalization", poisson_normalization);
    check.run(7, "mean value property", mean_value);
    check.run(8, "maximum principle", maximum_principle);
    check.run(9, "finite-difference oracle", independent_oracle);
    check.run(10, "conformal maps", conformal_maps);
    check.run(11, "iterate/direct cross-check", iterate_direct);
    if check.failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 11 criteria fail", check.failed);
        ExitCode::FAILURE
    }
}
