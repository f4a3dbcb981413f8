//! The four subcommands and the files they write.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schwarz_core::conformal::{Subdomain, SubdomainMap, UnitCircleArc};
use schwarz_core::geometry::{eval_boundary_data, eval_boundary_data_sided, BoundaryKind, Side};
use schwarz_core::kernels::{closed_form_eval, series_tail_bound, KernelMatrixPower, DEFAULT_BUDGET};
use schwarz_core::operator::{apply_f, solve_fixed_point, DiscreteOperator, SchwarzSetup, Solution, SolveMethod};
use schwarz_core::oracle::{compare, fd_solve_with, PolarGrid};
use schwarz_core::poisson::{build_rule, integrate, poisson_kernel};
use schwarz_core::Complex64;
use serde::Serialize;

use crate::config::{Mode, Problem};
use crate::CliError;

/// Evaluation points are kept this far, in normalized coordinates, from cuts and circles.
const EXCLUSION: f64 = 1e-6;
/// Allowance for quadrature error in the bound-domination checks.
const QUADRATURE_TOL: f64 = 1e-8;
/// Round-off floor for comparisons against the certified bound.
const NOISE_FLOOR: f64 = 1e-12;
const PROBE_SEED: u64 = 20;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

/// Diagnostics of one run. Wall time goes to stderr so that reports stay reproducible.
/// Parameters shared by both slit maps.
#[derive(Clone, Debug, Serialize)]
pub struct MapReport {
    pub modulus: f64,
    pub complete_k: f64,
    pub complete_kprime: f64,
    pub normalized_inner_radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub mode: &'static str,
    pub map: MapReport,
    pub n: usize,
    pub m_hat: f64,
    pub q: f64,
    pub iterations: usize,
    pub residual: f64,
    pub certified_bound: f64,
    pub t: Option<usize>,
    pub tail_bound: Option<f64>,
    pub points: usize,
    pub checks: Vec<CheckResult>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Solved {
    setup: SchwarzSetup,
    op: DiscreteOperator,
}

fn build(problem: &Problem) -> Result<Solved, CliError> {
    let setup = SchwarzSetup::new(
        problem.domain.clone(),
        problem.cuts.clone(),
        problem.data.clone(),
        problem.discretization.clone(),
    )?;
    let op = setup.assemble()?;
    Ok(Solved { setup, op })
}

fn deterministic(x: f64) -> f64 {
    // folds −0 into +0 so that outputs do not depend on the sign of zero
    x + 0.0
}

fn csv_float(x: f64) -> String {
    format!("{:.16e}", deterministic(x))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_report(dir: &Path, name: &str, report: &RunReport) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, &text)
}

/// Physical point at normalized polar coordinates.
fn physical(problem: &Problem, rho: f64, theta: f64) -> Complex64 {
    problem.cuts.normalization().inverse().apply(Complex64::from_polar(rho, theta))
}

/// Whether a normalized point clears both cuts and both circles by `margin`.
fn clear_of_cuts(problem: &Problem, xi: Complex64, margin: f64) -> bool {
    let r = problem.cuts.normalized_inner_radius();
    let rho = xi.norm();
    rho > r + margin
        && rho < 1.0 - margin
        && problem.cuts.sigma().normalized_distance(xi) >= margin
        && problem.cuts.tau().normalized_distance(xi) >= margin
}

/// Polar grid of the normalized annulus mapped back to `D`.
fn evaluation_grid(problem: &Problem) -> Vec<Complex64> {
    let r = problem.cuts.normalized_inner_radius();
    let (nr, nt) = (problem.output.radial, problem.output.angular);
    let mut out = Vec::with_capacity(nr * nt);
    for i in 1..=nr {
        let rho = r + (1.0 - r) * i as f64 / (nr + 1) as f64;
        for j in 0..nt {
            let theta = TAU * j as f64 / nt as f64;
            let xi = Complex64::from_polar(rho, theta);
            if clear_of_cuts(problem, xi, EXCLUSION) {
                out.push(physical(problem, rho, theta));
            }
        }
    }
    out
}

/// Seeded points of `D` clearing cuts and circles by `margin` of the normalized width.
fn probe_points(problem: &Problem, rng: &mut ChaCha8Rng, n: usize, margin: f64) -> Vec<Complex64> {
    let r = problem.cuts.normalized_inner_radius();
    let m = margin * (1.0 - r);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let rho = rng.gen_range(r + m..1.0 - m);
        let theta = rng.gen_range(0.0..TAU);
        if clear_of_cuts(problem, Complex64::from_polar(rho, theta), m) {
            out.push(physical(problem, rho, theta));
        }
    }
    out
}

fn fixed_point_report(command: &'static str, mode: Mode, solved: &Solved, sol: &Solution<'_>, points: usize) -> RunReport {
    let fp = &sol.fixed_point;
    let phi = &solved.setup.phi1;
    RunReport {
        command,
        mode: mode.name(),
        map: MapReport {
            modulus: phi.elliptic.modulus,
            complete_k: phi.elliptic.complete_k,
            complete_kprime: phi.elliptic.complete_kprime,
            normalized_inner_radius: phi.inner_radius,
        },
        n: solved.op.n(),
        m_hat: solved.op.m_hat,
        q: solved.op.q(),
        iterations: fp.iterations,
        residual: fp.residual,
        certified_bound: fp.certified_bound,
        t: None,
        tail_bound: None,
        points,
        checks: Vec::new(),
    }
}

pub fn cmd_solve(problem: &Problem, out: &Path) -> Result<RunReport, CliError> {
    let mode = problem.solver.mode;
    let solved = build(problem)?;
    let fp = solve_fixed_point(&solved.op, mode.method(), problem.solver.tol)?;
    let sol = solved.setup.solution(fp)?;
    let points = evaluation_grid(problem);
    let mut csv = String::new();
    let mut report = fixed_point_report("solve", mode, &solved, &sol, points.len());
    if mode == Mode::ClosedForm {
        let t = problem.solver.t;
        let powers = KernelMatrixPower::new(&solved.op, t, DEFAULT_BUDGET)?;
        csv.push_str("re,im,u,tail_bound\n");
        let mut tail = series_tail_bound(t, solved.op.m_hat, solved.op.f_sup)?;
        let mut kept = 0;
        for &z in &points {
            // the series is defined on D₁ only
            if !solved.setup.map(Subdomain::One).contains(z) {
                continue;
            }
            let (value, bound) = closed_form_eval(&solved.setup, &solved.op, &powers, z, t)?;
            tail = bound;
            kept += 1;
            let _ = writeln!(csv, "{},{},{},{}", csv_float(z.re), csv_float(z.im), csv_float(value), csv_float(bound));
        }
        report.t = Some(t);
        report.tail_bound = Some(tail);
        report.points = kept;
    } else {
        csv.push_str("re,im,u\n");
        for &z in &points {
            let value = sol.eval_solution(z)?;
            let _ = writeln!(csv, "{},{},{}", csv_float(z.re), csv_float(z.im), csv_float(value));
        }
    }
    write_file(out, "field.csv", &csv)?;
    write_report(out, "report.json", &report)?;
    Ok(report)
}

fn check(name: &'static str, value: f64, threshold: f64) -> CheckResult {
    CheckResult { name, pass: value <= threshold, value, threshold }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `(1/2π) Σ ω P(b, ζ)` over the nodes of `A₁ ∪ B₁`, against 1.
/// Poisson mass over the unit circle for seeded points with `|z| <= 0.95`.
fn normalization_check(rng: &mut ChaCha8Rng) -> Result<CheckResult, CliError> {
    let rule = build_rule(&[UnitCircleArc::new(0.0, TAU)], 64, 16, 1.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let z = Complex64::from_polar(0.95 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
        let mass = integrate(&rule, |t| poisson_kernel(z, Complex64::from_polar(1.0, t)).unwrap_or(f64::NAN))? / TAU;
        worst = worst.max((mass - 1.0).abs());
    }
    Ok(check("normalization", worst, 1e-10))
}

fn contraction_check(op: &DiscreteOperator, rng: &mut ChaCha8Rng) -> Result<CheckResult, CliError> {
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..20 {
        let a: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ratio = sup_diff(&apply_f(op, &a)?, &apply_f(op, &b)?) / sup_diff(&a, &b);
        excess = excess.max(ratio - op.q());
    }
    let mut c = check("contraction", excess, 1e-9);
    c.pass &= op.m_hat < TAU;
    Ok(c)
}

fn mean_value_check(problem: &Problem, sol: &Solution<'_>) -> Result<CheckResult, CliError> {
    let r = problem.cuts.normalized_inner_radius();
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let center = physical(problem, 0.5 * (1.0 + r), 0.3 + TAU * k as f64 / 10.0);
        let radius = 0.4 * problem.domain.boundary_distance(center);
        let n = 128;
        let mut avg = 0.0;
        for j in 0..n {
            avg += sol.eval_solution(center + Complex64::from_polar(radius, TAU * j as f64 / n as f64))?;
        }
        worst = worst.max((avg / n as f64 - sol.eval_solution(center)?).abs());
    }
    Ok(check("mean value", worst, 1e-6))
}

/// Closed-form truncations against `u` at fixed points of `D₁` clear of `σ`.
fn converge_probes(problem: &Problem) -> Vec<Complex64> {
    let r = problem.cuts.normalized_inner_radius();
    let sigma = problem.cuts.sigma().angle;
    let mut out = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        for a in [0.5 * PI, PI, 1.5 * PI] {
            out.push(physical(problem, r + (1.0 - r) * s, sigma + a));
        }
    }
    out
}

fn bound_check(problem: &Problem, solved: &Solved, sol: &Solution<'_>) -> Result<CheckResult, CliError> {
    let t_max = problem.solver.t.min(12);
    let powers = KernelMatrixPower::new(&solved.op, t_max, DEFAULT_BUDGET)?;
    let mut excess = f64::NEG_INFINITY;
    for z in converge_probes(problem) {
        let u = sol.eval_u(z)?;
        for t in 0..=t_max {
            let (value, tail) = closed_form_eval(&solved.setup, &solved.op, &powers, z, t)?;
            excess = excess.max((value - u).abs() - tail);
        }
    }
    Ok(check("bound domination", excess, 10.0 * QUADRATURE_TOL))
}

/// Finite differences on the normalized annulus with the data carried over.
fn oracle_check(problem: &Problem, sol: &Solution<'_>, rng: &mut ChaCha8Rng) -> Result<CheckResult, CliError> {
    let r = problem.cuts.normalized_inner_radius();
    let to_physical = problem.cuts.normalization().inverse();
    let boundary = |kind: BoundaryKind, angle: f64| {
        let circle = problem.domain.circle(kind);
        let rho = if kind == BoundaryKind::Outer { 1.0 } else { r };
        let z = to_physical.apply(Complex64::from_polar(rho, angle));
        let angle = circle.angle_of(z);
        match eval_boundary_data(&problem.data, circle, angle) {
            // a grid node on a jump takes the mean of the two sides
            Err(schwarz_core::Error::AtDiscontinuity { .. }) => Ok(0.5
                * (eval_boundary_data_sided(&problem.data, circle, angle, Side::Before)?
                    + eval_boundary_data_sided(&problem.data, circle, angle, Side::After)?)),
            other => other,
        }
    };
    let grid = fd_solve_with(PolarGrid::new(r, 128, 256)?, boundary, 1e-11, None)?;
    let points = probe_points(problem, rng, 100, 0.1);
    let stats = compare(
        |z| sol.eval_solution(z),
        |z| {
            let xi = problem.cuts.normalize(z);
            grid.interpolate(xi).ok_or(schwarz_core::Error::OutsideDomain { re: z.re, im: z.im })
        },
        &points,
    )?;
    Ok(check("oracle comparison", stats.max_abs, 5e-3))
}

pub fn cmd_verify(problem: &Problem, out: &Path) -> Result<RunReport, CliError> {
    let mode = problem.solver.mode;
    let solved = build(problem)?;
    let fp = solve_fixed_point(&solved.op, mode.method(), problem.solver.tol)?;
    let sol = solved.setup.solution(fp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut checks = vec![normalization_check(&mut rng)?, contraction_check(&solved.op, &mut rng)?];

    let overlap = probe_points(problem, &mut rng, 100, 1e-3);
    let glue = compare(|z| sol.eval_u(z), |z| sol.eval_g(z), &overlap)?;
    checks.push(check("gluing", glue.max_abs, 1e-6));
    checks.push(mean_value_check(problem, &sol)?);

    let f_sup = solved.op.f_sup;
    let interior = probe_points(problem, &mut rng, 200, 1e-4);
    let mut u_sup: f64 = 0.0;
    for &z in &interior {
        u_sup = u_sup.max(sol.eval_solution(z)?.abs());
    }
    checks.push(check("maximum principle", u_sup - f_sup, 1e-6));
    checks.push(bound_check(problem, &solved, &sol)?);
    checks.push(oracle_check(problem, &sol, &mut rng)?);
    if let Some(exact) = &problem.exact {
        let stats = compare(|z| sol.eval_solution(z), |z| exact.eval(z), &interior)?;
        checks.push(check("analytic solution", stats.max_abs, 1e-6));
    }

    let mut report = fixed_point_report("verify", mode, &solved, &sol, interior.len());
    report.checks = checks;
    write_report(out, "verify.json", &report)?;
    Ok(report)
}

pub fn cmd_converge(problem: &Problem, t_max: usize, out: &Path) -> Result<RunReport, CliError> {
    if t_max > 12 {
        return Err(CliError::Config(format!("--t: at most 12 for converge, got {t_max}")));
    }
    let solved = build(problem)?;
    // reference fixed point, solved to round-off
    let fp = solve_fixed_point(&solved.op, SolveMethod::Direct, problem.solver.tol)?;
    let v = fp.v_values.clone();
    let sol = solved.setup.solution(fp)?;
    let probes = converge_probes(problem);
    let reference: Vec<f64> =
        probes.iter().map(|&z| solved.setup.apply_f_at(&v, z)).collect::<schwarz_core::Result<_>>()?;
    let powers = KernelMatrixPower::new(&solved.op, t_max, DEFAULT_BUDGET)?;
    let mut csv = String::from("t,measured_error,certified_bound\n");
    let mut excess = f64::NEG_INFINITY;
    for t in 0..=t_max {
        let mut measured: f64 = 0.0;
        let mut bound = 0.0;
        for (&z, u) in probes.iter().zip(&reference) {
            let (value, tail) = closed_form_eval(&solved.setup, &solved.op, &powers, z, t)?;
            measured = measured.max((value - u).abs());
            bound = tail;
        }
        excess = excess.max(measured - bound);
        let _ = writeln!(csv, "{t},{},{}", csv_float(measured), csv_float(bound));
    }
    write_file(out, "converge.csv", &csv)?;
    let mut report = fixed_point_report("converge", Mode::Direct, &solved, &sol, probes.len());
    report.t = Some(t_max);
    report.tail_bound = Some(series_tail_bound(t_max, solved.op.m_hat, solved.op.f_sup)?);
    report.checks.push(check("measured error within bound", excess, NOISE_FLOOR));
    write_report(out, "converge.json", &report)?;
    Ok(report)
}

/// Polylines of `∂D`, `σ`, `τ` and one label point per subdomain, as `curve,index,re,im`.
pub fn cmd_emit_geometry(problem: &Problem, out: &Path) -> Result<usize, CliError> {
    let mut csv = String::from("curve,index,re,im\n");
    let mut rows = 0;
    let mut push = |csv: &mut String, name: &str, pts: &[Complex64]| {
        for (i, z) in pts.iter().enumerate() {
            let _ = writeln!(csv, "{name},{i},{},{}", csv_float(z.re), csv_float(z.im));
            rows += 1;
        }
    };
    let n = 256;
    for (name, circle) in [("outer", problem.domain.outer()), ("inner", problem.domain.inner())] {
        let pts: Vec<_> = (0..=n).map(|j| circle.point_at(TAU * (j % n) as f64 / n as f64)).collect();
        push(&mut csv, name, &pts);
    }
    let sigma = problem.cuts.sigma().sample(64);
    let tau = problem.cuts.tau().sample(64);
    push(&mut csv, "sigma", &sigma);
    push(&mut csv, "tau", &tau);
    // D₁ = D − σ still contains τ, and D₂ = D − τ contains σ
    push(&mut csv, "label_D1", &[problem.cuts.tau().point(0.5)]);
    push(&mut csv, "label_D2", &[problem.cuts.sigma().point(0.5)]);
    write_file(out, "geometry.csv", &csv)?;
    Ok(rows)
}
