use std::f64::consts::{FRAC_PI_2, PI};

use schwarz_core::geometry::{build_cut_system, AnnularDomain, BoundaryData, Circle, CurveData};
use schwarz_core::operator::{solve_fixed_point, Discretization, SchwarzSetup, SolveMethod};
use schwarz_core::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn eccentric() -> AnnularDomain {
    AnnularDomain::new(Circle::outer(c(0.0, 0.0), 1.0), Circle::inner(c(0.2, 0.0), 0.3)).unwrap()
}

#[test]
fn eccentric_annulus_reproduces_a_linear_function() {
    let d = eccentric();
    let data = BoundaryData::new(
        CurveData::continuous(|t| t.cos()),
        CurveData::continuous(|t| 0.2 + 0.3 * t.cos()),
    );
    let cuts = build_cut_system(&d, 0.0, PI).unwrap();
    let s = SchwarzSetup::new(d.clone(), cuts, data, Discretization::default()).unwrap();
    let op = s.assemble().unwrap();
    let sol = s.solution(solve_fixed_point(&op, SolveMethod::Direct, 1e-13).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..12 {
        for j in 0..24 {
            let z = Complex64::from_polar(0.55 + 0.4 * i as f64 / 11.0, 0.1 + 0.26 * j as f64);
            if !d.contains(z) || d.boundary_distance(z) < 1e-3 {
                continue;
            }
            worst = worst.max((sol.eval_solution(z).unwrap() - z.re).abs());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn boundary_values_are_attained() {
    let d = AnnularDomain::concentric(0.5).unwrap();
    let data = BoundaryData::new(
        CurveData::piecewise_constant(&[(FRAC_PI_2, 1.0), (3.0 * FRAC_PI_2, -1.0)]).unwrap(),
        CurveData::continuous(|t| t.sin()),
    );
    let cuts = build_cut_system(&d, 0.0, 1.0).unwrap();
    let s = SchwarzSetup::new(d, cuts, data, Discretization::default()).unwrap();
    let op = s.assemble().unwrap();
    let sol = s.solution(solve_fixed_point(&op, SolveMethod::Iterate, 1e-13).unwrap()).unwrap();
    // continuity points: angle π on the outer circle, 2.5 on the inner one
    for (foot, delta_sign, expected) in [(Complex64::from_polar(1.0, PI), -1.0, 1.0), (Complex64::from_polar(0.5, 2.5), 1.0, 2.5f64.sin())] {
        let dir = foot / foot.norm();
        let mut last = f64::INFINITY;
        for k in 1..=5 {
            let dist = 0.1 * 0.25f64.powi(k);
            let z = foot + dir * (delta_sign * dist);
            let err = (sol.eval_solution(z).unwrap() - expected).abs();
            assert!(err < last, "approach {k}: {err} !< {last}");
            last = err;
        }
        assert!(last < 1e-3);
    }
}

#[test]
fn values_on_the_cuts_are_finite() {
    let d = AnnularDomain::concentric(0.5).unwrap();
    let cuts = build_cut_system(&d, 0.3, 2.0).unwrap();
    let s = SchwarzSetup::new(d, cuts.clone(), BoundaryData::two_level(0.0, 1.0), Discretization::default()).unwrap();
    let op = s.assemble().unwrap();
    let sol = s.solution(solve_fixed_point(&op, SolveMethod::Iterate, 1e-13).unwrap()).unwrap();
    for arc in [cuts.sigma(), cuts.tau()] {
        for t in [0.1, 0.4, 0.7, 0.95] {
            let z = arc.point(t);
            let exact = z.norm().ln() / 0.5f64.ln();
            assert!((sol.eval_solution(z).unwrap() - exact).abs() < 1e-8);
        }
    }
    assert!(matches!(sol.eval_solution(c(1.5, 0.0)), Err(Error::OutsideDomain { .. })));
}

#[test]
fn zero_data_solves_in_one_step() {
    let d = AnnularDomain::concentric(0.5).unwrap();
    let cuts = build_cut_system(&d, 0.0, PI).unwrap();
    let s = SchwarzSetup::new(d, cuts, BoundaryData::zero(), Discretization::default()).unwrap();
    let op = s.assemble().unwrap();
    let fp = solve_fixed_point(&op, SolveMethod::Iterate, 1e-12).unwrap();
    assert_eq!(fp.iterations, 1);
    assert_eq!(fp.certified_bound, 0.0);
    let sol = s.solution(fp).unwrap();
    assert_eq!(sol.eval_solution(c(0.0, 0.75)).unwrap(), 0.0);
}

#[test]
fn coinciding_cuts_rejected() {
    let d = AnnularDomain::concentric(0.5).unwrap();
    assert!(matches!(build_cut_system(&d, 1.0, 1.0), Err(Error::AnglesCoincide { .. })));
}
