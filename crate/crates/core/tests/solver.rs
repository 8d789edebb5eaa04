use std::f64::consts::PI;
use std::sync::Arc;

use gmlab_core::analysis::{dead_core, AnalysisConfig};
use gmlab_core::field::{build_grid, DistributionFunction, DomainSpec, Grid, ScalarField};
use gmlab_core::nonlinearity::Nonlinearity;
use gmlab_core::radial::solve_ball;
use gmlab_core::solver::{
    inner_semilinear, poisson_solve, semilinear_residual, semilinear_solve, solve, solve_on, symmetry_check,
    uniqueness_experiment, Discretization, Init, SolverConfig,
};
use gmlab_core::Error;
use proptest::prelude::*;

fn grid(d: DomainSpec, h: f64) -> Arc<Grid> {
    Arc::new(build_grid(&d, h).unwrap())
}

fn unit_disc() -> DomainSpec {
    DomainSpec::Ball { radius: 1.0 }
}

/// Closed-form radial solution of the affine case with root π/4 on the unit disc.
fn case_a_exact(r: f64) -> f64 {
    let r = r.max(0.5);
    PI * ((1.0 - r.powi(4)) / 16.0 - (1.0 - r * r) / 16.0 - r.ln() / 64.0)
}

fn case_a() -> Nonlinearity {
    Nonlinearity::affine_with_root(1.0, PI / 4.0, PI).unwrap()
}

#[test]
fn poisson_bubble_fine_grid() {
    let g = grid(unit_disc(), 1.0 / 128.0);
    let rhs = ScalarField::from_fn(g.clone(), |_, _| 1.0);
    let u = poisson_solve(&rhs, &SolverConfig::default()).unwrap();
    let exact = ScalarField::from_fn(g, |x, y| (1.0 - x * x - y * y) / 4.0);
    assert!(u.sup_distance(&exact) <= 5e-4, "{}", u.sup_distance(&exact));
}

#[test]
fn poisson_zero_rhs() {
    let g = grid(unit_disc(), 1.0 / 32.0);
    let u = poisson_solve(&ScalarField::zeros(g), &SolverConfig::default()).unwrap();
    assert!(u.values.iter().all(|&x| x == 0.0));
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let square = DomainSpec::Rectangle { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };
    let exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let err = |h: f64| {
        let g = grid(square, h);
        let rhs = ScalarField::from_fn(g.clone(), |x, y| 2.0 * PI * PI * exact(x, y));
        let u = poisson_solve(&rhs, &SolverConfig::default()).unwrap();
        u.sup_distance(&ScalarField::from_fn(g, exact))
    };
    let (e1, e2) = (err(1.0 / 32.0), err(1.0 / 64.0));
    assert!(e2 < 1e-3, "{e2}");
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn constant_psi_is_poisson() {
    let g = grid(unit_disc(), 1.0 / 64.0);
    let disc = Discretization::new(g.clone()).unwrap();
    let cfg = SolverConfig::default();
    let (u, _) = semilinear_solve(&disc, &|_| 1.0, vec![0.0; disc.len()], &cfg).unwrap();
    let p = poisson_solve(&ScalarField::from_fn(g, |_, _| 1.0), &cfg).unwrap();
    let d = u.iter().zip(&p.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-9, "{d}");
}

#[test]
fn linear_decreasing_psi_solves_helmholtz() {
    let g = grid(unit_disc(), 1.0 / 64.0);
    let disc = Discretization::new(g).unwrap();
    let psi = |t: f64| 1.0 - t;
    let (u, _) = semilinear_solve(&disc, &psi, vec![0.0; disc.len()], &SolverConfig::default()).unwrap();
    assert!(semilinear_residual(&disc, &u, &psi) <= 1e-8);
}

#[test]
fn frozen_exact_distribution_reproduces_radial_field() {
    let g = grid(unit_disc(), 1.0 / 256.0);
    let exact = ScalarField::from_fn(g.clone(), |x, y| case_a_exact(x.hypot(y)));
    // λ(ζ(r)) = π r² on the detached region and π/4 on the plateau.
    let (mut t, mut lambda): (Vec<f64>, Vec<f64>) =
        (0..=4096).rev().map(|i| 0.5 + 0.5 * i as f64 / 4096.0).map(|r| (case_a_exact(r), PI * r * r)).unzip();
    t.pop();
    lambda.pop();
    let top = case_a_exact(0.5);
    t.push(top);
    lambda.push(PI / 4.0);
    let lambda = DistributionFunction::from_samples(t, lambda, Some((top, PI / 4.0))).unwrap();
    let u = inner_semilinear(&lambda, &case_a(), g, &SolverConfig::default()).unwrap();
    assert!(u.sup_distance(&exact) <= 1e-3, "{}", u.sup_distance(&exact));
}

#[test]
fn constant_g_gives_the_bubble() {
    let g = Nonlinearity::constant(1.0, PI).unwrap();
    let cfg = SolverConfig { h: 1.0 / 128.0, ..Default::default() };
    let (u, rep) = solve(&unit_disc(), &g, &cfg).unwrap();
    assert!(rep.converged);
    let exact = ScalarField::from_fn(u.grid.clone(), |x, y| (1.0 - x * x - y * y) / 4.0);
    assert!(u.sup_distance(&exact) <= 5e-4);
    let cfg = SolverConfig { h: 1.0 / 64.0, ..Default::default() };
    assert!(uniqueness_experiment(&unit_disc(), &g, &cfg).unwrap() <= 1e-10);
}

#[test]
fn case_a_solution_properties() {
    let cfg = SolverConfig { h: 1.0 / 64.0, ..Default::default() };
    let grid = grid(unit_disc(), cfg.h);
    let disc = Discretization::new(grid.clone()).unwrap();
    let (u, rep) = solve_on(&disc, &case_a(), &cfg).unwrap();
    assert!(rep.converged, "{rep:?}");
    let exact = ScalarField::from_fn(grid, |x, y| case_a_exact(x.hypot(y)));
    assert!(u.sup_distance(&exact) <= 5e-3);
    // Superharmonic and non-negative with the maximum inside.
    let lap = disc.minus_laplacian(&u.values);
    let floor = 1e-6 * lap.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(lap.iter().all(|&x| x >= -floor));
    assert!(u.min() >= -1e-9);
    assert!(!u.grid.is_cut(u.argmax()));
    // The warm-started run lands on the same field.
    let again = solve_on(&disc, &case_a(), &SolverConfig { init: Init::PoissonG0, ..cfg }).unwrap().0;
    assert!(u.sup_distance(&again) <= 1e-5, "{}", u.sup_distance(&again));
}

#[test]
fn ellipse_core_matches_root() {
    let d = DomainSpec::Ellipse { a: 1.0, b: 0.7 };
    let g = Nonlinearity::affine_with_root(1.0, 0.4, d.measure()).unwrap();
    let cfg = SolverConfig { h: 1.0 / 128.0, ..Default::default() };
    let (u, rep) = solve(&d, &g, &cfg).unwrap();
    assert!(rep.converged);
    let core = dead_core(&u, &g, &AnalysisConfig::default());
    assert!((core.measure - 0.4).abs() < 0.05, "{core:?}");
}

#[test]
fn symmetry_detector() {
    let g = grid(unit_disc(), 1.0 / 64.0);
    let flat = ScalarField::from_fn(g.clone(), |_, _| 1.0);
    assert!(symmetry_check(&flat, 8).unwrap() < 1e-12);
    let mut bumped = ScalarField::from_fn(g.clone(), |x, y| (1.0 - x * x - y * y) / 4.0);
    assert!(symmetry_check(&bumped, 8).unwrap() < 1e-3);
    // Off centre, since rotations fix the centre.
    let k = (0..g.len())
        .find(|&k| {
            let (x, y) = g.xy(k);
            (x - 0.5).abs() < 1e-9 && (y - 0.25).abs() < 1e-9
        })
        .unwrap();
    bumped.values[k] += 0.1;
    assert!(symmetry_check(&bumped, 8).unwrap() >= 0.05);
    let square = grid(DomainSpec::Rectangle { x0: -1.0, y0: -1.0, x1: 1.0, y1: 1.0 }, 1.0 / 16.0);
    assert!(matches!(symmetry_check(&ScalarField::zeros(square), 8), Err(Error::Domain(_))));
}

#[test]
fn larger_ball_has_larger_maximum_on_the_grid() {
    let max_on = |radius: f64| {
        let d = DomainSpec::Ball { radius };
        let g = Nonlinearity::affine_with_root(1.0, PI / 4.0, d.measure()).unwrap();
        solve(&d, &g, &SolverConfig { h: 1.0 / 64.0, ..Default::default() }).unwrap().0.max()
    };
    assert!(max_on(1.25) >= max_on(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn enlarging_the_ball_raises_the_maximum(r in 0.6f64..2.0, grow in 0.01f64..0.5) {
        let max_on = |radius: f64| {
            let g = Nonlinearity::affine_with_root(1.0, PI / 4.0, PI * radius * radius).unwrap();
            solve_ball(&g, radius, 2).unwrap().max_value
        };
        prop_assert!(max_on(r + grow) >= max_on(r));
    }
}
