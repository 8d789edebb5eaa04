use std::f64::consts::PI;

use gmlab_core::nonlinearity::Nonlinearity;
use gmlab_core::profile::Profile;
use gmlab_core::radial::{solve_annulus, solve_ball, solve_barriers, unit_ball_volume};
use proptest::prelude::*;

fn case_a_exact(r: f64) -> f64 {
    let r = r.max(0.5);
    PI * ((1.0 - r.powi(4)) / 16.0 - (1.0 - r * r) / 16.0 - r.ln() / 64.0)
}

#[test]
fn reference_ball_matches_the_closed_form() {
    let g = Nonlinearity::affine_with_root(1.0, PI / 4.0, PI).unwrap();
    let prof = solve_ball(&g, 1.0, 2).unwrap();
    let max = PI * (3.0 / 256.0 + 2f64.ln() / 64.0);
    assert!((prof.max_value - max).abs() < 1e-7, "{}", prof.max_value);
    for k in 0..=50 {
        let r = k as f64 / 50.0;
        assert!((prof.value(r) - case_a_exact(r)).abs() < 1e-7, "r = {r}");
    }
    let slope = *prof.dzeta.last().unwrap();
    assert!((slope + 9.0 * PI / 64.0).abs() < 1e-6, "{slope}");
    let (a, b) = prof.core.unwrap();
    assert!(a == 0.0 && (b - 0.5).abs() < 1e-4);
    assert!((prof.core_measure() - PI / 4.0).abs() < 1e-3);
}

#[test]
fn annulus_core_has_the_root_measure() {
    let g = Nonlinearity::affine_with_root(1.0, PI / 2.0, 2.0 * PI).unwrap();
    let prof = solve_annulus(&g, 0.5, 1.5, 2).unwrap();
    assert!((prof.core_measure() - PI / 2.0).abs() < 2e-3, "{}", prof.core_measure());
    assert!(prof.value(0.5).abs() < 1e-12 && prof.value(1.5).abs() < 1e-12);
}

#[test]
fn ball_volumes() {
    assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
    assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
}

#[test]
fn cube_root_barriers_are_ordered() {
    let p = Profile::power(1.0, 1.0 / 3.0, 10.0).unwrap();
    let pair = solve_barriers(&p, 0.5, 2).unwrap();
    assert!((pair.kappa - 6f64.sqrt()).abs() < 1e-8);
    assert!((pair.big_r - pair.r - pair.kappa).abs() < 1e-12);
    for b in [&pair.upper, &pair.lower] {
        assert!(b.monotonicity_defect <= 1e-10);
        assert!(b.values.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    }
    let up = &pair.upper.values;
    assert!(up.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_reaction_gives_the_torsion_function(c in 0.1f64..5.0, n in 1usize..4, radius in 0.5f64..2.0) {
        let measure = unit_ball_volume(n) * radius.powi(n as i32);
        let g = Nonlinearity::constant(c, measure).unwrap();
        let prof = solve_ball(&g, radius, n).unwrap();
        prop_assert!(prof.core.is_none());
        for k in 0..=10 {
            let r = radius * k as f64 / 10.0;
            let exact = c * (radius * radius - r * r) / (2.0 * n as f64);
            prop_assert!((prof.value(r) - exact).abs() <= 1e-8 * (1.0 + exact));
        }
    }

    #[test]
    fn ball_profiles_are_radially_nonincreasing(frac in 0.05f64..0.9, slope in 0.2f64..5.0) {
        let g = Nonlinearity::affine_with_root(slope, frac * PI, PI).unwrap();
        let prof = solve_ball(&g, 1.0, 2).unwrap();
        prop_assert!(prof.zeta.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        prop_assert!((prof.core_measure() - frac * PI).abs() <= 2e-3 * PI);
    }
}
