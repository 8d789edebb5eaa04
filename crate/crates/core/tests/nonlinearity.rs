use std::f64::consts::PI;

use gmlab_core::nonlinearity::{check_hypotheses, HypothesisCase, Nonlinearity};
use gmlab_core::recursion::{recursion_fixed_point, RecursionSpec};
use gmlab_core::Error;
use proptest::prelude::*;

#[test]
fn affine_reference_has_its_root_at_a_quarter_of_the_disc() {
    let g = Nonlinearity::affine_with_root(1.0, PI / 4.0, PI).unwrap();
    let rep = check_hypotheses(&g).unwrap();
    assert_eq!(rep.case, HypothesisCase::H2);
    assert!((rep.alpha.unwrap() - PI / 4.0).abs() < 1e-12);
    assert!((g.eval(PI).unwrap() - 3.0 * PI / 4.0).abs() < 1e-14);
}

#[test]
fn positive_constant_has_no_dead_core() {
    let g = Nonlinearity::constant(2.0, 1.0).unwrap();
    assert_eq!(check_hypotheses(&g).unwrap().case, HypothesisCase::H1);
}

#[test]
fn arguments_outside_the_domain_measure_are_rejected() {
    let g = Nonlinearity::affine_with_root(1.0, 0.5, 1.0).unwrap();
    assert!(g.eval(1.0 + 1e-12).is_ok());
    assert!(matches!(g.eval(1.1), Err(Error::Domain(_))));
    assert!(matches!(g.eval(-0.1), Err(Error::Domain(_))));
    assert_eq!(g.eval_positive_part(0.1), 0.0);
}

#[test]
fn two_sign_changes_are_reported() {
    let knots = [(0.0, -1.0), (1.0, 1.0), (2.0, -1.0), (3.0, 1.0)];
    let g = Nonlinearity::tabulated(&knots, 3.0).unwrap();
    assert!(!g.monotone);
    match check_hypotheses(&g) {
        Ok(rep) => assert_eq!(rep.case, HypothesisCase::Neither),
        Err(e) => assert!(matches!(e, Error::NonUniqueRoot(_)), "{e:?}"),
    }
}

#[test]
fn named_recursions_reach_their_limits() {
    for (spec, limit) in [
        (RecursionSpec::supersolution(), 1.2),
        (RecursionSpec::annulus(), 1.0),
        (RecursionSpec::equivalence(), 4.0 / 3.0),
    ] {
        let r = recursion_fixed_point(&spec).unwrap();
        assert!((r.limit - limit).abs() <= 1e-12, "{} vs {limit}", r.limit);
        assert_eq!(r.trace.len(), r.iterations + 1);
    }
}

#[test]
fn capped_gradient_recursion_diverges_from_every_start() {
    for start in [0.2, 1.0 / 3.0, 1.4, 5.0] {
        let spec = RecursionSpec { start, ..RecursionSpec::gradient_condition() };
        assert!(matches!(recursion_fixed_point(&spec), Err(Error::Divergence { .. })), "start {start}");
    }
}

#[test]
fn expanding_map_without_cap_is_an_error() {
    assert!(recursion_fixed_point(&RecursionSpec::new(1.5, 0.0, 1.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_root_is_recovered(slope in 0.1f64..10.0, frac in 0.05f64..0.95, measure in 0.5f64..10.0) {
        let alpha = frac * measure;
        let g = Nonlinearity::affine_with_root(slope, alpha, measure).unwrap();
        let rep = check_hypotheses(&g).unwrap();
        prop_assert_eq!(rep.case, HypothesisCase::H2);
        prop_assert!((rep.alpha.unwrap() - alpha).abs() <= 1e-9 * measure);
    }

    #[test]
    fn contractions_converge_to_the_affine_fixed_point(a in -0.9f64..0.9, b in -5.0f64..5.0, start in -5.0f64..5.0) {
        let r = recursion_fixed_point(&RecursionSpec::new(a, b, start)).unwrap();
        prop_assert!((r.limit - b / (1.0 - a)).abs() <= 1e-12 * (1.0 + r.limit.abs()));
    }

    #[test]
    fn cap_binds_when_below_the_fixed_point(a in 0.0f64..0.9, b in 0.1f64..5.0, frac in 0.1f64..0.9) {
        let fixed = b / (1.0 - a);
        let cap = frac * fixed;
        let r = recursion_fixed_point(&RecursionSpec::new(a, b, 0.0).with_cap(cap)).unwrap();
        prop_assert!((r.limit - cap).abs() <= 1e-12 * cap.max(1.0));
    }
}
