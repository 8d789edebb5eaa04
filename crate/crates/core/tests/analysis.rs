use std::f64::consts::PI;
use std::sync::Arc;

use gmlab_core::analysis::{
    analyze, dead_core, dead_core_at, detachment_fit, differential_inequality, edt, gradient_bound_check,
    hessian_bound_check, htransform_field, integrability_check, nondegeneracy_check, perimeter_sequence,
    supersolution_check, AnalysisConfig,
};
use gmlab_core::field::{build_grid, DomainSpec, Grid, ScalarField};
use gmlab_core::nonlinearity::Nonlinearity;
use gmlab_core::profile::Profile;
use gmlab_core::radial::solve_annulus;
use gmlab_core::Error;
use proptest::prelude::*;

/// `κ` of the one-dimensional Alt-Phillips solution `v = κ d³` of `v'' = v^{1/3}`.
fn kappa() -> f64 {
    6f64.powf(-1.5)
}

fn grid(d: DomainSpec, h: f64) -> Arc<Grid> {
    Arc::new(build_grid(&d, h).unwrap())
}

/// `u = top − v(d)` on the unit disc, `d` the distance to the disc of radius 1/2.
fn disc_field(h: f64, v: impl Fn(f64) -> f64) -> ScalarField {
    let top = v(0.5);
    ScalarField::from_fn(grid(DomainSpec::Ball { radius: 1.0 }, h), |x, y| top - v((x.hypot(y) - 0.5).max(0.0)))
}

/// `u = top − v(d)` on `(−1, 1)`, `d` the distance to `[−1/2, 1/2]`.
fn interval_field(h: f64, v: impl Fn(f64) -> f64) -> ScalarField {
    let top = v(0.5);
    ScalarField::from_fn(grid(DomainSpec::Interval { a: -1.0, b: 1.0 }, h), |x, _| top - v((x.abs() - 0.5).max(0.0)))
}

#[test]
fn cubic_detachment_is_recovered() {
    let u = disc_field(1.0 / 128.0, |d| d.powi(3));
    let core = dead_core_at(&u, 1e-14);
    assert!((core.measure - PI / 4.0).abs() < 0.05, "{}", core.measure);
    let fit = detachment_fit(&u, &core, &AnalysisConfig::default()).unwrap();
    assert!((fit.beta - 3.0).abs() < 0.05, "{fit:?}");
    assert!((fit.cubic_constant - 1.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn quadratic_detachment_is_distinguished() {
    let u = disc_field(1.0 / 128.0, |d| d * d);
    let core = dead_core_at(&u, 1e-14);
    let fit = detachment_fit(&u, &core, &AnalysisConfig::default()).unwrap();
    assert!((fit.beta - 2.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn detachment_needs_a_core_and_a_band() {
    let u = disc_field(1.0 / 32.0, |d| d.powi(3));
    let empty = dead_core_at(&u, -1.0);
    assert!(matches!(detachment_fit(&u, &empty, &AnalysisConfig::default()), Err(Error::NoDeadCore(_))));
    let cfg = AnalysisConfig { min_band_nodes: 100_000, ..Default::default() };
    let core = dead_core_at(&u, 1e-14);
    assert!(matches!(detachment_fit(&u, &core, &cfg), Err(Error::InsufficientData(_))));
}

#[test]
fn smooth_maximum_has_no_dead_core() {
    let h = 1.0 / 128.0;
    let u = ScalarField::from_fn(grid(DomainSpec::Ball { radius: 1.0 }, h), |x, y| (1.0 - x * x - y * y) / 4.0);
    let g = Nonlinearity::constant(1.0, PI).unwrap();
    let core = dead_core(&u, &g, &AnalysisConfig::default());
    assert!(core.measure <= 3.0 * h * h, "{core:?}");
    assert!(!core.touches_boundary);
}

#[test]
fn annulus_core_matches_root() {
    let measure = PI * (1.5f64.powi(2) - 0.5f64.powi(2));
    let g = Nonlinearity::affine_with_root(1.0, PI / 2.0, measure).unwrap();
    let profile = solve_annulus(&g, 0.5, 1.5, 2).unwrap();
    let u = profile.rasterize(grid(DomainSpec::Annulus { r1: 0.5, r2: 1.5 }, 1.0 / 128.0)).unwrap();
    let core = dead_core(&u, &g, &AnalysisConfig::default());
    assert!((core.measure - PI / 2.0).abs() < 0.05, "{core:?}");
}

#[test]
fn alt_phillips_ratios_are_exact() {
    let k = kappa();
    let u = interval_field(1e-4, |d| k * d.powi(3));
    let delta = k * 0.02f64.powi(3);
    let cfg = AnalysisConfig::default();
    let p = Profile::power(1.0, 1.0 / 3.0, 1.0).unwrap();

    let grad = gradient_bound_check(&u, &p, delta, &cfg).unwrap();
    let limit = grad.near_fb_limit.unwrap();
    assert!((limit - 2.0).abs() < 1e-3, "{grad:?}");
    assert!((grad.sup_global - 2.0).abs() < 1e-3, "{grad:?}");
    assert!(grad.refined_holds);

    let top = u.max();
    let reaction: Vec<f64> = u.values.iter().map(|x| (top - x).cbrt()).collect();
    let nd = nondegeneracy_check(&u, &reaction, delta, &cfg);
    assert!((nd.min - 1.0).abs() < 1e-12 && (nd.max - 1.0).abs() < 1e-12, "{nd:?}");

    let sup = supersolution_check(&u, 1.0 / 3.0, delta, &cfg);
    assert!((sup.min - 1.0).abs() < 1e-6 && (sup.max - 1.0).abs() < 1e-6, "{sup:?}");

    let hess = hessian_bound_check(&u, 4.0 / 3.0, delta);
    assert!((hess.max_ratio - 1.0).abs() < 1e-6, "{hess:?}");
}

#[test]
fn alt_phillips_transform_is_linear() {
    let k = kappa();
    let u = interval_field(1e-4, |d| k * d.powi(3));
    let delta = k * 0.02f64.powi(3);
    let p = Profile::power(1.0, 1.0 / 3.0, 1.0).unwrap();
    let core = dead_core_at(&u, 1e-14);
    let ht = htransform_field(&u, &p, &core, delta, &AnalysisConfig::default()).unwrap();
    let top = u.max();
    for (x, w) in u.values.iter().zip(&ht.w.values) {
        let d = ((top - x) / k).cbrt();
        assert!((w - 2f64.sqrt() * d).abs() < 1e-8, "w = {w}, d = {d}");
    }
    assert!((ht.near_fb_grad2 - 2.0).abs() < 1e-6, "{}", ht.near_fb_grad2);
    assert!(ht.one_phase_residual < 1e-3, "{}", ht.one_phase_residual);
    assert!(ht.excess_integral < 1e-6);
}

#[test]
fn linear_profile_has_no_free_boundary() {
    let u = disc_field(1.0 / 32.0, |d| d.powi(3));
    let core = dead_core_at(&u, 1e-14);
    let p = Profile::power(1.0, 1.0, 1.0).unwrap();
    let r = htransform_field(&u, &p, &core, 1e-6, &AnalysisConfig::default());
    assert!(matches!(r, Err(Error::NoFreeBoundary(_))), "{r:?}");
}

#[test]
fn linear_ramp_breaks_the_gradient_bound() {
    let u = interval_field(1e-4, |d| d);
    let p = Profile::power(1.0, 1.0 / 3.0, 1.0).unwrap();
    let grad = gradient_bound_check(&u, &p, 1e-4, &AnalysisConfig::default()).unwrap();
    assert!(grad.sup_global > 100.0, "{grad:?}");
    assert!(!grad.refined_holds);
}

#[test]
fn differential_inequality_detects_the_profile() {
    let t: Vec<f64> = (0..64).map(|i| 1e-4 * 1e4f64.powf(i as f64 / 63.0)).collect();
    let cube_root: Vec<f64> = t.iter().map(|x| x.cbrt()).collect();
    let d = differential_inequality(&t, &cube_root).unwrap();
    assert!(d.holds && d.min_slack.abs() < 1e-9 && (d.c - 1.0).abs() < 1e-9, "{d:?}");
    let d = differential_inequality(&t, &t).unwrap();
    assert!(!d.holds, "{d:?}");
}

#[test]
fn square_root_singularity_is_integrable() {
    let u = interval_field(1e-5, |d| d);
    let i = integrability_check(&u, 0.5, 1e-3).unwrap();
    assert!(i.convergent && i.increment_ratio < 0.8, "{i:?}");
    let i = integrability_check(&u, 1.5, 1e-3).unwrap();
    assert!(!i.convergent, "{i:?}");
}

#[test]
fn perimeter_detector() {
    let g = grid(DomainSpec::Ball { radius: 1.0 }, 1.0 / 256.0);
    let radial = ScalarField::from_fn(g.clone(), |x, y| 1.0 - (x * x + y * y).powi(2));
    let seq = perimeter_sequence(&radial, 8, 1e-6).unwrap();
    assert!(seq.bounded, "{seq:?}");
    for &(_, t, len) in &seq.levels {
        let r = t.powf(0.25);
        assert!((len - 2.0 * PI * r).abs() < 1e-2, "{len} vs {}", 2.0 * PI * r);
    }
    // Checkerboard on the unit square whose cells halve with every dyadic
    // level of `v`, so each level crosses twice as many cells as the last.
    let square = grid(DomainSpec::Rectangle { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }, 1.0 / 256.0);
    let checker = ScalarField::from_fn(square, |x, y| {
        let scale = 2f64.powf(9.0 * (1.0 - y));
        let m = scale / 16.0;
        2.0 - (1.0 + 0.5 * (2.0 * PI * m * x).sin() * (2.0 * PI * m * y).sin()) / scale
    });
    let seq = perimeter_sequence(&checker, 8, 1e-6).unwrap();
    assert!(!seq.bounded, "{seq:?}");
    let len: Vec<f64> = seq.levels.iter().map(|l| l.2).collect();
    assert!(len.windows(2).skip(3).all(|w| w[1] > w[0]), "{len:?}");
}

#[test]
fn analysis_is_deterministic() {
    let u = disc_field(1.0 / 64.0, |d| d.powi(3));
    let g = Nonlinearity::affine_with_root(1.0, PI / 4.0, PI).unwrap();
    let cfg = AnalysisConfig::default();
    let a = analyze(&u, &g, None, &cfg).unwrap();
    let b = analyze(&u, &g, None, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weaker_supersolution_exponent_passes(c in 0.05f64..5.0, beta in 1.5f64..4.0) {
        let u = disc_field(1.0 / 64.0, |d| c * d.powf(beta));
        let cfg = AnalysisConfig::default();
        let delta = 1e-6;
        let fifth = supersolution_check(&u, 0.2, delta, &cfg);
        let sixth = supersolution_check(&u, 1.0 / 6.0, delta, &cfg);
        let max_v = c * 0.5f64.powf(beta);
        if fifth.max.is_finite() {
            prop_assert!(sixth.max.is_finite());
            prop_assert!(sixth.max <= fifth.max * max_v.powf(1.0 / 30.0).max(1.0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn distance_transform_is_exact(nx in 1usize..20, ny in 1usize..20, seed in any::<u64>()) {
        let site: Vec<bool> = (0..nx * ny).map(|k| (seed.rotate_left(k as u32 % 64) ^ k as u64).is_multiple_of(5)).collect();
        let (d, s) = edt(nx, ny, &site);
        for k in 0..nx * ny {
            let (i, j) = ((k % nx) as f64, (k / nx) as f64);
            let best = (0..nx * ny)
                .filter(|&m| site[m])
                .map(|m| ((m % nx) as f64 - i).powi(2) + ((m / nx) as f64 - j).powi(2))
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d[k], best);
            if best.is_finite() {
                let m = s[k];
                prop_assert_eq!(((m % nx) as f64 - i).powi(2) + ((m / nx) as f64 - j).powi(2), best);
            } else {
                prop_assert_eq!(s[k], usize::MAX);
            }
        }
    }
}
