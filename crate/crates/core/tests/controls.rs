//! Worked examples for whole bundles, plus the negative controls that must fail.

mod common;

use common::*;
use projflat_core::phi_family::{Builtin, SmoothFn};
use projflat_core::{Integrator, MetricBundle, OneFormSpec, PhiFamily, Polynomial, SpaceForm, SprayRoute};

#[test]
fn randers_metric_in_closed_form() {
    let sf = SpaceForm::new(0.0, 3).unwrap();
    let phi = PhiFamily::builtin("one", 1.0, SmoothFn::constant(1.0)).unwrap();
    let mb = MetricBundle::new(sf, phi, OneFormSpec::new(1.0, [0.0, 0.0, 0.0])).unwrap();
    let (x, y) = ([0.1, -0.3, 0.2], [0.4, 0.5, -1.0]);
    let e = mb.f_eval(&x, &y).unwrap();
    let want = (0.16f64 + 0.25 + 1.0).sqrt() + (0.04 - 0.15 - 0.2);
    assert!((e.f - want).abs() < 1e-14);
    // at the origin β vanishes and F = |y| φ(0, 0)
    let e0 = mb.f_eval(&[0.0, 0.0, 0.0], &y).unwrap();
    assert_eq!((e0.b2, e0.s), (0.0, 0.0));
    assert!((e0.f - (0.16f64 + 0.25 + 1.0).sqrt()).abs() < 1e-15);
}

#[test]
fn squared_coupling_example_routes() {
    let mb = bundle(0.0, 2, Builtin::OnePlusT, 2.0, 1.0, &[0.0, 0.0]);
    let cmp = mb.compare_routes(&[1.0, 0.0], &[0.3, 1.0]).unwrap();
    assert!(cmp.max_disagreement() < 1e-6);
}

#[test]
fn polynomial_profile_is_not_projectively_flat() {
    // φ = 1 + s + s³ paired with a c = 2 form; it is convex for b < 0.79
    let sf = SpaceForm::new(0.0, 3).unwrap();
    let beta = beta_field(0.0, 3, 2.0, 1.0, &[0.0, 0.0, 0.0]);
    let mb = MetricBundle::with_parts(sf, Polynomial::new(vec![1.0, 1.0, 0.0, 1.0]), beta);
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 40 {
        let x = sample_x(&mut r, mb.space(), mb.beta());
        let y = sample_y(&mut r, 3);
        // stay where the profile is convex (b < 0.79)
        match mb.f_eval(&x, &y) {
            Ok(e) if e.b2 <= 0.6 => {}
            _ => continue,
        }
        let Ok(res) = mb.projective_residual(&x, &y) else { continue };
        let g = mb.spray_general(&x, &y).unwrap();
        let d = mb.spray_definitional(&x, &y).unwrap();
        assert!(projflat_core::spray::relative_difference(&d.g, &g.g) < 1e-6);
        worst = worst.max(res);
        checked += 1;
    }
    assert!(worst >= 1e-3, "worst residual {worst}");
}

#[test]
fn mismatched_coupling_is_detected() {
    // φ solves the PDE for c = 1, but β is deformed with c = 2
    let sf = SpaceForm::new(0.0, 2).unwrap();
    let phi = family(Builtin::OnePlusT, SmoothFn::constant(0.0), 1.0);
    let beta = beta_field(0.0, 2, 2.0, 1.0, &[0.0, 0.0]);
    let mb = MetricBundle::with_parts(sf, phi, beta);
    let mut r = rng(11);
    let (mut residual, mut bend): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let x = sample_x(&mut r, mb.space(), mb.beta());
        let y = sample_y(&mut r, 2);
        residual = residual.max(mb.projective_residual(&x, &y).unwrap());
        let y0: Vec<f64> = y.iter().map(|v| 0.3 * v).collect();
        let path = Integrator::new(SprayRoute::General).integrate(&mb, &x, &y0, 0.5, 50).unwrap();
        if path.samples.len() >= 3 {
            bend = bend.max(path.straightness().unwrap());
        }
    }
    assert!(residual >= 1e-3, "{residual}");
    assert!(bend >= 1e-3, "{bend}");
}

#[test]
fn flat_bundle_geodesics_converge_and_stay_straight() {
    for kappa in [-0.5, 0.0, 1.0] {
        let mb = bundle(kappa, 3, Builtin::OnePlusTSq, 2.0, 1.0, &[0.1, 0.0, -0.1]);
        let mut r = rng(3);
        for _ in 0..3 {
            let x = sample_x(&mut r, mb.space(), mb.beta());
            let y: Vec<f64> = sample_y(&mut r, 3).iter().map(|v| 0.2 * v).collect();
            let (path, change) = Integrator::default().integrate_checked(&mb, &x, &y, 0.5, 64).unwrap();
            assert!(change <= 1e-7, "kappa={kappa} change={change}");
            assert!(path.straightness().unwrap() <= 1e-5);
        }
    }
}

#[test]
fn definitional_route_drives_geodesics_too() {
    let mb = bundle(1.0, 2, Builtin::Log1p, 0.5, 1.0, &[0.2, 0.0]);
    let mut r = rng(5);
    let x = sample_x(&mut r, mb.space(), mb.beta());
    let y: Vec<f64> = sample_y(&mut r, 2).iter().map(|v| 0.2 * v).collect();
    let a = Integrator::new(SprayRoute::Definitional).integrate(&mb, &x, &y, 0.4, 20).unwrap();
    let b = Integrator::new(SprayRoute::ClosedForm).integrate(&mb, &x, &y, 0.4, 20).unwrap();
    assert!(a.is_complete() && b.is_complete());
    let diff = projflat_core::math::max_abs_diff(&a.end().x, &b.end().x);
    assert!(diff < 1e-7, "{diff}");
}
