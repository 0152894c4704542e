#![allow(dead_code)]

use projflat_core::phi_family::{Builtin, CFunction, FgPair, PhiFamily, SmoothFn};
use projflat_core::{BetaField, MetricBundle, OneForm, OneFormSpec, SpaceForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Radius of the coordinate ball sampled for a given curvature.
pub fn radius(kappa: f64) -> f64 {
    if kappa < 0.0 {
        0.9 / (-kappa).sqrt()
    } else {
        1.2
    }
}

/// Uniform point in the ball with `b² ∈ [0.1, 0.9]` and `|x| ≥ 0.05`.
pub fn sample_x<B: OneForm>(rng: &mut ChaCha8Rng, sf: &SpaceForm, beta: &B) -> Vec<f64> {
    let n = sf.dim();
    let r = radius(sf.kappa());
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-r..r)).collect();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx > r || nx < 0.05 || !sf.is_admissible(&x) {
            continue;
        }
        let Ok(b) = beta.covector(&x) else { continue };
        let Ok(b2) = sf.covector_norm_sq(&x, &b) else { continue };
        if (0.1..=0.9).contains(&b2) {
            return x;
        }
    }
}

pub fn sample_y(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if y.iter().map(|v| v * v).sum::<f64>() > 0.05 {
            return y;
        }
    }
}

pub fn family(f: Builtin, g: SmoothFn, lambda: f64) -> PhiFamily {
    PhiFamily::new(FgPair::new(SmoothFn::builtin(f), g), CFunction::Constant(lambda)).unwrap()
}

/// Coupled bundle with `β̃` from `(ε, a)` and `φ` from a builtin.
pub fn bundle(kappa: f64, n: usize, f: Builtin, lambda: f64, eps: f64, a: &[f64]) -> MetricBundle {
    let sf = SpaceForm::new(kappa, n).unwrap();
    let phi = family(f, SmoothFn::affine(0.1, 0.05), lambda);
    MetricBundle::new(sf, phi, OneFormSpec::new(eps, a.to_vec())).unwrap()
}

pub fn beta_field(kappa: f64, n: usize, lambda: f64, eps: f64, a: &[f64]) -> BetaField {
    let sf = SpaceForm::new(kappa, n).unwrap();
    BetaField::new(sf, OneFormSpec::new(eps, a.to_vec()), CFunction::Constant(lambda), 1.0).unwrap()
}
