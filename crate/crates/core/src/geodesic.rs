//! Geodesics `ẍ + 2G(x, ẋ) = 0` and how straight they are.

use alloc::vec::Vec;

use crate::math::{dot, max_abs_diff, norm_sq, sqrt};
use crate::one_form::OneForm;
use crate::phi_family::Profile;
use crate::spray::{MetricBundle, SprayRoute};
use crate::{Error, Result};

/// One sample of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    /// Parameter value.
    pub t: f64,
    /// Position.
    pub x: Vec<f64>,
    /// Velocity.
    pub v: Vec<f64>,
}

/// How an integration ended.
#[derive(Debug, Clone, PartialEq)]
pub enum PathStatus {
    /// Reached the final time.
    Complete,
    /// Stopped before leaving the admissible region; the path is partial.
    LeftDomain {
        /// Parameter of the last accepted sample.
        t: f64,
    },
    /// The spray could not be evaluated (e.g. convexity failed); the path is partial.
    Failed {
        /// Parameter of the last accepted sample.
        t: f64,
        /// The error that stopped integration.
        error: Error,
    },
}

/// A sampled geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    /// Samples in increasing `t`, starting at `t = 0`.
    pub samples: Vec<PathSample>,
    /// Step size.
    pub step: f64,
    /// Route used for `G`.
    pub route: SprayRoute,
    /// Why integration stopped.
    pub status: PathStatus,
}

impl GeodesicPath {
    /// Whether the full time span was covered.
    pub fn is_complete(&self) -> bool {
        self.status == PathStatus::Complete
    }

    /// Last sample.
    pub fn end(&self) -> &PathSample {
        self.samples.last().expect("paths always hold the initial sample")
    }

    /// Largest distance between two samples.
    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for (i, a) in self.samples.iter().enumerate() {
            for b in &self.samples[i + 1..] {
                let dist: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (p - q) * (p - q)).sum();
                d2 = d2.max(dist);
            }
        }
        sqrt(d2)
    }

    /// Max distance from the samples to the line `x(0) + span(v(0))`, divided by
    /// the path diameter. Zero means the point set is straight.
    pub fn straightness(&self) -> Result<f64> {
        straightness(&self.samples)
    }
}

/// See [`GeodesicPath::straightness`]; works on any sample list.
pub fn straightness(samples: &[PathSample]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument("straightness needs at least three samples"));
    }
    let x0 = &samples[0].x;
    let v0 = &samples[0].v;
    let vv = norm_sq(v0);
    if !(vv > 0.0) {
        return Err(Error::InvalidArgument("initial velocity is zero"));
    }
    let path = GeodesicPath {
        samples: samples.to_vec(),
        step: 0.0,
        route: SprayRoute::General,
        status: PathStatus::Complete,
    };
    let diameter = path.diameter();
    if !(diameter > 0.0) {
        return Err(Error::InvalidArgument("path has zero length"));
    }
    let mut worst: f64 = 0.0;
    for s in samples {
        let d: Vec<f64> = s.x.iter().zip(x0).map(|(a, b)| a - b).collect();
        let along = dot(&d, v0) / vv;
        let perp: f64 = d.iter().zip(v0).map(|(di, vi)| {
            let p = di - along * vi;
            p * p
        }).sum();
        worst = worst.max(sqrt(perp));
    }
    Ok(worst / diameter)
}

/// Classical fixed-step fourth-order integrator for `(x, v) ↦ (v, −2G(x, v))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    /// Spray route.
    pub route: SprayRoute,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { route: SprayRoute::General }
    }
}

impl Integrator {
    /// Integrator using `route`.
    pub fn new(route: SprayRoute) -> Self {
        Integrator { route }
    }

    /// Integrates from `(x0, y0)` over `[0, t_end]` in `steps` equal steps.
    ///
    /// Leaving the admissible region or a spray failure ends the path early with the
    /// corresponding [`PathStatus`]; this is not an error.
    pub fn integrate<P: Profile, B: OneForm>(
        &self,
        mb: &MetricBundle<P, B>,
        x0: &[f64],
        y0: &[f64],
        t_end: f64,
        steps: usize,
    ) -> Result<GeodesicPath> {
        let n = mb.space().dim();
        if x0.len() != n || y0.len() != n {
            return Err(Error::InvalidArgument("initial data has the wrong dimension"));
        }
        if steps == 0 || !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidArgument("need steps > 0 and a positive finite end time"));
        }
        // initial data must itself be valid
        mb.spray(self.route, x0, y0)?;
        let h = t_end / steps as f64;
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(PathSample { t: 0.0, x: x0.to_vec(), v: y0.to_vec() });
        let mut status = PathStatus::Complete;
        for k in 0..steps {
            let last = &samples[k];
            match self.step(mb, &last.x, &last.v, h) {
                Ok((x, v)) => samples.push(PathSample { t: (k + 1) as f64 * h, x, v }),
                Err(Error::Domain(_)) if !self.inside(mb, &samples[k].x, &samples[k].v, h) => {
                    status = PathStatus::LeftDomain { t: samples[k].t };
                    break;
                }
                Err(error) => {
                    status = PathStatus::Failed { t: samples[k].t, error };
                    break;
                }
            }
        }
        Ok(GeodesicPath { samples, step: h, route: self.route, status })
    }

    // Whether a plain Euler step stays admissible; used to tell boundary exits apart
    // from other domain errors.
    fn inside<P: Profile, B: OneForm>(&self, mb: &MetricBundle<P, B>, x: &[f64], v: &[f64], h: f64) -> bool {
        let probe: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + 2.0 * h * b).collect();
        mb.space().is_admissible(&probe)
    }

    fn accel<P: Profile, B: OneForm>(&self, mb: &MetricBundle<P, B>, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if !mb.space().is_admissible(x) {
            return Err(Error::Domain("left the admissible region"));
        }
        Ok(mb.spray(self.route, x, v)?.g.into_iter().map(|g| -2.0 * g).collect())
    }

    fn step<P: Profile, B: OneForm>(
        &self,
        mb: &MetricBundle<P, B>,
        x: &[f64],
        v: &[f64],
        h: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
        let k1x = v.to_vec();
        let k1v = self.accel(mb, x, v)?;
        let (x2, v2) = (axpy(x, 0.5 * h, &k1x), axpy(v, 0.5 * h, &k1v));
        let k2v = self.accel(mb, &x2, &v2)?;
        let k2x = v2;
        let (x3, v3) = (axpy(x, 0.5 * h, &k2x), axpy(v, 0.5 * h, &k2v));
        let k3v = self.accel(mb, &x3, &v3)?;
        let k3x = v3;
        let (x4, v4) = (axpy(x, h, &k3x), axpy(v, h, &k3v));
        let k4v = self.accel(mb, &x4, &v4)?;
        let k4x = v4;
        let combine = |base: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
            (0..base.len()).map(|i| base[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
        };
        let xn = combine(x, &k1x, &k2x, &k3x, &k4x);
        let vn = combine(v, &k1v, &k2v, &k3v, &k4v);
        if !mb.space().is_admissible(&xn) {
            return Err(Error::Domain("left the admissible region"));
        }
        Ok((xn, vn))
    }

    /// Integrates with `steps` and `2·steps` and reports the endpoint change
    /// (max-norm over position and velocity). Returns the finer path.
    pub fn integrate_checked<P: Profile, B: OneForm>(
        &self,
        mb: &MetricBundle<P, B>,
        x0: &[f64],
        y0: &[f64],
        t_end: f64,
        steps: usize,
    ) -> Result<(GeodesicPath, f64)> {
        let coarse = self.integrate(mb, x0, y0, t_end, steps)?;
        let fine = self.integrate(mb, x0, y0, t_end, 2 * steps)?;
        if !coarse.is_complete() || !fine.is_complete() {
            return Err(Error::Domain("path left the admissible region before the end time"));
        }
        let (a, b) = (coarse.end(), fine.end());
        let change = max_abs_diff(&a.x, &b.x).max(max_abs_diff(&a.v, &b.v));
        Ok((fine, change))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::one_form::OneFormSpec;
    use crate::phi_family::{PhiFamily, SmoothFn};
    use crate::space_form::SpaceForm;
    use alloc::vec;

    fn bundle(f: &str, g: f64, lambda: f64, kappa: f64) -> MetricBundle {
        let sf = SpaceForm::new(kappa, 2).unwrap();
        let phi = PhiFamily::builtin(f, lambda, SmoothFn::constant(g)).unwrap();
        MetricBundle::new(sf, phi, OneFormSpec::new(1.0, [0.0, 0.0])).unwrap()
    }

    #[test]
    fn flat_riemannian_paths_are_exact_lines() {
        let mb = bundle("one", 0.0, 1.0, 0.0);
        let path = Integrator::default().integrate(&mb, &[0.1, 0.2], &[1.0, 0.5], 1.0, 10).unwrap();
        assert!(path.is_complete());
        for s in &path.samples {
            assert!((s.x[0] - (0.1 + s.t)).abs() < 1e-12);
            assert!((s.x[1] - (0.2 + 0.5 * s.t)).abs() < 1e-12);
        }
        assert!(path.straightness().unwrap() < 1e-12);
    }

    #[test]
    fn randers_path_stays_on_axis() {
        let mb = bundle("one", 1.0, 1.0, 0.0);
        let path = Integrator::default().integrate(&mb, &[0.0, 0.0], &[1.0, 0.0], 0.5, 20).unwrap();
        assert!(path.samples.iter().all(|s| s.x[1].abs() < 1e-14));
    }

    #[test]
    fn projectively_flat_geodesic_is_straight_and_converged() {
        let mb = bundle("one_plus_t", 0.0, 2.0, -0.5);
        let (path, change) = Integrator::default().integrate_checked(&mb, &[0.5, 0.3], &[-0.4, 0.6], 0.6, 100).unwrap();
        assert!(change < 1e-7, "{change}");
        assert!(path.straightness().unwrap() < 1e-5);
    }

    #[test]
    fn quarter_arc_is_detectably_curved() {
        let n = 50;
        let samples: Vec<PathSample> = (0..=n)
            .map(|k| {
                let th = core::f64::consts::FRAC_PI_2 * k as f64 / n as f64;
                PathSample { t: th, x: vec![libm::cos(th), libm::sin(th)], v: vec![-libm::sin(th), libm::cos(th)] }
            })
            .collect();
        let s = straightness(&samples).unwrap();
        assert!((s - 1.0 / 2f64.sqrt()).abs() < 1e-12, "{s}");
    }

    #[test]
    fn straightness_needs_a_path() {
        let p = PathSample { t: 0.0, x: vec![0.0, 0.0], v: vec![1.0, 0.0] };
        assert!(straightness(&[p.clone(), p.clone()]).is_err());
        assert!(straightness(&[p.clone(), p.clone(), p]).is_err());
    }

    #[test]
    fn boundary_exit_is_reported() {
        let mb = bundle("one", 0.0, 1.0, -1.0);
        let path = Integrator::default().integrate(&mb, &[0.5, 0.0], &[1.0, 0.0], 5.0, 5).unwrap();
        assert!(matches!(path.status, PathStatus::LeftDomain { .. }), "{:?}", path.status);
        assert!(path.samples.iter().all(|s| mb.space().is_admissible(&s.x)));
    }
}
