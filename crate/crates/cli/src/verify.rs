//! The `verify` suite.
//!
//! Checks run in a fixed order over a deterministic sample set, so two runs with the
//! same config and seed produce byte-identical reports.

use log::{debug, info};
use projflat_core::calculus::{field, Stencil};
use projflat_core::math::norm_sq;
use projflat_core::{
    Convexity, Error, Integrator, MetricBundle, OneForm, PhiFamily, PhiJet, SpaceForm, SprayRoute,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Built, BundleConfig, ConfigError, Tolerances};
use crate::report::{Record, RecordBuilder, Report};

/// Rejection-sampling budget per requested point.
const ATTEMPTS_PER_POINT: usize = 20_000;

/// Extra geodesics tried when some leave the admissible region early.
const GEODESIC_RETRY_FACTOR: usize = 5;

/// Overrides from the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Replaces `sample.seed`.
    pub seed: Option<u64>,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: None, tol_scale: 1.0 }
    }
}

/// Draws base points `x` with `b² ∈ [lo, hi]` and direction vectors `y`.
pub struct Sampler {
    rng: ChaCha8Rng,
    radius: f64,
    b2_range: [f64; 2],
}

impl Sampler {
    pub fn new(seed: u64, kappa: f64, b2_range: [f64; 2]) -> Self {
        // stay well inside the ball 1 + κ|x|² > 0 when κ < 0
        let radius = if kappa < 0.0 { 0.9 / (-kappa).sqrt() } else { 1.2 };
        Self { rng: ChaCha8Rng::seed_from_u64(seed), radius, b2_range }
    }

    /// A point in the coordinate ball with `b²` in range, or `None` when the
    /// budget runs out.
    pub fn x<B: OneForm + ?Sized>(&mut self, sf: &SpaceForm, beta: &B) -> Option<Vec<f64>> {
        let n = sf.dim();
        let r = self.radius;
        let [lo, hi] = self.b2_range;
        for _ in 0..ATTEMPTS_PER_POINT {
            let x: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-r..r)).collect();
            let nx = norm_sq(&x).sqrt();
            if nx > r || nx < 0.05 || !sf.is_admissible(&x) {
                continue;
            }
            let Ok(b) = beta.covector(&x) else { continue };
            match sf.covector_norm_sq(&x, &b) {
                Ok(b2) if (lo..=hi).contains(&b2) => return Some(x),
                _ => {}
            }
        }
        None
    }

    /// A direction in the cube `[-1, 1]ⁿ` bounded away from zero.
    pub fn y(&mut self, n: usize) -> Vec<f64> {
        loop {
            let y: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
            if norm_sq(&y) > 0.05 {
                return y;
            }
        }
    }

    /// `n` pairs `(x, y)`; shorter if `x` sampling runs out of budget.
    pub fn pairs<B: OneForm + ?Sized>(&mut self, sf: &SpaceForm, beta: &B, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let Some(x) = self.x(sf, beta) else { break };
            let y = self.y(sf.dim());
            out.push((x, y));
        }
        out
    }
}

/// `(b², s)` grid with `b²` spanning the range and `s` strictly inside `(−b, b)`.
pub fn grid(b2_range: [f64; 2], size: usize) -> Vec<(f64, f64)> {
    let [lo, hi] = b2_range;
    let mut out = Vec::with_capacity(size * size);
    for i in 0..size {
        let t = i as f64 / (size - 1) as f64;
        let b2 = lo * (1.0 - t) + hi * t;
        let b = b2.sqrt();
        for k in 0..size {
            out.push((b2, b * (-1.0 + (2 * k + 1) as f64 / size as f64)));
        }
    }
    out
}

/// `φ` jet with every partial taken by central differences of the extended `φ`.
pub fn phi_jet_fd(family: &PhiFamily, b2: f64, s: f64) -> projflat_core::Result<PhiJet> {
    let f = field(2, |z: &[f64]| family.value_extended(z[0], z[1]));
    let z = [b2, s];
    let (d, dd) = (Stencil::default(), Stencil::for_second_derivatives());
    Ok(PhiJet {
        b2,
        s,
        phi: family.value_extended(b2, s)?,
        phi1: d.diff1(&f, &z, 0)?,
        phi2: d.diff1(&f, &z, 1)?,
        phi12: dd.diff2(&f, &z, 0, 1)?,
        phi22: dd.diff2(&f, &z, 1, 1)?,
    })
}

fn at_grid(b2: f64, s: f64) -> String {
    format!("b2={b2:.6} s={s:.6}")
}

fn at_x(x: &[f64]) -> String {
    format!("x={x:.6?}")
}

fn at_xy(x: &[f64], y: &[f64]) -> String {
    format!("x={x:.6?} y={y:.6?}")
}

fn short_sample(rec: &mut RecordBuilder, got: usize, wanted: usize) {
    if got < wanted {
        rec.fail(format!("only {got} of {wanted} admissible points could be sampled"));
    }
}

struct Suite<'a> {
    cfg: &'a BundleConfig,
    built: &'a Built,
    tol: Tolerances,
    seed: u64,
}

impl Suite<'_> {
    fn bundle(&self) -> &MetricBundle {
        &self.built.bundle
    }

    fn convexity_grid(&self) -> Record {
        let mut rec = RecordBuilder::new("convexity_grid", 0.0);
        let (mut first, mut second) = (f64::INFINITY, f64::INFINITY);
        for (b2, s) in grid(self.cfg.sample.b2_range, self.cfg.sample.grid) {
            match self.built.family.convexity_check_dim(b2, s, self.cfg.n) {
                Convexity::Ok { first: a, second: b } => {
                    first = first.min(a);
                    second = second.min(b);
                    rec.observe::<Error>(Ok(0.0), || at_grid(b2, s));
                }
                Convexity::Fail(v) => rec.observe(Err(v), || at_grid(b2, s)),
            }
        }
        rec.note(format!("min margins: first={first:.6e} second={second:.6e}"));
        rec.finish()
    }

    fn fundamental_tensor(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Record {
        let mut rec = RecordBuilder::new("fundamental_tensor", 0.0);
        short_sample(&mut rec, pairs.len(), self.cfg.sample.points);
        for (x, y) in pairs {
            let r = self.bundle().fundamental_tensor(x, y).and_then(|g| g.cholesky()).map(|_| 0.0);
            rec.observe(r, || at_xy(x, y));
        }
        rec.finish()
    }

    fn pde_grids(&self) -> [Record; 2] {
        let fam = &self.built.family;
        let mut analytic = RecordBuilder::new("pde_residual", self.tol.pde);
        let mut fd = RecordBuilder::new("pde_residual_fd", self.tol.pde_fd);
        for (b2, s) in grid(self.cfg.sample.b2_range, self.cfg.sample.grid) {
            analytic.observe(fam.pde_residual(b2, s).map(f64::abs), || at_grid(b2, s));
            let r = fam.c().value(b2).and_then(|c| phi_jet_fd(fam, b2, s).map(|j| j.pde_residual(c).abs()));
            fd.observe(r, || at_grid(b2, s));
        }
        [analytic.finish(), fd.finish()]
    }

    fn beta_checks(&self, xs: &[Vec<f64>]) -> [Record; 4] {
        let beta = self.bundle().beta();
        let sf = self.bundle().space();
        let mut cond = RecordBuilder::new("beta_condition", self.tol.beta_condition);
        let mut k = RecordBuilder::new("k_agreement", self.tol.k_agreement);
        let mut anti = RecordBuilder::new("antisymmetric_part", self.tol.antisymmetric);
        let mut b2 = RecordBuilder::new("b2_recovery", self.tol.b2_recovery);
        for rec in [&mut cond, &mut k, &mut anti, &mut b2] {
            short_sample(rec, xs.len(), self.cfg.sample.points);
        }
        for x in xs {
            match beta.condition_residual(x) {
                Ok(r) => {
                    cond.observe::<Error>(Ok(r.residual), || at_x(x));
                    k.observe::<Error>(Ok(r.k_disagreement()), || at_x(x));
                    anti.observe::<Error>(Ok(r.antisymmetric), || at_x(x));
                }
                Err(e) => {
                    cond.observe(Err(e.clone()), || at_x(x));
                    k.observe(Err(e.clone()), || at_x(x));
                    anti.observe(Err(e), || at_x(x));
                }
            }
            let rt = beta.eval(x).and_then(|e| {
                let h = beta.c().rho_sq_times(e.b2, beta.base())?;
                let norm = sf.covector_norm_sq(x, &e.b)?;
                Ok(((h - e.bt2).abs() / e.bt2.max(1.0)).max((norm - e.b2).abs() / e.b2.max(1.0)))
            });
            b2.observe(rt, || at_x(x));
        }
        [cond.finish(), k.finish(), anti.finish(), b2.finish()]
    }

    fn sprays(&self, pairs: &[(Vec<f64>, Vec<f64>)], flags: &mut Vec<String>) -> [Record; 2] {
        let mb = self.bundle();
        let mut agree = RecordBuilder::new("spray_agreement", self.tol.spray_agreement);
        let mut proj = RecordBuilder::new("projective_residual", self.tol.projective);
        short_sample(&mut agree, pairs.len(), self.cfg.sample.points);
        short_sample(&mut proj, pairs.len(), self.cfg.sample.points);
        let mut two_way = false;
        for (x, y) in pairs {
            match mb.compare_routes(x, y) {
                Ok(cmp) => {
                    two_way |= cmp.closed_form.is_none();
                    agree.observe::<Error>(Ok(cmp.max_disagreement()), || at_xy(x, y));
                    proj.observe::<Error>(Ok(cmp.definitional.residual), || at_xy(x, y));
                }
                Err(e) => {
                    agree.observe(Err(e.clone()), || at_xy(x, y));
                    proj.observe(Err(e), || at_xy(x, y));
                }
            }
        }
        if two_way {
            agree.note("closed-form route not applicable (beta parallel); compared two routes".into());
            flags.push("closed_form_skipped".into());
        }
        [agree.finish(), proj.finish()]
    }

    fn geodesics(&self) -> [Record; 2] {
        let mb = self.bundle();
        let sc = &self.cfg.sample;
        let mut straight = RecordBuilder::new("geodesic_straightness", self.tol.straightness);
        let mut conv = RecordBuilder::new("geodesic_convergence", self.tol.geodesic_convergence);
        // separate stream so changing `points` does not move the geodesics
        let mut sampler = Sampler::new(self.seed.wrapping_add(1), self.cfg.kappa, sc.b2_range);
        let integrator = Integrator::new(SprayRoute::General);
        let (mut done, mut tries, mut left) = (0, 0, 0);
        while done < sc.geodesics && tries < GEODESIC_RETRY_FACTOR * sc.geodesics {
            tries += 1;
            let Some(x0) = sampler.x(mb.space(), mb.beta()) else { break };
            let y = sampler.y(self.cfg.n);
            let k = sc.geodesic_speed / norm_sq(&y).sqrt();
            let y0: Vec<f64> = y.iter().map(|v| k * v).collect();
            match integrator.integrate_checked(mb, &x0, &y0, sc.geodesic_time, sc.geodesic_steps) {
                Ok((path, change)) => {
                    done += 1;
                    straight.observe(path.straightness(), || at_xy(&x0, &y0));
                    conv.observe::<Error>(Ok(change), || at_xy(&x0, &y0));
                }
                Err(Error::Domain(_)) => left += 1,
                Err(e) => {
                    done += 1;
                    straight.observe::<Error>(Err(e.clone()), || at_xy(&x0, &y0));
                    conv.observe::<Error>(Err(e), || at_xy(&x0, &y0));
                }
            }
        }
        for rec in [&mut straight, &mut conv] {
            if left > 0 {
                rec.note(format!("{left} paths left the sampled region early and were replaced"));
            }
            short_sample(rec, done, sc.geodesics);
        }
        [straight.finish(), conv.finish()]
    }

    fn flags(&self, flags: &mut Vec<String>) {
        let [lo, hi] = self.cfg.sample.b2_range;
        if let Ok(true) = self.built.family.b2_dependence_vanishes_on_axis(0.5 * (lo + hi)) {
            flags.push("phi1_vanishes_on_axis".into());
        }
        if self.built.spec.is_parallel(self.bundle().space()) {
            flags.push("beta_parallel".into());
        }
        if self.built.uncoupled {
            flags.push("beta_uncoupled".into());
        }
    }
}

/// Builds the bundle from `cfg` and runs every check.
pub fn verify(cfg: &BundleConfig, opts: VerifyOptions) -> Result<Report, ConfigError> {
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(ConfigError::Invalid("tol-scale must be positive".into()));
    }
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.sample.seed = seed;
    }
    cfg.validate()?;
    let built = cfg.build()?;
    let suite = Suite { cfg: &cfg, built: &built, tol: cfg.tolerances.scaled(opts.tol_scale), seed: cfg.sample.seed };
    let mb = &built.bundle;

    let mut sampler = Sampler::new(suite.seed, cfg.kappa, cfg.sample.b2_range);
    let pairs = sampler.pairs(mb.space(), mb.beta(), cfg.sample.points);
    let xs: Vec<Vec<f64>> = pairs.iter().map(|(x, _)| x.clone()).collect();
    debug!("sampled {} points", pairs.len());

    let mut records = Vec::new();
    let mut flags = Vec::new();
    suite.flags(&mut flags);
    info!("convexity");
    records.push(suite.convexity_grid());
    records.push(suite.fundamental_tensor(&pairs));
    info!("pde grid");
    records.extend(suite.pde_grids());
    info!("beta condition");
    records.extend(suite.beta_checks(&xs));
    info!("sprays");
    records.extend(suite.sprays(&pairs, &mut flags));
    info!("geodesics");
    records.extend(suite.geodesics());
    for r in &records {
        debug!("{} max={:e} pass={}", r.name, r.max_residual, r.pass);
    }
    let seed = cfg.sample.seed;
    Ok(Report::new(cfg, seed, opts.tol_scale, records, flags))
}
