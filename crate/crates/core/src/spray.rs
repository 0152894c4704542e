//! The metric `F = α φ(b², β/α)` and its spray coefficients.
//!
//! Three independent routes produce `Gⁱ`:
//!
//! * [`SprayRoute::Definitional`]: `Gⁱ = ¼ g^{il}([F²]_{xᵐyˡ} yᵐ − [F²]_{xˡ})` with every
//!   derivative of `F²` taken by finite differences;
//! * [`SprayRoute::General`]: the closed expression for general (α,β)-metrics in terms of
//!   `Q, R, Θ, Ψ, Π, Ω` and the covariant jet of `β`, valid for every `φ` and `β`;
//! * [`SprayRoute::ClosedForm`]: the projectively flat form
//!   `Gⁱ = ᵅGⁱ + kα{(c−1)(b²−s²)φ₂/(2φ) + b²(2sφ₁+φ₂)/(2φ)} yⁱ`, which is only correct
//!   when `φ` solves the PDE and `β` satisfies the covariant condition with the same `c`.

use alloc::vec::Vec;

use crate::calculus::{field, Stencil};
use crate::error::ConvexityViolation;
use crate::linalg::Matrix;
use crate::math::{dot, max_abs, max_abs_diff, norm_sq, sqrt};
use crate::one_form::{covariant_jet, BetaField, BetaJet, OneForm, OneFormSpec};
use crate::phi_family::{PhiFamily, PhiJet, Profile};
use crate::space_form::SpaceForm;
use crate::{Error, Result};

/// Which formula computes the spray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SprayRoute {
    /// Finite differences of `F²`.
    Definitional,
    /// General (α,β) formula; the default.
    #[default]
    General,
    /// Projectively flat closed form.
    ClosedForm,
}

impl SprayRoute {
    /// Lower-case name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            SprayRoute::Definitional => "definitional",
            SprayRoute::General => "general",
            SprayRoute::ClosedForm => "closed_form",
        }
    }
}

/// `F` at a point together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FEval {
    /// `F(x, y)`.
    pub f: f64,
    /// `α(x, y)`.
    pub alpha: f64,
    /// `β(x, y)`.
    pub beta: f64,
    /// `b²(x)`.
    pub b2: f64,
    /// `s = β/α`.
    pub s: f64,
}

/// The six scalars of the general spray formula at one `(b², s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPack {
    /// `φ₂/(φ − sφ₂)`.
    pub q: f64,
    /// `φ₁/(φ − sφ₂)`.
    pub r: f64,
    /// `[(φ − sφ₂)φ₂ − sφφ₂₂] / (2φ[φ − sφ₂ + (b²−s²)φ₂₂])`.
    pub theta: f64,
    /// `φ₂₂ / (2[φ − sφ₂ + (b²−s²)φ₂₂])`.
    pub psi: f64,
    /// `[(φ − sφ₂)φ₁₂ − sφ₁φ₂₂] / ((φ − sφ₂)[φ − sφ₂ + (b²−s²)φ₂₂])`.
    pub pi: f64,
    /// `2φ₁/φ − [sφ + (b²−s²)φ₂]Π/φ`.
    pub omega: f64,
}

/// Builds the scalar pack; all denominators must be positive.
pub fn scalar_pack(j: &PhiJet) -> Result<ScalarPack> {
    let first = j.first_convexity();
    let second = j.second_convexity();
    if !(j.phi > 0.0) {
        return Err(Error::Domain("phi must be positive"));
    }
    if !(first > 0.0) {
        return Err(Error::Convexity(ConvexityViolation::First));
    }
    if !(second > 0.0) {
        return Err(Error::Convexity(ConvexityViolation::Second));
    }
    let (phi, s, b2) = (j.phi, j.s, j.b2);
    let pi = (first * j.phi12 - s * j.phi1 * j.phi22) / (first * second);
    Ok(ScalarPack {
        q: j.phi2 / first,
        r: j.phi1 / first,
        theta: (first * j.phi2 - s * phi * j.phi22) / (2.0 * phi * second),
        psi: j.phi22 / (2.0 * second),
        pi,
        omega: 2.0 * j.phi1 / phi - (s * phi + (b2 - s * s) * j.phi2) * pi / phi,
    })
}

/// Spray coefficients and the best projective factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayResult {
    /// `Gⁱ`.
    pub g: Vec<f64>,
    /// Projective factor `P`.
    pub p: f64,
    /// `‖G − P y‖∞ / (1 + ‖G‖∞)`.
    pub residual: f64,
}

impl SprayResult {
    fn new(g: Vec<f64>, p: f64, y: &[f64]) -> Self {
        let py: Vec<f64> = y.iter().map(|v| p * v).collect();
        let residual = max_abs_diff(&g, &py) / (1.0 + max_abs(&g));
        SprayResult { g, p, residual }
    }

    fn projected(g: Vec<f64>, y: &[f64]) -> Self {
        let p = dot(&g, y) / norm_sq(y);
        Self::new(g, p, y)
    }
}

fn unit(y: &[f64]) -> Vec<f64> {
    let len = sqrt(norm_sq(y));
    y.iter().map(|v| v / len).collect()
}

/// `‖a − b‖∞ / (1 + ‖a‖∞)`.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    max_abs_diff(a, b) / (1.0 + max_abs(a))
}

/// All three routes at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayComparison {
    /// Definitional route.
    pub definitional: SprayResult,
    /// General formula.
    pub general: SprayResult,
    /// Closed form; `None` when it does not apply (parallel `β` or no coupling).
    pub closed_form: Option<SprayResult>,
}

impl SprayComparison {
    /// Largest pairwise relative difference among the available routes.
    pub fn max_disagreement(&self) -> f64 {
        let d = &self.definitional.g;
        let mut worst = relative_difference(d, &self.general.g);
        if let Some(c) = &self.closed_form {
            worst = worst.max(relative_difference(d, &c.g)).max(relative_difference(&self.general.g, &c.g));
        }
        worst
    }
}

/// A space form, a profile `φ` and a 1-form `β`.
#[derive(Debug, Clone)]
pub struct MetricBundle<P = PhiFamily, B = BetaField> {
    space: SpaceForm,
    profile: P,
    beta: B,
}

impl MetricBundle<PhiFamily, BetaField> {
    /// The coupled bundle: `β` is deformed with the same `c` and base point as `φ`.
    pub fn new(space: SpaceForm, phi: PhiFamily, spec: OneFormSpec) -> Result<Self> {
        let beta = BetaField::new(space, spec, phi.c().clone(), phi.base())?;
        Ok(MetricBundle { space, profile: phi, beta })
    }
}

impl<P: Profile, B: OneForm> MetricBundle<P, B> {
    /// Any profile with any 1-form. Nothing ties their couplings together, so this is
    /// how bundles violating the flatness conditions are built.
    pub fn with_parts(space: SpaceForm, profile: P, beta: B) -> Self {
        MetricBundle { space, profile, beta }
    }

    /// The base space form.
    pub fn space(&self) -> &SpaceForm {
        &self.space
    }

    /// The profile `φ`.
    pub fn profile(&self) -> &P {
        &self.profile
    }

    /// The 1-form `β`.
    pub fn beta(&self) -> &B {
        &self.beta
    }

    fn check_y(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.space.dim() {
            return Err(Error::InvalidArgument("y has the wrong dimension"));
        }
        if norm_sq(y) == 0.0 {
            return Err(Error::Domain("y must be nonzero"));
        }
        Ok(())
    }

    fn raw(&self, x: &[f64], y: &[f64]) -> Result<FEval> {
        let alpha = self.space.alpha(x, y)?;
        let b = self.beta.covector(x)?;
        let b2 = self.space.covector_norm_sq(x, &b)?;
        let beta = dot(&b, y);
        let s = beta / alpha;
        let f = alpha * self.profile.value(b2, s)?;
        Ok(FEval { f, alpha, beta, b2, s })
    }

    /// `F(x, y)` with its ingredients; checks strong convexity at `(b², s)`.
    pub fn f_eval(&self, x: &[f64], y: &[f64]) -> Result<FEval> {
        self.check_y(y)?;
        let e = self.raw(x, y)?;
        if let crate::phi_family::Convexity::Fail(v) = self.profile.convexity(e.b2, e.s) {
            return Err(Error::Convexity(v));
        }
        if !(e.f > 0.0) {
            return Err(Error::Domain("F must be positive"));
        }
        Ok(e)
    }

    fn f_sq_field(&self) -> impl crate::calculus::ScalarField + '_ {
        let n = self.space.dim();
        field(2 * n, move |z: &[f64]| {
            let e = self.raw(&z[..n], &z[n..])?;
            Ok(e.f * e.f)
        })
    }

    /// `g_{ij} = ½ ∂²F²/∂yⁱ∂yʲ`.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<Matrix> {
        self.f_eval(x, y)?;
        // g is 0-homogeneous in y; differentiate at unit length so the step is
        // commensurate with y
        let u = unit(y);
        let n = self.space.dim();
        let f2 = self.f_sq_field();
        let z: Vec<f64> = x.iter().chain(&u).copied().collect();
        let st = Stencil::for_second_derivatives();
        let mut g = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * st.diff2(&f2, &z, n + i, n + j)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// `g_{ij}` from the jet of `φ`:
    /// `ρ a_{ij} + ρ₀ bᵢbⱼ + ρ₁(bᵢα_j + bⱼαᵢ) + ρ₂ αᵢαⱼ` with `αᵢ = a_{ij}yʲ/α`.
    pub fn fundamental_tensor_analytic(&self, x: &[f64], y: &[f64]) -> Result<Matrix> {
        self.f_eval(x, y)?;
        let b = self.beta.covector(x)?;
        let b2 = self.space.covector_norm_sq(x, &b)?;
        let (alpha, j) = self.phi_jet_at(x, y, &b, b2)?;
        let a = self.space.metric(x)?;
        let ay: Vec<f64> = a.mul_vec(y).into_iter().map(|v| v / alpha).collect();
        let (phi, s) = (j.phi, j.s);
        let rho = phi * (phi - s * j.phi2);
        let rho0 = phi * j.phi22 + j.phi2 * j.phi2;
        let rho1 = -(s * rho0 - phi * j.phi2);
        let rho2 = -s * rho1;
        Ok(Matrix::from_fn(y.len(), |p, q| {
            rho * a[(p, q)] + rho0 * b[p] * b[q] + rho1 * (b[p] * ay[q] + b[q] * ay[p]) + rho2 * ay[p] * ay[q]
        }))
    }

    /// Spray by the requested route.
    pub fn spray(&self, route: SprayRoute, x: &[f64], y: &[f64]) -> Result<SprayResult> {
        match route {
            SprayRoute::Definitional => self.spray_definitional(x, y),
            SprayRoute::General => self.spray_general(x, y),
            SprayRoute::ClosedForm => self.spray_closed_form(x, y),
        }
    }

    /// `Gⁱ = ¼ g^{il}([F²]_{xᵐyˡ} yᵐ − [F²]_{xˡ})`, with `P = F_{xᵏ}yᵏ/(2F)`.
    pub fn spray_definitional(&self, x: &[f64], y: &[f64]) -> Result<SprayResult> {
        self.f_eval(x, y)?;
        // evaluated at unit y, then rescaled: G is 2-homogeneous and P is 1-homogeneous
        let len = sqrt(norm_sq(y));
        let u = unit(y);
        let n = self.space.dim();
        let f2 = self.f_sq_field();
        let z: Vec<f64> = x.iter().chain(&u).copied().collect();
        let st = Stencil::default();
        let st2 = Stencil::for_second_derivatives();

        let g = self.fundamental_tensor(x, &u)?;
        let chol = g.cholesky().map_err(|_| Error::Convexity(ConvexityViolation::FundamentalTensor))?;
        let mut rhs = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        for l in 0..n {
            let dl = st.diff1(&f2, &z, l)?;
            let mut acc = -dl;
            for m in 0..n {
                acc += st2.diff2(&f2, &z, m, n + l)? * u[m];
            }
            rhs.push(0.25 * acc);
            d.push(dl);
        }
        let spray = chol.solve(&rhs).into_iter().map(|v| v * len * len).collect();
        // F_{x^k} u^k = d·u / (2F)
        let fu = self.raw(x, &u)?.f;
        let p = len * dot(&d, &u) / (4.0 * fu * fu);
        Ok(SprayResult::new(spray, p, y))
    }

    fn phi_jet_at(&self, x: &[f64], y: &[f64], b: &[f64], b2: f64) -> Result<(f64, PhiJet)> {
        let alpha = self.space.alpha(x, y)?;
        let s = dot(b, y) / alpha;
        Ok((alpha, self.profile.jet(b2, s)?))
    }

    /// The general (α,β) formula assembled from [`ScalarPack`] and [`BetaJet`].
    pub fn spray_general(&self, x: &[f64], y: &[f64]) -> Result<SprayResult> {
        self.f_eval(x, y)?;
        let jet = covariant_jet(&self.space, &self.beta, x)?;
        let g = self.general_from_jet(x, y, &jet)?;
        Ok(SprayResult::projected(g, y))
    }

    fn general_from_jet(&self, x: &[f64], y: &[f64], jet: &BetaJet) -> Result<Vec<f64>> {
        let (alpha, pj) = self.phi_jet_at(x, y, &jet.b, jet.b2)?;
        let k = scalar_pack(&pj)?;
        let alpha_g = self.space.spray(x, y)?;
        let (s0, r0, r00) = (jet.s0(y), jet.r0(y), jet.r00(y));
        let common = -2.0 * alpha * k.q * s0 + r00 + 2.0 * alpha * alpha * k.r * jet.r_scalar;
        let y_coef = (k.theta * common + alpha * k.omega * (r0 + s0)) / alpha;
        let b_coef = k.psi * common + alpha * k.pi * (r0 + s0);
        let s_up_0 = jet.s_up_0(y);
        let (r_up, s_up) = (jet.r_up(), jet.s_up());
        Ok((0..y.len())
            .map(|i| {
                alpha_g[i] + alpha * k.q * s_up_0[i] + y_coef * y[i] + b_coef * jet.b_up[i]
                    - alpha * alpha * k.r * (r_up[i] + s_up[i])
            })
            .collect())
    }

    /// `Gⁱ = (ᵅP + kα{(c−1)(b²−s²)φ₂/(2φ) + b²(2sφ₁+φ₂)/(2φ)}) yⁱ`.
    ///
    /// Needs `k(x)` from the 1-form and `c(b²)` from the profile; errors with
    /// [`Error::NotApplicable`] when either is unavailable (parallel `β`, or a profile
    /// that is not built from a coupling function).
    pub fn spray_closed_form(&self, x: &[f64], y: &[f64]) -> Result<SprayResult> {
        self.f_eval(x, y)?;
        let k = self.beta.k(x)?.ok_or(Error::NotApplicable("the 1-form has no k (parallel or unknown)"))?;
        let coupling = self.profile.coupling().ok_or(Error::NotApplicable("the profile has no coupling function"))?;
        let b = self.beta.covector(x)?;
        let b2 = self.space.covector_norm_sq(x, &b)?;
        let (alpha, j) = self.phi_jet_at(x, y, &b, b2)?;
        let c = coupling.value(b2)?;
        let s = j.s;
        let brace = (c - 1.0) * (b2 - s * s) * j.phi2 / (2.0 * j.phi) + b2 * (2.0 * s * j.phi1 + j.phi2) / (2.0 * j.phi);
        let p = self.space.projective_factor(x, y)? + k * alpha * brace;
        let g = y.iter().map(|v| p * v).collect();
        Ok(SprayResult::new(g, p, y))
    }

    /// All three routes; the closed form is `None` when it does not apply.
    pub fn compare_routes(&self, x: &[f64], y: &[f64]) -> Result<SprayComparison> {
        let definitional = self.spray_definitional(x, y)?;
        let general = self.spray_general(x, y)?;
        let closed_form = match self.spray_closed_form(x, y) {
            Ok(r) => Some(r),
            Err(Error::NotApplicable(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(SprayComparison { definitional, general, closed_form })
    }

    /// `‖G − Py‖∞/(1 + ‖G‖∞)` from the definitional route.
    pub fn projective_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.spray_definitional(x, y).map(|r| r.residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::one_form::FnOneForm;
    use crate::phi_family::{Builtin, CFunction, FgPair, SmoothFn};
    use alloc::vec;

    fn randers(kappa: f64) -> MetricBundle {
        let sf = SpaceForm::new(kappa, 2).unwrap();
        let phi = PhiFamily::builtin("one", 1.0, SmoothFn::constant(1.0)).unwrap();
        MetricBundle::new(sf, phi, OneFormSpec::new(1.0, [0.0, 0.0])).unwrap()
    }

    #[test]
    fn scalar_pack_for_randers_profile() {
        let j = PhiJet { b2: 0.5, s: 0.3, phi: 1.3, phi1: 0.0, phi2: 1.0, phi12: 0.0, phi22: 0.0 };
        let k = scalar_pack(&j).unwrap();
        assert_eq!((k.q, k.r, k.psi), (1.0, 0.0, 0.0));
        assert!((k.theta - 1.0 / (2.0 * 1.3)).abs() < 1e-15);
    }

    #[test]
    fn scalar_pack_rejects_bad_denominators() {
        let j = PhiJet { b2: 0.5, s: 0.5, phi: 0.5, phi1: 0.0, phi2: 1.0, phi12: 0.0, phi22: 0.0 };
        assert!(matches!(scalar_pack(&j), Err(Error::Convexity(ConvexityViolation::First))));
    }

    #[test]
    fn randers_values() {
        let mb = randers(0.0);
        let e = mb.f_eval(&[0.1, 0.2], &[1.0, -1.0]).unwrap();
        let want = 2f64.sqrt() + (0.1 - 0.2);
        assert!((e.f - want).abs() < 1e-14);
        let g = mb.fundamental_tensor(&[0.0, 0.0], &[0.3, 0.7]).unwrap();
        assert!(g.combine(1.0, &Matrix::identity(2), -1.0).max_abs() < 1e-8);
    }

    #[test]
    fn randers_sprays_agree_with_hand_formula() {
        let mb = randers(0.0);
        let (x, y) = ([0.1, 0.0], [1.0, 0.0]);
        let want = 1.0 / 2.2;
        let d = mb.spray_definitional(&x, &y).unwrap();
        assert!((d.p - want).abs() < 1e-9);
        assert!((d.g[0] - want).abs() < 1e-7 && d.g[1].abs() < 1e-7);
        let g = mb.spray_general(&x, &y).unwrap();
        assert!((g.g[0] - want).abs() < 1e-9 && g.g[1].abs() < 1e-9);
        let c = mb.spray_closed_form(&x, &y).unwrap();
        assert!((c.p - want).abs() < 1e-12);
    }

    #[test]
    fn riemannian_profile_reduces_to_alpha() {
        let sf = SpaceForm::new(-0.5, 3).unwrap();
        let phi = PhiFamily::builtin("one", 1.0, SmoothFn::constant(0.0)).unwrap();
        let mb = MetricBundle::new(sf, phi, OneFormSpec::new(1.0, [0.1, 0.0, 0.2])).unwrap();
        let (x, y) = ([0.2, -0.1, 0.3], [0.5, 1.0, -0.4]);
        let alpha_g = sf.spray(&x, &y).unwrap();
        for route in [SprayRoute::Definitional, SprayRoute::General] {
            let r = mb.spray(route, &x, &y).unwrap();
            assert!(relative_difference(&alpha_g, &r.g) < 1e-7, "{route:?}");
        }
        assert!(mb.projective_residual(&x, &y).unwrap() < 1e-8);
    }

    #[test]
    fn parallel_form_gives_riemannian_spray_and_skips_closed_form() {
        let sf = SpaceForm::new(0.0, 2).unwrap();
        let phi = PhiFamily::builtin("one_plus_t", 1.0, SmoothFn::constant(0.0)).unwrap();
        let mb = MetricBundle::new(sf, phi, OneFormSpec::new(0.0, [0.3, 0.4])).unwrap();
        let (x, y) = ([0.2, 0.1], [1.0, 0.5]);
        let g = mb.spray_general(&x, &y).unwrap();
        assert!(max_abs(&g.g) < 1e-9);
        assert!(matches!(mb.spray_closed_form(&x, &y), Err(Error::NotApplicable(_))));
        assert!(mb.compare_routes(&x, &y).unwrap().closed_form.is_none());
    }

    #[test]
    fn squared_coupling_bundle_three_routes() {
        let sf = SpaceForm::new(0.0, 2).unwrap();
        let phi = PhiFamily::builtin("one_plus_t", 2.0, SmoothFn::constant(0.0)).unwrap();
        let mb = MetricBundle::new(sf, phi, OneFormSpec::new(1.0, [0.0, 0.0])).unwrap();
        let cmp = mb.compare_routes(&[1.0, 0.0], &[0.3, 1.0]).unwrap();
        assert!(cmp.max_disagreement() < 1e-6, "{cmp:?}");
        assert!(cmp.definitional.residual < 1e-6);
    }

    #[test]
    fn general_formula_handles_non_closed_forms() {
        // b = (0.3 + x₂, 0.2 − x₁ + 0.1x₁x₂) has a nonzero antisymmetric part.
        let sf = SpaceForm::new(0.5, 2).unwrap();
        let beta = FnOneForm(|x: &[f64]| Ok(vec![0.3 + x[1], 0.2 - x[0] + 0.1 * x[0] * x[1]]));
        let fam = PhiFamily::new(
            FgPair::new(SmoothFn::builtin(Builtin::OnePlusT), SmoothFn::affine(0.1, 0.2)),
            CFunction::Constant(2.0),
        )
        .unwrap();
        let mb = MetricBundle::with_parts(sf, fam, beta);
        let (x, y) = ([0.1, -0.2], [0.7, 0.4]);
        let jet = covariant_jet(&sf, mb.beta(), &x).unwrap();
        assert!(jet.s.max_abs() > 0.5);
        let d = mb.spray_definitional(&x, &y).unwrap();
        let g = mb.spray_general(&x, &y).unwrap();
        assert!(relative_difference(&d.g, &g.g) < 1e-6, "{:?} vs {:?}", d.g, g.g);
        assert!(matches!(mb.spray_closed_form(&x, &y), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn zero_velocity_is_rejected() {
        let mb = randers(0.0);
        assert!(matches!(mb.f_eval(&[0.1, 0.1], &[0.0, 0.0]), Err(Error::Domain(_))));
    }
}
