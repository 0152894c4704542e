//! The 1-form `β` and its covariant derivative with respect to `α_κ`.
//!
//! The forms used here start from the conformal family
//!
//! ```text
//! β̃_i = [ε xᵢ + (1 + κ|x|²) aᵢ − κ⟨a,x⟩ xᵢ] / (1 + κ|x|²)^{3/2}
//! ```
//!
//! which satisfies `b̃_{i|j} = σ a_{ij}` with `σ = (ε − κ⟨a,x⟩)/√(1+κ|x|²)`. The form
//! actually paired with `φ` is the deformation `β = β̃ / ρ(b²)` with `ρ² = −ν`. Its
//! norm `b²` appears on both sides, so it is recovered by inverting the monotone map
//! `t ↦ ρ(t)²·t` at `‖β̃‖²` (see [`recover_b2`]). The result satisfies
//!
//! ```text
//! b_{i|j} = k c (b² a_{ij} − bᵢ bⱼ) + k bᵢ bⱼ,    k = σ / (ρ c b²).
//! ```

use alloc::vec::Vec;

use crate::calculus::{solve_monotone, Stencil};
use crate::linalg::Matrix;
use crate::math::{dot, pow, sqrt};
use crate::phi_family::CFunction;
use crate::space_form::SpaceForm;
use crate::{Error, Result};

/// Anything that assigns a covector `bᵢ(x)` to points of a space form.
pub trait OneForm: Send + Sync {
    /// Components `bᵢ` at `x`.
    fn covector(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// The scalar `k(x)` of the covariant condition, when the form is known to
    /// satisfy it and is not parallel. `None` otherwise.
    fn k(&self, _x: &[f64]) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// A 1-form given by a closure; useful for forms outside the conformal family.
pub struct FnOneForm<F>(pub F);

impl<F> OneForm for FnOneForm<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    fn covector(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.0)(x)
    }
}

/// Constants `(ε, a)` selecting a conformal form on a space form.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormSpec {
    /// Coefficient `ε` of the radial part.
    pub epsilon: f64,
    /// Constant vector `a`.
    pub a: Vec<f64>,
}

impl OneFormSpec {
    /// Bundles `ε` and `a`.
    pub fn new(epsilon: f64, a: impl Into<Vec<f64>>) -> Self {
        OneFormSpec { epsilon, a: a.into() }
    }

    fn check(&self, sf: &SpaceForm) -> Result<()> {
        if self.a.len() != sf.dim() {
            return Err(Error::InvalidArgument("a has the wrong dimension"));
        }
        if !self.epsilon.is_finite() || self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("epsilon and a must be finite"));
        }
        Ok(())
    }

    /// `β̃_i(x)`.
    pub fn beta_tilde(&self, sf: &SpaceForm, x: &[f64]) -> Result<Vec<f64>> {
        self.check(sf)?;
        let d = sf.conformal_factor(x)?;
        let ax = dot(&self.a, x);
        let scale = 1.0 / (d * sqrt(d));
        let kappa = sf.kappa();
        Ok(x.iter()
            .zip(&self.a)
            .map(|(xi, ai)| (self.epsilon * xi + d * ai - kappa * ax * xi) * scale)
            .collect())
    }

    /// `σ(x) = (ε − κ⟨a,x⟩)/√(1+κ|x|²)`, the conformal factor in `b̃_{i|j} = σ a_{ij}`.
    pub fn sigma(&self, sf: &SpaceForm, x: &[f64]) -> Result<f64> {
        self.check(sf)?;
        let d = sf.conformal_factor(x)?;
        Ok((self.epsilon - sf.kappa() * dot(&self.a, x)) / sqrt(d))
    }

    /// `‖β̃‖²_α`.
    pub fn beta_tilde_norm_sq(&self, sf: &SpaceForm, x: &[f64]) -> Result<f64> {
        let bt = self.beta_tilde(sf, x)?;
        sf.covector_norm_sq(x, &bt)
    }

    /// True when `β̃` is parallel (`σ ≡ 0`): `ε = 0` and either `κ = 0` or `a = 0`.
    pub fn is_parallel(&self, sf: &SpaceForm) -> bool {
        self.epsilon == 0.0 && (sf.kappa() == 0.0 || self.a.iter().all(|v| *v == 0.0))
    }
}

/// Recovers `b²` from `b̃² = ‖β̃‖²` by solving `ρ(b²)²·b² = b̃²`.
///
/// For constant `c = λ` the inverse is explicit: `b² = b₀² (b̃²/b₀²)^{1/λ}`. Otherwise
/// the map is inverted on the declared range of `c` by a bracketed solve, then polished
/// with Newton steps using `d(ρ²t)/dt = cρ²`.
pub fn recover_b2(c: &CFunction, base: f64, bt2: f64) -> Result<f64> {
    if !(bt2 >= 0.0) || !bt2.is_finite() {
        return Err(Error::Domain("norm of the conformal form must be finite"));
    }
    match c {
        CFunction::Constant(l) => {
            if *l == 0.0 {
                return Err(Error::InvalidArgument("c must not vanish"));
            }
            if bt2 == 0.0 {
                return if *l == 1.0 { Ok(0.0) } else { Err(Error::Domain("b^2 = 0 is singular for c != 1")) };
            }
            Ok(base * pow(bt2 / base, 1.0 / l))
        }
        CFunction::Variable { range, .. } => {
            if bt2 == 0.0 {
                return Err(Error::Domain("b^2 = 0 is singular for non-constant c"));
            }
            let h = |t: f64| c.rho_sq_times(t, base);
            let mut t = solve_monotone(h, bt2, *range, 1e-14 * f64::max(1.0, bt2))?;
            for _ in 0..3 {
                let m = c.mu_nu(t, base)?;
                let next = t - (m.mu - bt2) / m.dmu;
                if !(next >= range.0 && next <= range.1) {
                    break;
                }
                t = next;
            }
            Ok(t)
        }
    }
}

/// The deformed conformal form `β = β̃ / ρ(b²)` on a space form.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaField {
    space: SpaceForm,
    spec: OneFormSpec,
    c: CFunction,
    base: f64,
}

/// `β` at a point, with the quantities used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaEval {
    /// `bᵢ`.
    pub b: Vec<f64>,
    /// `b² = ‖β‖²_α`, from the inversion.
    pub b2: f64,
    /// `‖β̃‖²_α`.
    pub bt2: f64,
    /// `ρ(b²)`.
    pub rho: f64,
}

impl BetaField {
    /// Deformed form for coupling `c` with base point `b₀²`.
    pub fn new(space: SpaceForm, spec: OneFormSpec, c: CFunction, base: f64) -> Result<Self> {
        spec.check(&space)?;
        c.validate()?;
        if !(base > 0.0) || !base.is_finite() {
            return Err(Error::InvalidArgument("base point must be positive"));
        }
        Ok(BetaField { space, spec, c, base })
    }

    /// The underlying space form.
    pub fn space(&self) -> &SpaceForm {
        &self.space
    }

    /// `(ε, a)`.
    pub fn spec(&self) -> &OneFormSpec {
        &self.spec
    }

    /// Coupling function used by the deformation.
    pub fn c(&self) -> &CFunction {
        &self.c
    }

    /// Base point `b₀²`.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// `β` at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<BetaEval> {
        let bt = self.spec.beta_tilde(&self.space, x)?;
        let bt2 = self.space.covector_norm_sq(x, &bt)?;
        let b2 = recover_b2(&self.c, self.base, bt2)?;
        let rho = self.c.mu_nu(b2, self.base)?.rho();
        let b = bt.iter().map(|v| v / rho).collect();
        Ok(BetaEval { b, b2, bt2, rho })
    }

    /// `k(x) = σ/(ρ c b²)`.
    pub fn k_formula(&self, x: &[f64]) -> Result<f64> {
        let e = self.eval(x)?;
        let c = self.c.value(e.b2)?;
        let denom = c * e.b2;
        if denom == 0.0 {
            return Err(Error::Domain("c b^2 vanishes"));
        }
        Ok(self.spec.sigma(&self.space, x)? / (e.rho * denom))
    }

    /// Fits the covariant condition at `x`; see [`ConditionResidual`].
    pub fn condition_residual(&self, x: &[f64]) -> Result<ConditionResidual> {
        let jet = covariant_jet(&self.space, self, x)?;
        let c = self.c.value(jet.b2)?;
        if c * jet.b2 == 0.0 {
            return Err(Error::Domain("c b^2 vanishes"));
        }
        let k_formula = self.k_formula(x)?;
        Ok(ConditionResidual::fit(&jet, c, k_formula))
    }

    /// Checks `(ρβ)_{i|j} = ρ b_{i|j} + 2ρ′ bᵢ(r_j + s_j)` for a function `ρ(b²)`
    /// given as `t ↦ (ρ(t), ρ′(t))`. Returns the max-norm of the difference.
    ///
    /// The left side differentiates `x ↦ ρ(‖β‖²)β` directly; the right side uses the
    /// jet of `β`.
    pub fn deformation_check<R>(&self, rho: R, x: &[f64]) -> Result<f64>
    where
        R: Fn(f64) -> Result<(f64, f64)>,
    {
        let sf = self.space;
        let scaled = |p: &[f64]| -> Result<Vec<f64>> {
            let b = self.covector(p)?;
            let (r, _) = rho(sf.covector_norm_sq(p, &b)?)?;
            Ok(b.into_iter().map(|v| r * v).collect())
        };
        let lhs = covariant_derivative(&sf, scaled, x)?;
        let jet = covariant_jet(&sf, self, x)?;
        let (r, dr) = rho(jet.b2)?;
        let n = sf.dim();
        let rs: Vec<f64> = (0..n).map(|j| jet.r_vec[j] + jet.s_vec[j]).collect();
        let rhs = Matrix::from_fn(n, |i, j| r * jet.cov[(i, j)] + 2.0 * dr * jet.b[i] * rs[j]);
        Ok(lhs.combine(1.0, &rhs, -1.0).max_abs())
    }
}

impl OneForm for BetaField {
    fn covector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x).map(|e| e.b)
    }

    fn k(&self, x: &[f64]) -> Result<Option<f64>> {
        if self.spec.is_parallel(&self.space) {
            Ok(None)
        } else {
            self.k_formula(x).map(Some)
        }
    }
}

/// `β` and its covariant derivative at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaJet {
    /// `bᵢ`.
    pub b: Vec<f64>,
    /// `bⁱ = a^{ij} b_j`.
    pub b_up: Vec<f64>,
    /// `b² = bᵢ bⁱ`.
    pub b2: f64,
    /// `b_{i|j}`, entry `(i, j)`.
    pub cov: Matrix,
    /// `r_{ij}`, symmetric part of `b_{i|j}`.
    pub r: Matrix,
    /// `s_{ij}`, antisymmetric part of `b_{i|j}`.
    pub s: Matrix,
    /// `r_j = bⁱ r_{ij}`.
    pub r_vec: Vec<f64>,
    /// `s_j = bⁱ s_{ij}`.
    pub s_vec: Vec<f64>,
    /// `r = r_j bʲ`.
    pub r_scalar: f64,
    /// `a^{ij}` at the point, for raising indices.
    pub a_inv: Matrix,
}

impl BetaJet {
    /// `rⁱ = a^{ij} r_j`.
    pub fn r_up(&self) -> Vec<f64> {
        self.a_inv.mul_vec(&self.r_vec)
    }

    /// `sⁱ = a^{ij} s_j`.
    pub fn s_up(&self) -> Vec<f64> {
        self.a_inv.mul_vec(&self.s_vec)
    }

    /// `sⁱ₀ = a^{ij} s_{jk} yᵏ`.
    pub fn s_up_0(&self, y: &[f64]) -> Vec<f64> {
        self.a_inv.mul_vec(&self.s.mul_vec(y))
    }

    /// `r₀₀ = r_{ij} yⁱ yʲ`.
    pub fn r00(&self, y: &[f64]) -> f64 {
        self.r.bilinear(y, y)
    }

    /// `r₀ = r_i yⁱ`.
    pub fn r0(&self, y: &[f64]) -> f64 {
        dot(&self.r_vec, y)
    }

    /// `s₀ = s_i yⁱ`.
    pub fn s0(&self, y: &[f64]) -> f64 {
        dot(&self.s_vec, y)
    }

    /// Max-norm of `s_{ij}`.
    pub fn antisymmetric_norm(&self) -> f64 {
        self.s.max_abs()
    }
}

/// `∂_j bᵢ − Γᵏ_{ij} b_k` for a covector field, by finite differences of the field.
pub fn covariant_derivative<F>(sf: &SpaceForm, field: F, x: &[f64]) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = sf.dim();
    let b = field(x)?;
    if b.len() != n {
        return Err(Error::InvalidArgument("covector has the wrong dimension"));
    }
    let gamma = sf.christoffel(x)?;
    let stencil = Stencil::default();
    let mut cov = Matrix::zeros(n);
    for j in 0..n {
        let col = stencil.diff1_vec(&field, x, j)?;
        for i in 0..n {
            let conn: f64 = (0..n).map(|k| gamma.get(k, i, j) * b[k]).sum();
            cov[(i, j)] = col[i] - conn;
        }
    }
    Ok(cov)
}

/// Covariant jet of any 1-form at `x`.
pub fn covariant_jet<B: OneForm + ?Sized>(sf: &SpaceForm, form: &B, x: &[f64]) -> Result<BetaJet> {
    let b = form.covector(x)?;
    let cov = covariant_derivative(sf, |p: &[f64]| form.covector(p), x)?;
    let a_inv = sf.inverse_metric(x)?;
    let b_up = a_inv.mul_vec(&b);
    let b2 = dot(&b, &b_up);
    let r = cov.symmetric_part();
    let s = cov.antisymmetric_part();
    let r_vec = r.transpose().mul_vec(&b_up);
    let s_vec = s.transpose().mul_vec(&b_up);
    let r_scalar = dot(&r_vec, &b_up);
    Ok(BetaJet { b, b_up, b2, cov, r, s, r_vec, s_vec, r_scalar, a_inv })
}

/// Outcome of fitting `b_{i|j}` to `k[c(b² a_{ij} − bᵢbⱼ) + bᵢbⱼ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionResidual {
    /// Max-norm of `b_{i|j} − k_fit·T_{ij}`.
    pub residual: f64,
    /// Least-squares `k` against the coupled tensor `T`.
    pub k_fit: f64,
    /// `k` from the explicit formula.
    pub k_formula: f64,
    /// Coefficient of `b² a_{ij} − bᵢbⱼ` in the free two-term fit.
    pub p: f64,
    /// Coefficient of `bᵢbⱼ` in the free two-term fit.
    pub q: f64,
    /// `|p/c − q|`: nonzero when the two coefficients do not share one `k`.
    pub mismatch: f64,
    /// Max-norm of `s_{ij}`.
    pub antisymmetric: f64,
}

impl ConditionResidual {
    /// Fits a jet against the condition with coupling value `c` at its `b²`.
    pub fn fit(jet: &BetaJet, c: f64, k_formula: f64) -> Self {
        let n = jet.b.len();
        let a = jet.a_inv.inverse().unwrap_or_else(|_| Matrix::identity(n));
        let bb = Matrix::outer(&jet.b, &jet.b);
        let t1 = a.combine(jet.b2, &bb, -1.0);
        let t = t1.combine(c, &bb, 1.0);
        let tt = t.frobenius_dot(&t);
        let k_fit = if tt > 0.0 { jet.cov.frobenius_dot(&t) / tt } else { 0.0 };
        let residual = jet.cov.combine(1.0, &t, -k_fit).max_abs();

        // two-term normal equations
        let (g11, g12, g22) = (t1.frobenius_dot(&t1), t1.frobenius_dot(&bb), bb.frobenius_dot(&bb));
        let (h1, h2) = (jet.cov.frobenius_dot(&t1), jet.cov.frobenius_dot(&bb));
        let det = g11 * g22 - g12 * g12;
        let (p, q) = if det.abs() > 1e-300 {
            ((h1 * g22 - h2 * g12) / det, (g11 * h2 - g12 * h1) / det)
        } else {
            (k_fit * c, k_fit)
        };
        ConditionResidual {
            residual,
            k_fit,
            k_formula,
            p,
            q,
            mismatch: (p / c - q).abs(),
            antisymmetric: jet.antisymmetric_norm(),
        }
    }

    /// `|k_fit − k_formula| / (1 + |k_formula|)`.
    pub fn k_disagreement(&self) -> f64 {
        (self.k_fit - self.k_formula).abs() / (1.0 + self.k_formula.abs())
    }
}
