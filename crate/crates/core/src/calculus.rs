//! Numerical kernels: finite-difference partials, adaptive quadrature and
//! monotone scalar root finding.
//!
//! Everything here is a pure function of its inputs. Non-finite intermediate values
//! abort with [`Error::NonFinite`] instead of leaking NaN into callers.

use alloc::vec::Vec;

use crate::error::finite;
use crate::math::{pow, EPS};
use crate::{Error, Result};

/// A real-valued map on `ℝᵈ` with a smooth domain.
pub trait ScalarField {
    /// Dimension `d` of the argument vector.
    fn dim(&self) -> usize;

    /// Value at `v`. Points outside [`ScalarField::in_domain`] are never passed here
    /// by the kernels in this module.
    fn value(&self, v: &[f64]) -> Result<f64>;

    /// Domain predicate. Defaults to "everywhere".
    fn in_domain(&self, _v: &[f64]) -> bool {
        true
    }

    /// Checked evaluation: domain predicate, then value, then finiteness.
    fn eval(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::InvalidArgument("point has the wrong dimension"));
        }
        if !self.in_domain(v) {
            return Err(Error::Domain("point outside field domain"));
        }
        finite(self.value(v)?, "scalar field")
    }
}

/// Closure-backed [`ScalarField`].
pub struct FnField<F, D = fn(&[f64]) -> bool> {
    dim: usize,
    f: F,
    domain: Option<D>,
}

/// Wraps `f` as a field on `ℝᵈ` with no domain restriction.
pub fn field<F>(dim: usize, f: F) -> FnField<F>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    FnField { dim, f, domain: None }
}

impl<F> FnField<F> {
    /// Restricts the field to points where `domain` holds.
    pub fn with_domain<D: Fn(&[f64]) -> bool>(self, domain: D) -> FnField<F, D> {
        FnField { dim: self.dim, f: self.f, domain: Some(domain) }
    }
}

impl<F, D> ScalarField for FnField<F, D>
where
    F: Fn(&[f64]) -> Result<f64>,
    D: Fn(&[f64]) -> bool,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, v: &[f64]) -> Result<f64> {
        (self.f)(v)
    }

    fn in_domain(&self, v: &[f64]) -> bool {
        self.domain.as_ref().map_or(true, |d| d(v))
    }
}

// Weights of the 5-point first-derivative stencil at offsets -2, -1, 1, 2 (divide by 12h).
const D1_OFFSETS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
const D1_WEIGHTS: [f64; 4] = [1.0, -8.0, 8.0, -1.0];

/// Central finite-difference stencils of order 4.
///
/// The step for coordinate `i` is `scale · max(1, |vᵢ|)`, rounded so that `vᵢ ± h`
/// is exactly representable. The default scale is `ε^{1/5}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    /// Relative step scale.
    pub scale: f64,
}

impl Default for Stencil {
    fn default() -> Self {
        Stencil { scale: pow(EPS, 0.2) }
    }
}

impl Stencil {
    /// Step scale `ε^{1/6}`, which balances truncation and roundoff for the
    /// fourth-order second-derivative stencils.
    pub fn for_second_derivatives() -> Self {
        Stencil { scale: pow(EPS, 1.0 / 6.0) }
    }

    /// Stencil with a custom step scale.
    pub fn with_scale(scale: f64) -> Self {
        Stencil { scale }
    }

    fn step(&self, x: f64) -> f64 {
        let h = self.scale * f64::max(1.0, x.abs());
        (x + h) - x
    }

    fn check_index(point: &[f64], index: usize) -> Result<()> {
        if index >= point.len() {
            Err(Error::InvalidArgument("coordinate index out of range"))
        } else {
            Ok(())
        }
    }

    /// `∂f/∂vᵢ` with the 5-point stencil.
    pub fn diff1<F: ScalarField + ?Sized>(&self, f: &F, point: &[f64], index: usize) -> Result<f64> {
        Self::check_index(point, index)?;
        let h = self.step(point[index]);
        self.diff1_with_step(f, point, index, h)
    }

    fn diff1_with_step<F: ScalarField + ?Sized>(
        &self,
        f: &F,
        point: &[f64],
        index: usize,
        h: f64,
    ) -> Result<f64> {
        let mut v = point.to_vec();
        let mut acc = 0.0;
        for (off, w) in D1_OFFSETS.iter().zip(D1_WEIGHTS) {
            v[index] = point[index] + off * h;
            acc += w * f.eval(&v)?;
        }
        finite(acc / (12.0 * h), "first derivative")
    }

    /// One Richardson level on top of [`Stencil::diff1`]: `(16 D(h/2) − D(h)) / 15`.
    pub fn diff1_richardson<F: ScalarField + ?Sized>(
        &self,
        f: &F,
        point: &[f64],
        index: usize,
    ) -> Result<f64> {
        Self::check_index(point, index)?;
        let h = self.step(point[index]);
        let coarse = self.diff1_with_step(f, point, index, h)?;
        let fine = self.diff1_with_step(f, point, index, 0.5 * h)?;
        Ok((16.0 * fine - coarse) / 15.0)
    }

    /// `∂²f/∂vᵢ∂vⱼ`. The mixed case is the tensor product of two first-derivative
    /// stencils, so it is symmetric in `(i, j)` by construction.
    pub fn diff2<F: ScalarField + ?Sized>(&self, f: &F, point: &[f64], i: usize, j: usize) -> Result<f64> {
        Self::check_index(point, i)?;
        Self::check_index(point, j)?;
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let mut v = point.to_vec();
        if i == j {
            let h = self.step(point[i]);
            const W: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
            let mut acc = 0.0;
            for (k, w) in W.iter().enumerate() {
                v[i] = point[i] + (k as f64 - 2.0) * h;
                acc += w * f.eval(&v)?;
            }
            return finite(acc / (12.0 * h * h), "second derivative");
        }
        let hi = self.step(point[i]);
        let hj = self.step(point[j]);
        let mut acc = 0.0;
        for (oi, wi) in D1_OFFSETS.iter().zip(D1_WEIGHTS) {
            v[i] = point[i] + oi * hi;
            for (oj, wj) in D1_OFFSETS.iter().zip(D1_WEIGHTS) {
                v[j] = point[j] + oj * hj;
                acc += wi * wj * f.eval(&v)?;
            }
        }
        finite(acc / (144.0 * hi * hj), "mixed second derivative")
    }

    /// Partial derivative of a vector-valued map, all components at once.
    pub fn diff1_vec<F>(&self, f: F, point: &[f64], index: usize) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        Self::check_index(point, index)?;
        let h = self.step(point[index]);
        let mut v = point.to_vec();
        let mut acc: Vec<f64> = Vec::new();
        for (off, w) in D1_OFFSETS.iter().zip(D1_WEIGHTS) {
            v[index] = point[index] + off * h;
            let val = f(&v)?;
            if acc.is_empty() {
                acc.resize(val.len(), 0.0);
            }
            for (a, x) in acc.iter_mut().zip(&val) {
                *a += w * x;
            }
        }
        acc.iter().map(|a| finite(a / (12.0 * h), "vector derivative")).collect()
    }
}

/// `∂f/∂vᵢ` with the default stencil.
pub fn diff1<F: ScalarField + ?Sized>(f: &F, point: &[f64], index: usize) -> Result<f64> {
    Stencil::default().diff1(f, point, index)
}

/// `∂²f/∂vᵢ∂vⱼ` with the default stencil.
pub fn diff2<F: ScalarField + ?Sized>(f: &F, point: &[f64], i: usize, j: usize) -> Result<f64> {
    Stencil::default().diff2(f, point, i, j)
}

/// Default absolute tolerance for [`Quadrature`].
pub const QUAD_TOL: f64 = 1e-10;
/// Default maximum bisection depth for [`Quadrature`].
pub const QUAD_MAX_DEPTH: u32 = 40;

/// Adaptive Simpson integration of a scalar function over `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
}

impl Quadrature {
    /// Integral over `[a, b]` with the default tolerance and depth.
    pub fn new(a: f64, b: f64) -> Self {
        Quadrature { a, b, tol: QUAD_TOL, max_depth: QUAD_MAX_DEPTH }
    }

    /// Absolute tolerance.
    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Maximum recursion depth.
    pub fn max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    /// Integrates `f`. Requires `a ≤ b`.
    pub fn integrate<F: FnMut(f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let (a, b) = (self.a, self.b);
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument("integration bounds must be finite"));
        }
        if a > b {
            return Err(Error::InvalidArgument("integration bounds must satisfy a <= b"));
        }
        if a == b {
            return Ok(0.0);
        }
        let mut eval = |t: f64| -> Result<f64> { finite(f(t)?, "integrand") };
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (eval(a)?, eval(m)?, eval(b)?);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        simpson_step(&mut eval, Panel { a, b, fa, fm, fb, whole }, self.tol, self.max_depth)
    }

    /// Like [`Quadrature::integrate`] but accepts `a > b`, returning `−∫_b^a`.
    pub fn integrate_oriented<F: FnMut(f64) -> Result<f64>>(&self, f: F) -> Result<f64> {
        if self.a <= self.b {
            self.integrate(f)
        } else {
            let flipped = Quadrature { a: self.b, b: self.a, ..*self };
            flipped.integrate(f).map(|v| -v)
        }
    }
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_step<F: FnMut(f64) -> Result<f64>>(f: &mut F, p: Panel, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (p.a + p.b);
    let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    // Below this the difference is rounding noise and further splitting cannot help.
    let noise = 64.0 * EPS * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= noise {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= p.a || m >= p.b {
        return Err(Error::NoConvergence("adaptive Simpson reached its maximum depth"));
    }
    let l = simpson_step(f, Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left }, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right }, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// `∫_a^b f` by adaptive Simpson with tolerance `tol`.
pub fn quad<F: FnMut(f64) -> Result<f64>>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    Quadrature::new(a, b).tol(tol).integrate(f)
}

/// Default residual tolerance for [`solve_monotone`].
pub const ROOT_TOL: f64 = 1e-12;
const MONOTONE_SAMPLES: usize = 16;
const ROOT_MAX_ITER: usize = 400;

/// Finds `t ∈ [lo, hi]` with `|h(t) − target| ≤ tol` for strictly monotone `h`.
///
/// The bracket is validated first (`h(lo)`, `h(hi)` enclose the target and sampled
/// interior values are strictly monotone). Iteration is regula falsi with a bisection
/// step whenever the bracket fails to halve.
pub fn solve_monotone<H>(mut h: H, target: f64, bracket: (f64, f64), tol: f64) -> Result<f64>
where
    H: FnMut(f64) -> Result<f64>,
{
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument("bracket must satisfy lo < hi"));
    }
    let mut g = |t: f64| -> Result<f64> { Ok(finite(h(t)?, "monotone function")? - target) };
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::NoBracket);
    }
    let increasing = ghi > glo;
    let mut prev = glo;
    for k in 1..=MONOTONE_SAMPLES {
        let t = lo + (hi - lo) * (k as f64) / (MONOTONE_SAMPLES as f64 + 1.0);
        let v = g(t)?;
        if (increasing && v <= prev) || (!increasing && v >= prev) {
            return Err(Error::NotMonotone);
        }
        prev = v;
    }
    if (increasing && ghi <= prev) || (!increasing && ghi >= prev) {
        return Err(Error::NotMonotone);
    }

    let (mut a, mut b, mut ga, mut gb) = (lo, hi, glo, ghi);
    let mut bisect_next = false;
    for _ in 0..ROOT_MAX_ITER {
        let width = b - a;
        let t = if bisect_next {
            0.5 * (a + b)
        } else {
            let s = b - gb * (b - a) / (gb - ga);
            if s > a && s < b {
                s
            } else {
                0.5 * (a + b)
            }
        };
        let gt = g(t)?;
        if gt.abs() <= tol {
            return Ok(t);
        }
        if gt.signum() == ga.signum() {
            a = t;
            ga = gt;
        } else {
            b = t;
            gb = gt;
        }
        bisect_next = (b - a) > 0.5 * width;
        if b - a <= 2.0 * EPS * f64::max(a.abs(), b.abs()) {
            let (t, r) = if ga.abs() <= gb.abs() { (a, ga) } else { (b, gb) };
            return if r.abs() <= tol {
                Ok(t)
            } else {
                Err(Error::NoConvergence("bracket collapsed before reaching tolerance"))
            };
        }
    }
    Err(Error::NoConvergence("monotone solve exceeded its iteration budget"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{exp, sqrt};

    fn quad_poly() -> FnField<impl Fn(&[f64]) -> Result<f64>> {
        field(2, |v: &[f64]| Ok(3.0 * v[0] * v[0] - 2.0 * v[0] * v[1] + 5.0 * v[1] + 7.0))
    }

    #[test]
    fn diff1_square() {
        let f = field(1, |v: &[f64]| Ok(v[0] * v[0]));
        assert!((diff1(&f, &[3.0], 0).unwrap() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn diff1_linear_in_x_of_inner_product() {
        let f = field(4, |v: &[f64]| Ok(v[0] * v[2] + v[1] * v[3]));
        let p = [0.3, -0.7, 1.25, -2.5];
        assert!((diff1(&f, &p, 0).unwrap() - 1.25).abs() < 1e-12);
        assert!((diff1(&f, &p, 1).unwrap() + 2.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_polynomial_derivatives_are_exact() {
        let f = quad_poly();
        let p = [1.5, -2.0];
        assert!((diff1(&f, &p, 0).unwrap() - (6.0 * 1.5 + 4.0)).abs() < 1e-10);
        assert!((diff1(&f, &p, 1).unwrap() - (-3.0 + 5.0)).abs() < 1e-10);
        assert!((diff2(&f, &p, 0, 0).unwrap() - 6.0).abs() < 1e-7);
        assert!((diff2(&f, &p, 0, 1).unwrap() + 2.0).abs() < 1e-7);
    }

    #[test]
    fn diff2_products() {
        let f = field(2, |v: &[f64]| Ok(v[0] * v[1]));
        assert!((diff2(&f, &[0.4, 9.0], 0, 1).unwrap() - 1.0).abs() < 1e-8);
        let g = field(1, |v: &[f64]| Ok(v[0] * v[0]));
        assert!((diff2(&g, &[-4.0], 0, 0).unwrap() - 2.0).abs() < 1e-7);
    }

    #[test]
    fn hessian_of_euclidean_norm_squared() {
        // raw second partial of |y|² is 2 (half of it is the fundamental tensor 1)
        let f = field(2, |v: &[f64]| Ok(v[0] * v[0] + v[1] * v[1]));
        assert!((diff2(&f, &[0.0, 1.0], 1, 1).unwrap() - 2.0).abs() < 1e-7);
        assert!(diff2(&f, &[0.0, 1.0], 0, 1).unwrap().abs() < 1e-7);
    }

    #[test]
    fn richardson_matches_plain_stencil_on_smooth_field() {
        let f = field(2, |v: &[f64]| Ok(exp(v[0]) * (1.0 + v[1] * v[1])));
        let p = [0.2, 0.1];
        let plain = diff1(&f, &p, 0).unwrap();
        let rich = Stencil::default().diff1_richardson(&f, &p, 0).unwrap();
        assert!((plain - rich).abs() < 1e-8);
        assert!((rich - exp(0.2) * 1.01).abs() < 1e-10);
    }

    #[test]
    fn domain_and_finiteness_are_enforced() {
        let f = field(1, |v: &[f64]| Ok(sqrt(v[0]))).with_domain(|v: &[f64]| v[0] > 0.0);
        assert!(matches!(diff1(&f, &[1e-6], 0), Err(Error::Domain(_))));
        let g = field(1, |v: &[f64]| Ok(1.0 / v[0]));
        assert!(matches!(g.eval(&[0.0]), Err(Error::NonFinite(_))));
        assert!(matches!(diff1(&g, &[1.0], 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quad_basics() {
        assert!((quad(|z| Ok(2.0 * z), 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(quad(|_| Ok(1.0), 0.0, 0.0, 1e-12).unwrap(), 0.0);
        // f = 1 + t has f' ≡ 1, so ∫₀^{0.5} f'(1 − z²) dz = 0.5
        assert!((quad(|_| Ok(1.0), 0.0, 0.5, 1e-12).unwrap() - 0.5).abs() < 1e-15);
        let e = quad(|z| Ok(exp(z)), 0.0, 1.0, 1e-10).unwrap();
        assert!((e - (exp(1.0) - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn quad_rejects_reversed_bounds_and_reports_nonconvergence() {
        assert!(matches!(quad(Ok, 1.0, 0.0, 1e-10), Err(Error::InvalidArgument(_))));
        let r = Quadrature::new(1.0, 0.0).integrate_oriented(Ok).unwrap();
        assert!((r + 0.5).abs() < 1e-15);
        let bad = Quadrature::new(0.0, 1.0).tol(1e-12).max_depth(2).integrate(|z| Ok(sqrt(z)));
        assert!(matches!(bad, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn quad_is_additive() {
        let f = |z: f64| Ok(1.0 / (1.0 + z * z));
        let tol = 1e-10;
        let whole = quad(f, 0.0, 2.0, tol).unwrap();
        let split = quad(f, 0.0, 0.7, tol).unwrap() + quad(f, 0.7, 2.0, tol).unwrap();
        assert!((whole - split).abs() <= 2.0 * tol);
        assert!((whole - libm::atan(2.0)).abs() <= tol);
    }

    #[test]
    fn solve_monotone_examples() {
        assert!((solve_monotone(Ok, 0.7, (0.0, 1.0), ROOT_TOL).unwrap() - 0.7).abs() < 1e-12);
        assert!((solve_monotone(|t| Ok(t * t), 4.0, (1.0, 3.0), ROOT_TOL).unwrap() - 2.0).abs() < 1e-12);
        // t^λ with λ = 2: closed-form inverse target^{1/λ}
        let lambda = 2.0;
        let t = solve_monotone(|t| Ok(pow(t, lambda)), 9.0, (0.5, 10.0), ROOT_TOL).unwrap();
        assert!((t - pow(9.0, 1.0 / lambda)).abs() < 1e-12);
        let dec = solve_monotone(|t| Ok(-t * t * t), -0.125, (0.0, 2.0), ROOT_TOL).unwrap();
        assert!((dec - 0.5).abs() < 1e-12);
    }

    #[test]
    fn solve_monotone_errors() {
        assert_eq!(solve_monotone(Ok, 5.0, (0.0, 1.0), ROOT_TOL), Err(Error::NoBracket));
        let wiggle = |t: f64| Ok(libm::sin(8.0 * t) + 0.1 * t);
        assert_eq!(solve_monotone(wiggle, 0.05, (-0.1, 1.0), ROOT_TOL), Err(Error::NotMonotone));
        assert!(matches!(solve_monotone(Ok, 0.5, (1.0, 0.0), ROOT_TOL), Err(Error::InvalidArgument(_))));
    }
}
