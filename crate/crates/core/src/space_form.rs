//! The constant-curvature base metric
//!
//! ```text
//! α_κ(x, y) = sqrt((1 + κ|x|²)|y|² − κ⟨x,y⟩²) / (1 + κ|x|²)
//! ```
//!
//! on the region `1 + κ|x|² > 0`. Its geodesics are straight lines, which is what
//! makes it a valid base for the projectively flat constructions downstream.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::Stencil;
use crate::linalg::Matrix;
use crate::math::{dot, norm_sq, sqrt};
use crate::{Error, Result};

/// Smallest accepted value of `1 + κ|x|²`.
pub const ADMISSIBLE_MARGIN: f64 = 1e-8;

/// Riemannian space form of sectional curvature `kappa` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceForm {
    kappa: f64,
    n: usize,
}

/// A position and a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTangent {
    /// Position `x`.
    pub x: Vec<f64>,
    /// Tangent vector `y`.
    pub y: Vec<f64>,
}

impl PointTangent {
    /// Pairs `x` and `y`.
    pub fn new(x: impl Into<Vec<f64>>, y: impl Into<Vec<f64>>) -> Self {
        PointTangent { x: x.into(), y: y.into() }
    }
}

/// Christoffel symbols `Γᵏ_{ij}` of the Levi-Civita connection, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(n: usize) -> Self {
        Christoffel { n, data: vec![0.0; n * n * n] }
    }

    /// `Γᵏ_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γᵏ_{ij} uⁱ vʲ`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += self.get(k, i, j) * u[i] * v[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// Largest entrywise difference to another set of symbols.
    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        crate::math::max_abs_diff(&self.data, &other.data)
    }
}

impl SpaceForm {
    /// Space form of curvature `kappa` on `ℝⁿ`, `n ≥ 2`.
    pub fn new(kappa: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("space form dimension must be at least 2"));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidArgument("curvature must be finite"));
        }
        Ok(SpaceForm { kappa, n })
    }

    /// Sectional curvature `κ`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n {
            Ok(())
        } else {
            Err(Error::InvalidArgument("vector length does not match the space form dimension"))
        }
    }

    /// `1 + κ|x|²`, checked against [`ADMISSIBLE_MARGIN`].
    pub fn conformal_factor(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let d = 1.0 + self.kappa * norm_sq(x);
        if d >= ADMISSIBLE_MARGIN && d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Domain("1 + kappa |x|^2 is not positive"))
        }
    }

    /// Whether `x` lies in the admissible region.
    pub fn is_admissible(&self, x: &[f64]) -> bool {
        self.conformal_factor(x).is_ok()
    }

    /// `α_κ(x, y)²`.
    pub fn alpha_sq(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.conformal_factor(x)?;
        self.check_len(y)?;
        let xy = dot(x, y);
        Ok((d * norm_sq(y) - self.kappa * xy * xy) / (d * d))
    }

    /// `α_κ(x, y)`; `y` must be nonzero.
    pub fn alpha(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let a2 = self.alpha_sq(x, y)?;
        if !(a2 > 0.0) {
            return Err(Error::Domain("alpha requires a nonzero tangent vector"));
        }
        Ok(sqrt(a2))
    }

    /// `a_{ij}(x) = [(1 + κ|x|²) δ_{ij} − κ xᵢ xⱼ] / (1 + κ|x|²)²`.
    pub fn metric(&self, x: &[f64]) -> Result<Matrix> {
        let d = self.conformal_factor(x)?;
        let k = self.kappa;
        Ok(Matrix::from_fn(self.n, |i, j| {
            let delta = if i == j { d } else { 0.0 };
            (delta - k * x[i] * x[j]) / (d * d)
        }))
    }

    /// `a^{ij}(x) = (1 + κ|x|²)(δ^{ij} + κ xⁱ xʲ)`.
    pub fn inverse_metric(&self, x: &[f64]) -> Result<Matrix> {
        let d = self.conformal_factor(x)?;
        let k = self.kappa;
        Ok(Matrix::from_fn(self.n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            d * (delta + k * x[i] * x[j])
        }))
    }

    /// `∂a_{ij}/∂xᵏ` for every `k`, from the closed form of `a_{ij}`.
    pub fn metric_derivative(&self, x: &[f64]) -> Result<Vec<Matrix>> {
        let d = self.conformal_factor(x)?;
        let k = self.kappa;
        Ok((0..self.n)
            .map(|m| {
                Matrix::from_fn(self.n, |i, j| {
                    let delta_ij = if i == j { 1.0 } else { 0.0 };
                    let delta_im = if i == m { 1.0 } else { 0.0 };
                    let delta_jm = if j == m { 1.0 } else { 0.0 };
                    let numer = d * delta_ij - k * x[i] * x[j];
                    let d_numer = 2.0 * k * x[m] * delta_ij - k * (delta_im * x[j] + x[i] * delta_jm);
                    d_numer / (d * d) - 4.0 * k * x[m] * numer / (d * d * d)
                })
            })
            .collect())
    }

    /// `∂a_{ij}/∂xᵏ` by finite differences of [`SpaceForm::metric`].
    pub fn metric_derivative_fd(&self, x: &[f64]) -> Result<Vec<Matrix>> {
        let stencil = Stencil::default();
        (0..self.n)
            .map(|m| {
                let col = stencil.diff1_vec(|p| Ok(self.metric(p)?.as_slice().to_vec()), x, m)?;
                Matrix::from_row_major(self.n, col)
            })
            .collect()
    }

    fn christoffel_from(&self, x: &[f64], da: &[Matrix]) -> Result<Christoffel> {
        let inv = self.inverse_metric(x)?;
        let n = self.n;
        let mut g = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += inv[(k, l)] * (da[i][(l, j)] + da[j][(l, i)] - da[l][(i, j)]);
                    }
                    g.set(k, i, j, 0.5 * acc);
                    g.set(k, j, i, 0.5 * acc);
                }
            }
        }
        Ok(g)
    }

    /// `Γᵏ_{ij} = ½ a^{kl}(∂ᵢa_{lj} + ∂ⱼa_{li} − ∂ₗa_{ij})` from analytic metric derivatives.
    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        let da = self.metric_derivative(x)?;
        self.christoffel_from(x, &da)
    }

    /// Reference path: the same formula with finite-difference metric derivatives.
    pub fn christoffel_fd(&self, x: &[f64]) -> Result<Christoffel> {
        let da = self.metric_derivative_fd(x)?;
        self.christoffel_from(x, &da)
    }

    /// Riemannian spray `ᵅGⁱ = ½ Γⁱ_{jk} yʲ yᵏ`.
    pub fn spray(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        let g = self.christoffel(x)?;
        Ok(g.contract(y, y).into_iter().map(|v| 0.5 * v).collect())
    }

    /// Projective factor of `α_κ`, i.e. the scalar `P` with `ᵅGⁱ = P yⁱ`.
    pub fn projective_factor(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.conformal_factor(x)?;
        self.check_len(y)?;
        Ok(-self.kappa * dot(x, y) / d)
    }

    /// `y_i = a_{ij} yʲ`.
    pub fn lower(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        Ok(self.metric(x)?.mul_vec(y))
    }

    /// `bⁱ = a^{ij} b_j`.
    pub fn raise(&self, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        Ok(self.inverse_metric(x)?.mul_vec(b))
    }

    /// `‖b‖²_α = a^{ij} bᵢ bⱼ` for a covector `b` at `x`.
    pub fn covector_norm_sq(&self, x: &[f64], b: &[f64]) -> Result<f64> {
        self.check_len(b)?;
        let d = self.conformal_factor(x)?;
        let xb = dot(x, b);
        Ok(d * (norm_sq(b) + self.kappa * xb * xb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{diff2, field};

    fn sf(kappa: f64, n: usize) -> SpaceForm {
        SpaceForm::new(kappa, n).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let e = sf(0.0, 3);
        assert!((e.alpha(&[5.0, -1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap() - 3.0).abs() < 1e-15);
        let s = sf(1.0, 2);
        assert!((s.alpha(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        let a = s.alpha(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        let q = s.metric(&[1.0, 0.0]).unwrap().bilinear(&[1.0, 0.0], &[1.0, 0.0]);
        assert!((q.sqrt() - a).abs() < 1e-15);
    }

    #[test]
    fn alpha_errors() {
        let h = sf(-1.0, 2);
        assert!(matches!(h.alpha(&[1.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(h.alpha(&[0.1, 0.0], &[0.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(h.alpha(&[0.1], &[1.0]), Err(Error::InvalidArgument(_))));
        assert!(SpaceForm::new(1.0, 1).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(sf(0.0, 3).metric(&[0.3, 0.1, 0.2]).unwrap(), Matrix::identity(3));
        assert_eq!(sf(1.0, 3).metric(&[0.0; 3]).unwrap(), Matrix::identity(3));
        let s = sf(1.0, 2);
        let x = [1.0, 0.0];
        let a = s.metric(&x).unwrap();
        // oracle: half the y-Hessian of α²
        let alpha2 = field(2, |y: &[f64]| s.alpha_sq(&x, y));
        for i in 0..2 {
            for j in 0..2 {
                let h = 0.5 * diff2(&alpha2, &[0.3, -0.4], i, j).unwrap();
                assert!((a[(i, j)] - h).abs() < 1e-8, "({i},{j}) {} vs {h}", a[(i, j)]);
            }
        }
        assert!((a[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((a[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(a[(0, 1)], 0.0);
    }

    #[test]
    fn inverse_metric_is_inverse() {
        let s = sf(-0.5, 3);
        let x = [0.3, -0.4, 0.6];
        let p = s.metric(&x).unwrap().mul(&s.inverse_metric(&x).unwrap());
        assert!(p.combine(1.0, &Matrix::identity(3), -1.0).max_abs() < 1e-12);
    }

    #[test]
    fn christoffel_flat_and_origin() {
        let e = sf(0.0, 3);
        assert_eq!(e.christoffel(&[0.4, 0.2, -1.0]).unwrap().max_abs_diff(&Christoffel::zeros(3)), 0.0);
        for kappa in [-0.5, 1.0, 2.0] {
            let s = sf(kappa, 3);
            let x = [0.0; 3];
            let analytic = s.christoffel(&x).unwrap();
            let fd = s.christoffel_fd(&x).unwrap();
            assert!(analytic.max_abs_diff(&fd) < 1e-6);
            assert!(analytic.max_abs_diff(&Christoffel::zeros(3)) < 1e-15);
            assert_eq!(s.spray(&x, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn christoffel_matches_closed_form_of_beltrami_model() {
        // Γᵏ_{ij} = −κ(xᵢδᵏⱼ + xⱼδᵏᵢ)/(1 + κ|x|²)
        let s = sf(0.7, 3);
        let x = [0.3, -0.2, 0.5];
        let d = 1.0 + 0.7 * norm_sq(&x);
        let g = s.christoffel(&x).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let dk = |a: usize| if a == k { 1.0 } else { 0.0 };
                    let want = -0.7 * (x[i] * dk(j) + x[j] * dk(i)) / d;
                    assert!((g.get(k, i, j) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn metric_compatibility() {
        let s = sf(1.0, 3);
        let x = [0.2, -0.3, 0.4];
        let a = s.metric(&x).unwrap();
        let g = s.christoffel(&x).unwrap();
        let da = s.metric_derivative_fd(&x).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let rhs: f64 = (0..3).map(|l| g.get(l, k, i) * a[(l, j)] + g.get(l, k, j) * a[(i, l)]).sum();
                    assert!((da[k][(i, j)] - rhs).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn spray_is_collinear_with_y() {
        let s = sf(1.0, 2);
        let (x, y) = ([0.5, 0.0], [0.0, 1.0]);
        let g = s.spray(&x, &y).unwrap();
        let cross = g[0] * y[1] - g[1] * y[0];
        assert!(cross.abs() <= 1e-8 * (1.0 + g[1].abs()));
        let p = s.projective_factor(&x, &y).unwrap();
        assert!((g[1] - p * y[1]).abs() < 1e-15);
    }

    #[test]
    fn covector_norm_examples() {
        let e = sf(0.0, 2);
        assert_eq!(e.covector_norm_sq(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(sf(1.0, 2).covector_norm_sq(&[0.3, 0.2], &[0.0, 0.0]).unwrap(), 0.0);
        assert!((sf(1.0, 2).covector_norm_sq(&[1.0, 0.0], &[1.0, 0.0]).unwrap() - 4.0).abs() < 1e-15);
        let s = sf(-0.5, 3);
        let x = [0.2, 0.5, -0.1];
        let b = [1.0, -2.0, 0.5];
        let via_raise = dot(&s.raise(&x, &b).unwrap(), &b);
        assert!((s.covector_norm_sq(&x, &b).unwrap() - via_raise).abs() < 1e-14);
    }
}
