//! Projectively flat general (α,β)-metrics on constant-curvature space forms.
//!
//! A general (α,β)-metric has the form `F = α·φ(b², β/α)` where `α` is Riemannian,
//! `β` is a 1-form and `b = ‖β‖_α`. This crate builds the family in which `α` is the
//! space form `α_κ`, `φ` solves
//!
//! ```text
//! [c b² − (c−1) s²] φ₂₂ = 2 b² (φ₁ − s φ₁₂)
//! ```
//!
//! and `β` is the deformed conformal form whose covariant derivative is
//! `b_{i|j} = k c (b² a_{ij} − b_i b_j) + k b_i b_j`. Every ingredient can be checked
//! numerically: the PDE residual, the covariant condition on `β`, three independent
//! routes to the spray coefficients, and straightness of integrated geodesics.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature to get
//! `std::error::Error` on [`Error`] through the usual re-export.

#![no_std]
#![deny(rust_2018_idioms)]
#![warn(missing_docs)]
// `!(x > 0.0)` is deliberate throughout: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod calculus;
mod error;
pub use error::ConvexityViolation;
pub mod geodesic;
pub mod linalg;
pub mod math;
pub mod one_form;
pub mod phi_family;
pub mod space_form;
pub mod spray;

pub use error::{Error, Result};
pub use geodesic::{GeodesicPath, Integrator, PathSample, PathStatus};
pub use one_form::{BetaField, BetaJet, ConditionResidual, FnOneForm, OneForm, OneFormSpec};
pub use phi_family::{Builtin, CFunction, Convexity, FgPair, Jet2, PhiFamily, PhiJet, Polynomial, Profile, SmoothFn};
pub use space_form::{PointTangent, SpaceForm};
pub use spray::{FEval, MetricBundle, ScalarPack, SprayComparison, SprayResult, SprayRoute};
