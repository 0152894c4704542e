use core::fmt;

/// Reasons a numerical evaluation can refuse to produce a value.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The point lies outside the region where the quantity is defined.
    #[error("domain violation: {0}")]
    Domain(&'static str),
    /// An intermediate value was NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// A caller-supplied argument is malformed (wrong length, bad index, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    /// An iterative kernel gave up.
    #[error("no convergence: {0}")]
    NoConvergence(&'static str),
    /// `h(lo)` and `h(hi)` do not enclose the target.
    #[error("target is not bracketed")]
    NoBracket,
    /// Sampling found the function not strictly monotone on the bracket.
    #[error("function is not strictly monotone on the bracket")]
    NotMonotone,
    /// A strong-convexity condition on `φ` (or positive definiteness of `g_{ij}`) fails.
    #[error("convexity violation: {0}")]
    Convexity(ConvexityViolation),
    /// A matrix that must be invertible is not.
    #[error("singular matrix")]
    Singular,
    /// The requested route does not apply to this input.
    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
}

/// Which strong-convexity condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexityViolation {
    /// `φ − sφ₂ ≤ 0`.
    First,
    /// `φ − sφ₂ + (b² − s²)φ₂₂ ≤ 0`.
    Second,
    /// `φ` could not be evaluated (e.g. `f` is undefined at `t`).
    Domain,
    /// The fundamental tensor is not positive definite.
    FundamentalTensor,
}

impl fmt::Display for ConvexityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvexityViolation::First => "phi - s*phi2 <= 0",
            ConvexityViolation::Second => "phi - s*phi2 + (b^2 - s^2)*phi22 <= 0",
            ConvexityViolation::Domain => "phi undefined",
            ConvexityViolation::FundamentalTensor => "fundamental tensor not positive definite",
        })
    }
}

/// Crate result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Rejects NaN and infinities with a tagged error.
pub(crate) fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}
