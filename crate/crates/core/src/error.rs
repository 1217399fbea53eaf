use thiserror::Error;

/// Failures surfaced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("point or radius outside the domain: {0}")]
    Domain(&'static str),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("operator is singular on the working subspace (pivot {pivot:e})")]
    Singular { pivot: f64 },

    #[error("Sherman-Morrison denominator {0:e} is numerically zero")]
    DegenerateDenominator(f64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),

    #[error("integrator failed: {0}")]
    Integrator(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, name: &'static str, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason })
    }
}
