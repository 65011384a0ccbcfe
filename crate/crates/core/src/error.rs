use core::fmt;

/// Errors produced by the core numerics.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A model or physical parameter violates its domain.
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// Amplitudes are not normalized to within tolerance.
    NotNormalized { norm: f64 },
    /// A state contained NaN or infinite components.
    NonFinite { z: f64 },
    /// Propagation drifted away from unit norm.
    NormDrift { drift: f64, tolerance: f64 },
    /// An operation received an empty input where data was required.
    Empty(&'static str),
    /// Monodromy requested for a nonlinear model.
    NonlinearMonodromy { chi: f64 },
    /// Newton iteration failed to reach the residual tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// The linearized system was rank deficient.
    SingularJacobian { min_pivot: f64 },
    /// Continuation stopped before covering the requested range.
    BranchTruncated { s_over_w: f64, step: f64 },
    /// The supplied branches do not cover the triangle region.
    IncompleteBranches(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                reason,
            } => write!(f, "invalid parameter {name} = {value}: {reason}"),
            Error::NotNormalized { norm } => {
                write!(f, "amplitudes not normalized: |c1|^2 + |c2|^2 = {norm}")
            }
            Error::NonFinite { z } => write!(f, "non-finite amplitudes at z = {z}"),
            Error::NormDrift { drift, tolerance } => {
                write!(f, "norm drift {drift:e} exceeds tolerance {tolerance:e}")
            }
            Error::Empty(what) => write!(f, "empty {what}"),
            Error::NonlinearMonodromy { chi } => write!(
                f,
                "monodromy matrix requires a linear model, got chi = {chi}"
            ),
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::SingularJacobian { min_pivot } => write!(
                f,
                "singular Jacobian (pivot {min_pivot:e}); use arclength continuation near folds"
            ),
            Error::BranchTruncated { s_over_w, step } => write!(
                f,
                "continuation stalled at S/w = {s_over_w} with step {step:e}"
            ),
            Error::IncompleteBranches(why) => write!(f, "incomplete branches: {why}"),
        }
    }
}

impl core::error::Error for Error {}
