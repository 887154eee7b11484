use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infinite intensity: truncation level {delta} on an infinite-activity measure")]
    InfiniteIntensity { delta: f64 },

    #[error("measure is not of finite variation (small-jump partial sums {partial_sums:?})")]
    NotFiniteVariation { partial_sums: Vec<f64> },

    #[error("martingale correction impossible: {0}")]
    MartingaleCorrection(String),

    #[error("domain exit: f evaluated at x = {x} outside its domain")]
    DomainExit { x: f64 },

    #[error("domain violation: mollifier ball around ({t}, {x}) with radius {epsilon} leaves the domain")]
    DomainViolation { t: f64, x: f64, epsilon: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e}, tolerance {tol:e})")]
    Quadrature { a: f64, b: f64, estimate: f64, tol: f64 },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("spot {spot} outside grid range [{lo}, {hi}]")]
    SpotOutOfRange { spot: f64, lo: f64, hi: f64 },

    #[error("unstable time step: amplification factor {factor} > 1; increase the number of time steps")]
    Stability { factor: f64 },

    #[error("generator cutoff too small: omitted tail {omitted:e} exceeds tolerance {tol:e}")]
    Cutoff { omitted: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
