use thiserror::Error;

/// Errors raised by the laboratory. Every message names the violated invariant.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("family/weight mismatch: {family} polynomials are orthogonal only for the {expected} weight")]
    MismatchedWeight {
        family: &'static str,
        expected: &'static str,
    },

    #[error("coefficient sequence `{which}` has length {got}, expected {expected} for d={d}, nu={nu}")]
    WrongLength {
        which: &'static str,
        got: usize,
        expected: usize,
        d: usize,
        nu: usize,
    },

    #[error("point r={r} is not in the exterior region r > R={radius}")]
    NotExterior { r: f64, radius: f64 },

    #[error("index k={k} outside the admissible range 1..={max} for {kind} chains with d={d}, nu={nu}")]
    InadmissibleChain {
        k: usize,
        max: usize,
        kind: &'static str,
        d: usize,
        nu: usize,
    },

    #[error("sphere grid resolves degree {resolved}, but degree {requested} was requested")]
    UnderResolved { requested: usize, resolved: usize },

    #[error("CFL condition violated: dt/dr = {ratio} must lie in (0, 1)")]
    Cfl { ratio: f64 },

    #[error(
        "outer radius r_max={r_max} is too small: need r_max >= {needed} to keep the exterior cone uncontaminated"
    )]
    DomainTooSmall { r_max: f64, needed: f64 },

    #[error("exterior cone |x| > {radius} + |t| is contaminated by the outer boundary at t={t}")]
    ContaminatedCone { radius: f64, t: f64 },

    #[error("non-finite value in solution at t={t}")]
    NonFinite { t: f64 },

    #[error("limit did not stabilize: Cauchy difference {difference} exceeds tolerance {tolerance}")]
    NotStabilized { difference: f64, tolerance: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("fit requires at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-positive value {value} at r={r} cannot be fitted in log space")]
    NonPositive { r: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
