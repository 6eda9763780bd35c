//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong when constructing distributions, building
/// polynomial systems or evaluating expectations and series.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A distribution name outside the built-in catalogue.
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),

    /// A parameter violating its family constraint.
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: String, constraint: String },

    /// Operation defined only for discrete (Ord) distributions.
    #[error("`{0}` is only defined for discrete distributions")]
    DiscreteOnly(&'static str),

    /// Operation defined only for continuous (Pearson) distributions.
    #[error("`{0}` is only defined for continuous distributions")]
    ContinuousOnly(&'static str),

    /// A polynomial moment of degree beyond the distribution's guarantee.
    #[error("moment of order {degree} does not exist (only {available} finite moments)")]
    MomentDoesNotExist { degree: u32, available: u32 },

    /// An operation of order `n` requires `2n` (or `2n-1`) finite moments.
    #[error("insufficient moments: order {order} needs {needed} finite moments, only {available} available")]
    InsufficientMoments {
        order: u32,
        needed: u32,
        available: u32,
    },

    /// A derivative/difference order beyond what the function spec supplies.
    #[error(
        "derivative/difference order {requested} exceeds the spec's trusted order {max_order}"
    )]
    OrderExceeded { requested: u32, max_order: u32 },

    /// The expectation engine did not reach its tolerance.
    #[error("expectation did not converge: {0}")]
    Nonconvergent(String),

    /// The absolute-moment hypothesis of the order-k identity failed.
    #[error("identity hypothesis failed at order {k}: E[q^[k] |D^k g|] does not converge")]
    NonconvergentHypothesis { k: u32 },

    /// Tail summation/quadrature of the inversion formula did not settle.
    #[error("inversion tail did not converge")]
    NonconvergentTail,

    /// Weight is zero at a point where a Rodrigues quotient is requested.
    #[error("weight vanishes at x = {x}; Rodrigues quotient undefined")]
    ZeroWeightPoint { x: f64 },

    /// Finite-difference step shrank below resolution without stabilizing.
    #[error("finite-difference step underflow before the derivative estimate stabilized")]
    StepUnderflow,

    /// An estimator index outside its admissible range.
    #[error("invalid index: {0}")]
    InvalidIndex(String),

    /// Argument must be strictly positive.
    #[error("argument must be positive, got {x}")]
    NonpositiveArgument { x: f64 },

    /// A spec string that does not match its grammar.
    #[error("parse error: {0}")]
    Parse(String),

    /// A custom distribution that fails the defining Pearson/Ord relation.
    #[error("distribution validation failed: {0}")]
    ValidationFailed(String),

    /// The distribution carries no seeded sampler (custom distributions).
    #[error("no sampler available for distribution `{0}`")]
    SamplerUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
