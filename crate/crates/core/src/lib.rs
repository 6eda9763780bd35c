//! Orthogonal polynomials, covariance identities, and variance bounds for
//! the Pearson (continuous) and Ord (discrete) distribution families.
//!
//! A family member is pinned by a quadratic q and its mean μ through the
//! defining relation ∫_r^x (μ−t) f(t) dt = q(x) f(x) (or the analogous
//! partial sum for integer supports). From that single quadratic the crate
//! builds the associated orthogonal polynomials by recurrence
//! ([`rodrigues`]), evaluates order-k covariance identities and Fourier
//! coefficients two independent ways ([`stein`]), and assembles lower
//! variance bounds, Poincaré-type comparisons and Parseval
//! variance/covariance series ([`bounds`]), plus two worked UMVUE
//! applications ([`estimators`]). Everything is cross-checked against
//! brute-force oracles in the test suites.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod pearson;
pub mod polynomial;
mod quad;
pub mod rng;
pub mod rodrigues;
pub mod special;
pub mod stein;

pub use bounds::{
    parseval_covariance, parseval_variance, poincare_comparison, variance_lower_bound,
    Applicability, BoundOptions, BoundReport, PoincareReport, SeriesOptions, SeriesReport,
    TermRecord, VarianceOracle,
};
pub use error::{Error, Result};
pub use pearson::{
    make_builtin, make_custom, parse_distribution, CustomDistribution, MomentCeiling,
    PearsonDistribution, Quadratic, Support,
};
pub use polynomial::{falling_factorial, rising_factorial, Poly};
pub use rodrigues::{build_system, inversion_residual, rodrigues_direct, RodriguesSystem};
pub use stein::{
    expect, fourier_coefficient, monte_carlo_oracle, partial_expect, stein_numerator,
    stein_projection, ExpectOptions, FourierCoefficient, FunctionSpec, MaxOrder,
};
