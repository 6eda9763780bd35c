//! The expectation engine and the order-k covariance identity.
//!
//! The identity pairs two independently computable numbers,
//!
//! ```text
//! E[P_k(X) g(X)]  =  E[q^{[k]}(X) Δ^k g(X)]   (discrete)
//! E[P_k(X) g(X)]  =  E[q^k(X) g^(k)(X)]       (continuous)
//! ```
//!
//! [`stein_projection`] computes the left side from the constructed
//! polynomial, [`stein_numerator`] the right side from the quadratic and
//! the function's difference/derivative stack. Everything rests on
//! [`expect`], which sums mass-first with monitored tail bounds or runs
//! adaptive quadrature with rational tail maps.

use crate::error::{Error, Result};
use crate::pearson::{q_factor, MomentCeiling, PearsonDistribution};
use crate::polynomial::{binomial, Poly};
use crate::quad;
use crate::rodrigues::RodriguesSystem;
use std::sync::Arc;

// ============================================================================
// Expectation engine
// ============================================================================

/// Tolerances and budgets for [`expect`].
#[derive(Debug, Clone)]
pub struct ExpectOptions {
    /// Absolute tail tolerance for discrete summation.
    pub abs_tol: f64,
    /// Relative tolerance for continuous quadrature.
    pub rel_tol: f64,
    /// Iteration cap for discrete summation.
    pub max_terms: u64,
    /// Panel cap for adaptive quadrature.
    pub max_panels: u32,
}

impl Default for ExpectOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_terms: 10_000_000,
            max_panels: 100_000,
        }
    }
}

/// E[h(X)] for an arbitrary evaluator h. Integrability is established by
/// convergence monitoring, not assumed.
pub fn expect(
    d: &PearsonDistribution,
    h: &dyn Fn(f64) -> f64,
    opts: &ExpectOptions,
) -> Result<f64> {
    if d.is_discrete() {
        expect_discrete(d, h, opts)
    } else {
        // where the weight has underflowed to zero the contribution is
        // zero; evaluating h there could overflow into inf * 0 = NaN
        let integrand = |x: f64| {
            let w = d.weight(x);
            if w == 0.0 {
                0.0
            } else {
                h(x) * w
            }
        };
        quad::integrate(
            &integrand,
            d.support().lower(),
            d.support().upper(),
            d.mean(),
            d.std_dev().max(1e-3),
            opts.rel_tol,
            opts.max_panels,
        )
    }
}

/// Walks one side of the summation, maintaining the geometric tail bound.
struct SideWalker {
    prev_abs: Option<f64>,
    decreasing_run: u32,
    last_ratio: f64,
}

impl SideWalker {
    fn new() -> Self {
        Self {
            prev_abs: None,
            decreasing_run: 0,
            last_ratio: 1.0,
        }
    }

    /// Feed the next |term|; returns the current tail bound if one is
    /// trustworthy.
    fn feed(&mut self, t_abs: f64) -> Option<f64> {
        if let Some(prev) = self.prev_abs {
            if t_abs == 0.0 {
                self.decreasing_run += 1;
                self.last_ratio = 0.0;
            } else if prev > 0.0 && t_abs <= prev {
                self.decreasing_run += 1;
                self.last_ratio = t_abs / prev;
            } else {
                self.decreasing_run = 0;
                self.last_ratio = 1.0;
            }
        }
        self.prev_abs = Some(t_abs);
        if self.decreasing_run >= 25 {
            // geometric extrapolation of the last ratio, conservatively
            // capped below 1
            let r = self.last_ratio.min(0.999);
            Some(t_abs * r / (1.0 - r))
        } else {
            None
        }
    }
}

/// E[h(X) 1{X ≤ upto}]: the cutoff is handled as a summation bound or an
/// integration endpoint, never as a discontinuous integrand.
pub fn partial_expect(
    d: &PearsonDistribution,
    h: &dyn Fn(f64) -> f64,
    upto: f64,
    opts: &ExpectOptions,
) -> Result<f64> {
    let support = d.support();
    if upto < support.lower() {
        return Ok(0.0);
    }
    if d.is_discrete() {
        expect_discrete_range(
            d,
            h,
            support.lower(),
            upto.floor().min(support.upper()),
            opts,
        )
    } else {
        let integrand = |x: f64| {
            let w = d.weight(x);
            if w == 0.0 {
                0.0
            } else {
                h(x) * w
            }
        };
        quad::integrate(
            &integrand,
            support.lower(),
            upto.min(support.upper()),
            d.mean(),
            d.std_dev().max(1e-3),
            opts.rel_tol,
            opts.max_panels,
        )
    }
}

fn expect_discrete(
    d: &PearsonDistribution,
    h: &dyn Fn(f64) -> f64,
    opts: &ExpectOptions,
) -> Result<f64> {
    expect_discrete_range(d, h, d.support().lower(), d.support().upper(), opts)
}

fn expect_discrete_range(
    d: &PearsonDistribution,
    h: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    opts: &ExpectOptions,
) -> Result<f64> {
    let start = d.mean().round().clamp(lo, hi);

    let mut sum = 0.0;
    let mut comp = 0.0; // Kahan compensation
    let mut add = |v: f64, sum: &mut f64| {
        let y = v - comp;
        let t = *sum + y;
        comp = (t - *sum) - y;
        *sum = t;
    };

    let mut terms_used: u64 = 0;

    // rightward from the mass center, then leftward
    for direction in [1.0, -1.0] {
        let mut x = if direction > 0.0 { start } else { start - 1.0 };
        let mut walker = SideWalker::new();
        loop {
            if x < lo || x > hi {
                break;
            }
            terms_used += 1;
            if terms_used > opts.max_terms {
                return Err(Error::Nonconvergent(format!(
                    "discrete sum exceeded {} terms without meeting the tail bound",
                    opts.max_terms
                )));
            }
            let term = h(x) * d.weight(x);
            if !term.is_finite() {
                return Err(Error::Nonconvergent(format!(
                    "summand is non-finite at x = {x}"
                )));
            }
            add(term, &mut sum);
            if let Some(bound) = walker.feed(term.abs()) {
                if bound < opts.abs_tol {
                    break;
                }
            }
            x += direction;
        }
    }
    Ok(sum)
}

// ============================================================================
// Function specs
// ============================================================================

/// Trusted derivative/difference order of an analytic spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxOrder {
    Unbounded,
    UpTo(u32),
}

impl MaxOrder {
    fn admits(&self, k: u32) -> bool {
        match self {
            MaxOrder::Unbounded => true,
            MaxOrder::UpTo(m) => k <= *m,
        }
    }

    fn as_u32_or_max(&self) -> u32 {
        match self {
            MaxOrder::Unbounded => u32::MAX,
            MaxOrder::UpTo(m) => *m,
        }
    }
}

type StackFn = Arc<dyn Fn(u32, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Inner {
    /// Exact calculus through the polynomial module.
    Polynomial(Poly<f64>),
    /// Caller-supplied g with its derivative stack g^(k) and difference
    /// stack Δ^k g. Index 0 of either stack is g itself.
    Analytic {
        name: String,
        derivative: StackFn,
        difference: StackFn,
        max_order: MaxOrder,
    },
}

/// A target function g together with the exact means to evaluate its
/// derivatives (continuous targets) and forward differences (discrete
/// targets). The library never differentiates numerically: an analytic
/// spec ships its own stack, and polynomials use exact calculus.
#[derive(Clone)]
pub struct FunctionSpec {
    inner: Inner,
}

impl std::fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FunctionSpec({})", self.describe())
    }
}

impl FunctionSpec {
    pub fn polynomial(p: Poly<f64>) -> Self {
        Self {
            inner: Inner::Polynomial(p),
        }
    }

    /// Fully custom analytic spec. `derivative(k, x)` must return g^(k)(x)
    /// and `difference(k, x)` must return Δ^k g(x); both with k = 0 meaning
    /// g itself.
    pub fn analytic(
        name: impl Into<String>,
        derivative: impl Fn(u32, f64) -> f64 + Send + Sync + 'static,
        difference: impl Fn(u32, f64) -> f64 + Send + Sync + 'static,
        max_order: MaxOrder,
    ) -> Self {
        Self {
            inner: Inner::Analytic {
                name: name.into(),
                derivative: Arc::new(derivative),
                difference: Arc::new(difference),
                max_order,
            },
        }
    }

    /// g(x) = e^{tx}: derivatives t^k e^{tx}, differences (e^t − 1)^k e^{tx}.
    pub fn exp_t(t: f64) -> Self {
        let diff_base = t.exp() - 1.0;
        Self::analytic(
            format!("exp:t={t}"),
            move |k, x| t.powi(k as i32) * (t * x).exp(),
            move |k, x| diff_base.powi(k as i32) * (t * x).exp(),
            MaxOrder::Unbounded,
        )
    }

    /// g(x) = t^x (t > 0): derivatives (ln t)^k t^x, differences
    /// (t − 1)^k t^x.
    pub fn geom_pow(t: f64) -> Result<Self> {
        if t <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "t".into(),
                constraint: "geom_pow requires t > 0".into(),
            });
        }
        let lt = t.ln();
        Ok(Self::analytic(
            format!("geom_pow:t={t}"),
            move |k, x| lt.powi(k as i32) * t.powf(x),
            move |k, x| (t - 1.0).powi(k as i32) * t.powf(x),
            MaxOrder::Unbounded,
        ))
    }

    /// g(x) = ln(x + a): derivatives (−1)^{k−1} (k−1)!/(x+a)^k; differences
    /// by the exact alternating sum over lattice values.
    pub fn log_shift(a: f64) -> Self {
        let g = move |x: f64| (x + a).ln();
        Self::analytic(
            format!("log_shift:a={a}"),
            move |k, x| {
                if k == 0 {
                    g(x)
                } else {
                    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                    sign * crate::polynomial::factorial(k - 1) / (x + a).powi(k as i32)
                }
            },
            move |k, x| lattice_difference(&g, k, x),
            MaxOrder::Unbounded,
        )
    }

    pub fn describe(&self) -> String {
        match &self.inner {
            Inner::Polynomial(p) => format!("poly[{p}]"),
            Inner::Analytic { name, .. } => name.clone(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.inner, Inner::Polynomial(_))
    }

    /// Degree when the spec is a polynomial.
    pub fn poly_degree(&self) -> Option<usize> {
        match &self.inner {
            Inner::Polynomial(p) => Some(p.degree().unwrap_or(0)),
            Inner::Analytic { .. } => None,
        }
    }

    pub fn max_order(&self) -> MaxOrder {
        match &self.inner {
            Inner::Polynomial(_) => MaxOrder::Unbounded,
            Inner::Analytic { max_order, .. } => *max_order,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.inner {
            Inner::Polynomial(p) => p.eval(&x),
            Inner::Analytic { derivative, .. } => derivative(0, x),
        }
    }

    /// An evaluator of g^(k) (continuous) or Δ^k g (discrete), chosen by
    /// the distribution kind; precomputes the polynomial calculus once.
    pub(crate) fn order_k_evaluator(
        &self,
        discrete: bool,
        k: u32,
    ) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
        if !self.max_order().admits(k) {
            return Err(Error::OrderExceeded {
                requested: k,
                max_order: self.max_order().as_u32_or_max(),
            });
        }
        match &self.inner {
            Inner::Polynomial(p) => {
                let dk = if discrete {
                    p.forward_difference(k)
                } else {
                    p.derivative(k)
                };
                Ok(Box::new(move |x| dk.eval(&x)))
            }
            Inner::Analytic {
                derivative,
                difference,
                ..
            } => {
                if discrete {
                    let f = difference.clone();
                    Ok(Box::new(move |x| f(k, x)))
                } else {
                    let f = derivative.clone();
                    Ok(Box::new(move |x| f(k, x)))
                }
            }
        }
    }
}

/// Δ^k g(x) = Σ_j (−1)^{k−j} C(k, j) g(x + j): exact lattice evaluation,
/// not a numerical approximation.
pub fn lattice_difference(g: &dyn Fn(f64) -> f64, k: u32, x: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * binomial(k, j) * g(x + j as f64);
    }
    acc
}

// ============================================================================
// Identity operations
// ============================================================================

fn require_moments(d: &PearsonDistribution, order: u32, needed: u32) -> Result<()> {
    if !d.has_finite_moments(needed) {
        return Err(Error::InsufficientMoments {
            order,
            needed,
            available: match d.max_finite_moment() {
                MomentCeiling::Infinite => u32::MAX,
                MomentCeiling::Finite(m) => m,
            },
        });
    }
    Ok(())
}

/// Right-hand side of the order-k identity:
/// E[q^{[k]}(X) Δ^k g(X)] (discrete) or E[q^k(X) g^(k)(X)] (continuous).
///
/// The absolute-moment hypothesis E[q^{[k]} |Δ^k g|] < ∞ is checked first
/// by running the engine on the absolute integrand; failure aborts with
/// [`Error::NonconvergentHypothesis`] instead of returning a half-converged
/// identity.
pub fn stein_numerator(
    d: &PearsonDistribution,
    g: &FunctionSpec,
    k: u32,
    opts: &ExpectOptions,
) -> Result<f64> {
    require_moments(d, k, 2 * k)?;
    let qk = q_factor(d, k);
    let dg = g.order_k_evaluator(d.is_discrete(), k)?;
    expect(d, &|x| (qk.eval(x) * dg(x)).abs(), opts)
        .map_err(|_| Error::NonconvergentHypothesis { k })?;
    expect(d, &|x| qk.eval(x) * dg(x), opts)
}

/// Left-hand side of the order-k identity: E[P_k(X) g(X)], the direct
/// projection onto the constructed polynomial.
pub fn stein_projection(
    d: &PearsonDistribution,
    sys: &RodriguesSystem,
    g: &FunctionSpec,
    k: u32,
    opts: &ExpectOptions,
) -> Result<f64> {
    require_moments(d, k, 2 * k)?;
    let pk = sys.poly(k)?;
    expect(d, &|x| (pk.eval(&x) * g.eval(x)).abs(), opts)
        .map_err(|_| Error::NonconvergentHypothesis { k })?;
    expect(d, &|x| pk.eval(&x) * g.eval(x), opts)
}

/// Fourier coefficient of g against the normalized polynomial
/// φ_k = P_k / √E[P_k²].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FourierCoefficient {
    pub k: u32,
    /// E[q^{[k]} Δ^k g] (discrete) or E[q^k g^(k)] (continuous).
    pub numerator: f64,
    /// E[P_k²] from the closed norm formula.
    pub sq_norm: f64,
    /// numerator / √sq_norm, or zero when the norm vanishes.
    pub value: f64,
}

pub fn fourier_coefficient(
    d: &PearsonDistribution,
    sys: &RodriguesSystem,
    g: &FunctionSpec,
    k: u32,
    opts: &ExpectOptions,
) -> Result<FourierCoefficient> {
    let sq_norm = sys.sq_norm(k)?;
    if sq_norm == 0.0 {
        // vanishing-norm terms are zero by convention
        return Ok(FourierCoefficient {
            k,
            numerator: 0.0,
            sq_norm,
            value: 0.0,
        });
    }
    let numerator = stein_numerator(d, g, k, opts)?;
    Ok(FourierCoefficient {
        k,
        numerator,
        sq_norm,
        value: numerator / sq_norm.sqrt(),
    })
}

/// Sample mean and standard error of h(X) over the seeded sampler;
/// deterministic for a fixed seed.
pub fn monte_carlo_oracle(
    d: &PearsonDistribution,
    h: &dyn Fn(f64) -> f64,
    seed: u64,
    n_samples: usize,
) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::InvalidIndex("n_samples must be at least 2".into()));
    }
    let xs = d.sample(seed, n_samples)?;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let v = h(x);
        let delta = v - mean;
        mean += delta / (i as f64 + 1.0);
        m2 += delta * (v - mean);
    }
    let var = m2 / (n_samples as f64 - 1.0);
    Ok((mean, (var / n_samples as f64).sqrt()))
}
