//! Consumers of the identity: finite-order lower variance bounds, the
//! alternating Poincaré-type comparison, and the infinite Parseval
//! variance/covariance series with truncation control.
//!
//! The order-n bound is the finite Bessel sum
//!
//! ```text
//! Var g(X) ≥ Σ_{k=1}^n E²[q^{[k]} Δ^k g] / (k! E[q^{[k]}] Π_{j=k-1}^{2k-2}(1−jδ))
//! ```
//!
//! with equality exactly when g is a polynomial of degree ≤ n. Terms with
//! vanishing norm contribute zero and are flagged rather than dropped, so
//! term tables stay auditable. When the weight has a finite moment
//! generating function near zero (or finite support) the polynomials are
//! dense in the weighted L² space and the same sum taken to infinity is an
//! identity; otherwise series reports are labeled as Bessel lower bounds
//! only.

use crate::error::{Error, Result};
use crate::pearson::{q_factor, q_moment, PearsonDistribution};
use crate::polynomial::factorial;
use crate::rodrigues::lead_coefficient;
use crate::stein::{expect, stein_numerator, ExpectOptions, FunctionSpec};
use serde::Serialize;

// ============================================================================
// Options and shared records
// ============================================================================

/// Options for bound reports.
#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub expect: ExpectOptions,
    /// Monte Carlo fallback for the variance oracle when the exact
    /// expectation does not converge: (seed, samples).
    pub mc_fallback: Option<(u64, usize)>,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            expect: ExpectOptions::default(),
            mc_fallback: Some((0x5EED_CAFE, 400_000)),
        }
    }
}

/// Options for the Parseval series.
#[derive(Debug, Clone)]
pub struct SeriesOptions {
    pub expect: ExpectOptions,
    /// Relative stopping tolerance: three consecutive small terms stop the
    /// series.
    pub rel_tol: f64,
    /// Hard cap on the term index.
    pub max_k: u32,
    /// When true, hitting `max_k` yields a truncated (converged = false)
    /// report instead of an error.
    pub allow_truncated: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            expect: ExpectOptions::default(),
            rel_tol: 1e-10,
            max_k: 200,
            allow_truncated: false,
        }
    }
}

/// One term of a bound or series report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermRecord {
    pub k: u32,
    /// E[q^{[k]} Δ^k g] (for covariance series: the product of the two
    /// one-sided numerators).
    pub numerator: f64,
    /// k! E[q^{[k]}] Π(1 − jδ).
    pub sq_norm: f64,
    /// numerator² / sq_norm (signed numerator product / sq_norm for
    /// covariance series); zero when the norm vanishes.
    pub term: f64,
    pub zero_norm: bool,
}

/// Independent variance estimate attached to a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarianceOracle {
    /// E[g²] − E[g]² through the expectation engine.
    Exact { value: f64 },
    /// Seeded Monte Carlo estimate with its standard error.
    MonteCarlo {
        value: f64,
        stderr: f64,
        seed: u64,
        samples: u64,
    },
}

impl VarianceOracle {
    pub fn value(&self) -> f64 {
        match self {
            VarianceOracle::Exact { value } => *value,
            VarianceOracle::MonteCarlo { value, .. } => *value,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            VarianceOracle::Exact { .. } => 0.0,
            VarianceOracle::MonteCarlo { stderr, .. } => *stderr,
        }
    }
}

// ============================================================================
// Denominators (norms without polynomials)
// ============================================================================

/// k! E[q^{[k]}] Π_{j=k-1}^{2k-2}(1 − jδ) — the squared norm of P_k,
/// computed from moments alone. Exactly zero once k reaches the support
/// size of a finite discrete member.
fn norm_denominator(d: &PearsonDistribution, k: u32) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    if matches!(d.support().point_count(), Some(count) if k as u64 >= count) {
        return Ok(0.0);
    }
    Ok(factorial(k) * q_moment(d, k)? * lead_coefficient(d.quadratic().delta, k))
}

fn variance_oracle(
    d: &PearsonDistribution,
    g: &FunctionSpec,
    opts: &BoundOptions,
) -> Option<VarianceOracle> {
    let exact = (|| -> Result<f64> {
        let eg2 = expect(d, &|x| g.eval(x) * g.eval(x), &opts.expect)?;
        let eg = expect(d, &|x| g.eval(x), &opts.expect)?;
        Ok(eg2 - eg * eg)
    })();
    match exact {
        Ok(value) => Some(VarianceOracle::Exact { value }),
        Err(_) => {
            let (seed, samples) = opts.mc_fallback?;
            let xs = d.sample(seed, samples).ok()?;
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let v = g.eval(x);
                let delta = v - mean;
                mean += delta / (i as f64 + 1.0);
                m2 += delta * (v - mean);
            }
            let value = m2 / (samples as f64 - 1.0);
            // rough standard error of the sample variance from the fourth
            // central moment
            let m4 = xs
                .iter()
                .map(|&x| {
                    let t = g.eval(x) - mean;
                    t * t * t * t
                })
                .sum::<f64>()
                / samples as f64;
            let stderr = ((m4 - value * value).max(0.0) / samples as f64).sqrt();
            Some(VarianceOracle::MonteCarlo {
                value,
                stderr,
                seed,
                samples: samples as u64,
            })
        }
    }
}

// ============================================================================
// Finite-order lower bound
// ============================================================================

/// Order-n lower variance bound report.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub order: u32,
    pub terms: Vec<TermRecord>,
    /// Σ terms — the lower bound for Var g(X).
    pub lower_bound: f64,
    pub variance_oracle: Option<VarianceOracle>,
    /// variance − lower_bound when an oracle is present.
    pub gap: Option<f64>,
    /// g is a polynomial of degree ≤ n, so the bound is an equality.
    pub equality_expected: bool,
}

/// Assembles the order-n lower variance bound for g.
pub fn variance_lower_bound(
    d: &PearsonDistribution,
    g: &FunctionSpec,
    n: u32,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::InvalidIndex("bound order must be >= 1".into()));
    }
    if !d.has_finite_moments(2 * n) {
        return Err(Error::InsufficientMoments {
            order: n,
            needed: 2 * n,
            available: d.max_finite_moment().as_u32_or_max(),
        });
    }
    let mut terms = Vec::with_capacity(n as usize);
    let mut lower_bound = 0.0;
    for k in 1..=n {
        let sq_norm = norm_denominator(d, k)?;
        let record = if sq_norm == 0.0 {
            TermRecord {
                k,
                numerator: 0.0,
                sq_norm,
                term: 0.0,
                zero_norm: true,
            }
        } else {
            let numerator = stein_numerator(d, g, k, &opts.expect)?;
            let term = numerator * numerator / sq_norm;
            TermRecord {
                k,
                numerator,
                sq_norm,
                term,
                zero_norm: false,
            }
        };
        lower_bound += record.term;
        terms.push(record);
    }
    let oracle = variance_oracle(d, g, opts);
    let gap = oracle.as_ref().map(|o| o.value() - lower_bound);
    let equality_expected = g.poly_degree().map(|m| m as u32 <= n).unwrap_or(false);
    Ok(BoundReport {
        order: n,
        terms,
        lower_bound,
        variance_oracle: oracle,
        gap,
        equality_expected,
    })
}

// ============================================================================
// Poincaré-type comparison (discrete)
// ============================================================================

/// Alternating upper/lower comparison report: the partial sums S_n of
/// Σ (−1)^{k+1} E[q^{[k]} (Δ^k g)²] / (k! Π_{j=0}^{k-1}(1−jδ)) sandwich the
/// variance with sign (−1)^n (Var − S_n) ≥ 0.
#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub order: u32,
    /// The signed summands, k = 1..n.
    pub terms: Vec<f64>,
    /// S_1 .. S_n.
    pub partial_sums: Vec<f64>,
    pub variance_oracle: Option<VarianceOracle>,
    /// (−1)^k (Var − S_k) for k = 1..n; each should be ≥ 0 up to noise.
    pub signed_gaps: Option<Vec<f64>>,
}

/// The discrete Poincaré-type comparison. Continuous members are refused:
/// the alternating bound is stated for the Ord family only.
pub fn poincare_comparison(
    d: &PearsonDistribution,
    g: &FunctionSpec,
    n: u32,
    opts: &BoundOptions,
) -> Result<PoincareReport> {
    if !d.is_discrete() {
        return Err(Error::DiscreteOnly("poincare_comparison"));
    }
    if n == 0 {
        return Err(Error::InvalidIndex("comparison order must be >= 1".into()));
    }
    if !d.has_finite_moments(2 * n) {
        return Err(Error::InsufficientMoments {
            order: n,
            needed: 2 * n,
            available: d.max_finite_moment().as_u32_or_max(),
        });
    }
    let delta = d.quadratic().delta;
    let mut terms = Vec::with_capacity(n as usize);
    let mut partial_sums = Vec::with_capacity(n as usize);
    let mut sum = 0.0;
    for k in 1..=n {
        let qk = q_factor(d, k);
        let dg = g.order_k_evaluator(true, k)?;
        expect(d, &|x| (qk.eval(x) * dg(x) * dg(x)).abs(), &opts.expect)
            .map_err(|_| Error::NonconvergentHypothesis { k })?;
        let e_sq = expect(d, &|x| qk.eval(x) * dg(x) * dg(x), &opts.expect)?;
        // Π_{j=0}^{k-1}(1 − jδ) — note the index range differs from the
        // norm product
        let mut denom = factorial(k);
        for j in 0..k {
            denom *= 1.0 - j as f64 * delta;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * e_sq / denom;
        sum += term;
        terms.push(term);
        partial_sums.push(sum);
    }
    let oracle = variance_oracle(d, g, opts);
    let signed_gaps = oracle.as_ref().map(|o| {
        partial_sums
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
                sign * (o.value() - s)
            })
            .collect()
    });
    Ok(PoincareReport {
        order: n,
        terms,
        partial_sums,
        variance_oracle: oracle,
        signed_gaps,
    })
}

// ============================================================================
// Parseval series
// ============================================================================

/// Whether the infinite series is an identity or only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Applicability {
    /// The mgf is finite near zero (or the support is finite): polynomials
    /// are dense and the series equals the variance/covariance.
    ParsevalGuaranteed,
    /// Only Bessel's inequality is guaranteed; the series is a lower bound.
    BesselOnly,
}

/// A summed variance/covariance series with its per-term audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport {
    pub terms: Vec<TermRecord>,
    pub partial_sums: Vec<f64>,
    pub converged: bool,
    pub value: f64,
    /// Index of the last term taken.
    pub truncation_k: u32,
    pub applicability: Applicability,
    /// The moment ceiling stopped the series before the tolerance did.
    pub hit_moment_ceiling: bool,
}

fn applicability_of(d: &PearsonDistribution) -> Applicability {
    let s = d.support();
    let finite_support = s.lower().is_finite() && s.upper().is_finite();
    if d.mgf_finite_near_zero() || finite_support {
        Applicability::ParsevalGuaranteed
    } else {
        Applicability::BesselOnly
    }
}

/// Core series accumulator shared by the variance and covariance routes.
/// When `g2` is `None` the series is the diagonal one: the single
/// numerator is squared, so variance terms are bit-identical to the
/// diagonal covariance terms.
fn parseval_series(
    d: &PearsonDistribution,
    g1: &FunctionSpec,
    g2: Option<&FunctionSpec>,
    opts: &SeriesOptions,
) -> Result<SeriesReport> {
    let applicability = applicability_of(d);
    let is_variance = g2.is_none();

    // polynomial targets terminate exactly: differences/derivatives vanish
    // beyond the degree
    let poly_ceiling = match (g1.poly_degree(), g2.and_then(|g| g.poly_degree())) {
        (Some(d1), Some(d2)) => Some(d1.min(d2) as u32),
        (Some(d1), None) if is_variance => Some(d1 as u32),
        (Some(d1), None) => Some(d1 as u32),
        (None, Some(d2)) => Some(d2 as u32),
        (None, None) => None,
    };
    // finite discrete support: norms vanish permanently at the point count
    let support_ceiling = d.support().point_count().map(|c| (c - 1) as u32);

    let mut terms: Vec<TermRecord> = Vec::new();
    let mut partial_sums: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    let mut small_run = 0u32;
    let mut converged = false;
    let mut hit_moment_ceiling = false;

    let mut k = 0u32;
    loop {
        k += 1;
        if let Some(c) = poly_ceiling {
            if k > c {
                converged = true;
                break;
            }
        }
        if let Some(c) = support_ceiling {
            if k > c {
                converged = true;
                break;
            }
        }
        if !d.has_finite_moments(2 * k) {
            hit_moment_ceiling = true;
            break;
        }
        if k > opts.max_k {
            if opts.allow_truncated {
                break;
            }
            return Err(Error::Nonconvergent(format!(
                "series stopping rule unmet by k = {}",
                opts.max_k
            )));
        }

        let sq_norm = norm_denominator(d, k)?;
        let record = if sq_norm == 0.0 {
            TermRecord {
                k,
                numerator: 0.0,
                sq_norm,
                term: 0.0,
                zero_norm: true,
            }
        } else {
            let num1 = stein_numerator(d, g1, k, &opts.expect)?;
            let num2 = match g2 {
                Some(g2) => stein_numerator(d, g2, k, &opts.expect)?,
                None => num1,
            };
            TermRecord {
                k,
                numerator: num1 * num2,
                sq_norm,
                term: num1 * num2 / sq_norm,
                zero_norm: false,
            }
        };
        sum += record.term;
        terms.push(record);
        partial_sums.push(sum);

        // stopping rule: three consecutive negligible terms. The variance
        // series compares against the (nonnegative) running sum; the
        // covariance series guards sign cancellation with 1 + |sum|.
        let threshold = if is_variance {
            opts.rel_tol * sum
        } else {
            opts.rel_tol * (1.0 + sum.abs())
        };
        if record.term.abs() < threshold {
            small_run += 1;
            if small_run >= 3 {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }

    let truncation_k = terms.last().map(|t| t.k).unwrap_or(0);
    Ok(SeriesReport {
        value: sum,
        terms,
        partial_sums,
        converged,
        truncation_k,
        applicability,
        hit_moment_ceiling,
    })
}

/// Var g(X) as the full Parseval series Σ_{k≥1} c_k².
pub fn parseval_variance(
    d: &PearsonDistribution,
    g: &FunctionSpec,
    opts: &SeriesOptions,
) -> Result<SeriesReport> {
    parseval_series(d, g, None, opts)
}

/// Cov[g1(X), g2(X)] as the series Σ_{k≥1} α_k β_k of paired Fourier
/// coefficients.
pub fn parseval_covariance(
    d: &PearsonDistribution,
    g1: &FunctionSpec,
    g2: &FunctionSpec,
    opts: &SeriesOptions,
) -> Result<SeriesReport> {
    parseval_series(d, g1, Some(g2), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pearson::parse_distribution;
    use crate::polynomial::Poly;

    fn poly(coeffs: &[f64]) -> FunctionSpec {
        FunctionSpec::polynomial(Poly::new(coeffs.to_vec()))
    }

    #[test]
    fn poisson_square_bound_example() {
        // λ=2, g=x², n=2: terms 50 and 8, bound 58 = Var(X²)
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let r =
            variance_lower_bound(&d, &poly(&[0.0, 0.0, 1.0]), 2, &BoundOptions::default()).unwrap();
        assert!((r.terms[0].term - 50.0).abs() < 1e-8, "{:?}", r.terms[0]);
        assert!((r.terms[1].term - 8.0).abs() < 1e-8, "{:?}", r.terms[1]);
        assert!((r.lower_bound - 58.0).abs() < 1e-7);
        assert!(r.equality_expected);
        let v = r.variance_oracle.unwrap().value();
        assert!((v - 58.0).abs() < 1e-7);
        assert!(r.gap.unwrap().abs() <= 1e-7 * 59.0);
    }

    #[test]
    fn poisson_bound_matches_factorial_form() {
        // For δ = 0 the k-th denominator is k! λ^k, so the bound is
        // Σ λ^k/k! E²[Δ^k g]
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let g = poly(&[0.0, 1.0, -1.0, 0.5]);
        let r = variance_lower_bound(&d, &g, 3, &BoundOptions::default()).unwrap();
        let opts = ExpectOptions::default();
        let mut direct = 0.0;
        for k in 1..=3u32 {
            let dg = g.order_k_evaluator(true, k).unwrap();
            let e = expect(&d, &|x| dg(x), &opts).unwrap();
            direct += 2f64.powi(k as i32) / factorial(k) * e * e;
        }
        assert!(
            (r.lower_bound - direct).abs() <= 1e-9 * (1.0 + direct),
            "{} vs {direct}",
            r.lower_bound
        );
    }

    #[test]
    fn normal_bound_matches_derivative_form() {
        // Σ (σ²)^k / k! E²[g^(k)]
        let d = parse_distribution("normal:mu=1,var=4").unwrap();
        let g = poly(&[0.0, 0.0, 1.0, 1.0]);
        let r = variance_lower_bound(&d, &g, 3, &BoundOptions::default()).unwrap();
        let opts = ExpectOptions::default();
        let mut direct = 0.0;
        for k in 1..=3u32 {
            let dg = g.order_k_evaluator(false, k).unwrap();
            let e = expect(&d, &|x| dg(x), &opts).unwrap();
            direct += 4f64.powi(k as i32) / factorial(k) * e * e;
        }
        assert!(
            (r.lower_bound - direct).abs() <= 1e-8 * (1.0 + direct),
            "{} vs {direct}",
            r.lower_bound
        );
        // cubic g with n = 3: equality
        let v = r.variance_oracle.unwrap().value();
        assert!((r.lower_bound - v).abs() <= 1e-7 * (1.0 + v));
    }

    #[test]
    fn bound_is_monotone_in_order() {
        let d = parse_distribution("negative_binomial:r=3,p=0.4").unwrap();
        let g = FunctionSpec::geom_pow(0.5).unwrap();
        let mut prev = 0.0;
        for n in 1..=4 {
            let r = variance_lower_bound(&d, &g, n, &BoundOptions::default()).unwrap();
            assert!(r.lower_bound >= prev - 1e-12, "n={n}");
            let v = r.variance_oracle.as_ref().unwrap().value();
            assert!(r.lower_bound <= v + 1e-7 * (1.0 + v), "n={n}");
            prev = r.lower_bound;
        }
    }

    #[test]
    fn degenerate_terms_are_flagged() {
        let d = parse_distribution("binomial:n=2,p=0.5").unwrap();
        let g = poly(&[0.0, 1.0, 1.0]);
        let r = variance_lower_bound(&d, &g, 5, &BoundOptions::default()).unwrap();
        for t in &r.terms[2..] {
            assert!(t.zero_norm && t.term == 0.0, "k={}", t.k);
        }
        let v = r.variance_oracle.unwrap().value();
        assert!((r.lower_bound - v).abs() <= 1e-7 * (1.0 + v));
    }

    #[test]
    fn poincare_identity_for_linear_g() {
        // g = x − μ: S_1 = E[q] = Var X exactly
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let g = poly(&[-2.0, 1.0]);
        let r = poincare_comparison(&d, &g, 1, &BoundOptions::default()).unwrap();
        assert!((r.partial_sums[0] - 2.0).abs() < 1e-10);
        let v = r.variance_oracle.unwrap().value();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn poincare_alternates_around_variance() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let g = poly(&[0.0, 0.0, 1.0]);
        let r = poincare_comparison(&d, &g, 3, &BoundOptions::default()).unwrap();
        let gaps = r.signed_gaps.unwrap();
        let v = r.variance_oracle.unwrap().value();
        for (i, gap) in gaps.iter().enumerate() {
            assert!(*gap >= -1e-7 * (1.0 + v), "n={}: gap {gap}", i + 1);
        }
    }

    #[test]
    fn poincare_refuses_continuous() {
        let d = parse_distribution("normal:mu=0,var=1").unwrap();
        let g = poly(&[0.0, 1.0]);
        assert!(matches!(
            poincare_comparison(&d, &g, 1, &BoundOptions::default()),
            Err(Error::DiscreteOnly(_))
        ));
    }

    #[test]
    fn parseval_terminates_exactly_for_polynomials() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let g = poly(&[0.0, 1.0, 0.0, 2.0]); // degree 3
        let r = parseval_variance(&d, &g, &SeriesOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.truncation_k, 3);
        let v = expect(&d, &|x| g.eval(x) * g.eval(x), &ExpectOptions::default()).unwrap()
            - expect(&d, &|x| g.eval(x), &ExpectOptions::default())
                .unwrap()
                .powi(2);
        assert!(
            (r.value - v).abs() <= 1e-7 * (1.0 + v),
            "{} vs {v}",
            r.value
        );
    }

    #[test]
    fn parseval_closes_for_exponential_type() {
        let d = parse_distribution("normal:mu=0,var=1").unwrap();
        let g = FunctionSpec::exp_t(0.5);
        let r = parseval_variance(&d, &g, &SeriesOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.applicability, Applicability::ParsevalGuaranteed);
        // Var e^{tX} = e^{2t²} − e^{t²} for standard normal
        let t: f64 = 0.5;
        let v = (2.0 * t * t).exp() - (t * t).exp();
        assert!(
            (r.value - v).abs() <= 1e-8 * (1.0 + v),
            "{} vs {v}",
            r.value
        );
    }

    #[test]
    fn student_t_is_bessel_only() {
        let d = parse_distribution("student_t:n=15").unwrap();
        let g = poly(&[0.0, 0.0, 0.0, 1.0]);
        let r = parseval_variance(&d, &g, &SeriesOptions::default()).unwrap();
        assert_eq!(r.applicability, Applicability::BesselOnly);
    }

    #[test]
    fn covariance_diagonal_is_bit_identical_to_variance() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let g = FunctionSpec::geom_pow(0.5).unwrap();
        let var = parseval_variance(&d, &g, &SeriesOptions::default()).unwrap();
        let cov = parseval_covariance(&d, &g, &g, &SeriesOptions::default()).unwrap();
        // same numerator computation on both sides: terms must agree to the
        // last bit for the shared indices
        for (tv, tc) in var.terms.iter().zip(cov.terms.iter()) {
            assert_eq!(tv.term.to_bits(), tc.term.to_bits(), "k={}", tv.k);
        }
    }

    #[test]
    fn orthogonal_targets_have_zero_covariance() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let sys = crate::rodrigues::build_system(&d, 2).unwrap();
        let g1 = FunctionSpec::polynomial(sys.poly(1).unwrap().clone());
        let g2 = FunctionSpec::polynomial(sys.poly(2).unwrap().clone());
        let r = parseval_covariance(&d, &g1, &g2, &SeriesOptions::default()).unwrap();
        assert!(r.value.abs() <= 1e-8, "cov {}", r.value);
    }

    #[test]
    fn series_error_when_rule_unmet() {
        // 1/k²-type terms decay too slowly for the three-in-a-row rule at
        // k <= 10: expect the nonconvergent error, or a truncated report
        // when explicitly allowed
        let d = parse_distribution("gamma:a=1,lambda=1").unwrap();
        let g = FunctionSpec::log_shift(0.0);
        let strict = SeriesOptions {
            max_k: 10,
            ..SeriesOptions::default()
        };
        assert!(matches!(
            parseval_variance(&d, &g, &strict),
            Err(Error::Nonconvergent(_))
        ));
        let lenient = SeriesOptions {
            max_k: 10,
            allow_truncated: true,
            ..SeriesOptions::default()
        };
        let r = parseval_variance(&d, &g, &lenient).unwrap();
        assert!(!r.converged);
        assert_eq!(r.truncation_k, 10);
    }
}
