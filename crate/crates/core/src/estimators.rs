//! Two worked statistical applications of the covariance series.
//!
//! Sampling ν observations from Geometric(θ) and summing them gives a
//! negative binomial sufficient statistic; the UMVUE of −log θ is the
//! partial harmonic sum T_ν, and companion statistics W_{ν;n} and U_{ν;n}
//! estimate θ^{−n} and θ^n. Their variances and pairwise covariances all
//! come out of the covariance series in closed form, and each closed form
//! is checked here against the generic series engine and a direct
//! numerical covariance.
//!
//! The exponential-sample analogue estimates log λ through
//! L_ν = −log X − γ + Σ_{j<ν} 1/j against a Γ(ν, λ) statistic; its
//! variance series is λ-free and telescopes to π²/6 − Σ_{k<ν} 1/k².

use crate::bounds::{parseval_covariance, parseval_variance, SeriesOptions, SeriesReport};
use crate::error::{Error, Result};
use crate::pearson::{make_builtin, PearsonDistribution};
use crate::polynomial::{falling_factorial, rising_factorial};
use crate::special::{ln_gamma, EULER_GAMMA};
use crate::stein::{expect, FunctionSpec, MaxOrder};
use serde::Serialize;

// ============================================================================
// The statistics
// ============================================================================

/// T_ν(x): 0 at x = 0, else 1/ν + 1/(ν+1) + ⋯ + 1/(ν+x−1). UMVUE of
/// −log θ for a geometric sample of size ν.
pub fn t_nu(x: u64, nu: u32) -> f64 {
    let mut acc = 0.0;
    for j in 0..x {
        acc += 1.0 / (nu as f64 + j as f64);
    }
    acc
}

/// L_ν(x) = −log x − γ + Σ_{j=1}^{ν−1} 1/j. UMVUE of log λ for an
/// exponential sample of size ν.
pub fn l_nu(x: f64, nu: u32) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::NonpositiveArgument { x });
    }
    let mut acc = -x.ln() - EULER_GAMMA;
    for j in 1..nu {
        acc += 1.0 / j as f64;
    }
    Ok(acc)
}

// ============================================================================
// Geometric suite
// ============================================================================

/// UMVUE suite for a geometric sample: the sufficient statistic is
/// negative binomial(ν, θ).
#[derive(Debug, Clone)]
pub struct GeometricUmvueSuite {
    nu: u32,
    theta: f64,
    dist: PearsonDistribution,
}

impl GeometricUmvueSuite {
    pub fn new(nu: u32, theta: f64) -> Result<Self> {
        if nu < 1 {
            return Err(Error::InvalidIndex("sample size nu must be >= 1".into()));
        }
        if !(0.0 < theta && theta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "theta".into(),
                constraint: "must satisfy 0 < theta < 1".into(),
            });
        }
        let dist = make_builtin("negative_binomial", &[("r", nu as f64), ("p", theta)])?;
        Ok(Self { nu, theta, dist })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dist(&self) -> &PearsonDistribution {
        &self.dist
    }

    /// T_ν with its printed difference stack
    /// Δ^k T_ν(x) = (−1)^{k−1} (k−1)! / [ν+x]_k.
    pub fn t_spec(&self) -> FunctionSpec {
        let nu = self.nu;
        let g = move |x: f64| t_nu(x.round().max(0.0) as u64, nu);
        FunctionSpec::analytic(
            format!("t_nu[nu={nu}]"),
            move |k, x| if k == 0 { g(x) } else { f64::NAN },
            move |k, x| {
                if k == 0 {
                    g(x)
                } else {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign * crate::polynomial::factorial(k - 1) / rising_factorial(nu as f64 + x, k)
                }
            },
            MaxOrder::Unbounded,
        )
    }

    /// W_{ν;n}(x) = [ν+x]_n / [ν]_n, the UMVUE of θ^{−n}, with
    /// Δ^k W = (n)_k [ν+x+k]_{n−k} / [ν]_n for k ≤ n and 0 beyond.
    pub fn w_spec(&self, n: u32) -> Result<FunctionSpec> {
        if n < 1 {
            return Err(Error::InvalidIndex("W index n must be >= 1".into()));
        }
        let nu = self.nu as f64;
        let denom = rising_factorial(nu, n);
        Ok(FunctionSpec::analytic(
            format!("w[nu={},n={n}]", self.nu),
            move |k, x| {
                if k == 0 {
                    rising_factorial(nu + x, n) / denom
                } else {
                    f64::NAN
                }
            },
            move |k, x| {
                if k > n {
                    0.0
                } else {
                    falling_factorial(n as f64, k) * rising_factorial(nu + x + k as f64, n - k)
                        / denom
                }
            },
            MaxOrder::Unbounded,
        ))
    }

    /// U_{ν;n}(x) = (ν−1)_n / [ν−n+x]_n, the UMVUE of θ^n (n ≤ ν−1), with
    /// Δ^k U = (−1)^k [n]_k (ν−1)_n / [ν−n+x]_{n+k}.
    pub fn u_spec(&self, n: u32) -> Result<FunctionSpec> {
        if n < 1 || n > self.nu.saturating_sub(1) {
            return Err(Error::InvalidIndex(format!(
                "U index n must satisfy 1 <= n <= nu-1 = {}",
                self.nu.saturating_sub(1)
            )));
        }
        let nu = self.nu as f64;
        let numer = falling_factorial(nu - 1.0, n);
        Ok(FunctionSpec::analytic(
            format!("u[nu={},n={n}]", self.nu),
            move |k, x| {
                if k == 0 {
                    numer / rising_factorial(nu - n as f64 + x, n)
                } else {
                    f64::NAN
                }
            },
            move |k, x| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * rising_factorial(n as f64, k) * numer
                    / rising_factorial(nu - n as f64 + x, n + k)
            },
            MaxOrder::Unbounded,
        ))
    }
}

// ============================================================================
// Closed-form series evaluation
// ============================================================================

/// Sums t_1 + t_2 + ⋯ where t_{k+1} = t_k · ratio(k), stopping once three
/// consecutive terms are negligible against the running sum.
fn sum_by_ratio(first: f64, mut ratio: impl FnMut(u32) -> f64) -> Result<f64> {
    let mut term = first;
    let mut sum = first;
    let mut small_run = 0u32;
    let mut k = 1u32;
    loop {
        if term.abs() < 1e-15 * (1.0 + sum.abs()) {
            small_run += 1;
            if small_run >= 3 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
        if k > 200_000 {
            return Err(Error::Nonconvergent(
                "closed-form series did not settle".into(),
            ));
        }
        term *= ratio(k);
        sum += term;
        k += 1;
    }
}

/// Σ_{k≥1} (1−θ)^k / (k² C(ν+k−1, k)), the closed variance series of T_ν.
/// Terms follow the ratio recurrence t_{k+1}/t_k = (1−θ) k² / ((k+1)(ν+k)).
pub fn var_t_closed_series(nu: u32, theta: f64) -> Result<f64> {
    let rho = 1.0 - theta;
    let nu_f = nu as f64;
    sum_by_ratio(rho / nu_f, |k| {
        let kf = k as f64;
        rho * kf * kf / ((kf + 1.0) * (nu_f + kf))
    })
}

/// Σ_{k≥1} 1/(k² C(ν+k−1, k)): the λ-free variance series of L_ν. The
/// summand behaves like Γ(ν) k^{−ν−1}, so after an explicit partial sum
/// the remainder is added from the midpoint rule on that asymptotic form.
pub fn var_l_closed_series(nu: u32) -> f64 {
    const CUTOFF: u32 = 100_000;
    let nu_f = nu as f64;
    let mut term = 1.0 / nu_f;
    let mut sum = term;
    let mut k = 1u32;
    while k < CUTOFF {
        let kf = k as f64;
        term *= kf * kf / ((kf + 1.0) * (nu_f + kf));
        sum += term;
        k += 1;
        if term < 1e-280 {
            break;
        }
    }
    // midpoint-rule tail: Γ(ν)[(K+½)^{−ν}/ν − (ν(ν−1)/2)(K+½)^{−ν−1}/(ν+1)]
    let kh = k as f64 + 0.5;
    let lg = ln_gamma(nu_f);
    let tail1 = (lg - nu_f * kh.ln()).exp() / nu_f;
    let tail2 = if nu > 1 {
        (lg + (nu_f * (nu_f - 1.0) / 2.0).ln() - (nu_f + 1.0) * kh.ln()).exp() / (nu_f + 1.0)
    } else {
        0.0
    };
    sum + tail1 - tail2
}

fn theta_powi(theta: f64, n: i32) -> f64 {
    theta.powi(n)
}

/// The five closed covariance series of the geometric suite.
mod geom_closed {
    use super::*;

    /// Cov[T_ν, W_{ν;n}] = θ^{−n} Σ_{k=1}^n (−1)^{k−1} (n)_k (1−θ)^k / (k [ν]_k)
    pub fn t_w(nu: u32, theta: f64, n: u32) -> f64 {
        let nu_f = nu as f64;
        let mut acc = 0.0;
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * falling_factorial(n as f64, k) * (1.0 - theta).powi(k as i32)
                / (k as f64 * rising_factorial(nu_f, k));
        }
        theta_powi(theta, -(n as i32)) * acc
    }

    /// Cov[T_ν, U_{ν;n}] = −θ^n Σ_{k≥1} [n]_k (1−θ)^k / (k [ν]_k)
    pub fn t_u(nu: u32, theta: f64, n: u32) -> Result<f64> {
        let rho = 1.0 - theta;
        let nu_f = nu as f64;
        let nf = n as f64;
        let s = sum_by_ratio(nf * rho / nu_f, |k| {
            let kf = k as f64;
            rho * (nf + kf) * kf / ((kf + 1.0) * (nu_f + kf))
        })?;
        Ok(-theta_powi(theta, n as i32) * s)
    }

    /// Cov[W_{ν;n}, W_{ν;m}] = θ^{−n−m} Σ_{k=1}^{min(n,m)} (n)_k (m)_k (1−θ)^k / (k! [ν]_k)
    pub fn w_w(nu: u32, theta: f64, n: u32, m: u32) -> f64 {
        let nu_f = nu as f64;
        let mut acc = 0.0;
        for k in 1..=n.min(m) {
            acc += falling_factorial(n as f64, k)
                * falling_factorial(m as f64, k)
                * (1.0 - theta).powi(k as i32)
                / (crate::polynomial::factorial(k) * rising_factorial(nu_f, k));
        }
        theta_powi(theta, -(n as i32) - m as i32) * acc
    }

    /// Cov[U_{ν;n}, U_{ν;m}] = θ^{n+m} Σ_{k≥1} [n]_k [m]_k (1−θ)^k / (k! [ν]_k)
    pub fn u_u(nu: u32, theta: f64, n: u32, m: u32) -> Result<f64> {
        let rho = 1.0 - theta;
        let nu_f = nu as f64;
        let (nf, mf) = (n as f64, m as f64);
        let s = sum_by_ratio(nf * mf * rho / nu_f, |k| {
            let kf = k as f64;
            rho * (nf + kf) * (mf + kf) / ((kf + 1.0) * (nu_f + kf))
        })?;
        Ok(theta_powi(theta, n as i32 + m as i32) * s)
    }

    /// Cov[W_{ν;n}, U_{ν;m}] = θ^{m−n} Σ_{k=1}^n (−1)^k (n)_k [m]_k (1−θ)^k / (k! [ν]_k)
    pub fn w_u(nu: u32, theta: f64, n: u32, m: u32) -> f64 {
        let nu_f = nu as f64;
        let mut acc = 0.0;
        for k in 1..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign
                * falling_factorial(n as f64, k)
                * rising_factorial(m as f64, k)
                * (1.0 - theta).powi(k as i32)
                / (crate::polynomial::factorial(k) * rising_factorial(nu_f, k));
        }
        theta_powi(theta, m as i32 - n as i32) * acc
    }
}

// ============================================================================
// Reports
// ============================================================================

/// Variance report for T_ν: the closed series beside the generic engine.
#[derive(Debug, Clone, Serialize)]
pub struct VarTReport {
    pub nu: u32,
    pub theta: f64,
    /// Closed series Σ (1−θ)^k/(k² C(ν+k−1,k)).
    pub closed_series: f64,
    /// The same number from the generic Parseval engine.
    pub parseval: SeriesReport,
    /// First term of the series: the Cramér–Rao bound (1−θ)/ν.
    pub cramer_rao: f64,
}

/// Var T_ν computed independently by the closed series and the series
/// engine.
pub fn var_t_nu(nu: u32, theta: f64, opts: &SeriesOptions) -> Result<VarTReport> {
    let suite = GeometricUmvueSuite::new(nu, theta)?;
    let closed_series = var_t_closed_series(nu, theta)?;
    let parseval = parseval_variance(&suite.dist, &suite.t_spec(), opts)?;
    Ok(VarTReport {
        nu,
        theta,
        closed_series,
        parseval,
        cramer_rao: (1.0 - theta) / nu as f64,
    })
}

/// One covariance computed three independent ways.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceTriple {
    /// The printed closed-form series.
    pub closed_series: f64,
    /// The generic covariance series engine.
    pub parseval: f64,
    /// Direct E[g1 g2] − E[g1] E[g2].
    pub direct: f64,
}

impl CovarianceTriple {
    /// Largest pairwise relative deviation among the three routes.
    pub fn max_relative_spread(&self) -> f64 {
        let vals = [self.closed_series, self.parseval, self.direct];
        let scale = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                worst = worst.max((vals[i] - vals[j]).abs() / scale);
            }
        }
        worst
    }
}

/// The five covariances of Application-style statistics T, W_{ν;n},
/// U_{ν;m}, each computed three ways.
#[derive(Debug, Clone, Serialize)]
pub struct GeometricCovariances {
    pub nu: u32,
    pub theta: f64,
    pub n: u32,
    pub m: u32,
    pub t_w: CovarianceTriple,
    pub t_u: CovarianceTriple,
    pub w_w: CovarianceTriple,
    pub u_u: CovarianceTriple,
    pub w_u: CovarianceTriple,
}

fn direct_covariance(
    d: &PearsonDistribution,
    g1: &FunctionSpec,
    g2: &FunctionSpec,
    opts: &SeriesOptions,
) -> Result<f64> {
    let e12 = expect(d, &|x| g1.eval(x) * g2.eval(x), &opts.expect)?;
    let e1 = expect(d, &|x| g1.eval(x), &opts.expect)?;
    let e2 = expect(d, &|x| g2.eval(x), &opts.expect)?;
    Ok(e12 - e1 * e2)
}

/// Cov[T,W_n], Cov[T,U_m], Cov[W_n,W_m], Cov[U_n,U_m], Cov[W_n,U_m] — each
/// by closed series, the covariance engine, and direct expectation.
/// Requires 1 ≤ n ≤ ν−1 and 1 ≤ m ≤ ν−1 (both indices feed a U series).
pub fn geometric_covariances(
    nu: u32,
    theta: f64,
    n: u32,
    m: u32,
    opts: &SeriesOptions,
) -> Result<GeometricCovariances> {
    let suite = GeometricUmvueSuite::new(nu, theta)?;
    let d = &suite.dist;
    let t = suite.t_spec();
    let w_n = suite.w_spec(n)?;
    let w_m = suite.w_spec(m)?;
    let u_n = suite.u_spec(n)?;
    let u_m = suite.u_spec(m)?;

    let triple = |closed: f64, g1: &FunctionSpec, g2: &FunctionSpec| -> Result<CovarianceTriple> {
        Ok(CovarianceTriple {
            closed_series: closed,
            parseval: parseval_covariance(d, g1, g2, opts)?.value,
            direct: direct_covariance(d, g1, g2, opts)?,
        })
    };

    Ok(GeometricCovariances {
        nu,
        theta,
        n,
        m,
        t_w: triple(geom_closed::t_w(nu, theta, n), &t, &w_n)?,
        t_u: triple(geom_closed::t_u(nu, theta, m)?, &t, &u_m)?,
        w_w: triple(geom_closed::w_w(nu, theta, n, m), &w_n, &w_m)?,
        u_u: triple(geom_closed::u_u(nu, theta, n, m)?, &u_n, &u_m)?,
        w_u: triple(geom_closed::w_u(nu, theta, n, m), &w_n, &u_m)?,
    })
}

// ============================================================================
// Exponential suite
// ============================================================================

/// UMVUE suite for an exponential sample: the sufficient statistic is
/// Γ(ν, λ).
#[derive(Debug, Clone)]
pub struct ExponentialUmvueSuite {
    nu: u32,
    lambda: f64,
    dist: PearsonDistribution,
}

impl ExponentialUmvueSuite {
    pub fn new(nu: u32, lambda: f64) -> Result<Self> {
        if nu < 1 {
            return Err(Error::InvalidIndex("sample size nu must be >= 1".into()));
        }
        if lambda <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda".into(),
                constraint: "must satisfy lambda > 0".into(),
            });
        }
        let dist = make_builtin("gamma", &[("a", nu as f64), ("lambda", lambda)])?;
        Ok(Self { nu, lambda, dist })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dist(&self) -> &PearsonDistribution {
        &self.dist
    }

    /// L_ν with its derivative stack L^(k)(x) = (−1)^k (k−1)! x^{−k}.
    pub fn l_spec(&self) -> FunctionSpec {
        let nu = self.nu;
        let g = move |x: f64| l_nu(x, nu).unwrap_or(f64::NAN);
        FunctionSpec::analytic(
            format!("l_nu[nu={nu}]"),
            move |k, x| {
                if k == 0 {
                    g(x)
                } else {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * crate::polynomial::factorial(k - 1) / x.powi(k as i32)
                }
            },
            move |k, x| crate::stein::lattice_difference(&g, k, x),
            MaxOrder::Unbounded,
        )
    }

    /// The variance series of L_ν through the generic engine (the value is
    /// λ-free term by term).
    pub fn parseval_series(&self, opts: &SeriesOptions) -> Result<SeriesReport> {
        parseval_variance(&self.dist, &self.l_spec(), opts)
    }
}

/// Variance record for L_ν.
#[derive(Debug, Clone, Serialize)]
pub struct VarLReport {
    pub nu: u32,
    /// The series Σ 1/(k² C(ν+k−1,k)) summed directly.
    pub series_value: f64,
    /// π²/6 − Σ_{k<ν} 1/k².
    pub closed_form: f64,
    /// Engine value when the generic series converges within its cap (the
    /// 1/k²-type tail defeats the rule for small ν).
    pub parseval: Option<f64>,
    /// ν · Var L_ν; sandwiched strictly between 1 and 1 + 1/ν.
    pub efficiency: f64,
    pub sandwich_holds: bool,
}

/// Var L_ν by direct series, closed form, and (where the stopping rule can
/// fire) the generic engine; λ plays no role in the value.
pub fn var_l_nu(nu: u32) -> Result<VarLReport> {
    if nu < 1 {
        return Err(Error::InvalidIndex("sample size nu must be >= 1".into()));
    }
    let series_value = var_l_closed_series(nu);
    let mut closed_form = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    for k in 1..nu {
        closed_form -= 1.0 / (k as f64 * k as f64);
    }
    let suite = ExponentialUmvueSuite::new(nu, 1.0)?;
    let opts = SeriesOptions {
        allow_truncated: true,
        ..SeriesOptions::default()
    };
    let parseval = suite
        .parseval_series(&opts)
        .ok()
        .filter(|r| r.converged)
        .map(|r| r.value);
    let efficiency = nu as f64 * closed_form;
    let sandwich_holds = 1.0 < efficiency && efficiency < 1.0 + 1.0 / nu as f64;
    Ok(VarLReport {
        nu,
        series_value,
        closed_form,
        parseval,
        efficiency,
        sandwich_holds,
    })
}
