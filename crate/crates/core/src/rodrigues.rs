//! Construction of the orthogonal polynomials P_0 .. P_n.
//!
//! The polynomials come out of a two-term row recurrence on helper
//! polynomials Q_{i,k} (i = 0..k), with P_k = (−1)^k Q_{k,k}:
//!
//! ```text
//! discrete:    Q_{i+1,k}(x) = [μ − (x−k+i+1) + q(x) − q(x−k+i+1)] Q_{i,k}(x)
//!                             + q(x) Δ[Q_{i,k}](x)
//! continuous:  Q_{i+1,k}(x) = [μ − x + (k−i−1)(2δx+β)] Q_{i,k}(x)
//!                             + q(x) Q'_{i,k}(x)
//! ```
//!
//! Leading coefficients and squared norms follow in closed form:
//! lead(P_k) = Π_{j=k−1}^{2k−2} (1 − jδ) and
//! E[P_k²] = k! E[q^{[k]}] lead(P_k) (with q^k in the continuous case).
//!
//! [`rodrigues_direct`] evaluates P_k(x) straight from the direct
//! difference/derivative formula without the recurrence, serving as an
//! independent oracle, and [`inversion_residual`] checks the inverse
//! relation that recovers q^{[k]} p from a tail sum of P_k against the
//! weight.

use crate::error::{Error, Result};
use crate::pearson::{q_factor, q_moment, q_power, MomentCeiling, PearsonDistribution};
use crate::polynomial::{binomial, factorial, falling_factorial, Poly, Scalar};
use crate::quad;
use num_rational::BigRational;
use num_traits::FromPrimitive;

// ============================================================================
// Recurrence
// ============================================================================

/// The helper polynomials Q_{0,n} .. Q_{n,n} of one recurrence row.
#[derive(Debug, Clone)]
pub struct RecurrenceTable {
    pub n: u32,
    pub rows: Vec<Poly<f64>>,
}

/// Runs the row-k recurrence over any scalar ring.
fn recurrence_row<T: Scalar>(
    mu: &T,
    delta: &T,
    beta: &T,
    gamma: &T,
    k: u32,
    discrete: bool,
) -> Vec<Poly<T>> {
    let q = Poly::new(vec![gamma.clone(), beta.clone(), delta.clone()]);
    let x = Poly::<T>::x();
    let mut rows = vec![Poly::one()];
    let mut current = Poly::one();
    for i in 0..k {
        let multiplier = if discrete {
            // μ − (x − k + i + 1) + q(x) − q(x − k + i + 1)
            let a = T::from_i64(i as i64 + 1 - k as i64).expect("small int");
            let shifted_q = q.shift(&a);
            Poly::constant(mu.clone() - a.clone())
                .sub_poly(&x)
                .add_poly(&q.sub_poly(&shifted_q))
        } else {
            // μ − x + (k − i − 1)(2δx + β)
            let c = T::from_i64(k as i64 - i as i64 - 1).expect("small int");
            let two = T::from_i64(2).expect("small int");
            let slope = Poly::new(vec![beta.clone(), two * delta.clone()]);
            Poly::constant(mu.clone())
                .sub_poly(&x)
                .add_poly(&slope.scale(&c))
        };
        let bump = if discrete {
            current.forward_difference(1)
        } else {
            current.derivative(1)
        };
        current = multiplier.mul_poly(&current).add_poly(&q.mul_poly(&bump));
        rows.push(current.clone());
    }
    rows
}

/// Q_{i,n} for i = 0..n in float arithmetic (exposed mainly for tests;
/// [`build_system`] runs the same recurrence, exactly when it can).
pub fn recurrence_table(d: &PearsonDistribution, n: u32) -> RecurrenceTable {
    let q = d.quadratic();
    let rows = recurrence_row(&d.mean(), &q.delta, &q.beta, &q.gamma, n, d.is_discrete());
    RecurrenceTable { n, rows }
}

// ============================================================================
// The constructed system
// ============================================================================

/// Orthogonal polynomials P_0..P_n for one distribution, with leading
/// coefficients and squared norms. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct RodriguesSystem {
    dist: PearsonDistribution,
    polys: Vec<Poly<f64>>,
    leads: Vec<f64>,
    sq_norms: Vec<f64>,
    order: u32,
    degenerate_order: Option<u32>,
}

impl RodriguesSystem {
    pub fn dist(&self) -> &PearsonDistribution {
        &self.dist
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn polys(&self) -> &[Poly<f64>] {
        &self.polys
    }

    pub fn poly(&self, k: u32) -> Result<&Poly<f64>> {
        self.polys
            .get(k as usize)
            .ok_or(Error::InvalidIndex(format!(
                "k = {k} exceeds system order {}",
                self.order
            )))
    }

    pub fn leads(&self) -> &[f64] {
        &self.leads
    }

    pub fn lead(&self, k: u32) -> Result<f64> {
        self.leads
            .get(k as usize)
            .copied()
            .ok_or(Error::InvalidIndex(format!(
                "k = {k} exceeds system order {}",
                self.order
            )))
    }

    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    /// E[P_k²] from the closed norm formula.
    pub fn sq_norm(&self, k: u32) -> Result<f64> {
        self.sq_norms
            .get(k as usize)
            .copied()
            .ok_or(Error::InvalidIndex(format!(
                "k = {k} exceeds system order {}",
                self.order
            )))
    }

    /// First k at which the leading coefficient degenerates to zero, if
    /// any (reachable only at the moment boundary of heavy-tail members).
    pub fn degenerate_order(&self) -> Option<u32> {
        self.degenerate_order
    }
}

/// lead(P_k) = Π_{j=k−1}^{2k−2} (1 − jδ); the empty product (k = 0) is 1.
pub fn lead_coefficient(delta: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut acc = 1.0;
    for j in (k - 1)..=(2 * k - 2) {
        acc *= 1.0 - j as f64 * delta;
    }
    acc
}

/// Builds P_0..P_n with leading coefficients and squared norms.
///
/// Requires 2n finite moments. Runs in exact rational arithmetic whenever
/// the distribution carries exact quadratic data (the discrete built-ins),
/// eliminating drift from the composed shifts and products.
pub fn build_system(d: &PearsonDistribution, n: u32) -> Result<RodriguesSystem> {
    if !d.has_finite_moments(2 * n) {
        return Err(Error::InsufficientMoments {
            order: n,
            needed: 2 * n,
            available: match d.max_finite_moment() {
                MomentCeiling::Infinite => u32::MAX,
                MomentCeiling::Finite(m) => m,
            },
        });
    }

    let delta = d.quadratic().delta;
    let mut polys = Vec::with_capacity(n as usize + 1);
    let mut leads = Vec::with_capacity(n as usize + 1);
    let mut sq_norms = Vec::with_capacity(n as usize + 1);
    let mut degenerate_order = None;

    for k in 0..=n {
        let pk = match d.exact_quadratic() {
            Some(exact) => {
                let rows = recurrence_row(
                    &exact.mean,
                    &exact.delta,
                    &exact.beta,
                    &exact.gamma,
                    k,
                    d.is_discrete(),
                );
                let q_kk = rows.last().expect("row k present");
                let sign = BigRational::from_i64(if k % 2 == 0 { 1 } else { -1 }).unwrap();
                q_kk.scale(&sign).to_f64()
            }
            None => {
                let q = d.quadratic();
                let rows =
                    recurrence_row(&d.mean(), &q.delta, &q.beta, &q.gamma, k, d.is_discrete());
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                rows.last().expect("row k present").scale(&sign)
            }
        };

        let lead = lead_coefficient(delta, k);
        if lead == 0.0 && degenerate_order.is_none() {
            degenerate_order = Some(k);
        }

        let sq_norm = if k == 0 {
            1.0
        } else if matches!(d.support().point_count(), Some(count) if k as u64 >= count) {
            // finite discrete support: q^{[k]} vanishes identically once k
            // reaches the number of support points
            0.0
        } else {
            factorial(k) * q_moment(d, k)? * lead
        };

        polys.push(pk);
        leads.push(lead);
        sq_norms.push(sq_norm);
    }

    Ok(RodriguesSystem {
        dist: d.clone(),
        polys,
        leads,
        sq_norms,
        order: n,
        degenerate_order,
    })
}

// ============================================================================
// Direct-formula oracle
// ============================================================================

/// P_k(x) straight from the direct formula, bypassing the recurrence.
///
/// Discrete members use the exact alternating sum
/// (1/p(x)) Σ_j (−1)^{k−j} C(k,j) q^{[k]}(x−j) p(x−j); continuous members
/// differentiate q^k f numerically with central differences and Richardson
/// extrapolation (accuracy degrades with k; see the tests for the float
/// noise floor).
pub fn rodrigues_direct(d: &PearsonDistribution, k: u32, x: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let w = d.weight(x);
    if w <= 0.0 {
        return Err(Error::ZeroWeightPoint { x });
    }
    if d.is_discrete() {
        let qk = q_factor(d, k);
        let mut acc = 0.0;
        for j in 0..=k {
            let y = x - j as f64;
            let p = d.weight(y);
            if p == 0.0 {
                continue;
            }
            let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * binomial(k, j) * qk.eval(y) * p;
        }
        Ok(acc / w)
    } else {
        let qk = q_power(d, k)?;
        let f = move |y: f64| qk.eval(&y) * d.weight(y);
        let deriv = central_derivative(&f, x, k, d)?;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * deriv / w)
    }
}

/// k-th central difference quotient at step h.
fn central_stencil(f: &dyn Fn(f64) -> f64, x: f64, k: u32, h: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let offset = k as f64 / 2.0 - j as f64;
        acc += sign * binomial(k, j) * f(x + offset * h);
    }
    acc / h.powi(k as i32)
}

/// Adaptive central differences with Richardson extrapolation: halve the
/// step until the extrapolated estimate stabilizes, returning the value at
/// the minimal successive change.
fn central_derivative(
    f: &dyn Fn(f64) -> f64,
    x: f64,
    k: u32,
    d: &PearsonDistribution,
) -> Result<f64> {
    let support = d.support();
    let width = if support.lower().is_finite() && support.upper().is_finite() {
        support.upper() - support.lower()
    } else {
        1.0
    };
    let mut h = width.min(1.0) * 1e-2;
    // keep the stencil inside the support
    let reach = k as f64 / 2.0 + 1.0;
    if support.lower().is_finite() {
        h = h.min(0.8 * (x - support.lower()) / reach);
    }
    if support.upper().is_finite() {
        h = h.min(0.8 * (support.upper() - x) / reach);
    }
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::StepUnderflow);
    }

    const MAX_LEVELS: usize = 14;
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut best = f64::NAN;
    let mut best_change = f64::INFINITY;
    for i in 0..MAX_LEVELS {
        let hi = h / 2f64.powi(i as i32);
        if hi < 1e-10 {
            break;
        }
        let mut row = vec![central_stencil(f, x, k, hi)];
        for j in 1..=i {
            let factor = 4f64.powi(j as i32);
            let extrap = (factor * row[j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
            row.push(extrap);
        }
        if i > 0 {
            let change = (row[i] - table[i - 1][i - 1]).abs();
            if change < best_change {
                best_change = change;
                best = row[i];
            }
            let scale = 1.0 + row[i].abs();
            if change <= 1e-10 * scale {
                return Ok(row[i]);
            }
        }
        table.push(row);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::StepUnderflow)
    }
}

// ============================================================================
// Rodrigues inversion
// ============================================================================

/// Residual |LHS − RHS| / (1 + |LHS|) of the inversion formula
///
/// ```text
/// discrete:    q^{[k]}(x) p(x) = (1/(k−1)!) Σ_{y>x} (y−x−1)_{k−1} P_k(y) p(y)
/// continuous:  q^k(x) f(x)    = (1/(k−1)!) ∫_x^s (y−x)^{k−1} P_k(y) f(y) dy
///                             = ((−1)^k/(k−1)!) ∫_r^x (x−y)^{k−1} P_k(y) f(y) dy
/// ```
///
/// The continuous right side is evaluated over whichever tail carries less
/// mass.
pub fn inversion_residual(
    d: &PearsonDistribution,
    sys: &RodriguesSystem,
    k: u32,
    x: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidIndex("inversion requires k >= 1".into()));
    }
    if !d.has_finite_moments(2 * k - 1) {
        return Err(Error::InsufficientMoments {
            order: k,
            needed: 2 * k - 1,
            available: match d.max_finite_moment() {
                MomentCeiling::Infinite => u32::MAX,
                MomentCeiling::Finite(m) => m,
            },
        });
    }
    let pk = sys.poly(k)?;
    let inv_fact = 1.0 / factorial(k - 1);

    if d.is_discrete() {
        let qk = q_factor(d, k);
        let lhs = qk.eval(x) * d.weight(x);
        let upper = d.support().upper();
        let mut rhs = 0.0;
        let mut y = x + 1.0;
        let mut prev_abs: Option<f64> = None;
        let mut decreasing = 0u32;
        let mut iterations = 0u64;
        while y <= upper {
            iterations += 1;
            if iterations > 1_000_000 {
                return Err(Error::NonconvergentTail);
            }
            let term = falling_factorial(y - x - 1.0, k - 1) * pk.eval(&y) * d.weight(y);
            rhs += term;
            let t_abs = term.abs();
            if let Some(prev) = prev_abs {
                if t_abs <= prev {
                    decreasing += 1;
                } else {
                    decreasing = 0;
                }
            }
            if decreasing >= 25 && t_abs < 1e-16 * (1.0 + rhs.abs()) {
                break;
            }
            prev_abs = Some(t_abs);
            y += 1.0;
        }
        rhs *= inv_fact;
        Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
    } else {
        let qk = q_factor(d, k);
        let lhs = qk.eval(x) * d.weight(x);
        let (lower, upper) = (d.support().lower(), d.support().upper());
        let rel_tol = 1e-11;
        let max_panels = 100_000;
        let rhs = if x <= d.mean() {
            // left tail is lighter: (−1)^k/(k−1)! ∫_r^x (x−y)^{k−1} P_k f dy
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            let integrand = move |y: f64| (x - y).powi(k as i32 - 1) * pk.eval(&y) * d.weight(y);
            sign * inv_fact
                * quad::integrate(
                    &integrand,
                    lower,
                    x,
                    d.mean(),
                    d.std_dev(),
                    rel_tol,
                    max_panels,
                )
                .map_err(|_| Error::NonconvergentTail)?
        } else {
            let integrand = move |y: f64| (y - x).powi(k as i32 - 1) * pk.eval(&y) * d.weight(y);
            inv_fact
                * quad::integrate(
                    &integrand,
                    x,
                    upper,
                    d.mean(),
                    d.std_dev(),
                    rel_tol,
                    max_panels,
                )
                .map_err(|_| Error::NonconvergentTail)?
        };
        Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pearson::parse_distribution;

    #[test]
    fn first_polynomials_are_canonical() {
        for spec in [
            "poisson:lambda=2",
            "binomial:n=10,p=0.3",
            "normal:mu=1.5,var=2",
            "gamma:a=3,lambda=2",
            "student_t:n=15",
        ] {
            let d = parse_distribution(spec).unwrap();
            let sys = build_system(&d, 1).unwrap();
            assert_eq!(sys.poly(0).unwrap(), &Poly::one(), "{spec}: P_0");
            let p1 = sys.poly(1).unwrap();
            let expected = Poly::new(vec![-d.mean(), 1.0]);
            let diff = p1.sub_poly(&expected);
            assert!(
                diff.coeffs().iter().all(|c| c.abs() < 1e-12),
                "{spec}: P_1 = {p1}"
            );
        }
    }

    #[test]
    fn poisson_p2_closed_form() {
        // P_2(x) = (x−λ)² − x
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let sys = build_system(&d, 2).unwrap();
        let expected = Poly::new(vec![4.0, -5.0, 1.0]);
        assert_eq!(sys.poly(2).unwrap(), &expected);
    }

    #[test]
    fn normal_p2_is_hermite() {
        // P_2(x) = (x−μ)² − σ²
        let d = parse_distribution("normal:mu=0,var=1").unwrap();
        let sys = build_system(&d, 2).unwrap();
        let p2 = sys.poly(2).unwrap();
        let expected = Poly::new(vec![-1.0, 0.0, 1.0]);
        let diff = p2.sub_poly(&expected);
        assert!(diff.coeffs().iter().all(|c| c.abs() < 1e-12), "P_2 = {p2}");
    }

    #[test]
    fn discrete_uniform_leads() {
        // δ = −1/2: lead(P_k) = Π_{j=k−1}^{2k−2} (1 + j/2)
        let d = parse_distribution("discrete_uniform:n=10").unwrap();
        let sys = build_system(&d, 3).unwrap();
        assert_eq!(sys.lead(0).unwrap(), 1.0);
        assert_eq!(sys.lead(1).unwrap(), 1.0);
        assert_eq!(sys.lead(2).unwrap(), 3.0); // (3/2)(2)
        assert_eq!(sys.lead(3).unwrap(), 2.0 * 2.5 * 3.0);
        // the lead extracted from the coefficients agrees
        for k in 0..=3u32 {
            let lead = *sys.poly(k).unwrap().lead().unwrap();
            assert!(
                (lead - sys.lead(k).unwrap()).abs() <= 1e-10 * lead.abs(),
                "k={k}"
            );
        }
    }

    #[test]
    fn recurrence_matches_direct_formula_discrete() {
        for spec in [
            "poisson:lambda=2",
            "binomial:n=5,p=0.3",
            "negative_binomial:r=3,p=0.4",
            "discrete_uniform:n=10",
        ] {
            let d = parse_distribution(spec).unwrap();
            let sys = build_system(&d, 4).unwrap();
            for k in 0..=4u32 {
                for x in crate::pearson::support_grid(&d, 8) {
                    if d.weight(x) <= 0.0 {
                        continue;
                    }
                    let direct = rodrigues_direct(&d, k, x).unwrap();
                    let rec = sys.poly(k).unwrap().eval(&x);
                    assert!(
                        (direct - rec).abs() <= 1e-7 * (1.0 + rec.abs()),
                        "{spec} k={k} x={x}: direct {direct} vs recurrence {rec}"
                    );
                }
            }
        }
    }

    #[test]
    fn direct_formula_trivial_cases() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        assert_eq!(rodrigues_direct(&d, 0, 3.0).unwrap(), 1.0);
        // P_1(3) = 3 − 2 = 1
        let v = rodrigues_direct(&d, 1, 3.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn zero_weight_point_is_an_error() {
        let d = parse_distribution("binomial:n=5,p=0.3").unwrap();
        assert!(matches!(
            rodrigues_direct(&d, 1, 9.0),
            Err(Error::ZeroWeightPoint { .. })
        ));
    }

    #[test]
    fn insufficient_moments_refused() {
        let d = parse_distribution("student_t:n=5").unwrap();
        // needs 2n = 6 > 4 available
        assert!(matches!(
            build_system(&d, 3),
            Err(Error::InsufficientMoments { .. })
        ));
    }

    #[test]
    fn binomial_degenerate_norms() {
        let d = parse_distribution("binomial:n=2,p=0.5").unwrap();
        let sys = build_system(&d, 5).unwrap();
        for k in 3..=5u32 {
            assert_eq!(sys.sq_norm(k).unwrap(), 0.0, "k={k}");
        }
        assert!(sys.sq_norm(2).unwrap() > 0.0);
    }

    #[test]
    fn inversion_poisson_k1() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let sys = build_system(&d, 1).unwrap();
        let r = inversion_residual(&d, &sys, 1, 3.0).unwrap();
        assert!(r <= 1e-9, "residual {r}");
    }

    #[test]
    fn inversion_normal_k1_at_zero() {
        // LHS = f(0) = (2π)^{-1/2}; RHS = ∫_0^∞ y f(y) dy
        let d = parse_distribution("normal:mu=0,var=1").unwrap();
        let sys = build_system(&d, 1).unwrap();
        let r = inversion_residual(&d, &sys, 1, 0.0).unwrap();
        assert!(r <= 1e-9, "residual {r}");
    }

    #[test]
    fn inversion_binomial_k2() {
        let d = parse_distribution("binomial:n=5,p=0.3").unwrap();
        let sys = build_system(&d, 2).unwrap();
        let r = inversion_residual(&d, &sys, 2, 1.0).unwrap();
        assert!(r <= 1e-9, "residual {r}");
    }

    #[test]
    fn recurrence_table_shape() {
        let d = parse_distribution("poisson:lambda=2").unwrap();
        let t = recurrence_table(&d, 3);
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.rows[0], Poly::one());
        for (i, row) in t.rows.iter().enumerate() {
            assert!(row.degree().unwrap_or(0) <= i, "degree(Q_{i},3)");
        }
        // lead(Q_{n,n}) = (−1)^n Π (1 − jδ); δ = 0 here
        assert!((t.rows[3].lead().unwrap() - (-1.0)).abs() < 1e-12);
    }
}
