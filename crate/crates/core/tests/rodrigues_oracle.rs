//! Verification of the recurrence-built polynomials against oracles that
//! share none of its code path: exact Gram–Schmidt over moments, the
//! direct Rodrigues formula, and hand-interpolated closed forms.

mod common;

use common::{
    battery_kmax, exact_lead, exact_moments, gram_schmidt_monic, rat_of, to_f64, BATTERY,
};
use steinpearson::pearson::{parse_distribution, support_grid};
use steinpearson::polynomial::{binomial, Poly};
use steinpearson::rodrigues::{build_system, inversion_residual, rodrigues_direct};
use steinpearson::stein::{expect, ExpectOptions};

/// Exact Gram–Schmidt over exact moments, scaled by the exact leading
/// coefficient, must reproduce every constructed polynomial on a grid.
#[test]
fn recurrence_matches_exact_gram_schmidt() {
    for spec in BATTERY {
        let d = parse_distribution(spec).unwrap();
        let kmax = battery_kmax(spec);
        let sys = build_system(&d, kmax).unwrap();
        let moments = exact_moments(spec, 2 * kmax as usize);
        let monic = gram_schmidt_monic(&moments, kmax as usize);
        let delta = rat_of(d.quadratic().delta);
        for k in 0..=kmax {
            let oracle = monic[k as usize].scale(&exact_lead(&delta, k));
            let built = sys.poly(k).unwrap();
            for x in support_grid(&d, 15) {
                let expected = to_f64(&oracle.eval(&rat_of(x)));
                let got = built.eval(&x);
                assert!(
                    (got - expected).abs() <= 1e-9 * (1.0 + expected.abs()),
                    "{spec} k={k} x={x}: recurrence {got} vs gram-schmidt {expected}"
                );
            }
        }
    }
}

/// Discrete members: the alternating-sum Rodrigues formula is exact and
/// must agree with the recurrence at every checked support point.
#[test]
fn discrete_direct_formula_agrees_up_to_k6() {
    for spec in BATTERY
        .iter()
        .filter(|s| parse_distribution(s).unwrap().is_discrete())
    {
        let d = parse_distribution(spec).unwrap();
        let sys = build_system(&d, 6).unwrap();
        for k in 0..=6u32 {
            for x in support_grid(&d, 15) {
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

/// Continuous members: the finite-difference oracle carries a float noise
/// floor of roughly 2^k ε q^k / h^k, so the comparison tolerance widens
/// with k. The 1e-7-level verification for k up to 6 comes from the exact
/// Gram–Schmidt oracle above.
#[test]
fn continuous_finite_difference_oracle_tracks_recurrence() {
    let tol_by_k = [0.0, 1e-9, 1e-7, 1e-5, 1e-3];
    for spec in BATTERY
        .iter()
        .filter(|s| !parse_distribution(s).unwrap().is_discrete())
    {
        let d = parse_distribution(spec).unwrap();
        let sys = build_system(&d, 4).unwrap();
        for k in 1..=4u32 {
            for x in support_grid(&d, 15) {
                if d.weight(x) <= 0.0 {
                    continue;
                }
                let direct = rodrigues_direct(&d, k, x).unwrap();
                let rec = sys.poly(k).unwrap().eval(&x);
                let scale = 1.0 + rec.abs() + d.quadratic().eval(x).powi(k as i32);
                assert!(
                    (direct - rec).abs() <= tol_by_k[k as usize] * scale,
                    "{spec} k={k} x={x}: direct {direct} vs recurrence {rec}"
                );
            }
        }
    }
}

/// Interpolate the direct-formula values of the Poisson P_2 at five points
/// and recover the closed form (x − λ)² − x exactly.
#[test]
fn poisson_p2_from_interpolated_direct_values() {
    let d = parse_distribution("poisson:lambda=2").unwrap();
    // Newton divided differences at x = 0..4
    let xs: Vec<f64> = (0..5).map(|x| x as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| rodrigues_direct(&d, 2, x).unwrap())
        .collect();
    let mut table = ys.clone();
    let mut coeffs = vec![table[0]];
    for level in 1..xs.len() {
        for i in 0..(xs.len() - level) {
            table[i] = (table[i + 1] - table[i]) / (xs[i + level] - xs[i]);
        }
        coeffs.push(table[0]);
    }
    // expand the Newton form into monomial coefficients
    let mut poly = Poly::<f64>::zero();
    let mut basis = Poly::<f64>::one();
    for (i, c) in coeffs.iter().enumerate() {
        poly = poly.add_poly(&basis.scale(c));
        if i < xs.len() - 1 {
            basis = basis.mul_poly(&Poly::new(vec![-xs[i], 1.0]));
        }
    }
    // (x − 2)² − x = 4 − 5x + x²
    let expected = [4.0, -5.0, 1.0];
    assert_eq!(poly.degree(), Some(2));
    for (i, &e) in expected.iter().enumerate() {
        assert!(
            (poly.coeffs()[i] - e).abs() < 1e-9,
            "coefficient {i}: {} vs {e}",
            poly.coeffs()[i]
        );
    }
}

/// E[P_k] vanishes for k ≥ 1 (orthogonality to P_0), and the extracted
/// leading coefficient matches the closed product.
#[test]
fn zero_mean_and_lead_extraction() {
    let opts = ExpectOptions::default();
    for spec in BATTERY {
        let d = parse_distribution(spec).unwrap();
        let kmax = battery_kmax(spec);
        let sys = build_system(&d, kmax).unwrap();
        for k in 1..=kmax {
            let pk = sys.poly(k).unwrap();
            let mean = expect(&d, &|x| pk.eval(&x), &opts).unwrap();
            let norm = sys.sq_norm(k).unwrap().sqrt();
            assert!(
                mean.abs() <= 1e-9 * (1.0 + norm),
                "{spec} k={k}: E[P_k] = {mean}, norm {norm}"
            );
            let lead = *pk.lead().unwrap();
            let closed = sys.lead(k).unwrap();
            assert!(
                (lead - closed).abs() <= 1e-10 * (1.0 + closed.abs()),
                "{spec} k={k}: lead {lead} vs closed {closed}"
            );
        }
    }
}

/// Degenerate finite-support case: past the support size the ascending
/// product annihilates everything, so norms are exactly zero while the
/// inversion and identity relations hold as 0 = 0.
#[test]
fn binomial_small_support_degeneracy() {
    let d = parse_distribution("binomial:n=2,p=0.5").unwrap();
    let sys = build_system(&d, 5).unwrap();
    for k in 3..=5u32 {
        assert_eq!(sys.sq_norm(k).unwrap(), 0.0);
        // q^{[k]}(x − j) p(x − j) vanishes for every support point
        for x in [0.0, 1.0, 2.0] {
            let direct = rodrigues_direct(&d, k, x).unwrap();
            assert!(direct.abs() < 1e-9, "k={k} x={x}: {direct}");
        }
    }
}

/// Spot inversion checks on both kinds of member, away from the
/// acceptance battery's full sweep.
#[test]
fn inversion_residuals_small() {
    let cases = [
        ("poisson:lambda=2", 1u32, 3.0),
        ("poisson:lambda=2", 3, 1.0),
        ("negative_binomial:r=3,p=0.4", 2, 4.0),
        ("normal:mu=0,var=1", 1, 0.0),
        ("normal:mu=0,var=1", 4, 0.7),
        ("gamma:a=3,lambda=2", 2, 1.0),
        ("uniform:a=0,b=1", 3, 0.4),
        ("student_t:n=15", 2, -0.5),
    ];
    for (spec, k, x) in cases {
        let d = parse_distribution(spec).unwrap();
        let sys = build_system(&d, k).unwrap();
        let r = inversion_residual(&d, &sys, k, x).unwrap();
        assert!(r <= 1e-6, "{spec} k={k} x={x}: residual {r}");
    }
}

/// The direct formula's alternating sum uses binomial weights; pin the
/// helper against Pascal's rule as used there.
#[test]
fn binomial_helper_pascal() {
    for n in 1..=12u32 {
        for k in 1..n {
            let lhs = binomial(n, k);
            let rhs = binomial(n - 1, k - 1) + binomial(n - 1, k);
            assert_eq!(lhs, rhs);
        }
    }
}
