//! Shared test oracles: exact-rational moments for the standard battery
//! and a Gram–Schmidt construction of the orthogonal polynomials that is
//! fully independent of the library's recurrence.
#![allow(dead_code)] // not every test binary uses every oracle

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use steinpearson::polynomial::Poly;

/// The eight-member battery used across the verification suites.
pub const BATTERY: [&str; 8] = [
    "poisson:lambda=2",
    "binomial:n=10,p=0.3",
    "negative_binomial:r=3,p=0.4",
    "discrete_uniform:n=10",
    "normal:mu=0,var=1",
    "gamma:a=3,lambda=2",
    "uniform:a=0,b=1",
    "student_t:n=15",
];

/// Highest polynomial order exercised per battery member.
pub fn battery_kmax(spec: &str) -> u32 {
    if spec.starts_with("student_t") {
        7
    } else {
        6
    }
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact lift of the f64 the library actually uses as a parameter.
pub fn rat_of(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Stirling numbers of the second kind S(n, k), exact.
fn stirling2(upto: usize) -> Vec<Vec<BigRational>> {
    let mut rows: Vec<Vec<BigRational>> = vec![vec![BigRational::one()]];
    for n in 1..=upto {
        let prev = &rows[n - 1];
        let mut row = vec![BigRational::zero(); n + 1];
        for (k, s) in prev.iter().enumerate() {
            row[k] = &row[k] + s * rat_int(k as i64);
            row[k + 1] = &row[k + 1] + s;
        }
        rows.push(row);
    }
    rows
}

fn rising(x: &BigRational, n: usize) -> BigRational {
    let mut acc = BigRational::one();
    for j in 0..n {
        acc *= x + rat_int(j as i64);
    }
    acc
}

fn falling(x: &BigRational, n: usize) -> BigRational {
    let mut acc = BigRational::one();
    for j in 0..n {
        acc *= x - rat_int(j as i64);
    }
    acc
}

/// Exact raw moments E[X^n], n = 0..=upto, for a battery member. isolates
/// the oracle from the library's moment code entirely.
pub fn exact_moments(spec: &str, upto: usize) -> Vec<BigRational> {
    let s2 = stirling2(upto);
    let factorial_moments_to_raw = |phi: &dyn Fn(usize) -> BigRational| -> Vec<BigRational> {
        // E[X^n] = Σ_k S(n,k) E[(X)_k]
        (0..=upto)
            .map(|n| {
                let mut acc = BigRational::zero();
                for (k, s) in s2[n].iter().enumerate() {
                    acc += s * phi(k);
                }
                acc
            })
            .collect()
    };
    match spec {
        "poisson:lambda=2" => {
            // E[(X)_k] = λ^k
            let lambda = rat_int(2);
            factorial_moments_to_raw(&|k| {
                let mut acc = BigRational::one();
                for _ in 0..k {
                    acc *= &lambda;
                }
                acc
            })
        }
        "binomial:n=10,p=0.3" => {
            let p = rat_of(0.3);
            factorial_moments_to_raw(&|k| {
                let mut acc = falling(&rat_int(10), k);
                for _ in 0..k {
                    acc *= &p;
                }
                acc
            })
        }
        "negative_binomial:r=3,p=0.4" => {
            // E[(X)_k] = [r]_k ((1−p)/p)^k
            let p = rat_of(0.4);
            let ratio = (BigRational::one() - &p) / &p;
            factorial_moments_to_raw(&|k| {
                let mut acc = rising(&rat_int(3), k);
                for _ in 0..k {
                    acc *= &ratio;
                }
                acc
            })
        }
        "discrete_uniform:n=10" => (0..=upto)
            .map(|n| {
                let mut acc = BigRational::zero();
                for x in 1..=10i64 {
                    let mut pw = BigRational::one();
                    for _ in 0..n {
                        pw *= rat_int(x);
                    }
                    acc += pw;
                }
                acc / rat_int(10)
            })
            .collect(),
        "normal:mu=0,var=1" => (0..=upto)
            .map(|n| {
                if n % 2 == 1 {
                    BigRational::zero()
                } else {
                    let mut acc = BigRational::one();
                    let mut m = 1i64;
                    while m < n as i64 {
                        acc *= rat_int(m);
                        m += 2;
                    }
                    acc
                }
            })
            .collect(),
        "gamma:a=3,lambda=2" => (0..=upto)
            .map(|n| {
                // [a]_n / λ^n with a = 3, λ = 2
                let mut acc = rising(&rat_int(3), n);
                for _ in 0..n {
                    acc /= rat_int(2);
                }
                acc
            })
            .collect(),
        "uniform:a=0,b=1" => (0..=upto).map(|n| rat(1, n as i64 + 1)).collect(),
        "student_t:n=15" => (0..=upto)
            .map(|n| {
                if n % 2 == 1 {
                    return BigRational::zero();
                }
                let m = n / 2;
                assert!(n <= 14, "t_15 has only 14 finite moments");
                let mut acc = BigRational::one();
                for j in 1..=m {
                    acc *= rat_int(15) * rat(2 * j as i64 - 1, 15 - 2 * j as i64);
                }
                acc
            })
            .collect(),
        other => panic!("no exact moments for `{other}`"),
    }
}

fn inner_product(
    p: &Poly<BigRational>,
    q: &Poly<BigRational>,
    moments: &[BigRational],
) -> BigRational {
    let mut acc = BigRational::zero();
    for (i, a) in p.coeffs().iter().enumerate() {
        for (j, b) in q.coeffs().iter().enumerate() {
            acc += a * b * &moments[i + j];
        }
    }
    acc
}

/// Monic orthogonal polynomials by exact Gram–Schmidt over the moment
/// sequence; requires moments up to 2n.
pub fn gram_schmidt_monic(moments: &[BigRational], n: usize) -> Vec<Poly<BigRational>> {
    assert!(moments.len() > 2 * n);
    let mut out: Vec<Poly<BigRational>> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = BigRational::one();
        let mut p = Poly::new(coeffs);
        for q in &out {
            let c = inner_product(&p, q, moments) / inner_product(q, q, moments);
            p = p.sub_poly(&q.scale(&c));
        }
        out.push(p);
    }
    out
}

/// Exact Π_{j=k−1}^{2k−2} (1 − jδ) from a rational δ.
pub fn exact_lead(delta: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    if k == 0 {
        return acc;
    }
    for j in (k - 1)..=(2 * k - 2) {
        acc *= BigRational::one() - rat_int(j as i64) * delta;
    }
    acc
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("fits f64")
}
