//! Dense polynomial arithmetic in the monomial basis.
//!
//! Everything downstream (the Rodrigues recurrences, the identity checks,
//! the variance bounds) manipulates low-degree polynomials, so this module
//! keeps the representation dead simple: a coefficient vector with
//! trailing zeros trimmed. All operations are generic over a [`Scalar`]
//! that is either `f64` or an exact `BigRational`; exact mode removes
//! arithmetic drift from the recurrence constructions.

use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficient ring for [`Poly`]: binary64 floats or exact rationals.
pub trait Scalar: Clone + PartialEq + PartialOrd + Signed + FromPrimitive + fmt::Debug {
    /// Trim predicate: is this coefficient negligible relative to the
    /// largest coefficient magnitude of the polynomial it sits in?
    fn is_negligible(&self, scale: &Self) -> bool;
}

impl Scalar for f64 {
    fn is_negligible(&self, scale: &Self) -> bool {
        // |c| <= 1e-12 * max|coeffs|; for an all-zero scale only exact
        // zeros qualify, which keeps degrees honest after cancellation.
        self.abs() <= 1e-12 * scale.abs()
    }
}

impl Scalar for BigRational {
    fn is_negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }
}

/// Dense real polynomial; `coeffs[i]` multiplies `x^i`. The zero
/// polynomial is the empty coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T: Scalar> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    /// Build from coefficients (ascending powers); trailing negligible
    /// coefficients are trimmed.
    pub fn new(coeffs: Vec<T>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// The monomial x.
    pub fn x() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Leading coefficient, or `None` for the zero polynomial.
    pub fn lead(&self) -> Option<&T> {
        self.coeffs.last()
    }

    fn trim(&mut self) {
        let scale = self.coeffs.iter().fold(
            T::zero(),
            |acc, c| if c.abs() > acc { c.abs() } else { acc },
        );
        while let Some(last) = self.coeffs.last() {
            if last.is_negligible(&scale) {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    /// First derivative.
    pub fn derivative_once(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.clone() * T::from_usize(i).expect("small integer"))
            .collect();
        Self::new(coeffs)
    }

    /// Exact k-th derivative; zero polynomial once k exceeds the degree.
    pub fn derivative(&self, k: u32) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            if p.is_zero() {
                break;
            }
            p = p.derivative_once();
        }
        p
    }

    /// The polynomial x ↦ p(x + a), via the synthetic Taylor shift, which
    /// is exact in rational mode.
    pub fn shift(&self, a: &T) -> Self {
        if self.coeffs.len() <= 1 || a.is_zero() {
            return self.clone();
        }
        let mut c = self.coeffs.clone();
        let d = c.len() - 1;
        for i in 0..d {
            for j in (i..d).rev() {
                let bump = a.clone() * c[j + 1].clone();
                c[j] = c[j].clone() + bump;
            }
        }
        Self::new(c)
    }

    /// One forward difference: Δp(x) = p(x+1) − p(x).
    pub fn forward_difference_once(&self) -> Self {
        self.shift(&T::one()).sub_poly(self)
    }

    /// k-fold forward difference, computed by exact polynomial shifts; the
    /// degree drops by exactly k while k ≤ degree.
    pub fn forward_difference(&self, k: u32) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            if p.is_zero() {
                break;
            }
            p = p.forward_difference_once();
        }
        p
    }

    pub fn add_poly(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).cloned().unwrap_or_else(T::zero);
            let b = other.coeffs.get(i).cloned().unwrap_or_else(T::zero);
            coeffs.push(a + b);
        }
        Self::new(coeffs)
    }

    pub fn sub_poly(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).cloned().unwrap_or_else(T::zero);
            let b = other.coeffs.get(i).cloned().unwrap_or_else(T::zero);
            coeffs.push(a - b);
        }
        Self::new(coeffs)
    }

    pub fn mul_poly(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                let prod = a.clone() * b.clone();
                coeffs[i + j] = coeffs[i + j].clone() + prod;
            }
        }
        Self::new(coeffs)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn neg_poly(&self) -> Self {
        Self::new(self.coeffs.iter().map(|a| -a.clone()).collect())
    }
}

impl Poly<BigRational> {
    /// Lossy conversion to float coefficients.
    pub fn to_f64(&self) -> Poly<f64> {
        Poly::new(
            self.coeffs()
                .iter()
                .map(|c| c.to_f64().expect("rational fits in f64"))
                .collect(),
        )
    }
}

impl Poly<f64> {
    /// Exact lift of float coefficients into rationals (every finite f64
    /// is a dyadic rational).
    pub fn to_rational(&self) -> Poly<BigRational> {
        Poly::new(
            self.coeffs()
                .iter()
                .map(|&c| BigRational::from_float(c).expect("finite coefficient"))
                .collect(),
        )
    }
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: Self) -> Poly<T> {
        self.add_poly(rhs)
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: Self) -> Poly<T> {
        self.sub_poly(rhs)
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: Self) -> Poly<T> {
        self.mul_poly(rhs)
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        self.neg_poly()
    }
}

impl fmt::Display for Poly<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if first {
                write!(f, "{c}")?;
                first = false;
            } else if c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "*x")?,
                _ => write!(f, "*x^{i}")?,
            }
        }
        Ok(())
    }
}

// ============================================================================
// Factorial helpers
// ============================================================================

/// Falling factorial (x)_n = x (x−1) ⋯ (x−n+1), with (x)_0 = 1.
pub fn falling_factorial(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for j in 0..n {
        acc *= x - j as f64;
    }
    acc
}

/// Rising factorial [x]_n = x (x+1) ⋯ (x+n−1), with [x]_0 = 1.
pub fn rising_factorial(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for j in 0..n {
        acc *= x + j as f64;
    }
    acc
}

/// n! as a float; overflows to infinity beyond 170!.
pub fn factorial(n: u32) -> f64 {
    let mut acc = 1.0;
    for j in 2..=n {
        acc *= j as f64;
    }
    acc
}

/// Binomial coefficient C(n, k) as a float, exact for the small orders
/// used here.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}
