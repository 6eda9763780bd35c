//! The distribution model: continuous Pearson and discrete Ord families.
//!
//! A member of either family is determined by a quadratic q(x) = δx² + βx
//! + γ tied to the weight through the defining relation
//!
//! ```text
//! discrete:    Σ_{j ≤ x} (μ − j) p(j) = q(x) p(x)
//! continuous:  ∫_r^x (μ − t) f(t) dt  = q(x) f(x)
//! ```
//!
//! Eight classical families ship as built-ins; custom weights are admitted
//! but validated against the defining relation at construction, because
//! every identity downstream is meaningless off the family.

use crate::error::{Error, Result};
use crate::polynomial::{binomial, factorial, falling_factorial, rising_factorial, Poly};
use crate::rng::SplitMix64;
use crate::special::{ln_beta, ln_gamma};
use num_rational::BigRational;
use std::fmt;
use std::sync::Arc;

/// Shared weight evaluator (pmf or density).
pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

// ============================================================================
// Quadratic
// ============================================================================

/// The Pearson quadratic q(x) = δx² + βx + γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Quadratic {
    pub fn new(delta: f64, beta: f64, gamma: f64) -> Self {
        Self { delta, beta, gamma }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.delta * x + self.beta) * x + self.gamma
    }

    pub fn discriminant(&self) -> f64 {
        self.beta * self.beta - 4.0 * self.delta * self.gamma
    }

    pub fn as_poly(&self) -> Poly<f64> {
        Poly::new(vec![self.gamma, self.beta, self.delta])
    }
}

impl fmt::Display for Quadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_poly())
    }
}

/// Exact-rational copy of the quadratic and mean, used by the drift-free
/// recurrence construction.
#[derive(Debug, Clone)]
pub struct ExactQuadratic {
    pub delta: BigRational,
    pub beta: BigRational,
    pub gamma: BigRational,
    pub mean: BigRational,
}

// ============================================================================
// Support
// ============================================================================

/// Support of a family member: a real interval or an integer interval.
/// Endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    ContinuousInterval { lower: f64, upper: f64 },
    IntegerInterval { lower: f64, upper: f64 },
}

impl Support {
    pub fn is_discrete(&self) -> bool {
        matches!(self, Support::IntegerInterval { .. })
    }

    pub fn lower(&self) -> f64 {
        match self {
            Support::ContinuousInterval { lower, .. } => *lower,
            Support::IntegerInterval { lower, .. } => *lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            Support::ContinuousInterval { upper, .. } => *upper,
            Support::IntegerInterval { upper, .. } => *upper,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Support::ContinuousInterval { lower, upper } => x > *lower && x < *upper,
            Support::IntegerInterval { lower, upper } => {
                x >= *lower && x <= *upper && (x - x.round()).abs() < 1e-9
            }
        }
    }

    /// Number of support points for a finite integer interval.
    pub fn point_count(&self) -> Option<u64> {
        match self {
            Support::IntegerInterval { lower, upper } if lower.is_finite() && upper.is_finite() => {
                Some((*upper - *lower) as u64 + 1)
            }
            _ => None,
        }
    }
}

/// Highest guaranteed finite integral moment order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentCeiling {
    Infinite,
    Finite(u32),
}

impl MomentCeiling {
    pub fn at_least(&self, order: u32) -> bool {
        match self {
            MomentCeiling::Infinite => true,
            MomentCeiling::Finite(m) => order <= *m,
        }
    }

    pub fn as_u32_or_max(&self) -> u32 {
        match self {
            MomentCeiling::Infinite => u32::MAX,
            MomentCeiling::Finite(m) => *m,
        }
    }
}

impl fmt::Display for MomentCeiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentCeiling::Infinite => write!(f, "inf"),
            MomentCeiling::Finite(m) => write!(f, "{m}"),
        }
    }
}

// ============================================================================
// Families
// ============================================================================

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Family {
    Poisson { lambda: f64 },
    Binomial { n: u32, p: f64 },
    NegBinomial { r: f64, p: f64 },
    DiscreteUniform { n: u32 },
    Normal { mu: f64, var: f64 },
    Gamma { a: f64, lambda: f64 },
    Beta { a: f64, b: f64 },
    Uniform { a: f64, b: f64 },
    StudentT { n: u32 },
    Custom,
}

/// A member of the Pearson (continuous) or Ord (discrete) family.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Clone)]
pub struct PearsonDistribution {
    name: String,
    params: Vec<(String, f64)>,
    support: Support,
    quadratic: Quadratic,
    mean: f64,
    std_dev: f64,
    weight: WeightFn,
    max_finite_moment: MomentCeiling,
    mgf_finite_near_zero: bool,
    pub(crate) family: Family,
    exact: Option<ExactQuadratic>,
}

impl fmt::Debug for PearsonDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PearsonDistribution")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("support", &self.support)
            .field("quadratic", &self.quadratic)
            .field("mean", &self.mean)
            .finish_non_exhaustive()
    }
}

impl PearsonDistribution {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_discrete(&self) -> bool {
        self.support.is_discrete()
    }

    pub fn quadratic(&self) -> Quadratic {
        self.quadratic
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Var X; equals E[q(X)] on the family.
    pub fn variance(&self) -> f64 {
        self.std_dev * self.std_dev
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// pmf (discrete) or density (continuous) at x; zero off the support.
    pub fn weight(&self, x: f64) -> f64 {
        (self.weight)(x)
    }

    pub fn max_finite_moment(&self) -> MomentCeiling {
        self.max_finite_moment
    }

    pub fn has_finite_moments(&self, order: u32) -> bool {
        self.max_finite_moment.at_least(order)
    }

    pub fn mgf_finite_near_zero(&self) -> bool {
        self.mgf_finite_near_zero
    }

    pub(crate) fn exact_quadratic(&self) -> Option<&ExactQuadratic> {
        self.exact.as_ref()
    }

    /// Canonical spec string (`name:key=value,...`) that reparses to this
    /// distribution.
    pub fn spec_string(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let params = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",");
        format!("{}:{}", self.name, params)
    }
}

// ============================================================================
// Built-in construction
// ============================================================================

fn invalid(name: &str, constraint: &str) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        constraint: constraint.into(),
    }
}

struct ParamMap<'a> {
    family: &'a str,
    entries: Vec<(String, f64)>,
    used: Vec<bool>,
}

impl<'a> ParamMap<'a> {
    fn new(family: &'a str, params: &[(&str, f64)]) -> Self {
        Self {
            family,
            entries: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            used: vec![false; params.len()],
        }
    }

    fn take(&mut self, key: &str) -> Result<f64> {
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if k == key {
                self.used[i] = true;
                return Ok(*v);
            }
        }
        Err(Error::Parse(format!(
            "distribution `{}` requires parameter `{key}`",
            self.family
        )))
    }

    fn finish(self) -> Result<Vec<(String, f64)>> {
        for (i, used) in self.used.iter().enumerate() {
            if !used {
                return Err(Error::Parse(format!(
                    "unexpected parameter `{}` for distribution `{}`",
                    self.entries[i].0, self.family
                )));
            }
        }
        Ok(self.entries)
    }
}

fn require_positive_int(v: f64, name: &str, min: u32) -> Result<u32> {
    if !v.is_finite() || (v - v.round()).abs() > 1e-9 || v < min as f64 || v > u32::MAX as f64 {
        return Err(invalid(name, &format!("must be an integer >= {min}")));
    }
    Ok(v.round() as u32)
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite parameter")
}

fn rat_int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Construct one of the built-in family members.
///
/// Recognized names: `poisson` (lambda), `binomial` (n, p),
/// `negative_binomial` (r, p), `geometric` (theta), `discrete_uniform` (n),
/// `normal` (mu, var), `gamma` (a, lambda), `exponential` (lambda),
/// `beta` (a, b), `uniform` (a, b), `student_t` (n).
pub fn make_builtin(name: &str, params: &[(&str, f64)]) -> Result<PearsonDistribution> {
    for (k, v) in params {
        if !v.is_finite() {
            return Err(invalid(k, "must be finite"));
        }
    }
    let mut map = ParamMap::new(name, params);
    let dist = match name {
        "poisson" => {
            let lambda = map.take("lambda")?;
            if lambda <= 0.0 {
                return Err(invalid("lambda", "must satisfy lambda > 0"));
            }
            let weight: WeightFn = Arc::new(move |x: f64| {
                let k = x.round();
                if k < 0.0 || (x - k).abs() > 1e-9 {
                    return 0.0;
                }
                (k * lambda.ln() - lambda - ln_gamma(k + 1.0)).exp()
            });
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::IntegerInterval {
                    lower: 0.0,
                    upper: f64::INFINITY,
                },
                quadratic: Quadratic::new(0.0, 0.0, lambda),
                mean: lambda,
                std_dev: lambda.sqrt(),
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::Poisson { lambda },
                exact: Some(ExactQuadratic {
                    delta: rat_int(0),
                    beta: rat_int(0),
                    gamma: rational(lambda),
                    mean: rational(lambda),
                }),
            }
        }
        "binomial" => {
            let n = require_positive_int(map.take("n")?, "n", 1)?;
            let p = map.take("p")?;
            if !(0.0 < p && p < 1.0) {
                return Err(invalid("p", "must satisfy 0 < p < 1"));
            }
            let nf = n as f64;
            let weight: WeightFn = Arc::new(move |x: f64| {
                let k = x.round();
                if k < 0.0 || k > nf || (x - k).abs() > 1e-9 {
                    return 0.0;
                }
                (ln_gamma(nf + 1.0) - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0)
                    + k * p.ln()
                    + (nf - k) * (1.0 - p).ln())
                .exp()
            });
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::IntegerInterval {
                    lower: 0.0,
                    upper: nf,
                },
                // q(x) = (N − x) p
                quadratic: Quadratic::new(0.0, -p, nf * p),
                mean: nf * p,
                std_dev: (nf * p * (1.0 - p)).sqrt(),
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::Binomial { n, p },
                exact: Some(ExactQuadratic {
                    delta: rat_int(0),
                    beta: -rational(p),
                    gamma: rat_int(n as i64) * rational(p),
                    mean: rat_int(n as i64) * rational(p),
                }),
            }
        }
        "negative_binomial" | "geometric" => {
            let (r, p, params) = if name == "geometric" {
                let theta = map.take("theta")?;
                if !(0.0 < theta && theta < 1.0) {
                    return Err(invalid("theta", "must satisfy 0 < theta < 1"));
                }
                (1.0, theta, map.finish()?)
            } else {
                let r = map.take("r")?;
                let p = map.take("p")?;
                if r <= 0.0 {
                    return Err(invalid("r", "must satisfy r > 0"));
                }
                if !(0.0 < p && p < 1.0) {
                    return Err(invalid("p", "must satisfy 0 < p < 1"));
                }
                (r, p, map.finish()?)
            };
            let weight: WeightFn = Arc::new(move |x: f64| {
                let k = x.round();
                if k < 0.0 || (x - k).abs() > 1e-9 {
                    return 0.0;
                }
                (ln_gamma(r + k) - ln_gamma(r) - ln_gamma(k + 1.0)
                    + r * p.ln()
                    + k * (1.0 - p).ln())
                .exp()
            });
            let ratio = (1.0 - p) / p;
            let exact_ratio = (rat_int(1) - rational(p)) / rational(p);
            PearsonDistribution {
                name: name.into(),
                params,
                support: Support::IntegerInterval {
                    lower: 0.0,
                    upper: f64::INFINITY,
                },
                // q(x) = (1 − p)(r + x)/p
                quadratic: Quadratic::new(0.0, ratio, r * ratio),
                mean: r * ratio,
                std_dev: (r * (1.0 - p)).sqrt() / p,
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::NegBinomial { r, p },
                exact: Some(ExactQuadratic {
                    delta: rat_int(0),
                    beta: exact_ratio.clone(),
                    gamma: rational(r) * exact_ratio.clone(),
                    mean: rational(r) * exact_ratio,
                }),
            }
        }
        "discrete_uniform" => {
            let n = require_positive_int(map.take("n")?, "n", 1)?;
            let nf = n as f64;
            let weight: WeightFn = Arc::new(move |x: f64| {
                let k = x.round();
                if k < 1.0 || k > nf || (x - k).abs() > 1e-9 {
                    return 0.0;
                }
                1.0 / nf
            });
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::IntegerInterval {
                    lower: 1.0,
                    upper: nf,
                },
                // q(x) = x (N − x) / 2
                quadratic: Quadratic::new(-0.5, nf / 2.0, 0.0),
                mean: (nf + 1.0) / 2.0,
                std_dev: ((nf * nf - 1.0) / 12.0).sqrt(),
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::DiscreteUniform { n },
                exact: Some(ExactQuadratic {
                    delta: BigRational::new((-1).into(), 2.into()),
                    beta: BigRational::new((n as i64).into(), 2.into()),
                    gamma: rat_int(0),
                    mean: BigRational::new((n as i64 + 1).into(), 2.into()),
                }),
            }
        }
        "normal" => {
            let mu = map.take("mu")?;
            let var = map.take("var")?;
            if var <= 0.0 {
                return Err(invalid("var", "must satisfy var > 0"));
            }
            let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
            let weight: WeightFn =
                Arc::new(move |x: f64| norm * (-(x - mu) * (x - mu) / (2.0 * var)).exp());
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::ContinuousInterval {
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                },
                quadratic: Quadratic::new(0.0, 0.0, var),
                mean: mu,
                std_dev: var.sqrt(),
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::Normal { mu, var },
                exact: None,
            }
        }
        "gamma" | "exponential" => {
            let (a, lambda, params) = if name == "exponential" {
                let lambda = map.take("lambda")?;
                if lambda <= 0.0 {
                    return Err(invalid("lambda", "must satisfy lambda > 0"));
                }
                (1.0, lambda, map.finish()?)
            } else {
                let a = map.take("a")?;
                let lambda = map.take("lambda")?;
                if a <= 0.0 {
                    return Err(invalid("a", "must satisfy a > 0"));
                }
                if lambda <= 0.0 {
                    return Err(invalid("lambda", "must satisfy lambda > 0"));
                }
                (a, lambda, map.finish()?)
            };
            let lg_a = ln_gamma(a);
            let weight: WeightFn = Arc::new(move |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                let shape_term = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
                (a * lambda.ln() + shape_term - lambda * x - lg_a).exp()
            });
            PearsonDistribution {
                name: name.into(),
                params,
                support: Support::ContinuousInterval {
                    lower: 0.0,
                    upper: f64::INFINITY,
                },
                // q(x) = x / λ
                quadratic: Quadratic::new(0.0, 1.0 / lambda, 0.0),
                mean: a / lambda,
                std_dev: a.sqrt() / lambda,
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::Gamma { a, lambda },
                exact: None,
            }
        }
        "beta" => {
            let a = map.take("a")?;
            let b = map.take("b")?;
            if a <= 0.0 {
                return Err(invalid("a", "must satisfy a > 0"));
            }
            if b <= 0.0 {
                return Err(invalid("b", "must satisfy b > 0"));
            }
            let lb = ln_beta(a, b);
            let weight: WeightFn = Arc::new(move |x: f64| {
                if x <= 0.0 || x >= 1.0 {
                    return 0.0;
                }
                let ta = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
                let tb = if b == 1.0 {
                    0.0
                } else {
                    (b - 1.0) * (1.0 - x).ln()
                };
                (ta + tb - lb).exp()
            });
            let s = a + b;
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::ContinuousInterval {
                    lower: 0.0,
                    upper: 1.0,
                },
                // q(x) = x (1 − x) / (a + b)
                quadratic: Quadratic::new(-1.0 / s, 1.0 / s, 0.0),
                mean: a / s,
                std_dev: (a * b / (s * s * (s + 1.0))).sqrt(),
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::Beta { a, b },
                exact: None,
            }
        }
        "uniform" => {
            let a = map.take("a")?;
            let b = map.take("b")?;
            if a >= b {
                return Err(invalid("a", "must satisfy a < b"));
            }
            let dens = 1.0 / (b - a);
            let weight: WeightFn = Arc::new(move |x: f64| if x > a && x < b { dens } else { 0.0 });
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::ContinuousInterval { lower: a, upper: b },
                // q(x) = (x − a)(b − x)/2
                quadratic: Quadratic::new(-0.5, (a + b) / 2.0, -a * b / 2.0),
                mean: (a + b) / 2.0,
                std_dev: (b - a) / 12f64.sqrt(),
                weight,
                max_finite_moment: MomentCeiling::Infinite,
                mgf_finite_near_zero: true,
                family: Family::Uniform { a, b },
                exact: None,
            }
        }
        "student_t" => {
            let n = require_positive_int(map.take("n")?, "n", 2)?;
            let nf = n as f64;
            let log_norm = ln_gamma((nf + 1.0) / 2.0)
                - ln_gamma(nf / 2.0)
                - 0.5 * (nf * std::f64::consts::PI).ln();
            let weight: WeightFn = Arc::new(move |x: f64| {
                (log_norm - 0.5 * (nf + 1.0) * (1.0 + x * x / nf).ln()).exp()
            });
            // scale heuristic for the quadrature maps; the true variance is
            // N/(N−2) when it exists
            let std_dev = if n > 2 { (nf / (nf - 2.0)).sqrt() } else { 3.0 };
            PearsonDistribution {
                name: name.into(),
                params: map.finish()?,
                support: Support::ContinuousInterval {
                    lower: f64::NEG_INFINITY,
                    upper: f64::INFINITY,
                },
                // q(x) = (N + x²)/(N − 1)
                quadratic: Quadratic::new(1.0 / (nf - 1.0), 0.0, nf / (nf - 1.0)),
                mean: 0.0,
                std_dev,
                weight,
                max_finite_moment: MomentCeiling::Finite(n - 1),
                mgf_finite_near_zero: false,
                family: Family::StudentT { n },
                exact: None,
            }
        }
        other => return Err(Error::UnknownDistribution(other.into())),
    };
    check_quadratic_positive(&dist)?;
    Ok(dist)
}

/// q(x) must be strictly positive on the open interior of the support;
/// checked on a coarse grid. A finite upper endpoint is excluded: the
/// defining relation forces q to vanish there.
fn check_quadratic_positive(d: &PearsonDistribution) -> Result<()> {
    let upper = d.support.upper();
    for x in support_grid(d, 33) {
        if x >= upper {
            continue;
        }
        if d.quadratic.eval(x) <= 0.0 {
            return Err(Error::ValidationFailed(format!(
                "quadratic is not positive at interior point x = {x}"
            )));
        }
    }
    Ok(())
}

/// Representative interior points of the support, clustered around the
/// mass. Discrete supports yield integers.
pub fn support_grid(d: &PearsonDistribution, n: usize) -> Vec<f64> {
    let s = d.support();
    let (lo, hi) = (s.lower(), s.upper());
    let spread = 4.0 * d.std_dev().max(1e-6);
    if s.is_discrete() {
        let start = if lo.is_finite() {
            lo.max((d.mean() - spread).floor())
        } else {
            (d.mean() - spread).floor()
        };
        let mut pts = Vec::with_capacity(n);
        let mut x = start;
        while pts.len() < n && x <= hi {
            pts.push(x);
            x += 1.0;
        }
        pts
    } else {
        let a = if lo.is_finite() {
            lo.max(d.mean() - spread)
        } else {
            d.mean() - spread
        };
        let b = if hi.is_finite() {
            hi.min(d.mean() + spread)
        } else {
            d.mean() + spread
        };
        let (a, b) = if lo.is_finite() || hi.is_finite() {
            // keep a margin away from hard edges
            let width = b - a;
            (
                if lo.is_finite() { a + 0.02 * width } else { a },
                if hi.is_finite() { b - 0.02 * width } else { b },
            )
        } else {
            (a, b)
        };
        (0..n)
            .map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64)
            .collect()
    }
}

/// Parse a distribution spec string: `name:key=value[,key=value...]`,
/// e.g. `poisson:lambda=2` or `student_t:n=11`.
pub fn parse_distribution(spec: &str) -> Result<PearsonDistribution> {
    let grammar = "expected `name:key=value[,key=value...]`";
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    if name.is_empty() {
        return Err(Error::Parse(format!("empty distribution name; {grammar}")));
    }
    let mut params: Vec<(String, f64)> = Vec::new();
    if let Some(rest) = rest {
        for item in rest.split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(Error::Parse(format!(
                    "empty parameter in `{spec}`; {grammar}"
                )));
            }
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("`{item}` is not key=value; {grammar}")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("`{v}` is not a number; {grammar}")))?;
            let key = k.trim().to_string();
            if params.iter().any(|(existing, _)| *existing == key) {
                return Err(Error::Parse(format!("duplicate parameter `{key}`")));
            }
            params.push((key, value));
        }
    }
    let borrowed: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    make_builtin(name, &borrowed)
}

// ============================================================================
// Custom distributions
// ============================================================================

/// Ingredients for a user-supplied family member. The constructor verifies
/// the defining relation numerically and refuses weights that are not
/// actually Pearson/Ord.
pub struct CustomDistribution {
    pub name: String,
    pub weight: WeightFn,
    pub support: Support,
    pub mean: f64,
    pub quadratic: Quadratic,
    pub max_finite_moment: MomentCeiling,
    pub mgf_finite_near_zero: bool,
}

pub fn make_custom(spec: CustomDistribution) -> Result<PearsonDistribution> {
    if spec.support.lower().partial_cmp(&spec.support.upper()) != Some(std::cmp::Ordering::Less)
    {
        return Err(Error::ValidationFailed(
            "support lower endpoint must be below the upper endpoint".into(),
        ));
    }
    let mut dist = PearsonDistribution {
        name: spec.name,
        params: Vec::new(),
        support: spec.support,
        quadratic: spec.quadratic,
        mean: spec.mean,
        std_dev: 1.0 + spec.mean.abs(), // provisional scale for the engine
        weight: spec.weight,
        max_finite_moment: spec.max_finite_moment,
        mgf_finite_near_zero: spec.mgf_finite_near_zero,
        family: Family::Custom,
        exact: None,
    };
    check_quadratic_positive(&dist)?;

    let opts = crate::stein::ExpectOptions::default();

    // mass must normalize
    let total = crate::stein::expect(&dist, &|_| 1.0, &opts)
        .map_err(|e| Error::ValidationFailed(format!("weight does not normalize: {e}")))?;
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::ValidationFailed(format!(
            "weight mass is {total}, not 1"
        )));
    }

    // Var X = E[q(X)] on the family; this also pins the engine scale
    let q = dist.quadratic;
    let qvar = crate::stein::expect(&dist, &|x| q.eval(x), &opts)
        .map_err(|e| Error::ValidationFailed(format!("E[q(X)] did not converge: {e}")))?;
    if qvar <= 0.0 {
        return Err(Error::ValidationFailed(format!(
            "E[q(X)] = {qvar} is not positive"
        )));
    }
    dist.std_dev = qvar.sqrt();

    // the defining relation itself
    if dist.is_discrete() {
        let lo = dist.support.lower();
        if !lo.is_finite() {
            return Err(Error::ValidationFailed(
                "discrete custom support must have a finite lower endpoint".into(),
            ));
        }
        let hi = dist
            .support
            .upper()
            .min((dist.mean + 40.0 * dist.std_dev).round());
        let mut partial = 0.0;
        let mut x = lo;
        while x <= hi {
            let p = dist.weight(x);
            partial += (dist.mean - x) * p;
            let rhs = dist.quadratic.eval(x) * p;
            if (partial - rhs).abs() > 1e-9 * (1.0 + rhs.abs()) {
                return Err(Error::ValidationFailed(format!(
                    "Ord relation fails at x = {x}: partial sum {partial} vs q(x)p(x) = {rhs}"
                )));
            }
            x += 1.0;
        }
    } else {
        let mean = dist.mean;
        let w = dist.weight.clone();
        for x in support_grid(&dist, 25) {
            let lhs = crate::quad::integrate(
                &|t| (mean - t) * w(t),
                dist.support.lower(),
                x,
                dist.mean,
                dist.std_dev,
                1e-11,
                opts.max_panels,
            )
            .map_err(|e| Error::ValidationFailed(format!("defining integral: {e}")))?;
            let rhs = dist.quadratic.eval(x) * dist.weight(x);
            if (lhs - rhs).abs() > 1e-8 * (1.0 + rhs.abs()) {
                return Err(Error::ValidationFailed(format!(
                    "Pearson relation fails at x = {x}: integral {lhs} vs q(x)f(x) = {rhs}"
                )));
            }
        }
    }
    Ok(dist)
}

// ============================================================================
// q-products and moments
// ============================================================================

/// Ascending product q(x) q(x+1) ⋯ q(x+k−1) as a polynomial (discrete
/// distributions only); the empty product is 1.
pub fn q_ascending_product(d: &PearsonDistribution, k: u32) -> Result<Poly<f64>> {
    if !d.is_discrete() {
        return Err(Error::DiscreteOnly("q_ascending_product"));
    }
    let q = d.quadratic().as_poly();
    let mut acc = Poly::one();
    for j in 0..k {
        acc = acc.mul_poly(&q.shift(&(j as f64)));
    }
    Ok(acc)
}

/// q(x)^k as a polynomial (continuous distributions only).
pub fn q_power(d: &PearsonDistribution, k: u32) -> Result<Poly<f64>> {
    if d.is_discrete() {
        return Err(Error::ContinuousOnly("q_power"));
    }
    let q = d.quadratic().as_poly();
    let mut acc = Poly::one();
    for _ in 0..k {
        acc = acc.mul_poly(&q);
    }
    Ok(acc)
}

/// Direct-product evaluator of the order-k weight factor: q^{[k]}(x) for
/// discrete members, q(x)^k for continuous ones.
///
/// Unlike the dense polynomials from [`q_ascending_product`]/[`q_power`],
/// the product form has no coefficient representation to lose precision
/// in: the ascending product's leading coefficients shrink relative to
/// its bulk as k grows and would fall under the canonical trim rule.
#[derive(Debug, Clone, Copy)]
pub struct QFactor {
    q: Quadratic,
    k: u32,
    discrete: bool,
}

impl QFactor {
    pub fn eval(&self, x: f64) -> f64 {
        if self.discrete {
            let mut acc = 1.0;
            for j in 0..self.k {
                acc *= self.q.eval(x + j as f64);
            }
            acc
        } else {
            self.q.eval(x).powi(self.k as i32)
        }
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    /// Polynomial degree of the factor.
    pub fn degree(&self) -> u32 {
        if self.q.delta != 0.0 {
            2 * self.k
        } else if self.q.beta != 0.0 {
            self.k
        } else {
            0
        }
    }
}

/// The order-k weight factor of the identity for this distribution.
pub fn q_factor(d: &PearsonDistribution, k: u32) -> QFactor {
    QFactor {
        q: d.quadratic(),
        k,
        discrete: d.is_discrete(),
    }
}

/// E[q^{[k]}(X)] (discrete) or E[q^k(X)] (continuous): the closed family
/// form when one exists, otherwise the expectation engine on the direct
/// product.
pub fn q_moment(d: &PearsonDistribution, k: u32) -> Result<f64> {
    let qf = q_factor(d, k);
    if !d.has_finite_moments(qf.degree()) {
        return Err(Error::MomentDoesNotExist {
            degree: qf.degree(),
            available: d.max_finite_moment().as_u32_or_max(),
        });
    }
    if let Some(v) = d.closed_form_q_moment(k) {
        return Ok(v);
    }
    let opts = crate::stein::ExpectOptions::default();
    crate::stein::expect(d, &|x| qf.eval(x), &opts)
}

/// Stirling numbers of the second kind S(n, k), k = 0..n.
fn stirling2_row(n: u32) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (k, &s) in row.iter().enumerate() {
            next[k] += k as f64 * s;
            next[k + 1] += s;
        }
        row = next;
    }
    row
}

fn double_factorial_odd(j: u32) -> f64 {
    // (j−1)!! for even j
    let mut acc = 1.0;
    let mut m = 1;
    while m < j {
        acc *= m as f64;
        m += 2;
    }
    acc
}

impl PearsonDistribution {
    /// Closed-form raw moment E[X^n] where the family admits one.
    pub(crate) fn raw_moment(&self, n: u32) -> Option<f64> {
        match &self.family {
            Family::Poisson { lambda } => {
                let s = stirling2_row(n);
                let mut acc = 0.0;
                let mut pow = 1.0;
                for sk in s {
                    acc += sk * pow;
                    pow *= lambda;
                }
                Some(acc)
            }
            Family::Binomial { n: nn, p } => {
                let s = stirling2_row(n);
                let mut acc = 0.0;
                for (k, sk) in s.iter().enumerate() {
                    acc += sk * falling_factorial(*nn as f64, k as u32) * p.powi(k as i32);
                }
                Some(acc)
            }
            Family::NegBinomial { r, p } => {
                let ratio = (1.0 - p) / p;
                let s = stirling2_row(n);
                let mut acc = 0.0;
                for (k, sk) in s.iter().enumerate() {
                    acc += sk * rising_factorial(*r, k as u32) * ratio.powi(k as i32);
                }
                Some(acc)
            }
            Family::DiscreteUniform { n: nn } => {
                let mut acc = 0.0;
                for x in 1..=*nn {
                    acc += (x as f64).powi(n as i32);
                }
                Some(acc / *nn as f64)
            }
            Family::Normal { mu, var } => {
                let sigma = var.sqrt();
                let mut acc = 0.0;
                for j in (0..=n).step_by(2) {
                    acc += binomial(n, j)
                        * double_factorial_odd(j)
                        * sigma.powi(j as i32)
                        * mu.powi((n - j) as i32);
                }
                Some(acc)
            }
            Family::Gamma { a, lambda } => Some(rising_factorial(*a, n) / lambda.powi(n as i32)),
            Family::Beta { a, b } => Some(rising_factorial(*a, n) / rising_factorial(a + b, n)),
            Family::Uniform { a, b } => {
                let m = n as i32 + 1;
                Some((b.powi(m) - a.powi(m)) / (m as f64 * (b - a)))
            }
            Family::StudentT { .. } | Family::Custom => None,
        }
    }

    /// Closed-form E[q^{[k]}(X)] (discrete) or E[q^k(X)] (continuous) for
    /// the built-in families, used to cross-check the expectation engine.
    pub fn closed_form_q_moment(&self, k: u32) -> Option<f64> {
        match &self.family {
            Family::Poisson { lambda } => Some(lambda.powi(k as i32)),
            Family::Binomial { n, p } => {
                Some(falling_factorial(*n as f64, k) * p.powi(k as i32) * (1.0 - p).powi(k as i32))
            }
            Family::NegBinomial { r, p } => {
                Some((1.0 - p).powi(k as i32) * rising_factorial(*r, k) / p.powi(2 * k as i32))
            }
            Family::DiscreteUniform { n } => {
                if k >= *n {
                    return Some(0.0);
                }
                let nf = *n as f64;
                // 2^{−k} (k!)² Π_{j=N−k}^{N+k} j / (N (2k+1) (2k)!)
                let mut span = 1.0;
                for j in (*n - k)..=(*n + k) {
                    span *= j as f64;
                }
                Some(
                    factorial(k).powi(2) * span
                        / (2f64.powi(k as i32) * nf * (2.0 * k as f64 + 1.0) * factorial(2 * k)),
                )
            }
            Family::Normal { var, .. } => Some(var.powi(k as i32)),
            Family::Gamma { a, lambda } => {
                Some(rising_factorial(*a, k) / lambda.powi(2 * k as i32))
            }
            Family::Beta { a, b } => {
                let s = a + b;
                Some(
                    rising_factorial(*a, k) * rising_factorial(*b, k)
                        / (rising_factorial(s, 2 * k) * s.powi(k as i32)),
                )
            }
            Family::Uniform { a, b } => Some(
                (b - a).powi(2 * k as i32) * factorial(k).powi(2)
                    / (2f64.powi(k as i32) * factorial(2 * k + 1)),
            ),
            Family::StudentT { n } => {
                if 2 * k > n - 1 {
                    return None;
                }
                let nf = *n as f64;
                let mut acc = (nf / (nf - 1.0)).powi(k as i32);
                for j in 1..=k {
                    acc *= 1.0 + 1.0 / (nf - 2.0 * j as f64);
                }
                Some(acc)
            }
            Family::Custom => None,
        }
    }
}

/// E[p(X)] for a polynomial p: closed-form raw moments where the family
/// admits them, otherwise the generic expectation engine.
pub fn moment_of_weighted_poly(d: &PearsonDistribution, p: &Poly<f64>) -> Result<f64> {
    let degree = p.degree().unwrap_or(0) as u32;
    if !d.has_finite_moments(degree) {
        return Err(Error::MomentDoesNotExist {
            degree,
            available: d.max_finite_moment().as_u32_or_max(),
        });
    }
    if d.raw_moment(0).is_some() {
        let mut acc = 0.0;
        for (i, &c) in p.coeffs().iter().enumerate() {
            if c != 0.0 {
                acc += c * d.raw_moment(i as u32).expect("family has closed moments");
            }
        }
        return Ok(acc);
    }
    let opts = crate::stein::ExpectOptions::default();
    crate::stein::expect(d, &|x| p.eval(&x), &opts)
}

// ============================================================================
// Seeded sampling
// ============================================================================

impl PearsonDistribution {
    pub fn has_sampler(&self) -> bool {
        !matches!(self.family, Family::Custom)
    }

    /// Draw `count` values with an explicit seed; identical (seed, count)
    /// pairs reproduce the same vector.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<f64>> {
        let mut rng = SplitMix64::new(seed);
        let mut out = Vec::with_capacity(count);
        match &self.family {
            Family::Poisson { lambda } => {
                for _ in 0..count {
                    out.push(rng.next_poisson(*lambda) as f64);
                }
            }
            Family::Binomial { n, p } => {
                for _ in 0..count {
                    out.push(sample_binomial(&mut rng, *n, *p));
                }
            }
            Family::NegBinomial { r, p } => {
                for _ in 0..count {
                    let lambda = rng.next_gamma(*r) * (1.0 - p) / p;
                    out.push(rng.next_poisson(lambda) as f64);
                }
            }
            Family::DiscreteUniform { n } => {
                for _ in 0..count {
                    let u = rng.next_open01();
                    out.push(1.0 + (u * *n as f64).floor().min(*n as f64 - 1.0));
                }
            }
            Family::Normal { mu, var } => {
                let sd = var.sqrt();
                for _ in 0..count {
                    out.push(mu + sd * rng.next_normal());
                }
            }
            Family::Gamma { a, lambda } => {
                for _ in 0..count {
                    out.push(rng.next_gamma(*a) / lambda);
                }
            }
            Family::Beta { a, b } => {
                for _ in 0..count {
                    let x = rng.next_gamma(*a);
                    let y = rng.next_gamma(*b);
                    out.push(x / (x + y));
                }
            }
            Family::Uniform { a, b } => {
                for _ in 0..count {
                    out.push(a + (b - a) * rng.next_open01());
                }
            }
            Family::StudentT { n } => {
                let nf = *n as f64;
                for _ in 0..count {
                    let z = rng.next_normal();
                    let chi2 = 2.0 * rng.next_gamma(nf / 2.0);
                    out.push(z / (chi2 / nf).sqrt());
                }
            }
            Family::Custom => return Err(Error::SamplerUnavailable(self.name.clone())),
        }
        Ok(out)
    }
}

fn sample_binomial(rng: &mut SplitMix64, n: u32, p: f64) -> f64 {
    let u = rng.next_open01();
    let nf = n as f64;
    let odds = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cum = pmf;
    let mut x = 0.0;
    while cum < u && x < nf {
        pmf *= (nf - x) / (x + 1.0) * odds;
        x += 1.0;
        cum += pmf;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin(spec: &str) -> PearsonDistribution {
        parse_distribution(spec).unwrap()
    }

    #[test]
    fn distributions_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<PearsonDistribution>();
        assert_send_sync::<crate::rodrigues::RodriguesSystem>();
        assert_send_sync::<crate::stein::FunctionSpec>();
    }

    #[test]
    fn poisson_metadata() {
        let d = builtin("poisson:lambda=2");
        assert_eq!(d.quadratic(), Quadratic::new(0.0, 0.0, 2.0));
        assert_eq!(d.mean(), 2.0);
        assert_eq!(
            d.support(),
            Support::IntegerInterval {
                lower: 0.0,
                upper: f64::INFINITY
            }
        );
        assert!(d.mgf_finite_near_zero());
    }

    #[test]
    fn discrete_uniform_metadata() {
        let d = builtin("discrete_uniform:n=4");
        assert_eq!(d.quadratic().delta, -0.5);
        // q(x) = x(4−x)/2
        assert_eq!(d.quadratic().eval(1.0), 1.5);
        assert_eq!(d.quadratic().eval(3.0), 1.5);
        assert_eq!(
            d.support(),
            Support::IntegerInterval {
                lower: 1.0,
                upper: 4.0
            }
        );
    }

    #[test]
    fn student_t_metadata() {
        let d = builtin("student_t:n=5");
        assert!((d.quadratic().delta - 0.25).abs() < 1e-15);
        assert!((d.quadratic().eval(1.0) - 1.5).abs() < 1e-15); // (5+1)/4
        assert_eq!(d.max_finite_moment(), MomentCeiling::Finite(4));
        assert!(!d.mgf_finite_near_zero());
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(
            make_builtin("cauchy", &[]),
            Err(Error::UnknownDistribution(_))
        ));
        assert!(matches!(
            make_builtin("poisson", &[("lambda", -1.0)]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            make_builtin("student_t", &[("n", 1.0)]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(make_builtin("binomial", &[("n", 2.5), ("p", 0.5)]).is_err());
    }

    #[test]
    fn parse_grammar_errors() {
        assert!(parse_distribution("poisson:lambda").is_err());
        assert!(parse_distribution("poisson:lambda=abc").is_err());
        assert!(parse_distribution("poisson:lambda=1,lambda=2").is_err());
        assert!(parse_distribution(":a=1").is_err());
        assert!(parse_distribution("poisson:lambda=2,extra=1").is_err());
    }

    #[test]
    fn q_products() {
        let d = builtin("poisson:lambda=2");
        let q3 = q_ascending_product(&d, 3).unwrap();
        assert_eq!(q3, Poly::constant(8.0));
        assert_eq!(q_ascending_product(&d, 0).unwrap(), Poly::one());

        // binomial N=2, p=0.5: q^{[3]} vanishes on the whole support
        let b = builtin("binomial:n=2,p=0.5");
        let q3 = q_ascending_product(&b, 3).unwrap();
        for x in [0.0, 1.0, 2.0] {
            assert!(q3.eval(&x).abs() < 1e-12, "q^[3]({x}) = {}", q3.eval(&x));
        }

        let n = builtin("normal:mu=0,var=3");
        assert_eq!(q_power(&n, 2).unwrap(), Poly::constant(9.0));
        let g = builtin("gamma:a=3,lambda=2");
        let q3 = q_power(&g, 3).unwrap();
        assert_eq!(q3, Poly::new(vec![0.0, 0.0, 0.0, 0.125]));

        assert!(q_power(&d, 1).is_err());
        assert!(q_ascending_product(&n, 1).is_err());
    }

    #[test]
    fn geometric_is_negative_binomial_r1() {
        let g = builtin("geometric:theta=0.3");
        let nb = builtin("negative_binomial:r=1,p=0.3");
        assert_eq!(g.quadratic(), nb.quadratic());
        assert_eq!(g.mean(), nb.mean());
        for x in 0..12 {
            let (a, b) = (g.weight(x as f64), nb.weight(x as f64));
            assert!((a - b).abs() <= 1e-15 * (1.0 + b), "pmf differs at {x}");
        }
    }

    #[test]
    fn weights_normalize() {
        for spec in [
            "poisson:lambda=2",
            "binomial:n=10,p=0.3",
            "negative_binomial:r=3,p=0.4",
            "discrete_uniform:n=10",
        ] {
            let d = builtin(spec);
            let mut total = 0.0;
            let mut x = d.support().lower();
            let hi = d.support().upper().min(d.mean() + 45.0 * d.std_dev());
            while x <= hi {
                total += d.weight(x);
                x += 1.0;
            }
            assert!((total - 1.0).abs() < 1e-10, "{spec}: mass {total}");
        }
    }

    #[test]
    fn raw_moments_match_known_values() {
        let d = builtin("poisson:lambda=2");
        assert_eq!(d.raw_moment(1).unwrap(), 2.0);
        assert_eq!(d.raw_moment(2).unwrap(), 6.0); // λ² + λ
        assert_eq!(d.raw_moment(4).unwrap(), 94.0); // λ⁴+6λ³+7λ²+λ

        let n = builtin("normal:mu=1,var=4");
        assert_eq!(n.raw_moment(2).unwrap(), 5.0);

        let g = builtin("gamma:a=3,lambda=2");
        assert!((g.raw_moment(1).unwrap() - 1.5).abs() < 1e-15);

        let u = builtin("uniform:a=0,b=1");
        assert!((u.raw_moment(3).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn moment_of_poly_examples() {
        // gamma: E[q(X)] with q = x/2 is a/(2λ) = 3/4
        let g = builtin("gamma:a=3,lambda=2");
        let q = g.quadratic().as_poly();
        assert!((moment_of_weighted_poly(&g, &q).unwrap() - 0.75).abs() < 1e-14);

        // degree above the student-t ceiling errors out
        let t = builtin("student_t:n=5");
        let high = Poly::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]); // x^5
        assert!(matches!(
            moment_of_weighted_poly(&t, &high),
            Err(Error::MomentDoesNotExist { .. })
        ));
    }

    #[test]
    fn closed_q_moments_examples() {
        let nb = builtin("negative_binomial:r=3,p=0.4");
        // (1−p)^k [r]_k / p^{2k}, k = 2
        let expected = 0.6f64.powi(2) * 12.0 / 0.4f64.powi(4);
        assert!((nb.closed_form_q_moment(2).unwrap() - expected).abs() < 1e-10);

        let t = builtin("student_t:n=5");
        // k=1: N/(N−2)
        assert!((t.closed_form_q_moment(1).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!(t.closed_form_q_moment(3).is_none()); // 2k > N−1

        let du = builtin("discrete_uniform:n=10");
        // k=1: E[q] = Var X = (N²−1)/12
        assert!((du.closed_form_q_moment(1).unwrap() - 99.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn samplers_are_deterministic() {
        let d = builtin("negative_binomial:r=3,p=0.4");
        let a = d.sample(99, 50).unwrap();
        let b = d.sample(99, 50).unwrap();
        assert_eq!(a, b);
        let c = d.sample(100, 50).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_means_are_sane() {
        for spec in [
            "poisson:lambda=2",
            "binomial:n=10,p=0.3",
            "negative_binomial:r=3,p=0.4",
            "discrete_uniform:n=10",
            "normal:mu=0,var=1",
            "gamma:a=3,lambda=2",
            "beta:a=2,b=5",
            "uniform:a=0,b=1",
            "student_t:n=15",
        ] {
            let d = builtin(spec);
            let n = 120_000;
            let xs = d.sample(7, n).unwrap();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let se = d.std_dev() / (n as f64).sqrt();
            assert!(
                (mean - d.mean()).abs() < 5.0 * se,
                "{spec}: sample mean {mean} vs {} (se {se})",
                d.mean()
            );
        }
    }

    #[test]
    fn spec_string_roundtrip() {
        let d = builtin("binomial:n=10,p=0.3");
        let d2 = parse_distribution(&d.spec_string()).unwrap();
        assert_eq!(d.quadratic(), d2.quadratic());
    }
}
