//! Command-line front end: polynomial tables, variance bounds, Parseval
//! series, identity checks and the estimator suites, with JSON/CSV/text
//! output.
//!
//! Every report serializes to a stable envelope
//! `{command, inputs, terms, value, oracle, diagnostics}`; identical
//! invocations produce byte-identical JSON.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::io::Write;
use steinpearson::bounds::{
    parseval_covariance, parseval_variance, poincare_comparison, variance_lower_bound,
    Applicability, BoundOptions, SeriesOptions, SeriesReport, VarianceOracle,
};
use steinpearson::estimators::{geometric_covariances, var_l_nu, var_t_nu};
use steinpearson::pearson::parse_distribution;
use steinpearson::polynomial::Poly;
use steinpearson::rodrigues::build_system;
use steinpearson::stein::{
    expect, monte_carlo_oracle, stein_numerator, stein_projection, ExpectOptions, FunctionSpec,
};
use steinpearson::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "steinpearson",
    version,
    about = "Orthogonal polynomials, covariance identities and variance bounds for Pearson/Ord distributions",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    /// Seed for Monte Carlo oracles.
    #[arg(long, global = true, default_value_t = 0x5EED_CAFE)]
    seed: u64,

    /// Relative tolerance of the continuous expectation engine.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,

    /// Absolute tail tolerance of the discrete summation engine.
    #[arg(long, global = true, default_value_t = 1e-12)]
    abs_tol: f64,

    /// Relative stopping tolerance for the Parseval series.
    #[arg(long, global = true, default_value_t = 1e-10)]
    series_tol: f64,

    /// Hard cap on the series term index.
    #[arg(long, global = true, default_value_t = 200)]
    max_terms: u32,

    /// Sample count for Monte Carlo oracles.
    #[arg(long, global = true, default_value_t = 400_000)]
    mc_samples: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the orthogonal polynomials P_0..P_n with leads and norms.
    Polys {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        order: u32,
    },
    /// Order-n lower variance bound for a target function.
    Bound {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        order: u32,
    },
    /// Alternating Poincaré-type comparison (discrete only).
    Poincare {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        order: u32,
    },
    /// Full Parseval variance series.
    Parseval {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        g: String,
    },
    /// Covariance series for two target functions.
    Cov {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        g2: String,
    },
    /// Check the order-k identity: projection vs numerator for k = 1..n.
    Check {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        order: u32,
    },
    /// UMVUE estimator suites.
    Estimators {
        /// One of: geom_neg_log, geom_cov, exp_log_rate.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        nu: u32,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
    },
}

// ============================================================================
// g-spec grammar
// ============================================================================

/// `poly:c0,c1,...` | `exp:t=<t>` | `geom_pow:t=<t>` | `log_shift:a=<a>`
fn parse_g_spec(spec: &str) -> Result<FunctionSpec, Error> {
    let grammar = "expected `poly:c0,c1,...`, `exp:t=<t>`, `geom_pow:t=<t>` or `log_shift:a=<a>`";
    let (name, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("`{spec}` has no `:`; {grammar}")))?;
    let parse_num = |s: &str| -> Result<f64, Error> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("`{s}` is not a number; {grammar}")))
    };
    let parse_keyed = |key: &str| -> Result<f64, Error> {
        let (k, v) = rest
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("`{rest}` is not key=value; {grammar}")))?;
        if k.trim() != key {
            return Err(Error::Parse(format!(
                "`{name}` takes parameter `{key}`, got `{k}`"
            )));
        }
        parse_num(v)
    };
    match name.trim() {
        "poly" => {
            let coeffs = rest
                .split(',')
                .map(parse_num)
                .collect::<Result<Vec<f64>, Error>>()?;
            if coeffs.is_empty() {
                return Err(Error::Parse(format!("empty coefficient list; {grammar}")));
            }
            Ok(FunctionSpec::polynomial(Poly::new(coeffs)))
        }
        "exp" => Ok(FunctionSpec::exp_t(parse_keyed("t")?)),
        "geom_pow" => FunctionSpec::geom_pow(parse_keyed("t")?),
        "log_shift" => Ok(FunctionSpec::log_shift(parse_keyed("a")?)),
        other => Err(Error::Parse(format!("unknown g spec `{other}`; {grammar}"))),
    }
}

// ============================================================================
// Report envelope
// ============================================================================

struct Envelope {
    command: &'static str,
    inputs: Value,
    terms: Value,
    value: Value,
    oracle: Value,
    diagnostics: Value,
    /// csv lines (header first); text lines.
    csv: Vec<String>,
    text: Vec<String>,
}

impl Envelope {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut top = Map::new();
                top.insert("command".into(), Value::String(self.command.into()));
                top.insert("inputs".into(), self.inputs.clone());
                top.insert("terms".into(), self.terms.clone());
                top.insert("value".into(), self.value.clone());
                top.insert("oracle".into(), self.oracle.clone());
                top.insert("diagnostics".into(), self.diagnostics.clone());
                serde_json::to_string_pretty(&Value::Object(top)).expect("serializable")
            }
            Format::Csv => self.csv.join("\n"),
            Format::Text => self.text.join("\n"),
        }
    }
}

fn num(v: f64) -> Value {
    json!(v)
}

fn oracle_json(o: &Option<VarianceOracle>) -> Value {
    match o {
        None => Value::Null,
        Some(o) => serde_json::to_value(o).expect("serializable"),
    }
}

fn series_terms_json(r: &SeriesReport) -> Value {
    let arr: Vec<Value> = r
        .terms
        .iter()
        .zip(r.partial_sums.iter())
        .map(|(t, ps)| {
            json!({
                "k": t.k,
                "numerator": t.numerator,
                "sq_norm": t.sq_norm,
                "term": t.term,
                "partial_sum": ps,
                "zero_norm": t.zero_norm,
            })
        })
        .collect();
    Value::Array(arr)
}

fn series_csv(r: &SeriesReport) -> Vec<String> {
    let mut lines = vec!["k,numerator,sq_norm,term,partial_sum".to_string()];
    for (t, ps) in r.terms.iter().zip(r.partial_sums.iter()) {
        lines.push(format!(
            "{},{},{},{},{}",
            t.k, t.numerator, t.sq_norm, t.term, ps
        ));
    }
    lines
}

fn applicability_str(a: Applicability) -> &'static str {
    match a {
        Applicability::ParsevalGuaranteed => "parseval-guaranteed",
        Applicability::BesselOnly => "bessel-only",
    }
}

/// Value of the STEINPEARSON_THREADS cap (informational: computation is
/// currently single-threaded, which trivially respects any cap).
fn thread_cap() -> Result<u32, Error> {
    match std::env::var("STEINPEARSON_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => {
            let n: u32 = s.parse().map_err(|_| {
                Error::Parse(format!(
                    "STEINPEARSON_THREADS=`{s}` is not a positive integer"
                ))
            })?;
            if n == 0 {
                return Err(Error::Parse(
                    "STEINPEARSON_THREADS must be at least 1".into(),
                ));
            }
            Ok(n)
        }
    }
}

// ============================================================================
// Command execution
// ============================================================================

struct Ctx {
    expect: ExpectOptions,
    series: SeriesOptions,
    bound: BoundOptions,
    seed: u64,
    mc_samples: usize,
    threads: u32,
}

impl Ctx {
    fn from_cli(cli: &Cli) -> Result<Self, Error> {
        let expect = ExpectOptions {
            abs_tol: cli.abs_tol,
            rel_tol: cli.rel_tol,
            ..ExpectOptions::default()
        };
        let series = SeriesOptions {
            expect: expect.clone(),
            rel_tol: cli.series_tol,
            max_k: cli.max_terms,
            ..SeriesOptions::default()
        };
        let bound = BoundOptions {
            expect: expect.clone(),
            mc_fallback: Some((cli.seed, cli.mc_samples)),
        };
        Ok(Self {
            expect,
            series,
            bound,
            seed: cli.seed,
            mc_samples: cli.mc_samples,
            threads: thread_cap()?,
        })
    }

    fn diag(&self, extra: Value) -> Value {
        let mut m = Map::new();
        m.insert("threads".into(), json!(self.threads));
        if let Value::Object(extra) = extra {
            for (k, v) in extra {
                m.insert(k, v);
            }
        }
        Value::Object(m)
    }
}

fn dist_inputs(cmd: &Command) -> Value {
    match cmd {
        Command::Polys { dist, order } => json!({"dist": dist, "order": order}),
        Command::Bound { dist, g, order } | Command::Poincare { dist, g, order } => {
            json!({"dist": dist, "g": g, "order": order})
        }
        Command::Parseval { dist, g } => json!({"dist": dist, "g": g}),
        Command::Cov { dist, g, g2 } => json!({"dist": dist, "g": g, "g2": g2}),
        Command::Check { dist, g, order } => json!({"dist": dist, "g": g, "order": order}),
        Command::Estimators {
            suite,
            nu,
            theta,
            n,
            m,
        } => json!({"suite": suite, "nu": nu, "theta": theta, "n": n, "m": m}),
    }
}

fn run(cli: &Cli) -> Result<Envelope, Error> {
    let ctx = Ctx::from_cli(cli)?;
    let inputs = dist_inputs(&cli.command);
    match &cli.command {
        Command::Polys { dist, order } => {
            let d = parse_distribution(dist)?;
            let sys = build_system(&d, *order)?;
            let terms: Vec<Value> = (0..=*order)
                .map(|k| {
                    json!({
                        "k": k,
                        "coeffs": sys.poly(k).unwrap().coeffs(),
                        "lead": sys.lead(k).unwrap(),
                        "sq_norm": sys.sq_norm(k).unwrap(),
                    })
                })
                .collect();
            let mut csv = vec!["k,degree,lead,sq_norm,coeffs".to_string()];
            let mut text = vec![format!("orthogonal polynomials for {}", d.spec_string())];
            for k in 0..=*order {
                let p = sys.poly(k).unwrap();
                csv.push(format!(
                    "{},{},{},{},{}",
                    k,
                    p.degree().unwrap_or(0),
                    sys.lead(k).unwrap(),
                    sys.sq_norm(k).unwrap(),
                    p.coeffs()
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                ));
                text.push(format!(
                    "P_{k}(x) = {p}   lead = {}   E[P_{k}^2] = {}",
                    sys.lead(k).unwrap(),
                    sys.sq_norm(k).unwrap()
                ));
            }
            Ok(Envelope {
                command: "polys",
                inputs,
                terms: Value::Array(terms),
                value: Value::Null,
                oracle: Value::Null,
                diagnostics: ctx.diag(json!({"degenerate_order": sys.degenerate_order()})),
                csv,
                text,
            })
        }
        Command::Bound { dist, g, order } => {
            let d = parse_distribution(dist)?;
            let gs = parse_g_spec(g)?;
            let r = variance_lower_bound(&d, &gs, *order, &ctx.bound)?;
            let mut partial = 0.0;
            let terms: Vec<Value> = r
                .terms
                .iter()
                .map(|t| {
                    partial += t.term;
                    json!({
                        "k": t.k, "numerator": t.numerator, "sq_norm": t.sq_norm,
                        "term": t.term, "partial_sum": partial, "zero_norm": t.zero_norm,
                    })
                })
                .collect();
            let mut csv = vec!["k,numerator,sq_norm,term,partial_sum".to_string()];
            let mut partial = 0.0;
            for t in &r.terms {
                partial += t.term;
                csv.push(format!(
                    "{},{},{},{},{}",
                    t.k, t.numerator, t.sq_norm, t.term, partial
                ));
            }
            let mut text = vec![format!(
                "lower variance bound, order {}: {}",
                r.order, r.lower_bound
            )];
            if let Some(o) = &r.variance_oracle {
                text.push(format!(
                    "variance oracle: {} (gap {})",
                    o.value(),
                    r.gap.unwrap_or(f64::NAN)
                ));
            }
            if r.equality_expected {
                text.push("equality expected: g is a polynomial of degree <= n".into());
            }
            Ok(Envelope {
                command: "bound",
                inputs,
                terms: Value::Array(terms),
                value: num(r.lower_bound),
                oracle: json!({
                    "variance": oracle_json(&r.variance_oracle),
                    "gap": r.gap,
                }),
                diagnostics: ctx.diag(json!({"equality_expected": r.equality_expected})),
                csv,
                text,
            })
        }
        Command::Poincare { dist, g, order } => {
            let d = parse_distribution(dist)?;
            let gs = parse_g_spec(g)?;
            let r = poincare_comparison(&d, &gs, *order, &ctx.bound)?;
            let terms: Vec<Value> = r
                .terms
                .iter()
                .zip(r.partial_sums.iter())
                .enumerate()
                .map(|(i, (t, s))| json!({"k": i + 1, "term": t, "partial_sum": s}))
                .collect();
            let mut csv = vec!["k,numerator,sq_norm,term,partial_sum".to_string()];
            for (i, (t, s)) in r.terms.iter().zip(r.partial_sums.iter()).enumerate() {
                csv.push(format!("{},{},{},{},{}", i + 1, t, 1.0, t, s));
            }
            let mut text = vec![format!(
                "alternating comparison, order {}: S_n = {}",
                r.order,
                r.partial_sums.last().unwrap()
            )];
            if let (Some(o), Some(gaps)) = (&r.variance_oracle, &r.signed_gaps) {
                text.push(format!("variance oracle: {}", o.value()));
                text.push(format!("signed gaps (-1)^k (Var - S_k): {gaps:?}"));
            }
            Ok(Envelope {
                command: "poincare",
                inputs,
                terms: Value::Array(terms),
                value: num(*r.partial_sums.last().unwrap()),
                oracle: json!({
                    "variance": oracle_json(&r.variance_oracle),
                    "signed_gaps": r.signed_gaps,
                }),
                diagnostics: ctx.diag(json!({})),
                csv,
                text,
            })
        }
        Command::Parseval { dist, g } => {
            let d = parse_distribution(dist)?;
            let gs = parse_g_spec(g)?;
            let r = parseval_variance(&d, &gs, &ctx.series)?;
            let direct = expect(&d, &|x| gs.eval(x) * gs.eval(x), &ctx.expect)
                .and_then(|e2| expect(&d, &|x| gs.eval(x), &ctx.expect).map(|e1| e2 - e1 * e1))
                .ok();
            let text = vec![
                format!("parseval variance series: {}", r.value),
                format!(
                    "converged: {} after k = {} ({})",
                    r.converged,
                    r.truncation_k,
                    applicability_str(r.applicability)
                ),
                match direct {
                    Some(v) => format!("direct variance: {v}"),
                    None => "direct variance: unavailable".into(),
                },
            ];
            Ok(Envelope {
                command: "parseval",
                inputs,
                terms: series_terms_json(&r),
                value: num(r.value),
                oracle: json!({"direct_variance": direct}),
                diagnostics: ctx.diag(json!({
                    "converged": r.converged,
                    "truncation_k": r.truncation_k,
                    "applicability": applicability_str(r.applicability),
                    "hit_moment_ceiling": r.hit_moment_ceiling,
                })),
                csv: series_csv(&r),
                text,
            })
        }
        Command::Cov { dist, g, g2 } => {
            let d = parse_distribution(dist)?;
            let g1s = parse_g_spec(g)?;
            let g2s = parse_g_spec(g2)?;
            let r = parseval_covariance(&d, &g1s, &g2s, &ctx.series)?;
            let direct = (|| -> Result<f64, Error> {
                let e12 = expect(&d, &|x| g1s.eval(x) * g2s.eval(x), &ctx.expect)?;
                let e1 = expect(&d, &|x| g1s.eval(x), &ctx.expect)?;
                let e2 = expect(&d, &|x| g2s.eval(x), &ctx.expect)?;
                Ok(e12 - e1 * e2)
            })()
            .ok();
            let text = vec![
                format!("covariance series: {}", r.value),
                format!(
                    "converged: {} after k = {} ({})",
                    r.converged,
                    r.truncation_k,
                    applicability_str(r.applicability)
                ),
                match direct {
                    Some(v) => format!("direct covariance: {v}"),
                    None => "direct covariance: unavailable".into(),
                },
            ];
            Ok(Envelope {
                command: "cov",
                inputs,
                terms: series_terms_json(&r),
                value: num(r.value),
                oracle: json!({"direct_covariance": direct}),
                diagnostics: ctx.diag(json!({
                    "converged": r.converged,
                    "truncation_k": r.truncation_k,
                    "applicability": applicability_str(r.applicability),
                    "hit_moment_ceiling": r.hit_moment_ceiling,
                })),
                csv: series_csv(&r),
                text,
            })
        }
        Command::Check { dist, g, order } => {
            let d = parse_distribution(dist)?;
            let gs = parse_g_spec(g)?;
            let sys = build_system(&d, *order)?;
            let mut terms = Vec::new();
            let mut csv = vec!["k,projection,numerator,residual".to_string()];
            let mut text = vec![format!(
                "identity check on {} for {}",
                d.spec_string(),
                gs.describe()
            )];
            let mut worst: f64 = 0.0;
            for k in 1..=*order {
                let proj = stein_projection(&d, &sys, &gs, k, &ctx.expect)?;
                let numer = stein_numerator(&d, &gs, k, &ctx.expect)?;
                let residual = (proj - numer).abs() / (1.0 + numer.abs());
                worst = worst.max(residual);
                terms.push(json!({
                    "k": k, "projection": proj, "numerator": numer, "residual": residual,
                }));
                csv.push(format!("{k},{proj},{numer},{residual}"));
                text.push(format!(
                    "k = {k}: E[P_k g] = {proj}, E[q-factor D^k g] = {numer}, residual {residual:.3e}"
                ));
            }
            text.push(format!("worst residual: {worst:.3e}"));
            Ok(Envelope {
                command: "check",
                inputs,
                terms: Value::Array(terms),
                value: num(worst),
                oracle: Value::Null,
                diagnostics: ctx.diag(json!({})),
                csv,
                text,
            })
        }
        Command::Estimators {
            suite,
            nu,
            theta,
            n,
            m,
        } => run_estimators(&ctx, inputs, suite, *nu, *theta, *n, *m),
    }
}

fn require_arg<T>(v: Option<T>, name: &str, suite: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::Parse(format!("suite `{suite}` requires --{name}")))
}

fn run_estimators(
    ctx: &Ctx,
    inputs: Value,
    suite: &str,
    nu: u32,
    theta: Option<f64>,
    n: Option<u32>,
    m: Option<u32>,
) -> Result<Envelope, Error> {
    match suite {
        "geom_neg_log" => {
            let theta = require_arg(theta, "theta", suite)?;
            let r = var_t_nu(nu, theta, &ctx.series)?;
            let d =
                steinpearson::make_builtin("negative_binomial", &[("r", nu as f64), ("p", theta)])?;
            let suite_obj = steinpearson::estimators::GeometricUmvueSuite::new(nu, theta)?;
            let t = suite_obj.t_spec();
            let (mc_mean, _) = monte_carlo_oracle(&d, &|x| t.eval(x), ctx.seed, ctx.mc_samples)?;
            let xs = d.sample(ctx.seed, ctx.mc_samples)?;
            let mc_var = {
                let mut m2 = 0.0;
                for &x in &xs {
                    let v = t.eval(x) - mc_mean;
                    m2 += v * v;
                }
                m2 / (xs.len() as f64 - 1.0)
            };
            let text = vec![
                format!("Var T (closed series): {}", r.closed_series),
                format!("Var T (series engine): {}", r.parseval.value),
                format!("Cramer-Rao first term: {}", r.cramer_rao),
                format!(
                    "Monte Carlo variance ({} samples): {mc_var}",
                    ctx.mc_samples
                ),
            ];
            let csv = vec![
                "quantity,value".to_string(),
                format!("closed_series,{}", r.closed_series),
                format!("parseval,{}", r.parseval.value),
                format!("cramer_rao,{}", r.cramer_rao),
                format!("monte_carlo,{mc_var}"),
            ];
            Ok(Envelope {
                command: "estimators",
                inputs,
                terms: series_terms_json(&r.parseval),
                value: num(r.closed_series),
                oracle: json!({
                    "parseval": r.parseval.value,
                    "monte_carlo": {"value": mc_var, "seed": ctx.seed, "samples": ctx.mc_samples},
                }),
                diagnostics: ctx.diag(json!({"cramer_rao": r.cramer_rao})),
                csv,
                text,
            })
        }
        "geom_cov" => {
            let theta = require_arg(theta, "theta", suite)?;
            let n = require_arg(n, "n", suite)?;
            let m = require_arg(m, "m", suite)?;
            let r = geometric_covariances(nu, theta, n, m, &ctx.series)?;
            let entries = [
                ("t_w", r.t_w),
                ("t_u", r.t_u),
                ("w_w", r.w_w),
                ("u_u", r.u_u),
                ("w_u", r.w_u),
            ];
            let mut csv = vec!["pair,closed_series,parseval,direct".to_string()];
            let mut text = vec![format!(
                "covariances for nu={nu}, theta={theta}, n={n}, m={m}"
            )];
            let mut terms = Vec::new();
            let mut values = Map::new();
            for (name, t) in entries {
                csv.push(format!(
                    "{name},{},{},{}",
                    t.closed_series, t.parseval, t.direct
                ));
                text.push(format!(
                    "{name}: closed {} | engine {} | direct {}",
                    t.closed_series, t.parseval, t.direct
                ));
                terms.push(json!({
                    "pair": name,
                    "closed_series": t.closed_series,
                    "parseval": t.parseval,
                    "direct": t.direct,
                }));
                values.insert(name.into(), num(t.closed_series));
            }
            Ok(Envelope {
                command: "estimators",
                inputs,
                terms: Value::Array(terms),
                value: Value::Object(values),
                oracle: Value::Null,
                diagnostics: ctx.diag(json!({})),
                csv,
                text,
            })
        }
        "exp_log_rate" => {
            let r = var_l_nu(nu)?;
            let text = vec![
                format!("Var L (closed form): {}", r.closed_form),
                format!("Var L (series): {}", r.series_value),
                format!(
                    "Var L (series engine): {}",
                    r.parseval
                        .map(|v| v.to_string())
                        .unwrap_or_else(|| "stopping rule unmet".into())
                ),
                format!("efficiency nu*Var: {}", r.efficiency),
            ];
            let csv = vec![
                "quantity,value".to_string(),
                format!("closed_form,{}", r.closed_form),
                format!("series_value,{}", r.series_value),
                format!("efficiency,{}", r.efficiency),
            ];
            Ok(Envelope {
                command: "estimators",
                inputs,
                terms: Value::Null,
                value: num(r.closed_form),
                oracle: json!({
                    "series_value": r.series_value,
                    "parseval": r.parseval,
                }),
                diagnostics: ctx.diag(json!({
                    "efficiency": r.efficiency,
                    "sandwich_holds": r.sandwich_holds,
                })),
                csv,
                text,
            })
        }
        other => Err(Error::Parse(format!(
            "unknown suite `{other}`; expected geom_neg_log, geom_cov or exp_log_rate"
        ))),
    }
}

/// 1 for usage errors, 2 for hypothesis/convergence/moment failures.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::UnknownDistribution(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidIndex(_)
        | Error::NonpositiveArgument { .. } => 1,
        _ => 2,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path as well
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    match run(&cli) {
        Ok(envelope) => {
            let mut stdout = std::io::stdout();
            let _ = writeln!(stdout, "{}", envelope.render(cli.format));
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
