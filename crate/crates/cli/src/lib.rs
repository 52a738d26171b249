//! Command-line front end for `preserver-core`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the exit
//! code together with the rendered output, so the binary and the tests
//! share one code path.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use preserver_core::adjoint::{adjoint_apply, finite_range_detect, mu_x, FiniteRange};
use preserver_core::approx::{converge_report, default_test_polys, ConvergenceTable, DegreeRule};
use preserver_core::momentcheck::{moment_check_detailed, MomentCheck};
use preserver_core::operator::{
    check_preserver, classify_ellipticity, classify_positivity, extract_coeffs, localize_at, taylor_endo_coeffs,
    CheckOptions, EllipticityClass, PositivityClass, DEFAULT_SEED,
};
use preserver_core::poly::parse_poly;
use preserver_core::scalar::{fmt_rational, parse_rational};
use preserver_core::{
    Budget, DiffOpRep, DomainSet, Error, MeasureExpr, MomentSequence, MomentVerdict, OperatorExpr, PreserverVerdict,
    QPoly, Rational,
};

pub mod repro;

pub const SCHEMA: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PARSE: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "preserver", version, about = "Exact checks for positivity-preserving operators on polynomials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Domain S: R, R^n, [a,inf), [a,b] or [a,b]x[c,d]...
    #[arg(long, global = true, default_value = "R")]
    pub domain: String,
    /// Number of variables; defaults to the dimension of the domain.
    #[arg(long, global = true)]
    pub nvars: Option<usize>,
    /// Truncation degree (expand, moments, adjoint) or maximal test degree (check).
    #[arg(long, global = true)]
    pub degree: Option<u32>,
    /// Moment-matrix level m.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Maximal Bernstein subdivision depth.
    #[arg(long, global = true, default_value_t = 16)]
    pub budget: u32,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Grid points per axis for measured errors.
    #[arg(long, global = true, default_value_t = 101)]
    pub grid: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file; for `approx`, a directory receiving convergence.csv and convergence.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients q_α of Φ = Σ q_α D^α up to --degree.
    Expand { operator: String },
    /// Decide whether Φ maps nonnegative polynomials on S to nonnegative ones.
    Check {
        operator: String,
        /// Number of seeded test polynomials.
        #[arg(long, default_value_t = 200)]
        tests: usize,
    },
    /// Positivity and ellipticity classification.
    Classify { operator: String },
    /// Moments of a measure up to --degree.
    Moments { measure: String },
    /// Hankel and localizing matrix tests for a sequence (comma separated) or a measure.
    Momentcheck {
        #[arg(allow_hyphen_values = true)]
        input: String,
    },
    /// Adjoint image of a measure, or μ_x with --at.
    Adjoint {
        operator: String,
        #[arg(long)]
        measure: Option<String>,
        /// Point x, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    /// Convergence of simple finite-rank approximants.
    Approx {
        operator: String,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        schedule: Vec<usize>,
        /// Test polynomial; repeatable. Defaults to 1, x, x^2, x^3 - x.
        #[arg(long = "poly", allow_hyphen_values = true)]
        polys: Vec<String>,
        /// Indicator degree N = factor·r.
        #[arg(long, default_value_t = 4)]
        degree_factor: u32,
    },
    /// Reproduce the reference examples and compare against embedded values.
    Repro,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    code: i32,
    json: Value,
    text: String,
    csv: Option<String>,
}

pub fn q(r: &Rational) -> Value {
    Value::String(fmt_rational(r))
}

fn qs(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(q).collect())
}

fn pt(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_rational).collect();
    format!("({})", parts.join(", "))
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(&cli) {
        Ok(report) => emit(&cli, report),
        Err(e) => Outcome { code: error_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::BudgetExhausted(_) => EXIT_UNKNOWN,
        _ => EXIT_USAGE,
    }
}

fn emit(cli: &Cli, report: Report) -> Outcome {
    let mut json = report.json;
    if let Value::Object(map) = &mut json {
        map.insert("schema".into(), json!(SCHEMA));
        map.insert("exit_code".into(), json!(report.code));
    }
    let rendered = match cli.format {
        Format::Json => serde_json::to_string_pretty(&json).expect("serializable") + "\n",
        Format::Csv => match &report.csv {
            Some(c) => c.clone(),
            None => {
                return Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: "error: csv output is only available for approx\n".into(),
                }
            }
        },
        Format::Text => report.text,
    };
    let approx = matches!(cli.command, Command::Approx { .. });
    if let Some(out) = &cli.out {
        let written = if approx {
            write_approx_files(out, report.csv.as_deref().unwrap_or_default(), &json)
        } else {
            fs::write(out, &rendered).map_err(|e| e.to_string())
        };
        if let Err(e) = written {
            return Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {e}\n") };
        }
    }
    Outcome { code: report.code, stdout: rendered, stderr: String::new() }
}

fn write_approx_files(dir: &Path, csv: &str, json: &Value) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    fs::write(dir.join("convergence.csv"), csv).map_err(|e| e.to_string())?;
    let body = serde_json::to_string_pretty(json).map_err(|e| e.to_string())? + "\n";
    fs::write(dir.join("convergence.json"), body).map_err(|e| e.to_string())
}

fn execute(cli: &Cli) -> preserver_core::Result<Report> {
    let domain = DomainSet::parse(&cli.domain)?;
    let n = cli.nvars.unwrap_or(domain.dim());
    let budget = Budget { max_depth: cli.budget, ..Budget::default() };
    match &cli.command {
        Command::Expand { operator } => {
            let op = OperatorExpr::parse(operator, n)?;
            expand(&op, cli.degree.unwrap_or(4))
        }
        Command::Check { operator, tests } => {
            let op = OperatorExpr::parse(operator, n)?;
            let opts = CheckOptions { budget, seed: cli.seed, tests: *tests, max_degree: cli.degree.unwrap_or(6) };
            check(&op, &domain, &opts)
        }
        Command::Classify { operator } => {
            let op = OperatorExpr::parse(operator, n)?;
            classify(&op, &domain, budget)
        }
        Command::Moments { measure } => {
            let mu = MeasureExpr::parse(measure, n)?;
            moments(&mu, cli.degree.unwrap_or(4))
        }
        Command::Momentcheck { input } => momentcheck(input, n, &domain, cli.order),
        Command::Adjoint { operator, measure, at } => {
            let op = OperatorExpr::parse(operator, n)?;
            adjoint(&op, measure.as_deref(), at.as_deref(), n, cli.degree.unwrap_or(4))
        }
        Command::Approx { operator, schedule, polys, degree_factor } => {
            let op = OperatorExpr::parse(operator, n)?;
            let polys = if polys.is_empty() && n == 1 {
                default_test_polys()
            } else if polys.is_empty() {
                return Err(Error::InvalidArgument("give at least one --poly for n ≥ 2".into()));
            } else {
                polys.iter().map(|s| Ok((s.clone(), parse_poly(s, n)?))).collect::<preserver_core::Result<_>>()?
            };
            let table = converge_report(&op, &domain, &polys, schedule, DegreeRule::Multiple(*degree_factor), cli.grid)?;
            Ok(approx_report(&op, &domain, &table)?)
        }
        Command::Repro => Ok(repro::report()?),
    }
}

fn rep_json(rep: &DiffOpRep) -> Value {
    Value::Array(
        rep.iter()
            .map(|(a, qa)| json!({ "alpha": a.exps(), "q": qa.to_string() }))
            .collect(),
    )
}

fn expand(op: &OperatorExpr, d: u32) -> preserver_core::Result<Report> {
    let rep = extract_coeffs(op, d)?;
    Ok(Report {
        code: EXIT_OK,
        json: json!({ "command": "expand", "operator": op.to_string(), "degree": d, "coeffs": rep_json(&rep) }),
        text: rep.to_string(),
        csv: None,
    })
}

pub(crate) fn verdict_json(v: &PreserverVerdict) -> (i32, Value, String) {
    match v {
        PreserverVerdict::CertifiedPreserver { reason } => {
            (EXIT_OK, json!({ "verdict": "certified", "reason": reason }), format!("certified preserver: {reason}\n"))
        }
        PreserverVerdict::Falsified { p, x, value } => (
            EXIT_NEGATIVE,
            json!({ "verdict": "falsified", "p": p.to_string(), "x": qs(x), "value": q(value) }),
            format!(
                "falsified: p = {p} is nonnegative on S but Φ(p){} = {}\n",
                pt(x),
                fmt_rational(value)
            ),
        ),
        PreserverVerdict::NoCounterexampleFound { tests, note } => (
            EXIT_UNKNOWN,
            json!({ "verdict": "unknown", "tests": tests, "note": note }),
            format!("unknown: no counterexample among {tests} test polynomials ({note})\n"),
        ),
    }
}

fn check(op: &OperatorExpr, s: &DomainSet, opts: &CheckOptions) -> preserver_core::Result<Report> {
    let v = check_preserver(op, s, opts)?;
    let (code, body, text) = verdict_json(&v);
    Ok(Report {
        code,
        json: json!({
            "command": "check",
            "operator": op.to_string(),
            "domain": s.to_string(),
            "seed": opts.seed,
            "result": body,
        }),
        text,
        csv: None,
    })
}

fn classify(op: &OperatorExpr, s: &DomainSet, budget: Budget) -> preserver_core::Result<Report> {
    let pos = classify_positivity(op, s, budget)?;
    let ell = classify_ellipticity(op, s, budget)?;
    let (code, pos_json, pos_text) = match &pos {
        PositivityClass::PositivityPreserver { reason } => {
            (EXIT_OK, json!({ "class": "preserver", "reason": reason }), format!("positivity preserver: {reason}"))
        }
        PositivityClass::NotPositivityPreserver { reason, witness } => (
            EXIT_NEGATIVE,
            json!({ "class": "not", "reason": reason, "witness": witness.as_deref().map(qs) }),
            format!("not a positivity preserver: {reason}"),
        ),
        PositivityClass::Unknown { reason } => {
            (EXIT_UNKNOWN, json!({ "class": "unknown", "reason": reason }), format!("positivity unknown: {reason}"))
        }
    };
    let (ell_json, ell_text) = match &ell {
        EllipticityClass::EllipticityPreserver { sign, reason } => (
            json!({ "class": "preserver", "sign": sign, "reason": reason }),
            format!("ellipticity preserver ({}Φ preserves positivity): {reason}", if *sign < 0 { "-" } else { "" }),
        ),
        EllipticityClass::NotEllipticityPreserver { reason } => {
            (json!({ "class": "not", "reason": reason }), format!("not an ellipticity preserver: {reason}"))
        }
        EllipticityClass::Unknown { reason } => {
            (json!({ "class": "unknown", "reason": reason }), format!("ellipticity unknown: {reason}"))
        }
    };
    Ok(Report {
        code,
        json: json!({
            "command": "classify",
            "operator": op.to_string(),
            "domain": s.to_string(),
            "positivity": pos_json,
            "ellipticity": ell_json,
        }),
        text: format!("{pos_text}\n{ell_text}\n"),
        csv: None,
    })
}

fn moments_json(r: &MomentSequence) -> Value {
    Value::Array(r.iter().map(|(a, v)| json!({ "alpha": a.exps(), "value": q(v) })).collect())
}

fn moments(mu: &MeasureExpr, d: u32) -> preserver_core::Result<Report> {
    let r = mu.moments(d)?;
    let text: String = r
        .iter()
        .map(|(a, v)| {
            let e: Vec<String> = a.exps().iter().map(|e| e.to_string()).collect();
            format!("m({}) = {}\n", e.join(","), fmt_rational(v))
        })
        .collect();
    Ok(Report {
        code: EXIT_OK,
        json: json!({ "command": "moments", "measure": mu.to_string(), "degree": d, "moments": moments_json(&r) }),
        text,
        csv: None,
    })
}

fn parse_sequence(input: &str) -> Option<preserver_core::Result<Vec<Rational>>> {
    let looks_numeric = input.chars().all(|c| c.is_ascii_digit() || " ,/-+".contains(c));
    looks_numeric.then(|| input.split(',').map(|t| parse_rational(t.trim())).collect())
}

pub(crate) fn verdict_fields(v: &MomentVerdict) -> (i32, Value, String) {
    match v {
        MomentVerdict::RefutedAtOrder { order, test, certificate, value } => (
            EXIT_NEGATIVE,
            json!({ "verdict": "refuted", "order": order, "test": test, "certificate": qs(certificate), "value": q(value) }),
            format!("refuted at order {order} by {test}: vᵀMv = {} for v = {}\n", fmt_rational(value), pt(certificate)),
        ),
        MomentVerdict::ConsistentUpTo { order, necessary_only } => (
            EXIT_OK,
            json!({ "verdict": "consistent", "order": order, "necessary_only": necessary_only }),
            format!(
                "consistent up to order {order}{}\n",
                if *necessary_only { " (necessary conditions only)" } else { "" }
            ),
        ),
    }
}

fn momentcheck(input: &str, n: usize, s: &DomainSet, order: Option<usize>) -> preserver_core::Result<Report> {
    let r = match parse_sequence(input) {
        Some(seq) => MomentSequence::univariate(seq?)?,
        None => {
            let mu = MeasureExpr::parse(input, n)?;
            let m = order.unwrap_or(2);
            mu.moments(2 * m as u32 + 2)?
        }
    };
    let m = order.unwrap_or(r.order() as usize / 2);
    let MomentCheck { tests, verdict } = moment_check_detailed(&r, s, m)?;
    let (code, verdict_json, mut text) = verdict_fields(&verdict);
    let mats: Vec<Value> = tests
        .iter()
        .map(|t| {
            let rows: Vec<Value> = (0..t.matrix.dim()).map(|i| qs(t.matrix.row(i))).collect();
            json!({ "level": t.level, "test": t.test, "weight": t.weight.to_string(), "matrix": rows })
        })
        .collect();
    for t in &tests {
        text.push_str(&format!("level {} {}:\n{}\n", t.level, t.test, t.matrix));
    }
    Ok(Report {
        code,
        json: json!({
            "command": "momentcheck",
            "domain": s.to_string(),
            "sequence": moments_json(&r),
            "level": m,
            "matrices": mats,
            "result": verdict_json,
        }),
        text,
        csv: None,
    })
}

fn adjoint(op: &OperatorExpr, measure: Option<&str>, at: Option<&str>, n: usize, d: u32) -> preserver_core::Result<Report> {
    let image = match (measure, at) {
        (Some(m), None) => adjoint_apply(op, &MeasureExpr::parse(m, n)?)?,
        (None, Some(x)) => {
            let x = x.split(',').map(|t| parse_rational(t.trim())).collect::<preserver_core::Result<Vec<_>>>()?;
            mu_x(op, &x)?
        }
        _ => return Err(Error::InvalidArgument("give exactly one of --measure or --at".into())),
    };
    let r = image.moments(d)?;
    let range = match finite_range_detect(op, d)? {
        FiniteRange::Basis(b) => json!({
            "finite_rank": true,
            "basis": b.iter().map(|(f, nu)| json!({ "f": f.to_string(), "nu": nu.to_string() })).collect::<Vec<_>>(),
        }),
        FiniteRange::NotDetected { ranks } => json!({ "finite_rank": false, "ranks": ranks }),
    };
    let mut text = format!("T(μ) = {image}\n");
    for (a, v) in r.iter() {
        let e: Vec<String> = a.exps().iter().map(|e| e.to_string()).collect();
        text.push_str(&format!("m({}) = {}\n", e.join(","), fmt_rational(v)));
    }
    Ok(Report {
        code: EXIT_OK,
        json: json!({
            "command": "adjoint",
            "operator": op.to_string(),
            "image": image.to_string(),
            "moments": moments_json(&r),
            "range": range,
        }),
        text,
        csv: None,
    })
}

fn approx_report(op: &OperatorExpr, s: &DomainSet, table: &ConvergenceTable) -> preserver_core::Result<Report> {
    let csv = table.to_csv()?;
    let violations = table.violations().count();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "r": r.r,
                "D": q(&r.diameter),
                "N": r.degree,
                "poly_id": r.poly_id,
                "measured_error": q(&r.measured_error),
                "bound": q(&r.bound),
                "bound_claimed": r.bound_claimed,
                "pass": r.pass,
            })
        })
        .collect();
    let mut text = format!("{:>4} {:>12} {:>4} {:>10} {:>14} {:>14} {:>8} {:>5}\n", "r", "D", "N", "poly", "error", "bound", "claimed", "pass");
    for r in &table.rows {
        text.push_str(&format!(
            "{:>4} {:>12} {:>4} {:>10} {:>14} {:>14} {:>8} {:>5}\n",
            r.r,
            fmt_rational(&r.diameter),
            r.degree,
            r.poly_id,
            fmt_rational(&r.measured_error),
            fmt_rational(&r.bound),
            r.bound_claimed,
            r.pass
        ));
    }
    Ok(Report {
        code: if violations > 0 { EXIT_NEGATIVE } else { EXIT_OK },
        json: json!({
            "command": "approx",
            "operator": op.to_string(),
            "domain": s.to_string(),
            "rows": rows,
            "violations": violations,
            "note": "accuracy is checked on the measurement grid only; bound_claimed marks rows where it passed",
        }),
        text,
        csv: Some(csv),
    })
}

/// Helpers shared with the reproduction scenarios.
pub(crate) fn localized_half_scaling() -> preserver_core::Result<DiffOpRep> {
    let rep = taylor_endo_coeffs(&[parse_poly("x/2", 1)?], 8)?;
    localize_at(&rep, &[Rational::from_integer(1.into())])
}

pub(crate) fn poly1(s: &str) -> preserver_core::Result<QPoly> {
    parse_poly(s, 1)
}
