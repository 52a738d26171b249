//! Reference scenarios with embedded exact values.

use serde_json::{json, Value};

use preserver_core::momentcheck::moment_check;
use preserver_core::operator::{check_preserver, classify_positivity, extract_coeffs, CheckOptions, PositivityClass};
use preserver_core::scalar::fmt_rational;
use preserver_core::{Budget, DiffOpRep, DomainSet, MeasureExpr, MomentSequence, MomentVerdict, MultiIndex, OperatorExpr, PreserverVerdict, QPoly, Rational, Result};

use crate::{localized_half_scaling, poly1, Report, EXIT_NEGATIVE, EXIT_OK};

/// One compared quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub scenario: &'static str,
    pub quantity: &'static str,
    pub expected: String,
    pub actual: String,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }
}

pub const SHIFT_EXPANSION: [&str; 4] = ["1", "1", "1/2", "1/6"];
pub const CONVOLUTION_VALUE: &str = "-1/2";
pub const LOCALIZED_IMAGE: &str = "x0 + 1/2";
pub const FALSIFIED_AT: &str = "(x0 + 1, -1, -1/2)";
pub const HALF_LINE_REFUTATION: &str = "refuted at order 0 by localizer x0 - 2 with value -1";
pub const REAL_LINE_VERDICT: &str = "consistent up to order 4";
pub const SIGNED_RANK_IMAGE_OF_ONE: &str = "-x0^2 + 2*x0 + 4";
pub const SIGNED_RANK_AGREEMENT: &str = "equal on 1, t, t^2";
pub const SIGNED_RANK_CLASS: &str = "positivity preserver";
pub const SIGNED_RANK_MASS_AT_ZERO: &str = "4";

fn canon(p: &QPoly) -> String {
    p.to_string()
}

fn golden_poly(s: &str) -> String {
    poly1(s).map(|p| canon(&p)).unwrap_or_else(|e| format!("unparsable golden {s}: {e}"))
}

fn int(k: i64) -> Rational {
    Rational::from_integer(k.into())
}

fn falsified(v: &PreserverVerdict) -> String {
    match v {
        PreserverVerdict::Falsified { p, x, value } => {
            let xs: Vec<String> = x.iter().map(fmt_rational).collect();
            format!("({p}, {}, {})", xs.join(", "), fmt_rational(value))
        }
        other => format!("{other:?}"),
    }
}

fn moment_verdict(v: &MomentVerdict) -> String {
    match v {
        MomentVerdict::RefutedAtOrder { order, test, value, .. } => {
            format!("refuted at order {order} by {test} with value {}", fmt_rational(value))
        }
        MomentVerdict::ConsistentUpTo { order, .. } => format!("consistent up to order {order}"),
    }
}

/// Runs every scenario; errors inside a scenario become mismatches.
pub fn checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |scenario, quantity, expected: String, actual: Result<String>| {
        out.push(Check { scenario, quantity, expected, actual: actual.unwrap_or_else(|e| format!("error: {e}")) });
    };

    // Translation x ↦ x + 1 and the moment sequence of δ_1.
    let shift = OperatorExpr::parse("endo(x0 + 1)", 1).and_then(|op| extract_coeffs(&op, 3));
    for (k, expected) in SHIFT_EXPANSION.iter().enumerate() {
        let actual = shift.clone().map(|rep| {
            rep.coeff(&MultiIndex::new(vec![k as u32])).map(|c| canon(c)).unwrap_or_default()
        });
        push("shift", "q_k", golden_poly(expected), actual);
    }
    let ones = MomentSequence::univariate(vec![int(1); 9]);
    push(
        "shift",
        "ones on [2,inf)",
        HALF_LINE_REFUTATION.into(),
        ones.clone().and_then(|r| moment_check(&r, &DomainSet::HalfLine(int(2)), 4)).map(|v| moment_verdict(&v)),
    );
    push(
        "shift",
        "ones on R",
        REAL_LINE_VERDICT.into(),
        ones.and_then(|r| moment_check(&r, &DomainSet::RealLine, 4)).map(|v| moment_verdict(&v)),
    );

    // Convolution with Lebesgue measure on [-1, 0].
    let conv = MeasureExpr::uniform(int(-1), int(0)).and_then(|mu| DiffOpRep::convolution(&mu, 8));
    push(
        "convolution",
        "value at -1",
        CONVOLUTION_VALUE.into(),
        conv.clone().and_then(|rep| rep.apply(&poly1("x + 1")?)?.eval(&[int(-1)])).map(|v| fmt_rational(&v)),
    );
    push(
        "convolution",
        "check on [-1,0]",
        FALSIFIED_AT.into(),
        conv.and_then(|rep| {
            let s = DomainSet::interval(int(-1), int(0))?;
            check_preserver(&rep.to_operator(), &s, &CheckOptions::default())
        })
        .map(|v| falsified(&v)),
    );

    // Localization of x ↦ x/2 at 1.
    let local = localized_half_scaling();
    push(
        "localized scaling",
        "image of x + 1",
        golden_poly(LOCALIZED_IMAGE),
        local.clone().and_then(|rep| rep.apply(&poly1("x + 1")?)).map(|p| canon(&p)),
    );
    push(
        "localized scaling",
        "check on [-1,1]",
        FALSIFIED_AT.into(),
        local
            .and_then(|rep| {
                let s = DomainSet::interval(int(-1), int(1))?;
                check_preserver(&rep.to_operator(), &s, &CheckOptions::default())
            })
            .map(|v| falsified(&v)),
    );

    // Finite-rank operator with a signed and a nonnegative representation.
    let signed = OperatorExpr::parse("rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}", 1);
    let nonneg = OperatorExpr::parse("rank{(x0 + 2; lebesgue([-1,0])), (-x0^2 + x0 + 2; lebesgue([0,1]))}", 1);
    push(
        "finite rank",
        "image of 1",
        golden_poly(SIGNED_RANK_IMAGE_OF_ONE),
        signed.clone().and_then(|op| op.apply(&QPoly::one(1))).map(|p| canon(&p)),
    );
    push(
        "finite rank",
        "representations",
        SIGNED_RANK_AGREEMENT.into(),
        (|| {
            let (a, b) = (signed.clone()?, nonneg?);
            for k in 0..3u32 {
                let p = QPoly::monomial(MultiIndex::new(vec![k]), int(1));
                if a.apply(&p)? != b.apply(&p)? {
                    return Ok(format!("differ on t^{k}"));
                }
            }
            Ok(SIGNED_RANK_AGREEMENT.to_string())
        })(),
    );
    push(
        "finite rank",
        "classification on [-1,1]",
        SIGNED_RANK_CLASS.into(),
        signed
            .clone()
            .and_then(|op| classify_positivity(&op, &DomainSet::interval(int(-1), int(1))?, Budget::default()))
            .map(|c| match c {
                PositivityClass::PositivityPreserver { .. } => SIGNED_RANK_CLASS.to_string(),
                other => format!("{other:?}"),
            }),
    );
    push(
        "finite rank",
        "mass of mu_0",
        SIGNED_RANK_MASS_AT_ZERO.into(),
        signed
            .and_then(|op| preserver_core::adjoint::mu_x(&op, &[int(0)]))
            .and_then(|m| m.mass())
            .map(|v| fmt_rational(&v)),
    );
    out
}

pub(crate) fn report() -> Result<Report> {
    let checks = checks();
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.ok()).collect();
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{} {}: {}: {}\n",
            if c.ok() { "ok  " } else { "FAIL" },
            c.scenario,
            c.quantity,
            c.actual
        ));
        if !c.ok() {
            text.push_str(&format!("     expected {}\n", c.expected));
        }
    }
    let rows: Vec<Value> = checks
        .iter()
        .map(|c| json!({ "scenario": c.scenario, "quantity": c.quantity, "expected": c.expected, "actual": c.actual, "ok": c.ok() }))
        .collect();
    Ok(Report {
        code: if failed.is_empty() { EXIT_OK } else { EXIT_NEGATIVE },
        json: json!({ "command": "repro", "checks": rows, "failed": failed.len() }),
        text,
        csv: None,
    })
}
