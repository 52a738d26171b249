//! Three-valued check of `Φ(𝒩(S)) ⊆ 𝒩(S)`: structural certificates first,
//! then a seeded search for an exact counterexample.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::MeasureExpr;
use crate::poly::{image_within, nonneg_on, positive_on, Budget, DomainSet, MultiIndex, NonnegVerdict, Polynomial, PositivityVerdict};
use crate::scalar::{rat, Rational};

use super::OperatorExpr;

type QPoly = Polynomial<Rational>;

pub const DEFAULT_SEED: u64 = 20240101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub budget: Budget,
    pub seed: u64,
    /// Number of generated test polynomials.
    pub tests: usize,
    pub max_degree: u32,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { budget: Budget::default(), seed: DEFAULT_SEED, tests: 200, max_degree: 6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreserverVerdict {
    CertifiedPreserver { reason: String },
    /// `p ≥ 0` on `S`, `x ∈ S` and `Φ(p)(x) = value < 0`.
    Falsified { p: QPoly, x: Vec<Rational>, value: Rational },
    NoCounterexampleFound { tests: usize, note: String },
}

/// Structural certificate that `Φ` preserves `𝒩(S)`; `None` when no rule applies.
pub fn certify_structural(op: &OperatorExpr, s: &DomainSet, budget: Budget) -> Result<Option<String>> {
    if op.nvars() != s.dim() {
        return Err(Error::dim(s.dim(), op.nvars()));
    }
    Ok(match op {
        OperatorExpr::Mul(f) => nonneg_on(f, s, budget)?
            .is_certified()
            .then(|| format!("multiplier {f} is nonnegative on {s}")),
        OperatorExpr::Endo(f) => image_within(f, s, s, budget)?.is_certified().then(|| {
            let comps: Vec<String> = f.iter().map(|g| g.to_string()).collect();
            format!("({}) maps {s} into itself", comps.join(", "))
        }),
        OperatorExpr::Diff(alpha) => alpha.is_zero().then(|| "D^0 is the identity".to_string()),
        OperatorExpr::FiniteRank(pairs) => {
            let mut plain = true;
            for (f, nu) in pairs {
                if f.is_zero() {
                    continue;
                }
                if !nonneg_on(f, s, budget)?.is_certified() || !nu.is_nonnegative(budget)? || !nu.supported_in(s)? {
                    plain = false;
                    break;
                }
            }
            if plain {
                Some("every f_i is nonnegative on S and every ν_i is a nonnegative measure on S".to_string())
            } else if mixture_nonnegative(pairs, s, budget)? {
                Some("μ_x = Σ f_i(x)·ν_i is a nonnegative measure on S for every x ∈ S".to_string())
            } else {
                None
            }
        }
        OperatorExpr::Sum { parts, .. } => {
            let mut reasons = Vec::new();
            for part in parts {
                match certify_structural(part, s, budget)? {
                    Some(r) => reasons.push(r),
                    None => return Ok(None),
                }
            }
            Some(format!("sum of preservers [{}]", reasons.join("; ")))
        }
        OperatorExpr::Compose(outer, inner) => {
            match (certify_structural(outer, s, budget)?, certify_structural(inner, s, budget)?) {
                (Some(a), Some(b)) => Some(format!("composition of preservers [{a}] after [{b}]")),
                _ => None,
            }
        }
        OperatorExpr::ScalarMul(c, inner) => {
            if c.is_zero() {
                Some("zero operator".to_string())
            } else if c.is_negative() {
                None
            } else {
                certify_structural(inner, s, budget)?.map(|r| format!("positive multiple of [{r}]"))
            }
        }
    })
}

enum Piece {
    Atom(Rational, Rational),
    Density(Rational, Rational, QPoly),
}

/// Atoms and density pieces of a univariate measure without pushforwards.
fn pieces(nu: &MeasureExpr, weight: &QPoly, out: &mut Vec<Piece>) -> Result<bool> {
    match nu {
        MeasureExpr::Atomic { atoms, .. } => {
            for (x, w) in atoms {
                out.push(Piece::Atom(x[0].clone(), w * weight.eval(x)?));
            }
        }
        MeasureExpr::Lebesgue { bounds, density } => {
            out.push(Piece::Density(bounds[0].0.clone(), bounds[0].1.clone(), density * weight));
        }
        MeasureExpr::Scale { f, inner } => return pieces(inner, &(f * weight), out),
        MeasureExpr::ScalarMul { c, inner } => return pieces(inner, &weight.scale(c), out),
        MeasureExpr::Sum { parts, .. } => {
            for m in parts {
                if !pieces(m, weight, out)? {
                    return Ok(false);
                }
            }
        }
        MeasureExpr::Pushforward { .. } => return Ok(false),
    }
    Ok(true)
}

/// Sound test that `Σ f_i(x) ν_i ≥ 0` on `S` for every `x ∈ S`, for
/// univariate compact `S` and measures made of atoms and density pieces.
///
/// Densities are merged on the common refinement of their intervals and
/// the resulting bivariate density `Σ f_i(x) d_i(y)` is certified on
/// `S × cell` by Bernstein subdivision.
fn mixture_nonnegative(pairs: &[(QPoly, MeasureExpr)], s: &DomainSet, budget: Budget) -> Result<bool> {
    let DomainSet::Interval(a, b) = s else { return Ok(false) };
    // x is variable 0 and y variable 1 of the bivariate pieces.
    let x_of = |f: &QPoly| f.extend_vars(2);
    let y_of = |d: &QPoly| d.compose(&[QPoly::var(2, 1)]);
    let mut atoms: Vec<(Rational, QPoly)> = Vec::new();
    let mut dens: Vec<(Rational, Rational, QPoly)> = Vec::new();
    for (f, nu) in pairs {
        let mut ps = Vec::new();
        if !pieces(nu, &QPoly::one(1), &mut ps)? {
            return Ok(false);
        }
        for piece in ps {
            match piece {
                Piece::Atom(x, w) => {
                    let g = f.scale(&w);
                    match atoms.iter_mut().find(|(y, _)| *y == x) {
                        Some((_, acc)) => *acc = &*acc + &g,
                        None => atoms.push((x, g)),
                    }
                }
                Piece::Density(lo, hi, d) => dens.push((lo, hi, &x_of(f)? * &y_of(&d)?)),
            }
        }
    }
    for (x, w) in &atoms {
        if w.is_zero() {
            continue;
        }
        if x < a || x > b || !nonneg_on(w, s, budget)?.is_certified() {
            return Ok(false);
        }
    }
    let mut cuts: Vec<Rational> = dens.iter().flat_map(|(l, h, _)| [l.clone(), h.clone()]).collect();
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let mut total = QPoly::zero(2);
        for (l, h, g) in &dens {
            if l <= lo && hi <= h {
                total = &total + g;
            }
        }
        if total.is_zero() {
            continue;
        }
        if lo < a || hi > b {
            return Ok(false);
        }
        let cell = DomainSet::boxed(vec![(a.clone(), b.clone()), (lo.clone(), hi.clone())])?;
        if !nonneg_on(&total, &cell, budget)?.is_certified() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Seeded test polynomials that are nonnegative on `S` by construction:
/// `1`, the linear domain certificates, then squares, sums of squares and
/// products of certificates with squares.
pub fn test_polynomials(s: &DomainSet, opts: &CheckOptions) -> Vec<QPoly> {
    let n = s.dim();
    let mut certs: Vec<QPoly> = Vec::new();
    let mut quads: Vec<QPoly> = Vec::new();
    for (i, (lo, hi)) in s.axis_limits().into_iter().enumerate() {
        let x = QPoly::var(n, i);
        let lo_c = lo.map(|l| &x - &QPoly::constant(n, l));
        let hi_c = hi.map(|h| &QPoly::constant(n, h) - &x);
        if let (Some(l), Some(h)) = (&lo_c, &hi_c) {
            quads.push(l * h);
        }
        certs.extend(lo_c);
        certs.extend(hi_c);
    }
    let mut out = vec![QPoly::one(n)];
    out.extend(certs.iter().cloned());
    out.extend(quads.iter().cloned());
    let mut all_certs = certs;
    all_certs.extend(quads);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let half = (opts.max_degree / 2).max(1);
    while out.len() < opts.tests {
        let p = match rng.gen_range(0..4) {
            0 => random_poly(&mut rng, n, half).pow(2),
            1 => &random_poly(&mut rng, n, half).pow(2) + &random_poly(&mut rng, n, half).pow(2),
            2 if !all_certs.is_empty() => {
                let g = &all_certs[rng.gen_range(0..all_certs.len())];
                let room = opts.max_degree.saturating_sub(g.degree().unwrap_or(0)) / 2;
                g * &random_poly(&mut rng, n, room).pow(2)
            }
            _ => {
                let i = rng.gen_range(0..n);
                let c = rat(rng.gen_range(-8..=8), 4);
                let shifted = &QPoly::var(n, i) - &QPoly::constant(n, c);
                &shifted.pow(2) + &QPoly::constant(n, rat(rng.gen_range(0..=2), 4))
            }
        };
        if !p.is_zero() {
            out.push(p);
        }
    }
    out.truncate(opts.tests.max(1));
    out
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> QPoly {
    let terms = MultiIndex::all_up_to(n, deg)
        .into_iter()
        .filter_map(|a| {
            if rng.gen_bool(0.5) {
                Some((a, rat(rng.gen_range(-4..=4), rng.gen_range(1..=3))))
            } else {
                None
            }
        })
        .collect::<Vec<_>>();
    QPoly::from_terms(n, terms).expect("consistent dimensions")
}

/// Search the seeded test family for `p ≥ 0` with `Φ(p)` negative somewhere on `S`.
pub fn falsify(op: &OperatorExpr, s: &DomainSet, opts: &CheckOptions) -> Result<PreserverVerdict> {
    if op.nvars() != s.dim() {
        return Err(Error::dim(s.dim(), op.nvars()));
    }
    let tests = test_polynomials(s, opts);
    let checkable = s.dim() == 1 || s.is_compact();
    let mut unknown = 0usize;
    for p in &tests {
        if checkable && !nonneg_on(p, s, opts.budget)?.is_certified() {
            continue;
        }
        let image = op.apply(p)?;
        match nonneg_on(&image, s, opts.budget)? {
            NonnegVerdict::Falsified { witness, value } => {
                return Ok(PreserverVerdict::Falsified { p: p.clone(), x: witness, value });
            }
            NonnegVerdict::Unknown { .. } => unknown += 1,
            NonnegVerdict::Certified => {}
        }
    }
    let note = if unknown > 0 {
        format!("{unknown} image(s) could not be decided within budget")
    } else {
        "all images certified nonnegative".to_string()
    };
    Ok(PreserverVerdict::NoCounterexampleFound { tests: tests.len(), note })
}

/// Certificate branch, then falsification.
pub fn check_preserver(op: &OperatorExpr, s: &DomainSet, opts: &CheckOptions) -> Result<PreserverVerdict> {
    if let Some(reason) = certify_structural(op, s, opts.budget)? {
        return Ok(PreserverVerdict::CertifiedPreserver { reason });
    }
    falsify(op, s, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PositivityClass {
    PositivityPreserver { reason: String },
    NotPositivityPreserver { reason: String, witness: Option<Vec<Rational>> },
    Unknown { reason: String },
}

/// Positivity via `Φ(1) > 0` on `S`, valid for certified nonnegativity
/// preservers on compact or univariate closed `S`.
pub fn classify_positivity(op: &OperatorExpr, s: &DomainSet, budget: Budget) -> Result<PositivityClass> {
    if s.dim() >= 2 && !s.is_compact() {
        return Err(Error::NonCompact(s.to_string()));
    }
    let one = op.apply(&QPoly::one(s.dim()))?;
    match positive_on(&one, s, budget)? {
        PositivityVerdict::NotPositive { witness, reason } => Ok(PositivityClass::NotPositivityPreserver {
            reason: format!("Φ(1) = {one} is not positive on {s}: {reason}"),
            witness,
        }),
        PositivityVerdict::Unknown { reason } => Ok(PositivityClass::Unknown { reason }),
        PositivityVerdict::Positive => Ok(match certify_structural(op, s, budget)? {
            Some(cert) => PositivityClass::PositivityPreserver {
                reason: format!("Φ(1) = {one} > 0 on {s} and {cert}"),
            },
            None => PositivityClass::Unknown {
                reason: "Φ(1) > 0 but Φ has no nonnegativity certificate".to_string(),
            },
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EllipticityClass {
    /// `sign·Φ` is a positivity preserver.
    EllipticityPreserver { sign: i8, reason: String },
    NotEllipticityPreserver { reason: String },
    Unknown { reason: String },
}

/// On connected `S`, `Φ` preserves zero-free polynomials iff `Φ` or `−Φ`
/// preserves positive ones.
pub fn classify_ellipticity(op: &OperatorExpr, s: &DomainSet, budget: Budget) -> Result<EllipticityClass> {
    if !s.is_connected() {
        return Ok(EllipticityClass::Unknown { reason: "S is not connected".into() });
    }
    let negated = match op {
        OperatorExpr::ScalarMul(c, inner) if c.is_negative() => {
            OperatorExpr::scalar_mul(-c.clone(), inner.as_ref().clone())
        }
        other => -other.clone(),
    };
    let mut unknown = None;
    for (sign, candidate) in [(1i8, op), (-1i8, &negated)] {
        match classify_positivity(candidate, s, budget)? {
            PositivityClass::PositivityPreserver { reason } => {
                return Ok(EllipticityClass::EllipticityPreserver { sign, reason });
            }
            PositivityClass::Unknown { reason } => unknown = Some(reason),
            PositivityClass::NotPositivityPreserver { .. } => {}
        }
    }
    let one = op.apply(&QPoly::one(s.dim()))?;
    let zero_free = matches!(positive_on(&one, s, budget)?, PositivityVerdict::Positive)
        || matches!(positive_on(&-&one, s, budget)?, PositivityVerdict::Positive);
    if !zero_free {
        return Ok(EllipticityClass::NotEllipticityPreserver { reason: format!("Φ(1) = {one} has a zero on {s}") });
    }
    Ok(EllipticityClass::Unknown {
        reason: unknown.unwrap_or_else(|| "neither Φ nor −Φ could be classified".into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{localize_at, taylor_endo_coeffs, DiffOpRep};
    use crate::poly::parse_poly;
    use crate::scalar::int;

    fn p1(s: &str) -> QPoly {
        parse_poly(s, 1).unwrap()
    }

    fn iv(a: i64, b: i64) -> DomainSet {
        DomainSet::interval(int(a), int(b)).unwrap()
    }

    fn signed_rank_op() -> OperatorExpr {
        OperatorExpr::parse("rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}", 1).unwrap()
    }

    #[test]
    fn falsifies_the_localized_half_scaling() {
        let rep = taylor_endo_coeffs(&[p1("x/2")], 8).unwrap();
        let phi1 = localize_at(&rep, &[int(1)]).unwrap().to_operator();
        let v = check_preserver(&phi1, &iv(-1, 1), &CheckOptions::default()).unwrap();
        assert_eq!(v, PreserverVerdict::Falsified { p: p1("x + 1"), x: vec![int(-1)], value: rat(-1, 2) });
    }

    #[test]
    fn falsifies_the_convolution_example() {
        let mu = MeasureExpr::uniform(int(-1), int(0)).unwrap();
        let op = DiffOpRep::convolution(&mu, 8).unwrap().to_operator();
        let v = check_preserver(&op, &iv(-1, 0), &CheckOptions::default()).unwrap();
        assert_eq!(v, PreserverVerdict::Falsified { p: p1("x + 1"), x: vec![int(-1)], value: rat(-1, 2) });
    }

    #[test]
    fn structural_certificates() {
        let opts = CheckOptions::default();
        let sq = OperatorExpr::mul(p1("x^2"));
        assert!(matches!(check_preserver(&sq, &DomainSet::RealLine, &opts).unwrap(), PreserverVerdict::CertifiedPreserver { .. }));
        let half = OperatorExpr::parse("endo(x0/2)", 1).unwrap();
        assert!(matches!(check_preserver(&half, &iv(-1, 1), &opts).unwrap(), PreserverVerdict::CertifiedPreserver { .. }));
        let shift = OperatorExpr::parse("endo(x0 + 1)", 1).unwrap();
        assert!(matches!(
            check_preserver(&shift, &DomainSet::HalfLine(int(2)), &opts).unwrap(),
            PreserverVerdict::CertifiedPreserver { .. }
        ));
        match check_preserver(&shift, &iv(-1, 1), &opts).unwrap() {
            PreserverVerdict::Falsified { p, x, value } => {
                assert!(nonneg_on(&p, &iv(-1, 1), Budget::default()).unwrap().is_certified());
                assert_eq!(shift.apply(&p).unwrap().eval(&x).unwrap(), value);
                assert!(value < int(0));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            check_preserver(&signed_rank_op(), &iv(-1, 1), &opts).unwrap(),
            PreserverVerdict::CertifiedPreserver { .. }
        ));
        // D^1 on R: x^2 ↦ 2x.
        let d = OperatorExpr::diff(MultiIndex::new(vec![1]));
        assert!(matches!(check_preserver(&d, &DomainSet::RealLine, &opts).unwrap(), PreserverVerdict::Falsified { .. }));
        let neg = OperatorExpr::scalar_mul(int(-1), OperatorExpr::identity(1));
        assert!(matches!(check_preserver(&neg, &iv(0, 1), &opts).unwrap(), PreserverVerdict::Falsified { .. }));
    }

    #[test]
    fn signed_representation_needs_the_mixture_test() {
        // x + 1 - x^2 < 0 at x = -1.
        let bad = OperatorExpr::parse("rank{(x0 + 1; lebesgue([0,1])), (x0^2; neg(lebesgue([0,1])))}", 1).unwrap();
        assert_eq!(certify_structural(&bad, &iv(-1, 1), Budget::default()).unwrap(), None);
        let atoms = OperatorExpr::parse("rank{(x0 + 1; dirac(0)), (1 - x0; dirac(0))}", 1).unwrap();
        assert!(certify_structural(&atoms, &iv(-1, 1), Budget::default()).unwrap().is_some());
    }

    #[test]
    fn generator_is_deterministic_and_nonnegative() {
        let s = iv(-1, 2);
        let opts = CheckOptions::default();
        let a = test_polynomials(&s, &opts);
        assert_eq!(a, test_polynomials(&s, &opts));
        assert_eq!(a.len(), 200);
        assert_eq!(a[0], QPoly::one(1));
        assert_eq!(a[1], p1("x + 1"));
        for p in &a {
            assert!(p.degree().unwrap_or(0) <= 6);
            assert!(nonneg_on(p, &s, Budget::default()).unwrap().is_certified(), "{p}");
        }
        let other = test_polynomials(&s, &CheckOptions { seed: 7, ..opts });
        assert_ne!(a, other);
    }

    #[test]
    fn positivity_examples() {
        let b = Budget::default();
        assert!(matches!(
            classify_positivity(&OperatorExpr::mul(p1("x^2 + 1")), &iv(-1, 1), b).unwrap(),
            PositivityClass::PositivityPreserver { .. }
        ));
        assert!(matches!(
            classify_positivity(&OperatorExpr::mul(p1("x^2")), &iv(-1, 1), b).unwrap(),
            PositivityClass::NotPositivityPreserver { .. }
        ));
        assert!(matches!(
            classify_positivity(&signed_rank_op(), &iv(-1, 1), b).unwrap(),
            PositivityClass::PositivityPreserver { .. }
        ));
        assert!(classify_positivity(&OperatorExpr::identity(2), &DomainSet::RealSpace(2), b).is_err());
    }

    #[test]
    fn ellipticity_examples() {
        let b = Budget::default();
        let neg = OperatorExpr::scalar_mul(int(-2), OperatorExpr::mul(p1("x^2 + 1")));
        assert!(matches!(
            classify_ellipticity(&neg, &iv(-1, 1), b).unwrap(),
            EllipticityClass::EllipticityPreserver { sign: -1, .. }
        ));
        assert!(matches!(
            classify_ellipticity(&OperatorExpr::identity(1), &iv(-1, 1), b).unwrap(),
            EllipticityClass::EllipticityPreserver { sign: 1, .. }
        ));
        assert!(matches!(
            classify_ellipticity(&OperatorExpr::mul(p1("x")), &iv(-1, 1), b).unwrap(),
            EllipticityClass::NotEllipticityPreserver { .. }
        ));
    }
}
