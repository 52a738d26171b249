//! Differential-operator representation `Φ = Σ q_α D^α`, truncated at an
//! explicit degree.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::measure::{MeasureExpr, MomentSequence};
use crate::momentcheck::{moment_check, MomentVerdict};
use crate::poly::{DomainSet, MultiIndex, Polynomial};
use crate::scalar::{falling, Rational};

use super::OperatorExpr;

type QPoly = Polynomial<Rational>;

/// Coefficients `(q_α)_{|α| ≤ d}`; reproduces the source operator on all
/// polynomials of degree `≤ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOpRep {
    nvars: usize,
    degree: u32,
    coeffs: BTreeMap<MultiIndex, QPoly>,
}

impl DiffOpRep {
    /// Build from explicit coefficients; missing entries are zero.
    pub fn new(nvars: usize, degree: u32, coeffs: impl IntoIterator<Item = (MultiIndex, QPoly)>) -> Result<Self> {
        let mut map: BTreeMap<MultiIndex, QPoly> =
            MultiIndex::all_up_to(nvars, degree).into_iter().map(|a| (a, QPoly::zero(nvars))).collect();
        for (alpha, q) in coeffs {
            if alpha.nvars() != nvars {
                return Err(Error::dim(nvars, alpha.nvars()));
            }
            if q.nvars() != nvars {
                return Err(Error::dim(nvars, q.nvars()));
            }
            if alpha.degree() > degree {
                return Err(Error::InvalidArgument(format!(
                    "coefficient of order {} exceeds truncation degree {degree}",
                    alpha.degree()
                )));
            }
            map.insert(alpha, q);
        }
        Ok(DiffOpRep { nvars, degree, coeffs: map })
    }

    /// Constant-coefficient operator `Σ (1/α!)(∫ X^α dμ) D^α`, which acts
    /// as `p ↦ ∫ p(X + y) dμ(y)`.
    pub fn convolution(mu: &MeasureExpr, degree: u32) -> Result<Self> {
        let n = mu.nvars();
        let r = mu.moments(degree)?;
        let coeffs = r
            .iter()
            .map(|(alpha, v)| {
                let c = v / Rational::from_integer(alpha.factorial());
                (alpha.clone(), QPoly::constant(n, c))
            })
            .collect::<Vec<_>>();
        Self::new(n, degree, coeffs)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Option<&QPoly> {
        self.coeffs.get(alpha)
    }

    /// Coefficients in ascending graded-lex order of `α`.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &QPoly)> {
        self.coeffs.iter()
    }

    /// Largest `|α|` with `q_α ≠ 0` (0 for the zero operator).
    pub fn order(&self) -> u32 {
        self.coeffs.iter().filter(|(_, q)| !q.is_zero()).map(|(a, _)| a.degree()).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(QPoly::is_constant)
    }

    /// `r_α` when every coefficient is constant.
    pub fn constant_coeffs(&self) -> Result<BTreeMap<MultiIndex, Rational>> {
        if !self.is_constant() {
            return Err(Error::NonConstantCoefficients);
        }
        Ok(self.coeffs.iter().map(|(a, q)| (a.clone(), q.constant_term())).collect())
    }

    /// `Σ_{|α| ≤ d} q_α D^α(p)`; equals the source operator when `deg p ≤ d`.
    pub fn apply(&self, p: &QPoly) -> Result<QPoly> {
        if p.nvars() != self.nvars {
            return Err(Error::dim(self.nvars, p.nvars()));
        }
        let mut acc = QPoly::zero(self.nvars);
        for (alpha, q) in &self.coeffs {
            if q.is_zero() {
                continue;
            }
            let d = p.derivative(alpha)?;
            if !d.is_zero() {
                acc = &acc + &(q * &d);
            }
        }
        Ok(acc)
    }

    /// The truncated operator as an expression `Σ M_{q_α} ∘ D^α`.
    pub fn to_operator(&self) -> OperatorExpr {
        let parts = self
            .coeffs
            .iter()
            .filter(|(_, q)| !q.is_zero())
            .map(|(alpha, q)| {
                OperatorExpr::Compose(Box::new(OperatorExpr::Mul(q.clone())), Box::new(OperatorExpr::Diff(alpha.clone())))
            })
            .collect();
        OperatorExpr::Sum { nvars: self.nvars, parts }
    }
}

impl fmt::Display for DiffOpRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (alpha, q) in &self.coeffs {
            let e: Vec<String> = alpha.exps().iter().map(|e| e.to_string()).collect();
            writeln!(f, "q({}) = {q}", e.join(","))?;
        }
        Ok(())
    }
}

/// Coefficient extraction by induction over graded-lex order:
/// `q_β = (1/β!)(Φ(X^β) − Σ_{α ⪯ β, α ≠ β} β!/(β−α)! q_α X^{β−α})`.
pub fn extract_coeffs(op: &OperatorExpr, d: u32) -> Result<DiffOpRep> {
    let n = op.nvars();
    let mut coeffs: BTreeMap<MultiIndex, QPoly> = BTreeMap::new();
    for beta in MultiIndex::all_up_to(n, d) {
        let mut rest = op.apply(&QPoly::monomial(beta.clone(), Rational::one()))?;
        for (alpha, q) in &coeffs {
            if q.is_zero() || !alpha.divides(&beta) {
                continue;
            }
            let gap = alpha.complement_in(&beta);
            let mut c = num_bigint::BigInt::one();
            for (&b, &a) in beta.exps().iter().zip(alpha.exps()) {
                c *= falling(b, a);
            }
            rest = &rest - &(q * &QPoly::monomial(gap, Rational::from_integer(c)));
        }
        let q_beta = rest.scale(&(Rational::one() / Rational::from_integer(beta.factorial())));
        coeffs.insert(beta, q_beta);
    }
    Ok(DiffOpRep { nvars: n, degree: d, coeffs })
}

/// Taylor coefficients of `E_f`: `q_α = (1/α!) Π_i (f_i − X_i)^{α_i}`.
pub fn taylor_endo_coeffs(f: &[QPoly], d: u32) -> Result<DiffOpRep> {
    let n = f.len();
    if let Some(g) = f.iter().find(|g| g.nvars() != n) {
        return Err(Error::dim(n, g.nvars()));
    }
    let shifts: Vec<QPoly> = f.iter().enumerate().map(|(i, g)| g - &QPoly::var(n, i)).collect();
    let coeffs = MultiIndex::all_up_to(n, d)
        .into_iter()
        .map(|alpha| {
            let mut q = QPoly::constant(n, Rational::one() / Rational::from_integer(alpha.factorial()));
            for (s, &e) in shifts.iter().zip(alpha.exps()) {
                if e > 0 {
                    q = &q * &s.pow(e);
                }
            }
            (alpha, q)
        })
        .collect();
    Ok(DiffOpRep { nvars: n, degree: d, coeffs })
}

/// `Φ_a = Σ q_α(a) D^α`.
pub fn localize_at(rep: &DiffOpRep, a: &[Rational]) -> Result<DiffOpRep> {
    if a.len() != rep.nvars {
        return Err(Error::dim(rep.nvars, a.len()));
    }
    let coeffs = rep
        .coeffs
        .iter()
        .map(|(alpha, q)| Ok((alpha.clone(), QPoly::constant(rep.nvars, q.eval(a)?))))
        .collect::<Result<_>>()?;
    Ok(DiffOpRep { nvars: rep.nvars, degree: rep.degree, coeffs })
}

/// Moment test of `(α! r_α)` for a constant-coefficient operator.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalCheck {
    /// `α! r_α` for `|α| ≤ d`.
    pub sequence: MomentSequence,
    /// Moment test on `S` itself.
    pub direct: MomentVerdict,
    pub zero_in_domain: bool,
    /// `S − s` for a point `s ∈ S` (`s = 0` when `0 ∈ S`).
    pub shifted_domain: DomainSet,
    /// Moment test on the shifted domain, which contains 0.
    pub shifted: MomentVerdict,
    /// A refutation on a domain containing 0 proves that the operator is
    /// not an `S`-nonnegativity preserver.
    pub refutes_preserver: bool,
}

/// Necessary condition for constant-coefficient `S`-preservers.
///
/// If `0 ∈ S` and `Φ = Σ r_α D^α` preserves `𝒩(S)`, then `(α! r_α)` is an
/// `S̄`-moment sequence. Constant-coefficient operators commute with
/// translations, so the test is also run on `S − s` for some `s ∈ S`; only a
/// refutation there is a sound refutation of the preserver property. The
/// direct verdict on `S` is reported as is and may refute operators that
/// do preserve `𝒩(S)` when `0 ∉ S`.
pub fn global_preserver_check(rep: &DiffOpRep, s: &DomainSet, m: usize) -> Result<GlobalCheck> {
    let r = rep.constant_coeffs()?;
    if s.dim() != rep.nvars {
        return Err(Error::dim(rep.nvars, s.dim()));
    }
    let values = r
        .into_iter()
        .map(|(alpha, v)| {
            let c = Rational::from_integer(alpha.factorial());
            (alpha, v * c)
        })
        .collect();
    let sequence = MomentSequence::new(rep.nvars, rep.degree, values)?;
    let direct = moment_check(&sequence, s, m)?;
    let origin = vec![Rational::zero(); rep.nvars];
    let zero_in_domain = s.contains(&origin);
    let (shifted_domain, shifted) = if zero_in_domain {
        (s.clone(), direct.clone())
    } else {
        let point: Vec<Rational> = s.sample_point().into_iter().map(|v| -v).collect();
        let t = s.translate(&point)?;
        let v = moment_check(&sequence, &t, m)?;
        (t, v)
    };
    let refutes_preserver = shifted.is_refuted();
    Ok(GlobalCheck { sequence, direct, zero_in_domain, shifted_domain, shifted, refutes_preserver })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiniteOrderVerdict {
    /// Order 0: `M_f`, compatible with preserving nonnegativity on `ℝⁿ`.
    Order0,
    /// A finite-order operator of order ≥ 1 never preserves `𝒩(ℝⁿ)`.
    NotGlobalPreserver { order: u32 },
    /// Order ≥ 1 in the truncation, but finiteness of the order is not known.
    Inconclusive { order: u32 },
}

/// Classify by order. `finite_order` asserts that the operator has
/// finitely many nonzero coefficients (e.g. [`OperatorExpr::known_finite_order`]).
pub fn finite_order_verdict(rep: &DiffOpRep, finite_order: bool) -> FiniteOrderVerdict {
    match rep.order() {
        0 if finite_order || rep.degree == 0 => FiniteOrderVerdict::Order0,
        0 => FiniteOrderVerdict::Inconclusive { order: 0 },
        order if finite_order => FiniteOrderVerdict::NotGlobalPreserver { order },
        order => FiniteOrderVerdict::Inconclusive { order },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn p1(s: &str) -> QPoly {
        parse_poly(s, 1).unwrap()
    }

    fn c1(v: Rational) -> QPoly {
        QPoly::constant(1, v)
    }

    fn idx(e: u32) -> MultiIndex {
        MultiIndex::new(vec![e])
    }

    #[test]
    fn extract_examples() {
        let shift = OperatorExpr::parse("endo(x0 + 1)", 1).unwrap();
        let rep = extract_coeffs(&shift, 3).unwrap();
        let expect = [int(1), int(1), rat(1, 2), rat(1, 6)];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(rep.coeff(&idx(i as u32)), Some(&c1(e.clone())));
        }
        let id = extract_coeffs(&OperatorExpr::identity(2), 3).unwrap();
        for (alpha, q) in id.iter() {
            let expect = if alpha.is_zero() { QPoly::one(2) } else { QPoly::zero(2) };
            assert_eq!(q, &expect);
        }
        let f = p1("x^2 - 3");
        let rep = extract_coeffs(&OperatorExpr::mul(f.clone()), 4).unwrap();
        assert_eq!(rep.coeff(&idx(0)), Some(&f));
        assert_eq!(rep.order(), 0);
    }

    #[test]
    fn taylor_examples() {
        let rep = taylor_endo_coeffs(&[p1("x/2")], 4).unwrap();
        let mut fact = int(1);
        for i in 0..=4u32 {
            if i > 0 {
                fact *= int(i as i64);
            }
            let expect = p1("-x/2").pow(i).scale(&(Rational::one() / &fact));
            assert_eq!(rep.coeff(&idx(i)), Some(&expect));
        }
        let id = taylor_endo_coeffs(&[p1("x")], 3).unwrap();
        assert_eq!(id.order(), 0);
        let shift = taylor_endo_coeffs(&[p1("x + 1")], 3).unwrap();
        assert_eq!(shift, extract_coeffs(&OperatorExpr::parse("endo(x0+1)", 1).unwrap(), 3).unwrap());
    }

    #[test]
    fn localize_examples() {
        let rep = taylor_endo_coeffs(&[p1("x/2")], 6).unwrap();
        let at1 = localize_at(&rep, &[int(1)]).unwrap();
        assert_eq!(at1.apply(&p1("x + 1")).unwrap(), p1("x + 1/2"));
        assert_eq!(at1.to_operator().apply(&p1("x + 1")).unwrap(), p1("x + 1/2"));
        let at0 = localize_at(&rep, &[int(0)]).unwrap();
        assert_eq!(at0.apply(&p1("x^2")).unwrap(), p1("x^2"));
        let m = localize_at(&extract_coeffs(&OperatorExpr::mul(p1("x^2 + 1")), 3).unwrap(), &[int(2)]).unwrap();
        assert_eq!(m.coeff(&idx(0)), Some(&c1(int(5))));
        assert_eq!(m.order(), 0);
        // Φ(p)(a) = Φ_a(p)(a).
        for a in [rat(-1, 2), int(1), int(3)] {
            let la = localize_at(&rep, &[a.clone()]).unwrap();
            let p = p1("x^5 - 2*x^2 + 1");
            assert_eq!(la.apply(&p).unwrap().eval(&[a.clone()]).unwrap(), rep.apply(&p).unwrap().eval(&[a]).unwrap());
        }
    }

    #[test]
    fn convolution_reproduces_the_interval_example() {
        let mu = MeasureExpr::uniform(int(-1), int(0)).unwrap();
        let rep = DiffOpRep::convolution(&mu, 6).unwrap();
        assert_eq!(rep.coeff(&idx(1)), Some(&c1(rat(-1, 2))));
        assert_eq!(rep.coeff(&idx(2)), Some(&c1(rat(1, 6))));
        let v = rep.apply(&p1("x + 1")).unwrap().eval(&[int(-1)]).unwrap();
        assert_eq!(v, rat(-1, 2));
        // ∫ p(x + y) dλ(y) on [-1, 0].
        let p = p1("x^3 + x");
        let direct = MeasureExpr::uniform(int(-1), int(0)).unwrap();
        let x = rat(2, 3);
        let shifted = p.compose(&[p1(&format!("x + {x}"))]).unwrap();
        assert_eq!(rep.apply(&p).unwrap().eval(&[x]).unwrap(), direct.integrate(&shifted).unwrap());
    }

    #[test]
    fn global_check_examples() {
        let rep = taylor_endo_coeffs(&[p1("x + 1")], 8).unwrap();
        let half = DomainSet::HalfLine(int(2));
        let g = global_preserver_check(&rep, &half, 0).unwrap();
        match &g.direct {
            MomentVerdict::RefutedAtOrder { order: 0, value, .. } => assert_eq!(value, &int(-1)),
            other => panic!("{other:?}"),
        }
        assert!(!g.zero_in_domain);
        assert_eq!(g.shifted_domain, DomainSet::HalfLine(int(0)));
        assert!(!g.refutes_preserver);
        let g = global_preserver_check(&rep, &DomainSet::RealLine, 3).unwrap();
        assert_eq!(g.direct, MomentVerdict::ConsistentUpTo { order: 3, necessary_only: false });
        assert_eq!(g.sequence.as_univariate().unwrap(), vec![int(1); 9]);

        let bad = DiffOpRep::new(1, 2, [(idx(0), c1(int(1))), (idx(2), c1(rat(-1, 2)))]).unwrap();
        let g = global_preserver_check(&bad, &DomainSet::RealLine, 1).unwrap();
        assert!(matches!(g.direct, MomentVerdict::RefutedAtOrder { order: 1, .. }));
        assert!(g.refutes_preserver);

        let var = extract_coeffs(&OperatorExpr::mul(p1("x")), 2).unwrap();
        assert_eq!(global_preserver_check(&var, &DomainSet::RealLine, 1), Err(Error::NonConstantCoefficients));
    }

    #[test]
    fn finite_order_examples() {
        let m = OperatorExpr::mul(p1("x^2"));
        assert_eq!(finite_order_verdict(&extract_coeffs(&m, 3).unwrap(), m.known_finite_order()), FiniteOrderVerdict::Order0);
        let d = OperatorExpr::diff(idx(1));
        assert_eq!(
            finite_order_verdict(&extract_coeffs(&d, 3).unwrap(), d.known_finite_order()),
            FiniteOrderVerdict::NotGlobalPreserver { order: 1 }
        );
        let z = OperatorExpr::zero(1);
        assert_eq!(finite_order_verdict(&extract_coeffs(&z, 3).unwrap(), true), FiniteOrderVerdict::Order0);
        let e = OperatorExpr::parse("endo(x0 + 1)", 1).unwrap();
        assert_eq!(
            finite_order_verdict(&extract_coeffs(&e, 3).unwrap(), e.known_finite_order()),
            FiniteOrderVerdict::Inconclusive { order: 3 }
        );
    }

    fn arb_p(n: usize, deg: u32) -> impl Strategy<Value = QPoly> {
        let monos = MultiIndex::all_up_to(n, deg);
        prop::collection::vec((-3i64..4, 1i64..3), monos.len()).prop_map(move |cs| {
            QPoly::from_terms(n, monos.iter().cloned().zip(cs.into_iter().map(|(a, b)| rat(a, b)))).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn taylor_matches_extraction(
            (n, f, d) in (1usize..=2).prop_flat_map(|n| (Just(n), prop::collection::vec(arb_p(n, 3), n), 0u32..=4))
        ) {
            let op = OperatorExpr::endo(f.clone()).unwrap();
            prop_assert_eq!(taylor_endo_coeffs(&f, d).unwrap(), extract_coeffs(&op, d).unwrap());
            prop_assert_eq!(n, op.nvars());
        }

        #[test]
        fn representation_round_trip(op in super::super::tests::arb_op(), d in 0u32..=4) {
            let rep = extract_coeffs(&op, d).unwrap();
            for k in 0..=d {
                let x = QPoly::monomial(idx(k), Rational::one());
                prop_assert_eq!(rep.apply(&x).unwrap(), op.apply(&x).unwrap());
                prop_assert_eq!(rep.to_operator().apply(&x).unwrap(), op.apply(&x).unwrap());
            }
        }
    }

    #[test]
    fn derivative_monomial_table() {
        // D^α(X^β) = β!/(β−α)! X^{β−α} for α ⪯ β, else 0; |α|, |β| ≤ 4, n ≤ 3.
        for n in 1..=3 {
            let all = MultiIndex::all_up_to(n, 4);
            for beta in &all {
                let xb = QPoly::monomial(beta.clone(), Rational::one());
                for alpha in &all {
                    let got = xb.derivative(alpha).unwrap();
                    if alpha.divides(beta) {
                        let c = Rational::from_integer(beta.factorial())
                            / Rational::from_integer(alpha.complement_in(beta).factorial());
                        assert_eq!(got, QPoly::monomial(alpha.complement_in(beta), c));
                    } else {
                        assert!(got.is_zero());
                    }
                }
            }
        }
    }
}
