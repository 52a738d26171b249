//! Linear operators on `ℚ[X_1, …, X_n]` as expression trees.
//!
//! Leaves are multiplication operators `M_f`, algebra endomorphisms `E_f`,
//! derivatives `D^α` and finite-rank operators `p ↦ Σ f_i ∫ p dν_i`; inner
//! nodes are sums, compositions and scalar multiples.

mod diffop;
mod preserver;

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::measure::MeasureExpr;
use crate::poly::text::Cursor;
use crate::poly::{MultiIndex, Polynomial};
use crate::scalar::{fmt_rational, Rational};

pub use diffop::{
    extract_coeffs, finite_order_verdict, global_preserver_check, localize_at, taylor_endo_coeffs, DiffOpRep,
    FiniteOrderVerdict, GlobalCheck,
};
pub use preserver::{
    certify_structural, check_preserver, classify_ellipticity, classify_positivity, falsify, test_polynomials,
    CheckOptions, EllipticityClass, PositivityClass, PreserverVerdict, DEFAULT_SEED,
};

type QPoly = Polynomial<Rational>;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorExpr {
    /// `M_f : p ↦ f·p`.
    Mul(QPoly),
    /// `E_f : p ↦ p(f_1, …, f_n)`.
    Endo(Vec<QPoly>),
    /// `D^α`.
    Diff(MultiIndex),
    /// `p ↦ Σ f_i ∫ p dν_i`.
    FiniteRank(Vec<(QPoly, MeasureExpr)>),
    Sum { nvars: usize, parts: Vec<OperatorExpr> },
    /// `outer ∘ inner`.
    Compose(Box<OperatorExpr>, Box<OperatorExpr>),
    ScalarMul(Rational, Box<OperatorExpr>),
}

impl OperatorExpr {
    pub fn mul(f: QPoly) -> Self {
        OperatorExpr::Mul(f)
    }

    pub fn endo(f: Vec<QPoly>) -> Result<Self> {
        let n = f.len();
        if n == 0 {
            return Err(Error::InvalidArgument("endomorphism needs at least one component".into()));
        }
        if let Some(g) = f.iter().find(|g| g.nvars() != n) {
            return Err(Error::dim(n, g.nvars()));
        }
        Ok(OperatorExpr::Endo(f))
    }

    pub fn diff(alpha: MultiIndex) -> Self {
        OperatorExpr::Diff(alpha)
    }

    pub fn finite_rank(pairs: Vec<(QPoly, MeasureExpr)>) -> Result<Self> {
        let Some(n) = pairs.first().map(|(f, _)| f.nvars()) else {
            return Err(Error::InvalidArgument("finite-rank operator needs at least one pair".into()));
        };
        for (f, nu) in &pairs {
            if f.nvars() != n {
                return Err(Error::dim(n, f.nvars()));
            }
            if nu.nvars() != n {
                return Err(Error::dim(n, nu.nvars()));
            }
        }
        Ok(OperatorExpr::FiniteRank(pairs))
    }

    pub fn sum(nvars: usize, parts: Vec<OperatorExpr>) -> Result<Self> {
        if let Some(op) = parts.iter().find(|op| op.nvars() != nvars) {
            return Err(Error::dim(nvars, op.nvars()));
        }
        Ok(OperatorExpr::Sum { nvars, parts })
    }

    pub fn compose(outer: OperatorExpr, inner: OperatorExpr) -> Result<Self> {
        if outer.nvars() != inner.nvars() {
            return Err(Error::dim(outer.nvars(), inner.nvars()));
        }
        Ok(OperatorExpr::Compose(Box::new(outer), Box::new(inner)))
    }

    pub fn scalar_mul(c: Rational, inner: OperatorExpr) -> Self {
        OperatorExpr::ScalarMul(c, Box::new(inner))
    }

    pub fn identity(n: usize) -> Self {
        OperatorExpr::Endo((0..n).map(|i| QPoly::var(n, i)).collect())
    }

    pub fn zero(n: usize) -> Self {
        OperatorExpr::Mul(QPoly::zero(n))
    }

    pub fn nvars(&self) -> usize {
        match self {
            OperatorExpr::Mul(f) => f.nvars(),
            OperatorExpr::Endo(f) => f.len(),
            OperatorExpr::Diff(a) => a.nvars(),
            OperatorExpr::FiniteRank(pairs) => pairs[0].0.nvars(),
            OperatorExpr::Sum { nvars, .. } => *nvars,
            OperatorExpr::Compose(outer, _) => outer.nvars(),
            OperatorExpr::ScalarMul(_, inner) => inner.nvars(),
        }
    }

    /// `Φ(p)`, exactly.
    pub fn apply(&self, p: &QPoly) -> Result<QPoly> {
        if p.nvars() != self.nvars() {
            return Err(Error::dim(self.nvars(), p.nvars()));
        }
        Ok(match self {
            OperatorExpr::Mul(f) => f * p,
            OperatorExpr::Endo(f) => p.compose(f)?,
            OperatorExpr::Diff(a) => p.derivative(a)?,
            OperatorExpr::FiniteRank(pairs) => {
                let mut acc = QPoly::zero(p.nvars());
                for (f, nu) in pairs {
                    let w = nu.integrate(p)?;
                    if !w.is_zero() {
                        acc = &acc + &f.scale(&w);
                    }
                }
                acc
            }
            OperatorExpr::Sum { parts, .. } => {
                let mut acc = QPoly::zero(p.nvars());
                for op in parts {
                    acc = &acc + &op.apply(p)?;
                }
                acc
            }
            OperatorExpr::Compose(outer, inner) => outer.apply(&inner.apply(p)?)?,
            OperatorExpr::ScalarMul(c, inner) => inner.apply(p)?.scale(c),
        })
    }

    /// `Φ(p)(x)`.
    pub fn apply_at(&self, p: &QPoly, x: &[Rational]) -> Result<Rational> {
        self.apply(p)?.eval(x)
    }

    /// Conservative test for finite order: `true` only when the
    /// differential representation is known to have finitely many nonzero
    /// coefficients.
    pub fn known_finite_order(&self) -> bool {
        match self {
            OperatorExpr::Mul(_) | OperatorExpr::Diff(_) => true,
            OperatorExpr::Endo(f) => {
                let n = f.len();
                f.iter().enumerate().all(|(i, g)| *g == QPoly::var(n, i))
            }
            OperatorExpr::FiniteRank(pairs) => pairs.iter().all(|(f, _)| f.is_zero()),
            OperatorExpr::Sum { parts, .. } => parts.iter().all(Self::known_finite_order),
            OperatorExpr::Compose(a, b) => a.known_finite_order() && b.known_finite_order(),
            OperatorExpr::ScalarMul(c, inner) => c.is_zero() || inner.known_finite_order(),
        }
    }

    /// `Φ′ : p ↦ Φ(p(X + a))(X − a)`.
    pub fn translate_conjugate(&self, a: &[Rational]) -> Result<OperatorExpr> {
        let n = self.nvars();
        if a.len() != n {
            return Err(Error::dim(n, a.len()));
        }
        let shift = |sign: i64| -> OperatorExpr {
            OperatorExpr::Endo(
                (0..n)
                    .map(|i| &QPoly::var(n, i) + &QPoly::constant(n, &a[i] * Rational::from_integer(sign.into())))
                    .collect(),
            )
        };
        let inner = OperatorExpr::compose(self.clone(), shift(1))?;
        OperatorExpr::compose(shift(-1), inner)
    }

    pub fn parse(src: &str, nvars: usize) -> Result<Self> {
        let mut cur = Cursor::new(src);
        let op = Self::parse_at(&mut cur, nvars)?;
        cur.finish()?;
        Ok(op)
    }

    fn parse_at(cur: &mut Cursor, n: usize) -> Result<Self> {
        let at = cur.pos();
        let Some(head) = cur.ident() else {
            return cur.err("expected an operator");
        };
        match head.as_str() {
            "mul" => {
                cur.expect('(')?;
                let f = cur.poly(n)?;
                cur.expect(')')?;
                Ok(OperatorExpr::Mul(f))
            }
            "endo" => {
                cur.expect('(')?;
                let mut f = vec![cur.poly(n)?];
                while cur.eat(',') {
                    f.push(cur.poly(n)?);
                }
                if f.len() != n {
                    return cur.err(format!("endo needs {n} component(s), got {}", f.len()));
                }
                cur.expect(')')?;
                OperatorExpr::endo(f)
            }
            "diff" => {
                cur.expect('(')?;
                let mut exps = Vec::new();
                loop {
                    let epos = cur.pos();
                    let e = cur.number()?;
                    if !e.is_integer() {
                        return Err(Error::Parse { pos: epos, msg: "derivative orders must be integers".into() });
                    }
                    let e: u32 = e
                        .to_integer()
                        .try_into()
                        .map_err(|_| Error::Parse { pos: epos, msg: "derivative order too large".into() })?;
                    exps.push(e);
                    if !cur.eat(',') {
                        break;
                    }
                }
                if exps.len() != n {
                    return cur.err(format!("diff needs {n} order(s), got {}", exps.len()));
                }
                cur.expect(')')?;
                Ok(OperatorExpr::Diff(MultiIndex::new(exps)))
            }
            "rank" => {
                cur.expect('{')?;
                let mut pairs = Vec::new();
                loop {
                    cur.expect('(')?;
                    let f = cur.poly(n)?;
                    cur.expect(';')?;
                    let nu = MeasureExpr::parse_at(cur, n)?;
                    cur.expect(')')?;
                    pairs.push((f, nu));
                    if !cur.eat(',') {
                        break;
                    }
                }
                cur.expect('}')?;
                OperatorExpr::finite_rank(pairs)
            }
            "sum" => {
                cur.expect('(')?;
                let mut parts = Vec::new();
                if !cur.eat(')') {
                    loop {
                        parts.push(Self::parse_at(cur, n)?);
                        if cur.eat(')') {
                            break;
                        }
                        cur.expect(',')?;
                    }
                }
                OperatorExpr::sum(n, parts)
            }
            "compose" => {
                cur.expect('(')?;
                let outer = Self::parse_at(cur, n)?;
                cur.expect(',')?;
                let inner = Self::parse_at(cur, n)?;
                cur.expect(')')?;
                OperatorExpr::compose(outer, inner)
            }
            "scale" => {
                cur.expect('(')?;
                let c = cur.rational()?;
                cur.expect(';')?;
                let inner = Self::parse_at(cur, n)?;
                cur.expect(')')?;
                Ok(OperatorExpr::scalar_mul(c, inner))
            }
            "id" => Ok(OperatorExpr::identity(n)),
            other => Err(Error::Parse { pos: at, msg: format!("unknown operator `{other}`") }),
        }
    }
}

impl std::ops::Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        OperatorExpr::scalar_mul(-Rational::one(), self)
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[QPoly]| v.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            OperatorExpr::Mul(g) => write!(f, "mul({g})"),
            OperatorExpr::Endo(g) => write!(f, "endo({})", join(g)),
            OperatorExpr::Diff(a) => {
                let e: Vec<String> = a.exps().iter().map(|e| e.to_string()).collect();
                write!(f, "diff({})", e.join(", "))
            }
            OperatorExpr::FiniteRank(pairs) => {
                let p: Vec<String> = pairs.iter().map(|(g, nu)| format!("({g}; {nu})")).collect();
                write!(f, "rank{{{}}}", p.join(", "))
            }
            OperatorExpr::Sum { parts, .. } => {
                let p: Vec<String> = parts.iter().map(|op| op.to_string()).collect();
                write!(f, "sum({})", p.join(", "))
            }
            OperatorExpr::Compose(a, b) => write!(f, "compose({a}, {b})"),
            OperatorExpr::ScalarMul(c, inner) => write!(f, "scale({}; {inner})", fmt_rational(c)),
        }
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

    pub(crate) fn signed_rank_op() -> OperatorExpr {
        OperatorExpr::parse("rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}", 1).unwrap()
    }

    #[test]
    fn apply_examples() {
        let half = OperatorExpr::parse("endo(x0/2)", 1).unwrap();
        assert_eq!(half.apply(&p1("x+1")).unwrap(), p1("x/2 + 1"));
        let f = p1("3*x^2 - 1");
        assert_eq!(OperatorExpr::mul(f.clone()).apply(&QPoly::one(1)).unwrap(), f);
        assert_eq!(signed_rank_op().apply(&QPoly::one(1)).unwrap(), p1("-x^2 + 2*x + 4"));
        assert_eq!(OperatorExpr::diff(MultiIndex::new(vec![2])).apply(&p1("x^3")).unwrap(), p1("6*x"));
        let c = OperatorExpr::compose(OperatorExpr::mul(p1("x")), OperatorExpr::diff(MultiIndex::new(vec![1]))).unwrap();
        assert_eq!(c.apply(&p1("x^2")).unwrap(), p1("2*x^2"));
        assert!(half.apply(&parse_poly("x0", 2).unwrap()).is_err());
    }

    #[test]
    fn the_two_representations_agree() {
        let alt = OperatorExpr::parse(
            "rank{(x0 + 2; lebesgue([-1,0])), (-x0^2 + x0 + 2; lebesgue([0,1]))}",
            1,
        )
        .unwrap();
        for k in 0..8 {
            let p = QPoly::monomial(MultiIndex::new(vec![k]), int(1));
            assert_eq!(alt.apply(&p).unwrap(), signed_rank_op().apply(&p).unwrap());
        }
    }

    #[test]
    fn translate_conjugate_matches_definition() {
        let a = [rat(3, 2)];
        let xa = [p1("x + 3/2")];
        let xma = [p1("x - 3/2")];
        for op in [OperatorExpr::mul(p1("x")), signed_rank_op(), OperatorExpr::identity(1)] {
            let t = op.translate_conjugate(&a).unwrap();
            for p in [p1("1"), p1("x"), p1("x^3 - 2*x + 1/3")] {
                let expect = op.apply(&p.compose(&xa).unwrap()).unwrap().compose(&xma).unwrap();
                assert_eq!(t.apply(&p).unwrap(), expect);
            }
        }
        let zero_shift = signed_rank_op().translate_conjugate(&[int(0)]).unwrap();
        assert_eq!(zero_shift.apply(&p1("x^2")).unwrap(), signed_rank_op().apply(&p1("x^2")).unwrap());
        // Mul(X) conjugated by 1 is p ↦ (X - 1)·p.
        let t = OperatorExpr::mul(p1("x")).translate_conjugate(&[int(1)]).unwrap();
        assert_eq!(t.apply(&p1("x")).unwrap(), p1("(x - 1)*x"));
    }

    #[test]
    fn text_round_trip() {
        let cases = [
            "mul(x0^2)",
            "endo(1/2*x0)",
            "diff(2)",
            "rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}",
            "sum(mul(x0), diff(1))",
            "compose(endo(x0 + 1), mul(x0))",
            "scale(-3/2; diff(0))",
        ];
        for src in cases {
            let op = OperatorExpr::parse(src, 1).unwrap();
            assert_eq!(op.to_string(), src);
        }
        let op = OperatorExpr::parse("endo(x1, x0 + x1)", 2).unwrap();
        assert_eq!(OperatorExpr::parse(&op.to_string(), 2).unwrap(), op);
        assert_eq!(OperatorExpr::parse("id", 2).unwrap(), OperatorExpr::identity(2));
        assert!(OperatorExpr::parse("diff(1/2)", 1).is_err());
        assert!(OperatorExpr::parse("endo(x0)", 2).is_err());
        assert!(OperatorExpr::parse("rank{}", 1).is_err());
        assert!(matches!(OperatorExpr::parse("mul(x0", 1), Err(Error::Parse { pos: 6, .. })));
    }

    #[test]
    fn finite_order_flags() {
        assert!(OperatorExpr::mul(p1("x")).known_finite_order());
        assert!(OperatorExpr::identity(1).known_finite_order());
        assert!(!OperatorExpr::parse("endo(x0+1)", 1).unwrap().known_finite_order());
        assert!(!signed_rank_op().known_finite_order());
    }

    fn arb_p(n: usize) -> impl Strategy<Value = QPoly> {
        prop::collection::vec((prop::collection::vec(0u32..3, n), -4i64..5, 1i64..3), 0..5).prop_map(move |ts| {
            QPoly::from_terms(n, ts.into_iter().map(|(e, a, b)| (MultiIndex::new(e), rat(a, b)))).unwrap()
        })
    }

    pub(crate) fn arb_op() -> impl Strategy<Value = OperatorExpr> {
        let leaf = prop_oneof![
            arb_p(1).prop_map(OperatorExpr::Mul),
            arb_p(1).prop_map(|f| OperatorExpr::Endo(vec![f])),
            (0u32..3).prop_map(|k| OperatorExpr::Diff(MultiIndex::new(vec![k]))),
            (arb_p(1), -2i64..2, 1i64..3).prop_map(|(f, a, w)| OperatorExpr::finite_rank(vec![(
                f,
                MeasureExpr::uniform(int(a), int(a + w)).unwrap()
            )])
            .unwrap()),
        ];
        leaf.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 1..3).prop_map(|ps| OperatorExpr::sum(1, ps).unwrap()),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| OperatorExpr::compose(a, b).unwrap()),
                (-3i64..4, inner).prop_map(|(c, a)| OperatorExpr::scalar_mul(int(c), a)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn apply_is_linear(op in arb_op(), p in arb_p(1), q in arb_p(1), c in -5i64..6) {
            let lhs = op.apply(&(&p + &q.scale(&int(c)))).unwrap();
            let rhs = &op.apply(&p).unwrap() + &op.apply(&q).unwrap().scale(&int(c));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn print_parse_round_trip(op in arb_op()) {
            prop_assert_eq!(OperatorExpr::parse(&op.to_string(), 1).unwrap(), op);
        }
    }
}
