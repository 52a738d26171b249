//! Exact measures with finite moments: atoms, polynomial densities on boxes,
//! and the closure under scaling by polynomials, pushforwards, sums and
//! scalar multiples.
//!
//! Integration of polynomials is the primitive; everything else (moments,
//! set measures, nonnegativity flags) is built on top of it.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::text::Cursor;
use crate::poly::univariate::rational_roots;
use crate::poly::{nonneg_on, range_enclosure, Budget, DomainSet, MultiIndex, Polynomial, SetBox};
use crate::scalar::{fmt_rational, midpoint, Rational};

type QPoly = Polynomial<Rational>;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureExpr {
    /// `Σ w_i δ_{x_i}`.
    Atomic { nvars: usize, atoms: Vec<(Vec<Rational>, Rational)> },
    /// `density · λ` restricted to a closed box.
    Lebesgue { bounds: Vec<(Rational, Rational)>, density: QPoly },
    /// `f · μ`.
    Scale { f: QPoly, inner: Box<MeasureExpr> },
    /// `μ ∘ f⁻¹`; the `f_i` are polynomials in the variables of `inner`.
    Pushforward { f: Vec<QPoly>, inner: Box<MeasureExpr> },
    Sum { nvars: usize, parts: Vec<MeasureExpr> },
    ScalarMul { c: Rational, inner: Box<MeasureExpr> },
}

impl MeasureExpr {
    pub fn dirac(x: Vec<Rational>) -> Self {
        MeasureExpr::Atomic { nvars: x.len(), atoms: vec![(x, Rational::one())] }
    }

    pub fn atoms(nvars: usize, atoms: Vec<(Vec<Rational>, Rational)>) -> Result<Self> {
        if let Some((x, _)) = atoms.iter().find(|(x, _)| x.len() != nvars) {
            return Err(Error::dim(nvars, x.len()));
        }
        Ok(MeasureExpr::Atomic { nvars, atoms })
    }

    pub fn lebesgue(bounds: Vec<(Rational, Rational)>, density: QPoly) -> Result<Self> {
        if density.nvars() != bounds.len() {
            return Err(Error::dim(bounds.len(), density.nvars()));
        }
        if let Some((a, b)) = bounds.iter().find(|(a, b)| a >= b) {
            return Err(Error::InvalidArgument(format!(
                "empty box side [{}, {}]",
                fmt_rational(a),
                fmt_rational(b)
            )));
        }
        Ok(MeasureExpr::Lebesgue { bounds, density })
    }

    /// Plain Lebesgue measure on `[a, b]`.
    pub fn uniform(a: Rational, b: Rational) -> Result<Self> {
        Self::lebesgue(vec![(a, b)], QPoly::one(1))
    }

    pub fn scale_by_poly(f: QPoly, inner: MeasureExpr) -> Result<Self> {
        if f.nvars() != inner.nvars() {
            return Err(Error::dim(inner.nvars(), f.nvars()));
        }
        Ok(MeasureExpr::Scale { f, inner: Box::new(inner) })
    }

    pub fn pushforward(f: Vec<QPoly>, inner: MeasureExpr) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::InvalidArgument("pushforward needs at least one component".into()));
        }
        if let Some(g) = f.iter().find(|g| g.nvars() != inner.nvars()) {
            return Err(Error::dim(inner.nvars(), g.nvars()));
        }
        Ok(MeasureExpr::Pushforward { f, inner: Box::new(inner) })
    }

    pub fn sum(nvars: usize, parts: Vec<MeasureExpr>) -> Result<Self> {
        if let Some(m) = parts.iter().find(|m| m.nvars() != nvars) {
            return Err(Error::dim(nvars, m.nvars()));
        }
        Ok(MeasureExpr::Sum { nvars, parts })
    }

    pub fn scalar_mul(c: Rational, inner: MeasureExpr) -> Self {
        MeasureExpr::ScalarMul { c, inner: Box::new(inner) }
    }

    pub fn zero(nvars: usize) -> Self {
        MeasureExpr::Sum { nvars, parts: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        match self {
            MeasureExpr::Atomic { nvars, .. } | MeasureExpr::Sum { nvars, .. } => *nvars,
            MeasureExpr::Lebesgue { bounds, .. } => bounds.len(),
            MeasureExpr::Scale { inner, .. } | MeasureExpr::ScalarMul { inner, .. } => inner.nvars(),
            MeasureExpr::Pushforward { f, .. } => f.len(),
        }
    }

    /// `∫ p dμ`, exactly.
    pub fn integrate(&self, p: &QPoly) -> Result<Rational> {
        if p.nvars() != self.nvars() {
            return Err(Error::dim(self.nvars(), p.nvars()));
        }
        Ok(match self {
            MeasureExpr::Atomic { atoms, .. } => {
                let mut acc = Rational::zero();
                for (x, w) in atoms {
                    acc += w * p.eval(x)?;
                }
                acc
            }
            MeasureExpr::Lebesgue { bounds, density } => (density * p).integrate_box(bounds)?,
            MeasureExpr::Scale { f, inner } => inner.integrate(&(f * p))?,
            MeasureExpr::Pushforward { f, inner } => inner.integrate(&p.compose(f)?)?,
            MeasureExpr::Sum { parts, .. } => {
                let mut acc = Rational::zero();
                for m in parts {
                    acc += m.integrate(p)?;
                }
                acc
            }
            MeasureExpr::ScalarMul { c, inner } => c * inner.integrate(p)?,
        })
    }

    /// Total mass `μ(ℝⁿ) = ∫ 1 dμ`.
    pub fn mass(&self) -> Result<Rational> {
        self.integrate(&QPoly::one(self.nvars()))
    }

    /// All moments `∫ X^α dμ` with `|α| ≤ d`.
    pub fn moments(&self, d: u32) -> Result<MomentSequence> {
        let n = self.nvars();
        let mut values = BTreeMap::new();
        for alpha in MultiIndex::all_up_to(n, d) {
            let v = self.integrate(&QPoly::monomial(alpha.clone(), Rational::one()))?;
            values.insert(alpha, v);
        }
        Ok(MomentSequence { nvars: n, order: d, values })
    }

    /// `μ(A)` for a box `A` whose sides may be closed or right-open.
    pub fn measure_of_set(&self, a: &SetBox) -> Result<Rational> {
        self.integrate_over(&QPoly::one(self.nvars()), a)
    }

    /// `∫_A p dμ`.
    pub fn integrate_over(&self, p: &QPoly, a: &SetBox) -> Result<Rational> {
        let n = self.nvars();
        if a.dim() != n {
            return Err(Error::dim(n, a.dim()));
        }
        if p.nvars() != n {
            return Err(Error::dim(n, p.nvars()));
        }
        let ident: Vec<QPoly> = (0..n).map(|i| QPoly::var(n, i)).collect();
        self.integrate_constrained(p, &[(ident, a.clone())])
    }

    /// `∫ p · 1[g_k(x) ∈ B_k for all k] dμ`.
    fn integrate_constrained(&self, p: &QPoly, cons: &[(Vec<QPoly>, SetBox)]) -> Result<Rational> {
        match self {
            MeasureExpr::Atomic { atoms, .. } => {
                let mut acc = Rational::zero();
                for (x, w) in atoms {
                    let mut inside = true;
                    for (g, b) in cons {
                        let y = g.iter().map(|gi| gi.eval(x)).collect::<Result<Vec<_>>>()?;
                        if !b.contains(&y) {
                            inside = false;
                            break;
                        }
                    }
                    if inside {
                        acc += w * p.eval(x)?;
                    }
                }
                Ok(acc)
            }
            MeasureExpr::Lebesgue { bounds, density } => {
                let integrand = density * p;
                let mut region = bounds.clone();
                let mut curved = Vec::new();
                for (g, b) in cons {
                    if is_identity(g) {
                        match b.overlap(&region) {
                            Some(r) => region = r,
                            None => return Ok(Rational::zero()),
                        }
                    } else {
                        curved.push((g, b));
                    }
                }
                if curved.is_empty() {
                    return integrand.integrate_box(&region);
                }
                if region.len() != 1 {
                    return Err(Error::UnsupportedPreimage(
                        "preimage of a box under a polynomial map in two or more variables".into(),
                    ));
                }
                let (lo, hi) = region[0].clone();
                let mut cuts = vec![lo.clone(), hi.clone()];
                for (g, b) in &curved {
                    for (gi, side) in g.iter().zip(&b.sides) {
                        for level in [&side.lo, &side.hi] {
                            let h = gi - &QPoly::constant(1, level.clone());
                            if h.is_constant() {
                                continue;
                            }
                            let (roots, all_rational) = rational_roots(&h.to_dense(), Some(&lo), Some(&hi));
                            if !all_rational {
                                return Err(Error::UnsupportedPreimage(format!(
                                    "{} = {} has irrational roots",
                                    gi,
                                    fmt_rational(level)
                                )));
                            }
                            cuts.extend(roots);
                        }
                    }
                }
                cuts.sort();
                cuts.dedup();
                let mut acc = Rational::zero();
                for w in cuts.windows(2) {
                    let m = midpoint(&w[0], &w[1]);
                    let mut inside = true;
                    for (g, b) in &curved {
                        let y = g.iter().map(|gi| gi.eval(std::slice::from_ref(&m))).collect::<Result<Vec<_>>>()?;
                        if !b.contains(&y) {
                            inside = false;
                            break;
                        }
                    }
                    if inside {
                        acc += integrand.integrate_box(&[(w[0].clone(), w[1].clone())])?;
                    }
                }
                Ok(acc)
            }
            MeasureExpr::Scale { f, inner } => inner.integrate_constrained(&(f * p), cons),
            MeasureExpr::Pushforward { f, inner } => {
                let pulled = cons
                    .iter()
                    .map(|(g, b)| {
                        let h = g.iter().map(|gi| gi.compose(f)).collect::<Result<Vec<_>>>()?;
                        Ok((h, b.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                inner.integrate_constrained(&p.compose(f)?, &pulled)
            }
            MeasureExpr::Sum { parts, .. } => {
                let mut acc = Rational::zero();
                for m in parts {
                    acc += m.integrate_constrained(p, cons)?;
                }
                Ok(acc)
            }
            MeasureExpr::ScalarMul { c, inner } => Ok(c * inner.integrate_constrained(p, cons)?),
        }
    }

    /// A closed box containing the support, `None` when the measure is
    /// structurally empty.
    pub fn support_hull(&self) -> Result<Option<Vec<(Rational, Rational)>>> {
        Ok(match self {
            MeasureExpr::Atomic { atoms, .. } => {
                let mut hull: Option<Vec<(Rational, Rational)>> = None;
                for (x, w) in atoms {
                    if w.is_zero() {
                        continue;
                    }
                    hull = Some(match hull {
                        None => x.iter().map(|v| (v.clone(), v.clone())).collect(),
                        Some(h) => join(h, x.iter().map(|v| (v.clone(), v.clone())).collect()),
                    });
                }
                hull
            }
            MeasureExpr::Lebesgue { bounds, density } => {
                if density.is_zero() {
                    None
                } else {
                    Some(bounds.clone())
                }
            }
            MeasureExpr::Scale { f, inner } => {
                if f.is_zero() {
                    None
                } else {
                    inner.support_hull()?
                }
            }
            MeasureExpr::Pushforward { f, inner } => match inner.support_hull()? {
                None => None,
                Some(h) => Some(
                    f.iter()
                        .map(|g| range_enclosure(g, &h).map(|e| (e.lo, e.hi)))
                        .collect::<Result<Vec<_>>>()?,
                ),
            },
            MeasureExpr::Sum { parts, .. } => {
                let mut hull = None;
                for m in parts {
                    if let Some(h) = m.support_hull()? {
                        hull = Some(match hull {
                            None => h,
                            Some(prev) => join(prev, h),
                        });
                    }
                }
                hull
            }
            MeasureExpr::ScalarMul { c, inner } => {
                if c.is_zero() {
                    None
                } else {
                    inner.support_hull()?
                }
            }
        })
    }

    /// Whether the support hull lies in the closed set `S`.
    pub fn supported_in(&self, s: &DomainSet) -> Result<bool> {
        if s.dim() != self.nvars() {
            return Err(Error::dim(s.dim(), self.nvars()));
        }
        Ok(match self.support_hull()? {
            None => true,
            Some(h) => s.contains_box(&h),
        })
    }

    /// Structural nonnegativity: `true` only when every weight, density,
    /// scaling polynomial and scalar is proven nonnegative where it acts.
    /// `false` means "not proven", which includes genuinely signed measures.
    pub fn is_nonnegative(&self, budget: Budget) -> Result<bool> {
        Ok(match self {
            MeasureExpr::Atomic { atoms, .. } => atoms.iter().all(|(_, w)| !w.is_negative()),
            MeasureExpr::Lebesgue { bounds, density } => {
                nonneg_on(density, &box_domain(bounds.clone())?, budget)?.is_certified()
            }
            MeasureExpr::Scale { f, inner } => {
                if !inner.is_nonnegative(budget)? {
                    return Ok(false);
                }
                if let MeasureExpr::Atomic { atoms, .. } = inner.as_ref() {
                    for (x, w) in atoms {
                        if !w.is_zero() && f.eval(x)?.is_negative() {
                            return Ok(false);
                        }
                    }
                    return Ok(true);
                }
                match inner.support_hull()? {
                    None => true,
                    Some(h) => nonneg_on(f, &box_domain(widen(h))?, budget)?.is_certified(),
                }
            }
            MeasureExpr::Pushforward { inner, .. } => inner.is_nonnegative(budget)?,
            MeasureExpr::Sum { parts, .. } => {
                for m in parts {
                    if !m.is_nonnegative(budget)? {
                        return Ok(false);
                    }
                }
                true
            }
            MeasureExpr::ScalarMul { c, inner } => !c.is_negative() && inner.is_nonnegative(budget)?,
        })
    }

    /// Parse the measure grammar with ambient dimension `nvars`.
    pub fn parse(src: &str, nvars: usize) -> Result<Self> {
        let mut cur = Cursor::new(src);
        let m = Self::parse_at(&mut cur, nvars)?;
        cur.finish()?;
        Ok(m)
    }

    pub(crate) fn parse_at(cur: &mut Cursor, n: usize) -> Result<Self> {
        let at = cur.pos();
        let Some(head) = cur.ident() else {
            return cur.err("expected a measure");
        };
        match head.as_str() {
            "dirac" => {
                cur.expect('(')?;
                let x = parse_point(cur, n)?;
                cur.expect(')')?;
                Ok(MeasureExpr::dirac(x))
            }
            "atoms" => {
                cur.expect('(')?;
                let mut atoms = Vec::new();
                if !cur.eat(')') {
                    loop {
                        cur.expect('(')?;
                        let x = parse_point(cur, n)?;
                        cur.expect(';')?;
                        let w = cur.rational()?;
                        cur.expect(')')?;
                        atoms.push((x, w));
                        if cur.eat(')') {
                            break;
                        }
                        cur.expect(',')?;
                    }
                }
                MeasureExpr::atoms(n, atoms)
            }
            "lebesgue" => {
                cur.expect('(')?;
                let dpos = cur.pos();
                let dom = DomainSet::parse_at(cur)?;
                let Some(bounds) = dom.bounds() else {
                    return Err(Error::Parse { pos: dpos, msg: "lebesgue needs a bounded box".into() });
                };
                if bounds.len() != n {
                    return Err(Error::Parse {
                        pos: dpos,
                        msg: format!("box has dimension {}, expected {n}", bounds.len()),
                    });
                }
                let density = if cur.eat(';') {
                    if !cur.eat_keyword("density") {
                        return cur.err("expected `density=`");
                    }
                    cur.expect('=')?;
                    cur.poly(n)?
                } else {
                    QPoly::one(n)
                };
                cur.expect(')')?;
                MeasureExpr::lebesgue(bounds, density)
            }
            "scale" => {
                cur.expect('(')?;
                let f = cur.poly(n)?;
                cur.expect(';')?;
                let inner = Self::parse_at(cur, n)?;
                cur.expect(')')?;
                MeasureExpr::scale_by_poly(f, inner)
            }
            "push" => {
                cur.expect('(')?;
                let mut f = vec![cur.poly(n)?];
                while cur.eat(',') {
                    f.push(cur.poly(n)?);
                }
                if f.len() != n {
                    return cur.err(format!("push needs {n} component(s), got {}", f.len()));
                }
                cur.expect(';')?;
                let inner = Self::parse_at(cur, n)?;
                cur.expect(')')?;
                MeasureExpr::pushforward(f, inner)
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
                MeasureExpr::sum(n, parts)
            }
            "neg" => {
                cur.expect('(')?;
                let inner = Self::parse_at(cur, n)?;
                cur.expect(')')?;
                Ok(MeasureExpr::scalar_mul(-Rational::one(), inner))
            }
            "times" => {
                cur.expect('(')?;
                let c = cur.rational()?;
                cur.expect(';')?;
                let inner = Self::parse_at(cur, n)?;
                cur.expect(')')?;
                Ok(MeasureExpr::scalar_mul(c, inner))
            }
            other => Err(Error::Parse { pos: at, msg: format!("unknown measure `{other}`") }),
        }
    }
}

fn parse_point(cur: &mut Cursor, n: usize) -> Result<Vec<Rational>> {
    let mut x = vec![cur.rational()?];
    while cur.eat(',') {
        x.push(cur.rational()?);
    }
    if x.len() != n {
        return cur.err(format!("point has {} coordinate(s), expected {n}", x.len()));
    }
    Ok(x)
}

fn is_identity(g: &[QPoly]) -> bool {
    let n = g.len();
    g.iter().enumerate().all(|(i, gi)| gi.nvars() == n && *gi == QPoly::var(n, i))
}

fn join(a: Vec<(Rational, Rational)>, b: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    a.into_iter()
        .zip(b)
        .map(|((l1, h1), (l2, h2))| (l1.min(l2), h1.max(h2)))
        .collect()
}

/// Open up degenerate sides so the hull can be used as a `DomainSet`; a
/// certificate on the larger box is still valid on the hull.
fn widen(h: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    h.into_iter()
        .map(|(a, b)| if a == b { (a.clone(), a + Rational::one()) } else { (a, b) })
        .collect()
}

fn box_domain(bounds: Vec<(Rational, Rational)>) -> Result<DomainSet> {
    if bounds.len() == 1 {
        let (a, b) = bounds.into_iter().next().expect("one side");
        DomainSet::interval(a, b)
    } else {
        DomainSet::boxed(bounds)
    }
}

fn fmt_point(x: &[Rational]) -> String {
    x.iter().map(fmt_rational).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for MeasureExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureExpr::Atomic { atoms, .. } => {
                if atoms.len() == 1 && atoms[0].1.is_one() {
                    write!(f, "dirac({})", fmt_point(&atoms[0].0))
                } else {
                    let parts: Vec<String> = atoms
                        .iter()
                        .map(|(x, w)| format!("({}; {})", fmt_point(x), fmt_rational(w)))
                        .collect();
                    write!(f, "atoms({})", parts.join(", "))
                }
            }
            MeasureExpr::Lebesgue { bounds, density } => {
                write!(f, "lebesgue({}", SetBox::closed(bounds))?;
                if *density != QPoly::one(bounds.len()) {
                    write!(f, "; density={density}")?;
                }
                f.write_str(")")
            }
            MeasureExpr::Scale { f: g, inner } => write!(f, "scale({g}; {inner})"),
            MeasureExpr::Pushforward { f: g, inner } => {
                let comps: Vec<String> = g.iter().map(|gi| gi.to_string()).collect();
                write!(f, "push({}; {inner})", comps.join(", "))
            }
            MeasureExpr::Sum { parts, .. } => {
                let parts: Vec<String> = parts.iter().map(|m| m.to_string()).collect();
                write!(f, "sum({})", parts.join(", "))
            }
            MeasureExpr::ScalarMul { c, inner } => {
                if *c == -Rational::one() {
                    write!(f, "neg({inner})")
                } else {
                    write!(f, "times({}; {inner})", fmt_rational(c))
                }
            }
        }
    }
}

/// Truncated (multi-)sequence `(r_α)_{|α| ≤ d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    nvars: usize,
    order: u32,
    values: BTreeMap<MultiIndex, Rational>,
}

impl MomentSequence {
    /// Build from values; every `α` with `|α| ≤ order` must be present.
    pub fn new(nvars: usize, order: u32, values: BTreeMap<MultiIndex, Rational>) -> Result<Self> {
        for alpha in MultiIndex::all_up_to(nvars, order) {
            if !values.contains_key(&alpha) {
                return Err(Error::InvalidArgument(format!("missing moment for exponent {:?}", alpha.exps())));
            }
        }
        let values = values.into_iter().filter(|(a, _)| a.degree() <= order && a.nvars() == nvars).collect();
        Ok(MomentSequence { nvars, order, values })
    }

    /// Univariate sequence `r_0, r_1, …`.
    pub fn univariate(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty moment sequence".into()));
        }
        let order = values.len() as u32 - 1;
        let values = values.into_iter().enumerate().map(|(k, v)| (MultiIndex::new(vec![k as u32]), v)).collect();
        Ok(MomentSequence { nvars: 1, order, values })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&Rational> {
        self.values.get(alpha)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.values.iter()
    }

    /// Univariate values in order; `None` for `n ≥ 2`.
    pub fn as_univariate(&self) -> Option<Vec<Rational>> {
        (self.nvars == 1).then(|| self.values.values().cloned().collect())
    }

    /// The Riesz functional `L(p) = Σ c_α r_α`.
    pub fn functional(&self, p: &QPoly) -> Result<Rational> {
        if p.nvars() != self.nvars {
            return Err(Error::dim(self.nvars, p.nvars()));
        }
        let mut acc = Rational::zero();
        for (alpha, c) in p.terms() {
            let r = self.values.get(alpha).ok_or(Error::InsufficientOrder {
                needed: alpha.degree() as usize,
                available: self.order as usize,
            })?;
            acc += c * r;
        }
        Ok(acc)
    }
}
