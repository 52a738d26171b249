//! Adjoint maps on measures: `∫ Φ(p) dμ = ∫ p dT(μ)`.
//!
//! Adjoints are built by structural recursion for multiplication,
//! composition, finite-rank, sum and scalar nodes. Derivatives have no
//! measure adjoint and are rejected.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::measure::MeasureExpr;
use crate::operator::OperatorExpr;
use crate::poly::{MultiIndex, Polynomial, SetBox};
use crate::scalar::Rational;

type QPoly = Polynomial<Rational>;

/// The measure transformer adjoint to an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointMap {
    op: OperatorExpr,
}

impl AdjointMap {
    /// Fails when some node has no constructive adjoint.
    pub fn new(op: OperatorExpr) -> Result<Self> {
        check_constructive(&op)?;
        Ok(AdjointMap { op })
    }

    pub fn operator(&self) -> &OperatorExpr {
        &self.op
    }

    pub fn apply(&self, mu: &MeasureExpr) -> Result<MeasureExpr> {
        adjoint_apply(&self.op, mu)
    }

    /// `μ_x = T(δ_x)`, so that `Φ(p)(x) = ∫ p dμ_x`.
    pub fn at(&self, x: &[Rational]) -> Result<MeasureExpr> {
        self.apply(&MeasureExpr::dirac(x.to_vec()))
    }
}

fn check_constructive(op: &OperatorExpr) -> Result<()> {
    match op {
        OperatorExpr::Diff(alpha) if !alpha.is_zero() => Err(Error::NoConstructiveAdjoint(op.to_string())),
        OperatorExpr::Sum { parts, .. } => parts.iter().try_for_each(check_constructive),
        OperatorExpr::Compose(a, b) => {
            check_constructive(a)?;
            check_constructive(b)
        }
        OperatorExpr::ScalarMul(_, inner) => check_constructive(inner),
        _ => Ok(()),
    }
}

/// `T(μ)` for the adjoint `T` of `Φ`.
pub fn adjoint_apply(op: &OperatorExpr, mu: &MeasureExpr) -> Result<MeasureExpr> {
    if op.nvars() != mu.nvars() {
        return Err(Error::dim(op.nvars(), mu.nvars()));
    }
    match op {
        OperatorExpr::Mul(f) => MeasureExpr::scale_by_poly(f.clone(), mu.clone()),
        OperatorExpr::Endo(f) if f.iter().enumerate().all(|(i, g)| *g == QPoly::var(f.len(), i)) => Ok(mu.clone()),
        OperatorExpr::Endo(f) => MeasureExpr::pushforward(f.clone(), mu.clone()),
        OperatorExpr::Diff(alpha) if alpha.is_zero() => Ok(mu.clone()),
        OperatorExpr::Diff(_) => Err(Error::NoConstructiveAdjoint(op.to_string())),
        OperatorExpr::FiniteRank(pairs) => {
            let mut parts = Vec::with_capacity(pairs.len());
            for (f, nu) in pairs {
                let w = mu.integrate(f)?;
                if !w.is_zero() {
                    parts.push(MeasureExpr::scalar_mul(w, nu.clone()));
                }
            }
            MeasureExpr::sum(op.nvars(), parts)
        }
        OperatorExpr::Sum { nvars, parts } => {
            let parts = parts.iter().map(|p| adjoint_apply(p, mu)).collect::<Result<Vec<_>>>()?;
            MeasureExpr::sum(*nvars, parts)
        }
        // (Φ∘Ψ)* = Ψ*∘Φ*
        OperatorExpr::Compose(outer, inner) => adjoint_apply(inner, &adjoint_apply(outer, mu)?),
        OperatorExpr::ScalarMul(c, inner) => Ok(MeasureExpr::scalar_mul(c.clone(), adjoint_apply(inner, mu)?)),
    }
}

/// The measure `μ_x` with `Φ(p)(x) = ∫ p dμ_x`.
pub fn mu_x(op: &OperatorExpr, x: &[Rational]) -> Result<MeasureExpr> {
    adjoint_apply(op, &MeasureExpr::dirac(x.to_vec()))
}

/// `Φ*_A(x) = μ_x(A)`.
pub fn star_a(op: &OperatorExpr, a: &SetBox, x: &[Rational]) -> Result<Rational> {
    mu_x(op, x)?.measure_of_set(a)
}

/// `Σ r_i 1_{A_i}` with pairwise disjoint cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    cells: Vec<(SetBox, Rational)>,
}

impl StepFunction {
    pub fn new(cells: Vec<(SetBox, Rational)>) -> Result<Self> {
        for (i, (a, _)) in cells.iter().enumerate() {
            if let Some((b, _)) = cells.get(i + 1..).and_then(|rest| rest.iter().find(|(b, _)| b.intersects(a))) {
                return Err(Error::InvalidArgument(format!("step cells {a} and {b} overlap")));
            }
        }
        if let Some(n) = cells.first().map(|(a, _)| a.dim()) {
            if let Some((a, _)) = cells.iter().find(|(a, _)| a.dim() != n) {
                return Err(Error::dim(n, a.dim()));
            }
        }
        Ok(StepFunction { cells })
    }

    pub fn zero() -> Self {
        StepFunction { cells: Vec::new() }
    }

    /// `p` sampled at cell midpoints of a uniform grid with `r` cells per axis.
    pub fn sample(p: &QPoly, bounds: &[(Rational, Rational)], r: usize) -> Result<Self> {
        let cells = SetBox::grid(bounds, r)
            .into_iter()
            .map(|c| {
                let v = p.eval(&c.center())?;
                Ok((c, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StepFunction { cells })
    }

    pub fn cells(&self) -> &[(SetBox, Rational)] {
        &self.cells
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.cells.iter().find(|(a, _)| a.contains(x)).map(|(_, r)| r.clone()).unwrap_or_else(Rational::zero)
    }
}

/// `(∫ s dm)(x) = Σ r_i μ_x(A_i)`.
pub fn step_integral(op: &OperatorExpr, s: &StepFunction, x: &[Rational]) -> Result<Rational> {
    let mu = mu_x(op, x)?;
    let mut total = Rational::zero();
    for (a, r) in &s.cells {
        if !r.is_zero() {
            total += r * mu.measure_of_set(a)?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiniteRange {
    /// `Φ(p) = Σ f_i ∫ p dν_i`, hence `Φ*_A = Σ ν_i(A) f_i`.
    Basis(Vec<(QPoly, MeasureExpr)>),
    /// Ranks of `Φ` restricted to degree `≤ k`, for `k = 0..=d`.
    NotDetected { ranks: Vec<usize> },
}

/// Explicit finite-rank form when the expression has one, otherwise the
/// growth of the image rank over monomials up to degree `d`.
pub fn finite_range_detect(op: &OperatorExpr, d: u32) -> Result<FiniteRange> {
    if let Some(basis) = finite_basis(op)? {
        return Ok(FiniteRange::Basis(basis));
    }
    let n = op.nvars();
    let mut rows: Vec<BTreeMap<MultiIndex, Rational>> = Vec::new();
    let mut ranks = Vec::with_capacity(d as usize + 1);
    for k in 0..=d {
        for alpha in MultiIndex::all_up_to(n, k).into_iter().filter(|a| a.degree() == k) {
            let image = op.apply(&QPoly::monomial(alpha, Rational::from_integer(1.into())))?;
            rows.push(image.terms().map(|(a, c)| (a.clone(), c.clone())).collect());
        }
        ranks.push(rank(&rows));
    }
    Ok(FiniteRange::NotDetected { ranks })
}

fn finite_basis(op: &OperatorExpr) -> Result<Option<Vec<(QPoly, MeasureExpr)>>> {
    Ok(match op {
        OperatorExpr::FiniteRank(pairs) => Some(pairs.clone()),
        OperatorExpr::Sum { parts, .. } => {
            let mut out = Vec::new();
            for p in parts {
                match finite_basis(p)? {
                    Some(b) => out.extend(b),
                    None => return Ok(None),
                }
            }
            Some(out)
        }
        OperatorExpr::ScalarMul(c, inner) => finite_basis(inner)?
            .map(|b| b.into_iter().map(|(f, nu)| (f, MeasureExpr::scalar_mul(c.clone(), nu))).collect()),
        OperatorExpr::Compose(outer, inner) => {
            // Φ(Σ f_i L_i(p)) = Σ Φ(f_i) L_i(p).
            if let Some(b) = finite_basis(inner)? {
                let mut out = Vec::with_capacity(b.len());
                for (f, nu) in b {
                    out.push((outer.apply(&f)?, nu));
                }
                Some(out)
            } else if let Some(b) = finite_basis(outer)? {
                // Σ f_i ∫ Ψ(p) dν_i = Σ f_i ∫ p dΨ*(ν_i).
                let mut out = Vec::with_capacity(b.len());
                for (f, nu) in b {
                    match adjoint_apply(inner, &nu) {
                        Ok(m) => out.push((f, m)),
                        Err(Error::NoConstructiveAdjoint(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
                Some(out)
            } else {
                None
            }
        }
        _ => None,
    })
}

/// Exact rank of sparse rational row vectors.
fn rank(rows: &[BTreeMap<MultiIndex, Rational>]) -> usize {
    let mut basis: Vec<(MultiIndex, BTreeMap<MultiIndex, Rational>)> = Vec::new();
    for row in rows {
        let mut v = row.clone();
        for (pivot, b) in &basis {
            if let Some(c) = v.get(pivot).cloned() {
                let factor = c / &b[pivot];
                for (k, bv) in b {
                    let e = v.entry(k.clone()).or_insert_with(Rational::zero);
                    *e -= &factor * bv;
                }
                v.retain(|_, c| !c.is_zero());
            }
        }
        if let Some(pivot) = v.keys().next().cloned() {
            basis.push((pivot, v));
        }
    }
    basis.len()
}
