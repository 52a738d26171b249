//! Sparse multivariate polynomials, domain sets and nonnegativity
//! certification.

mod bernstein;
mod domain;
mod nonneg;
pub(crate) mod text;
pub mod univariate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::One;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

pub use bernstein::BernsteinPatch;
pub use domain::{DomainSet, SetBox, Side};
pub use nonneg::{
    image_within, nonneg_on, positive_on, range_enclosure, sup_norm, Budget, Enclosure,
    NonnegVerdict, PositivityVerdict,
};
pub use text::parse_poly;

/// Exponent vector `α ∈ ℕⁿ`.
///
/// Ordered graded-lexicographically: first by total degree, then
/// lexicographically with `x0` most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        MultiIndex(exps)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit vector `e_i` in `n` variables.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `self ⪯ other` componentwise.
    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other - self`, assuming `self ⪯ other`.
    pub fn complement_in(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(other.0.iter().zip(&self.0).map(|(b, a)| b - a).collect())
    }

    pub fn factorial(&self) -> num_bigint::BigInt {
        self.0
            .iter()
            .fold(num_bigint::BigInt::one(), |acc, &e| acc * crate::scalar::factorial(e))
    }

    /// All exponent vectors in `n` variables with total degree ≤ `d`,
    /// in ascending graded-lex order.
    pub fn all_up_to(n: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=d {
            let mut level = Vec::new();
            compositions(n, total, &mut vec![0; n], 0, &mut level);
            level.sort();
            out.extend(level);
        }
        out
    }
}

fn compositions(n: usize, remaining: u32, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<MultiIndex>) {
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in 0..=remaining {
        cur[pos] = e;
        compositions(n, remaining - e, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Sparse polynomial in `nvars` variables with coefficients in `T`.
///
/// Zero coefficients are never stored, so structural equality is
/// mathematical equality.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::monomial(MultiIndex::zero(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, T::one())
    }

    /// The coordinate polynomial `X_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), T::one())
    }

    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let nvars = alpha.nvars();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(alpha, c);
        }
        Polynomial { nvars, terms }
    }

    /// Build from `(exponents, coefficient)` pairs; repeated exponents are summed.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (alpha, c) in terms {
            if alpha.nvars() != nvars {
                return Err(Error::dim(nvars, alpha.nvars()));
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn univariate(coeffs: impl IntoIterator<Item = T>) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in coeffs.into_iter().enumerate() {
            p.add_term(MultiIndex(vec![k as u32]), c);
        }
        p
    }

    fn add_term(&mut self, alpha: MultiIndex, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&alpha);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// Degree in variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|a| a.0[i]).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(MultiIndex::is_zero)
    }

    /// Constant term.
    pub fn constant_term(&self) -> T {
        self.coeff(&MultiIndex::zero(self.nvars))
    }

    pub fn check_same_vars(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::dim(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        Ok(self - other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_vars(other)?;
        Ok(self * other)
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(a, v)| (a.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Exact evaluation at a point.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.nvars {
            return Err(Error::dim(self.nvars, x.len()));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> T {
        if self.nvars == 1 {
            // Horner over the dense coefficient list.
            let deg = self.degree().unwrap_or(0);
            let mut acc = T::zero();
            for k in (0..=deg).rev() {
                acc = acc * x[0].clone();
                if let Some(c) = self.terms.get(&MultiIndex(vec![k])) {
                    acc = acc + c.clone();
                }
            }
            return acc;
        }
        let maxdeg: Vec<u32> = (0..self.nvars).map(|i| self.degree_in(i)).collect();
        let powers: Vec<Vec<T>> = x
            .iter()
            .zip(&maxdeg)
            .map(|(xi, &d)| {
                let mut v = Vec::with_capacity(d as usize + 1);
                v.push(T::one());
                for k in 1..=d as usize {
                    let next = v[k - 1].clone() * xi.clone();
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = T::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in alpha.0.iter().enumerate() {
                if e > 0 {
                    term = term * powers[i][e as usize].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// `D^α p`: each `X^β` with `α ⪯ β` maps to `β!/(β-α)! X^{β-α}`, others vanish.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<Self> {
        if alpha.nvars() != self.nvars {
            return Err(Error::dim(self.nvars, alpha.nvars()));
        }
        let mut out = Self::zero(self.nvars);
        for (beta, c) in &self.terms {
            if !alpha.divides(beta) {
                continue;
            }
            let mut factor = T::one();
            for (&b, &a) in beta.0.iter().zip(&alpha.0) {
                for k in b - a + 1..=b {
                    factor = factor * <T as Scalar>::from_usize(k as usize);
                }
            }
            out.add_term(alpha.complement_in(beta), c.clone() * factor);
        }
        Ok(out)
    }

    /// Partial derivative in variable `i`.
    pub fn partial(&self, i: usize) -> Self {
        self.derivative(&MultiIndex::unit(self.nvars, i))
            .expect("unit index has matching dimension")
    }

    /// Substitution `p(f_1, …, f_n)`.
    pub fn compose(&self, f: &[Self]) -> Result<Self> {
        if f.len() != self.nvars {
            return Err(Error::dim(self.nvars, f.len()));
        }
        let target = match f.first() {
            Some(g) => g.nvars,
            None => return Ok(self.clone()),
        };
        if let Some(g) = f.iter().find(|g| g.nvars != target) {
            return Err(Error::dim(target, g.nvars));
        }
        // Cache powers of each substituted polynomial.
        let mut powers: Vec<Vec<Self>> = f.iter().map(|g| vec![Self::one(g.nvars), g.clone()]).collect();
        let mut out = Self::zero(target);
        for (alpha, c) in &self.terms {
            let mut term = Self::constant(target, c.clone());
            for (i, &e) in alpha.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &f[i];
                    powers[i].push(next);
                }
                term = &term * &powers[i][e as usize];
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Re-embed into `n ≥ nvars` variables (extra variables unused).
    pub fn extend_vars(&self, n: usize) -> Result<Self> {
        if n < self.nvars {
            if self.terms.keys().any(|a| a.0[n..].iter().any(|&e| e > 0)) {
                return Err(Error::dim(self.nvars, n));
            }
        }
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| {
                let mut e = a.0.clone();
                e.resize(n, 0);
                (MultiIndex(e), c.clone())
            })
            .collect();
        Ok(Polynomial { nvars: n, terms })
    }

    /// Convert coefficients into another scalar type.
    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        let mut out = Polynomial::<U>::zero(self.nvars);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), f(c));
        }
        out
    }

    /// Dense ascending coefficient vector of a univariate polynomial.
    pub fn to_dense(&self) -> Vec<T> {
        assert_eq!(self.nvars, 1, "to_dense requires a univariate polynomial");
        let deg = self.degree().unwrap_or(0) as usize;
        let mut v = vec![T::zero(); deg + 1];
        for (a, c) in &self.terms {
            v[a.0[0] as usize] = c.clone();
        }
        v
    }
}

impl Polynomial<Rational> {
    /// `∫` of `X_i` direction: antiderivative in variable `i` with zero constant.
    pub fn antiderivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, c) in &self.terms {
            let mut e = a.0.clone();
            e[i] += 1;
            let k = Rational::from_integer(e[i].into());
            out.add_term(MultiIndex(e), c / k);
        }
        out
    }

    /// Substitute a constant for variable `i`, keeping the variable count.
    pub fn substitute_const(&self, i: usize, v: &Rational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (a, c) in &self.terms {
            let mut e = a.0.clone();
            let k = std::mem::replace(&mut e[i], 0);
            out.add_term(MultiIndex(e), c * num_traits::pow(v.clone(), k as usize));
        }
        out
    }

    /// Exact integral over a box `Π [lo_i, hi_i]`.
    pub fn integrate_box(&self, bounds: &[(Rational, Rational)]) -> Result<Rational> {
        if bounds.len() != self.nvars {
            return Err(Error::dim(self.nvars, bounds.len()));
        }
        let mut p = self.clone();
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            let anti = p.antiderivative(i);
            p = &anti.substitute_const(i, hi) - &anti.substitute_const(i, lo);
        }
        Ok(p.constant_term())
    }

    /// `1 + Σ_j (∂p/∂X_j)²`.
    pub fn gradient_weight(&self) -> Self {
        let mut out = Self::one(self.nvars);
        for j in 0..self.nvars {
            let d = self.partial(j);
            out = &out + &(&d * &d);
        }
        out
    }

    /// Affine change of variables `X_i ↦ lo_i + (hi_i - lo_i) X_i`.
    pub fn affine_to_unit(&self, bounds: &[(Rational, Rational)]) -> Result<Self> {
        let subs: Vec<Self> = bounds
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| {
                &Self::constant(self.nvars, lo.clone()) + &Self::var(self.nvars, i).scale(&(hi - lo))
            })
            .collect();
        self.compose(&subs)
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), -c.clone());
        }
        out
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars, "polynomial dimension mismatch");
        let mut out = Polynomial::zero(self.nvars);
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                out.add_term(a + b, c.clone() * d.clone());
            }
        }
        out
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(a, c)| (a.clone(), -c.clone())).collect(),
        }
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl<T: Scalar> $tr for Polynomial<T> {
            type Output = Polynomial<T>;
            fn $m(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl<T: Scalar> Neg for Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

impl fmt::Display for Polynomial<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::format_poly(self))
    }
}
