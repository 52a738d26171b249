//! Hankel, moment and localizing matrices, and exact PSD verdicts.
//!
//! Finite data never proves that a sequence is a moment sequence, so the
//! positive verdict is only ever "consistent up to order m".

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::measure::MomentSequence;
use crate::poly::{DomainSet, MultiIndex, Polynomial};
use crate::scalar::{fmt_rational, Rational, Scalar};

type QPoly = Polynomial<Rational>;

/// Dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Row-major entries; rejects non-symmetric input.
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::dim(dim * dim, data.len()));
        }
        for i in 0..dim {
            for j in 0..i {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::InvalidArgument(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(SymMatrix { dim, data })
    }

    /// Build from the upper triangle `f(i, j)`, `i ≤ j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[j * dim + i] = v.clone();
                data[i * dim + j] = v;
            }
        }
        SymMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            if v[i].is_zero() {
                continue;
            }
            let mut row = T::zero();
            for j in 0..self.dim {
                row = row + self.get(i, j).clone() * v[j].clone();
            }
            acc = acc + v[i].clone() * row;
        }
        acc
    }

    /// LDLᵀ with symmetric pivoting.
    ///
    /// Exact for rational entries; for floating point the verdict is only as
    /// good as the rounding allows.
    pub fn psd(&self) -> PsdResult<T> {
        let n = self.dim;
        let mut s = self.data.clone();
        let mut basis: Vec<Vec<T>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        let mut alive: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let at = |i: usize, j: usize| i * n + j;
        loop {
            if let Some(&j) = alive.iter().find(|&&j| s[at(j, j)].is_negative()) {
                return self.certify(basis[j].clone());
            }
            let best = alive
                .iter()
                .copied()
                .filter(|&j| s[at(j, j)].is_positive())
                .fold(None, |acc: Option<usize>, j| match acc {
                    Some(b) if s[at(b, b)] >= s[at(j, j)] => Some(b),
                    _ => Some(j),
                });
            let Some(k) = best else {
                // Zero diagonal: any nonzero off-diagonal entry gives a direction
                // with (u_i − sign·u_j)ᵀ M (u_i − sign·u_j) = −2|s_ij|.
                for (a, &i) in alive.iter().enumerate() {
                    for &j in &alive[a + 1..] {
                        let sij = &s[at(i, j)];
                        if !sij.is_zero() {
                            let sign = if sij.is_positive() { T::one() } else { -T::one() };
                            let v = basis[i]
                                .iter()
                                .zip(&basis[j])
                                .map(|(x, y)| x.clone() - sign.clone() * y.clone())
                                .collect();
                            return self.certify(v);
                        }
                    }
                }
                let rank = pivots.len();
                return PsdResult::Psd { pivots, rank };
            };
            let d = s[at(k, k)].clone();
            alive.retain(|&j| j != k);
            for &i in &alive {
                let f = s[at(i, k)].clone() / d.clone();
                if f.is_zero() {
                    continue;
                }
                for &j in &alive {
                    let v = s[at(i, j)].clone() - f.clone() * s[at(k, j)].clone();
                    s[at(i, j)] = v;
                }
                let uk = basis[k].clone();
                for (x, y) in basis[i].iter_mut().zip(uk) {
                    *x = x.clone() - f.clone() * y;
                }
            }
            pivots.push((k, d));
        }
    }

    fn certify(&self, v: Vec<T>) -> PsdResult<T> {
        let value = self.quad_form(&v);
        PsdResult::NotPsd { certificate: v, value }
    }
}

impl SymMatrix<Rational> {
    /// Exact PSD test: `Ok(())` or a vector `v` with `vᵀMv < 0`.
    pub fn is_psd_exact(&self) -> std::result::Result<(), Vec<Rational>> {
        match self.psd() {
            PsdResult::Psd { .. } => Ok(()),
            PsdResult::NotPsd { certificate, value } => {
                debug_assert!(value.is_negative());
                Err(certificate)
            }
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(crate::scalar::to_f64).collect()
    }
}

impl fmt::Display for SymMatrix<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.dim)
            .map(|i| format!("[{}]", self.row(i).iter().map(fmt_rational).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsdResult<T> {
    /// Pivots `(index, d_k)` in elimination order; all `d_k > 0`.
    Psd { pivots: Vec<(usize, T)>, rank: usize },
    /// `certificateᵀ M certificate = value < 0`.
    NotPsd { certificate: Vec<T>, value: T },
}

/// `(r_{i+j})_{i,j=0}^m`.
pub fn hankel(r: &MomentSequence, m: usize) -> Result<SymMatrix<Rational>> {
    if r.nvars() != 1 {
        return Err(Error::dim(1, r.nvars()));
    }
    localizing_matrix(r, &QPoly::one(1), m)
}

/// `(L(g · X^{α+β}))` over monomials `α, β` of degree `≤ m` in graded-lex order.
///
/// With `g = 1` this is the moment matrix; univariate it is the Hankel matrix.
pub fn localizing_matrix(r: &MomentSequence, g: &QPoly, m: usize) -> Result<SymMatrix<Rational>> {
    let n = r.nvars();
    if g.nvars() != n {
        return Err(Error::dim(n, g.nvars()));
    }
    let needed = 2 * m + g.degree().unwrap_or(0) as usize;
    if needed > r.order() as usize {
        return Err(Error::InsufficientOrder { needed, available: r.order() as usize });
    }
    let monos = MultiIndex::all_up_to(n, m as u32);
    let mut err = None;
    let mat = SymMatrix::from_fn(monos.len(), |i, j| {
        let shift = &monos[i] + &monos[j];
        let mut acc = Rational::zero();
        for (alpha, c) in g.terms() {
            match r.get(&(alpha + &shift)) {
                Some(v) => acc += c * v,
                None => err = Some(alpha.degree()),
            }
        }
        acc
    });
    match err {
        Some(_) => Err(Error::InsufficientOrder { needed, available: r.order() as usize }),
        None => Ok(mat),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentVerdict {
    /// The matrix named `test` at level `order` has `vᵀMv = value < 0`.
    RefutedAtOrder { order: usize, test: String, certificate: Vec<Rational>, value: Rational },
    /// Every tested matrix up to level `order` is PSD. `necessary_only` marks
    /// domains where the family is not a characterization even in the limit.
    ConsistentUpTo { order: usize, necessary_only: bool },
}

impl MomentVerdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, MomentVerdict::RefutedAtOrder { .. })
    }
}

/// One matrix examined by [`moment_check_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTest {
    pub level: usize,
    pub test: String,
    pub weight: QPoly,
    pub matrix: SymMatrix<Rational>,
    pub result: PsdResult<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub tests: Vec<MatrixTest>,
    pub verdict: MomentVerdict,
}

/// Localizer weights `g` whose matrices must be PSD for an `S`-moment sequence.
pub fn localizers(s: &DomainSet) -> Vec<(String, QPoly)> {
    let n = s.dim();
    let x = |i: usize| QPoly::var(n, i);
    let c = |v: &Rational| QPoly::constant(n, v.clone());
    let mut out = vec![(if n == 1 { "hankel" } else { "moment" }.to_string(), QPoly::one(n))];
    match s {
        DomainSet::RealLine | DomainSet::RealSpace(_) => {}
        DomainSet::HalfLine(a) => out.push(local_name(&x(0) - &c(a))),
        DomainSet::Interval(a, b) => out.push(local_name(&(&x(0) - &c(a)) * &(&c(b) - &x(0)))),
        DomainSet::Box(sides) => {
            for (i, (a, b)) in sides.iter().enumerate() {
                out.push(local_name(&x(i) - &c(a)));
                out.push(local_name(&c(b) - &x(i)));
            }
        }
    }
    out
}

fn local_name(g: QPoly) -> (String, QPoly) {
    (format!("localizer {g}"), g)
}

/// Test the Hankel/localizing family for `S` at levels `0..=m`.
///
/// The Hankel (moment) matrix needs order `2m`; a localizer of degree `e` is
/// tested at every level `k ≤ m` with `2k + e` within the available order.
pub fn moment_check(r: &MomentSequence, s: &DomainSet, m: usize) -> Result<MomentVerdict> {
    Ok(moment_check_detailed(r, s, m)?.verdict)
}

pub fn moment_check_detailed(r: &MomentSequence, s: &DomainSet, m: usize) -> Result<MomentCheck> {
    if r.nvars() != s.dim() {
        return Err(Error::dim(s.dim(), r.nvars()));
    }
    if 2 * m > r.order() as usize {
        return Err(Error::InsufficientOrder { needed: 2 * m, available: r.order() as usize });
    }
    let family = localizers(s);
    let mut tests = Vec::new();
    for level in 0..=m {
        for (name, g) in &family {
            if 2 * level + g.degree().unwrap_or(0) as usize > r.order() as usize {
                continue;
            }
            let matrix = localizing_matrix(r, g, level)?;
            let result = matrix.psd();
            let refuted = match &result {
                PsdResult::NotPsd { certificate, value } => {
                    Some(MomentVerdict::RefutedAtOrder {
                        order: level,
                        test: name.clone(),
                        certificate: certificate.clone(),
                        value: value.clone(),
                    })
                }
                PsdResult::Psd { .. } => None,
            };
            tests.push(MatrixTest { level, test: name.clone(), weight: g.clone(), matrix, result });
            if let Some(verdict) = refuted {
                return Ok(MomentCheck { tests, verdict });
            }
        }
    }
    let necessary_only = s.dim() >= 2;
    Ok(MomentCheck { tests, verdict: MomentVerdict::ConsistentUpTo { order: m, necessary_only } })
}
