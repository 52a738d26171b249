//! Deciding `p ≥ 0` on a domain set and enclosing `max_S |p|`.
//!
//! One variable: exact, via Sturm isolation of the square-free part and sign
//! evaluation between consecutive roots. Boxes: Bernstein certificates with
//! midpoint subdivision, three-valued.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{int, midpoint, rat, Rational};

use super::bernstein::BernsteinPatch;
use super::univariate::{self, RootLoc};
use super::{DomainSet, Polynomial};

type QPoly = Polynomial<Rational>;

/// Subdivision limits for the Bernstein branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_depth: u32,
    pub max_boxes: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_depth: 16, max_boxes: 20_000 }
    }
}

/// Outcome of a nonnegativity test `p ∈ 𝒩(S)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NonnegVerdict {
    Certified,
    /// `witness ∈ S` with `p(witness) = value < 0`.
    Falsified { witness: Vec<Rational>, value: Rational },
    Unknown { reason: String },
}

impl NonnegVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, NonnegVerdict::Certified)
    }

    pub fn is_falsified(&self) -> bool {
        matches!(self, NonnegVerdict::Falsified { .. })
    }
}

/// Outcome of a strict positivity test `p ∈ 𝒫(S)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PositivityVerdict {
    Positive,
    /// `p` vanishes or is negative somewhere on `S`. `witness` is an exact
    /// point with `p ≤ 0` when one is rational.
    NotPositive { witness: Option<Vec<Rational>>, reason: String },
    Unknown { reason: String },
}

/// Rational interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        *v >= self.lo && *v <= self.hi
    }
}

fn check_dim(p: &QPoly, s: &DomainSet) -> Result<()> {
    if p.nvars() != s.dim() {
        return Err(Error::dim(s.dim(), p.nvars()));
    }
    Ok(())
}

fn univariate_limits(s: &DomainSet) -> (Option<Rational>, Option<Rational>) {
    s.axis_limits().pop().expect("one axis")
}

/// Decide whether `p ≥ 0` on `S`.
pub fn nonneg_on(p: &QPoly, s: &DomainSet, budget: Budget) -> Result<NonnegVerdict> {
    check_dim(p, s)?;
    if p.is_zero() {
        return Ok(NonnegVerdict::Certified);
    }
    if s.dim() == 1 {
        let (lo, hi) = univariate_limits(s);
        return Ok(univariate_nonneg(&p.to_dense(), lo.as_ref(), hi.as_ref()));
    }
    match s {
        DomainSet::Box(bounds) => bernstein_nonneg(p, bounds, budget, false),
        _ => Ok(sample_refutation(p, s.dim(), false).unwrap_or_else(|| NonnegVerdict::Unknown {
            reason: format!("certification on R^{} is not supported; no negative sample found", s.dim()),
        })),
    }
}

/// Test points hitting every sign region of `p` inside `[lo, hi]`.
fn sign_test_points(p: &[Rational], lo: Option<&Rational>, hi: Option<&Rational>) -> (Vec<RootLoc>, Vec<Rational>) {
    let roots = univariate::isolate_roots(p, lo, hi);
    let mut pts = Vec::new();
    if let Some(a) = lo {
        pts.push(a.clone());
    }
    if let Some(b) = hi {
        pts.push(b.clone());
    }
    for w in roots.windows(2) {
        let (u, l) = (w[0].upper(), w[1].lower());
        pts.push(if u < l { midpoint(u, l) } else { u.clone() });
    }
    match (roots.first(), roots.last()) {
        (Some(first), Some(last)) => {
            if lo.is_none() {
                pts.push(first.lower() - int(1));
            }
            if hi.is_none() {
                pts.push(last.upper() + int(1));
            }
        }
        _ => {
            if lo.is_none() && hi.is_none() {
                pts.push(Rational::zero());
            }
        }
    }
    pts.sort();
    pts.dedup();
    (roots, pts)
}

fn univariate_nonneg(p: &[Rational], lo: Option<&Rational>, hi: Option<&Rational>) -> NonnegVerdict {
    let (_, pts) = sign_test_points(p, lo, hi);
    // Points are ascending, so the first negative one is the smallest witness.
    for x in pts {
        let v = univariate::eval(p, &x);
        if v.is_negative() {
            return NonnegVerdict::Falsified { witness: vec![x], value: v };
        }
    }
    NonnegVerdict::Certified
}

/// Deterministic sample grid for unbounded multivariate domains.
fn sample_refutation(p: &QPoly, n: usize, strict: bool) -> Option<NonnegVerdict> {
    let axis: Vec<Rational> = (-8..=8).map(|k| rat(k, 2)).collect();
    let total = axis.len().pow(n as u32).min(200_000);
    let mut best: Option<(Vec<Rational>, Rational)> = None;
    for idx in 0..total {
        let mut rem = idx;
        let x: Vec<Rational> = (0..n)
            .map(|_| {
                let v = axis[rem % axis.len()].clone();
                rem /= axis.len();
                v
            })
            .collect();
        let v = p.eval_unchecked(&x);
        let bad = if strict { !v.is_positive() } else { v.is_negative() };
        if bad && best.as_ref().map_or(true, |(bx, _)| x < *bx) {
            best = Some((x, v));
        }
    }
    best.map(|(witness, value)| NonnegVerdict::Falsified { witness, value })
}

/// Breadth-first Bernstein subdivision. With `strict`, certifies `p > 0`
/// and treats zero samples as refutations.
fn bernstein_nonneg(p: &QPoly, bounds: &[(Rational, Rational)], budget: Budget, strict: bool) -> Result<NonnegVerdict> {
    let mut level = vec![BernsteinPatch::new(p, bounds)?];
    let mut processed = 0usize;
    loop {
        let mut witnesses: Vec<(Vec<Rational>, Rational)> = Vec::new();
        let mut next = Vec::new();
        for patch in &level {
            processed += 1;
            let min = patch.min_coeff();
            if min.is_positive() || (!strict && min.is_zero()) {
                continue;
            }
            let mut samples = patch.corners();
            let c = patch.center();
            let vc = p.eval_unchecked(&c);
            samples.push((c, vc));
            for (x, v) in samples {
                if v.is_negative() || (strict && v.is_zero()) {
                    witnesses.push((x, v));
                }
            }
            next.push(patch);
        }
        if let Some((witness, value)) = witnesses.into_iter().min_by(|a, b| a.0.cmp(&b.0)) {
            return Ok(NonnegVerdict::Falsified { witness, value });
        }
        if next.is_empty() {
            return Ok(NonnegVerdict::Certified);
        }
        let depth = next[0].depth;
        if depth >= budget.max_depth || processed + 2 * next.len() > budget.max_boxes {
            return Ok(NonnegVerdict::Unknown {
                reason: format!(
                    "Bernstein subdivision budget exhausted at depth {depth} ({processed} boxes)"
                ),
            });
        }
        level = next
            .into_iter()
            .flat_map(|patch| {
                let (l, r) = patch.split(patch.widest_axis());
                [l, r]
            })
            .collect();
    }
}

/// Decide whether `p > 0` on `S`.
pub fn positive_on(p: &QPoly, s: &DomainSet, budget: Budget) -> Result<PositivityVerdict> {
    check_dim(p, s)?;
    if p.is_zero() {
        return Ok(PositivityVerdict::NotPositive {
            witness: Some(s.sample_point()),
            reason: "zero polynomial".into(),
        });
    }
    if s.dim() == 1 {
        let (lo, hi) = univariate_limits(s);
        let dense = p.to_dense();
        let (roots, pts) = sign_test_points(&dense, lo.as_ref(), hi.as_ref());
        if let Some(root) = roots.first() {
            return Ok(match root {
                RootLoc::Exact(q) => PositivityVerdict::NotPositive {
                    witness: Some(vec![q.clone()]),
                    reason: "vanishes at a rational point".into(),
                },
                RootLoc::Open(l, r) => PositivityVerdict::NotPositive {
                    witness: None,
                    reason: format!("vanishes in ({l}, {r})"),
                },
            });
        }
        for x in pts {
            if univariate::eval(&dense, &x).is_negative() {
                return Ok(PositivityVerdict::NotPositive {
                    witness: Some(vec![x]),
                    reason: "negative value".into(),
                });
            }
        }
        return Ok(PositivityVerdict::Positive);
    }
    let verdict = match s {
        DomainSet::Box(bounds) => bernstein_nonneg(p, bounds, budget, true)?,
        _ => sample_refutation(p, s.dim(), true).unwrap_or_else(|| NonnegVerdict::Unknown {
            reason: format!("certification on R^{} is not supported", s.dim()),
        }),
    };
    Ok(match verdict {
        NonnegVerdict::Certified => PositivityVerdict::Positive,
        NonnegVerdict::Falsified { witness, .. } => PositivityVerdict::NotPositive {
            witness: Some(witness),
            reason: "nonpositive sample".into(),
        },
        NonnegVerdict::Unknown { reason } => PositivityVerdict::Unknown { reason },
    })
}

/// Bernstein range enclosure of `p` over a box (no subdivision).
pub fn range_enclosure(p: &QPoly, bounds: &[(Rational, Rational)]) -> Result<Enclosure> {
    if p.nvars() != bounds.len() {
        return Err(Error::dim(bounds.len(), p.nvars()));
    }
    let patch = BernsteinPatch::new(p, bounds)?;
    Ok(Enclosure { lo: patch.min_coeff().clone(), hi: patch.max_coeff().clone() })
}

/// Is the image of `S` under `f = (f_1, …, f_m)` inside the closed set `target`?
///
/// Certified when every `f_i - lo_i` and `hi_i - f_i` is certified
/// nonnegative on `S`; Falsified carries a point of `S` mapped outside.
pub fn image_within(f: &[QPoly], s: &DomainSet, target: &DomainSet, budget: Budget) -> Result<NonnegVerdict> {
    if f.len() != target.dim() {
        return Err(Error::dim(target.dim(), f.len()));
    }
    let n = s.dim();
    let mut unknown = None;
    for (fi, (lo, hi)) in f.iter().zip(target.axis_limits()) {
        let mut margins = Vec::new();
        if let Some(l) = lo {
            margins.push(fi - &QPoly::constant(n, l));
        }
        if let Some(h) = hi {
            margins.push(&QPoly::constant(n, h) - fi);
        }
        for m in margins {
            match nonneg_on(&m, s, budget)? {
                NonnegVerdict::Certified => {}
                v @ NonnegVerdict::Falsified { .. } => return Ok(v),
                NonnegVerdict::Unknown { reason } => unknown = Some(reason),
            }
        }
    }
    Ok(match unknown {
        Some(reason) => NonnegVerdict::Unknown { reason },
        None => NonnegVerdict::Certified,
    })
}

/// Enclose `‖p‖∞ = max_S |p|` on a compact `S` to within `eps`.
pub fn sup_norm(p: &QPoly, s: &DomainSet, eps: &Rational) -> Result<Enclosure> {
    check_dim(p, s)?;
    let bounds = s.compact_bounds()?;
    if !eps.is_positive() {
        return Err(Error::InvalidArgument("sup_norm tolerance must be positive".into()));
    }
    if p.is_zero() {
        return Ok(Enclosure { lo: Rational::zero(), hi: Rational::zero() });
    }
    if s.dim() == 1 {
        let (a, b) = bounds[0].clone();
        return Ok(univariate_sup(&p.to_dense(), &a, &b, eps));
    }
    bernstein_sup(p, &bounds, eps, Budget::default())
}

/// Taylor enclosure of `|p|` at the unknown critical point inside `(l, r)`.
fn critical_enclosure(p: &[Rational], l: &Rational, r: &Rational) -> (Rational, Rational) {
    let m = midpoint(l, r);
    let h = (r - l) / int(2);
    // Coefficients of p(m + t): successive synthetic division.
    let mut shifted = p.to_vec();
    let n = shifted.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = &shifted[j + 1] * &m;
            shifted[j] += t;
        }
    }
    let center = shifted[0].abs();
    let mut rem = Rational::zero();
    let mut hk = h.clone();
    for c in shifted.iter().skip(1) {
        rem += c.abs() * &hk;
        hk *= &h;
    }
    let lo = if center > rem { &center - &rem } else { Rational::zero() };
    (lo, center + rem)
}

fn univariate_sup(p: &[Rational], a: &Rational, b: &Rational, eps: &Rational) -> Enclosure {
    let dp = univariate::derivative(p);
    let g = univariate::square_free(&dp);
    let mut lo = univariate::eval(p, a).abs().max(univariate::eval(p, b).abs());
    let mut open = Vec::new();
    for loc in univariate::isolate_roots(&dp, Some(a), Some(b)) {
        match loc {
            RootLoc::Exact(q) => lo = lo.max(univariate::eval(p, &q).abs()),
            RootLoc::Open(l, r) => open.push((l, r)),
        }
    }
    loop {
        let mut hi = lo.clone();
        let mut widest: Option<usize> = None;
        for (i, (l, r)) in open.iter().enumerate() {
            let (clo, chi) = critical_enclosure(p, l, r);
            lo = lo.max(clo);
            if chi > hi {
                hi = chi;
                widest = Some(i);
            }
        }
        if &hi - &lo <= *eps {
            return Enclosure { lo, hi };
        }
        // Refine whichever critical interval currently sets the upper bound.
        let i = widest.expect("gap implies an open critical interval");
        let (l, r) = open[i].clone();
        let half = (&r - &l) / int(2);
        match univariate::refine(&g, RootLoc::Open(l, r), &half) {
            RootLoc::Exact(q) => {
                lo = lo.max(univariate::eval(p, &q).abs());
                open.swap_remove(i);
            }
            RootLoc::Open(l, r) => open[i] = (l, r),
        }
    }
}

fn bernstein_sup(p: &QPoly, bounds: &[(Rational, Rational)], eps: &Rational, budget: Budget) -> Result<Enclosure> {
    let root = BernsteinPatch::new(p, bounds)?;
    let upper = |b: &BernsteinPatch| b.min_coeff().abs().max(b.max_coeff().abs());
    let sample = |b: &BernsteinPatch| {
        let mut m = p.eval_unchecked(&b.center()).abs();
        for (_, v) in b.corners() {
            m = m.max(v.abs());
        }
        m
    };
    let mut lo = sample(&root);
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push((upper(&root), Reverse(seq), HeapPatch(root)));
    loop {
        let (ub, _, HeapPatch(patch)) = heap.pop().expect("heap never empties before return");
        if &ub - &lo <= *eps {
            return Ok(Enclosure { lo, hi: ub });
        }
        if seq >= budget.max_boxes {
            return Err(Error::BudgetExhausted(format!(
                "sup-norm enclosure width {} after {seq} boxes",
                crate::scalar::fmt_rational(&(&ub - &lo))
            )));
        }
        let (l, r) = patch.split(patch.widest_axis());
        for child in [l, r] {
            lo = lo.max(sample(&child));
            seq += 1;
            heap.push((upper(&child), Reverse(seq), HeapPatch(child)));
        }
    }
}

/// Heap payload that never participates in ordering (keys are unique).
struct HeapPatch(BernsteinPatch);

impl PartialEq for HeapPatch {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for HeapPatch {}
impl PartialOrd for HeapPatch {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapPatch {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn iv(a: i64, b: i64) -> DomainSet {
        DomainSet::interval(int(a), int(b)).unwrap()
    }

    fn p1(s: &str) -> QPoly {
        parse_poly(s, 1).unwrap()
    }

    #[test]
    fn univariate_examples() {
        let b = Budget::default();
        assert_eq!(nonneg_on(&p1("x0 + 1"), &iv(-1, 1), b).unwrap(), NonnegVerdict::Certified);
        assert_eq!(
            nonneg_on(&p1("x0 + 1/2"), &iv(-1, 1), b).unwrap(),
            NonnegVerdict::Falsified { witness: vec![int(-1)], value: rat(-1, 2) }
        );
        assert!(nonneg_on(&p1("(x0^2 - 2)^2"), &DomainSet::RealLine, b).unwrap().is_certified());
        assert!(nonneg_on(&p1("x0^3"), &DomainSet::RealLine, b).unwrap().is_falsified());
        assert!(nonneg_on(&p1("x0 - 2"), &DomainSet::HalfLine(int(2)), b).unwrap().is_certified());
        assert!(nonneg_on(&p1("(x0-3)*(x0-4)"), &DomainSet::HalfLine(int(2)), b).unwrap().is_falsified());
        // Double root in the interior, sign does not change.
        assert!(nonneg_on(&p1("x0^2*(x0+1)"), &iv(-1, 1), b).unwrap().is_certified());
        assert!(nonneg_on(&QPoly::zero(1), &iv(-1, 1), b).unwrap().is_certified());
        assert!(nonneg_on(&p1("x0"), &DomainSet::RealSpace(2), b).is_err());
    }

    #[test]
    fn box_certificate() {
        let p = parse_poly("1 - x0^2 - x1^2", 2).unwrap();
        let half = DomainSet::boxed(vec![(rat(-1, 2), rat(1, 2)), (rat(-1, 2), rat(1, 2))]).unwrap();
        assert!(nonneg_on(&p, &half, Budget::default()).unwrap().is_certified());
        let unit = DomainSet::boxed(vec![(int(-1), int(1)), (int(-1), int(1))]).unwrap();
        match nonneg_on(&p, &unit, Budget::default()).unwrap() {
            NonnegVerdict::Falsified { witness, value } => {
                assert!(unit.contains(&witness));
                assert_eq!(p.eval(&witness).unwrap(), value);
                assert!(value.is_negative());
            }
            other => panic!("expected refutation, got {other:?}"),
        }
        let q = parse_poly("x0^2 + x1^2", 2).unwrap();
        assert!(nonneg_on(&q, &unit, Budget::default()).unwrap().is_certified());
        assert!(nonneg_on(&q, &DomainSet::RealSpace(2), Budget::default()).unwrap() != NonnegVerdict::Certified);
    }

    #[test]
    fn positivity() {
        let b = Budget::default();
        assert_eq!(positive_on(&p1("x0^2 + 1"), &iv(-1, 1), b).unwrap(), PositivityVerdict::Positive);
        assert!(matches!(positive_on(&p1("x0^2"), &iv(-1, 1), b).unwrap(), PositivityVerdict::NotPositive { .. }));
        assert!(matches!(
            positive_on(&p1("x0^2 - 1/2"), &iv(-1, 1), b).unwrap(),
            PositivityVerdict::NotPositive { witness: None, .. }
        ));
    }

    #[test]
    fn sup_norm_examples() {
        let eps = rat(1, 1_000_000);
        let e = sup_norm(&p1("x0"), &iv(-1, 1), &eps).unwrap();
        assert!(e.contains(&int(1)) && e.width() <= eps);
        let e = sup_norm(&p1("x0 + 1/2"), &iv(-1, 1), &eps).unwrap();
        assert!(e.contains(&rat(3, 2)));
        let e = sup_norm(&QPoly::one(1), &iv(-1, 1), &eps).unwrap();
        assert!(e.contains(&int(1)));
        assert_eq!(sup_norm(&QPoly::zero(1), &iv(0, 1), &eps).unwrap(), Enclosure { lo: int(0), hi: int(0) });
        // Interior irrational maximum: x^3 - x on [-1,1] peaks at 2/(3√3).
        let e = sup_norm(&p1("x0^3 - x0"), &iv(-1, 1), &eps).unwrap();
        let peak = 2.0 / (3.0 * 3f64.sqrt());
        assert!(crate::scalar::to_f64(&e.lo) <= peak + 1e-12 && crate::scalar::to_f64(&e.hi) >= peak - 1e-12);
        assert!(e.width() <= eps);
        assert!(sup_norm(&p1("x0"), &DomainSet::RealLine, &eps).is_err());
    }

    #[test]
    fn box_sup_norm() {
        let eps = rat(1, 1000);
        let p = parse_poly("x0*x1 - x0", 2).unwrap();
        let unit = DomainSet::boxed(vec![(int(-1), int(1)), (int(-1), int(1))]).unwrap();
        let e = sup_norm(&p, &unit, &eps).unwrap();
        assert!(e.contains(&int(2)) && e.width() <= eps);
    }
}
