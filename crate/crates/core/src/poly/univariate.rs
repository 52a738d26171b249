//! Dense univariate arithmetic over ℚ: Euclidean division, square-free
//! parts, Sturm chains and real root isolation.
//!
//! Coefficient vectors are ascending (`c[k]` multiplies `x^k`) and trimmed
//! so that the last entry is nonzero; the zero polynomial is the empty vector.

use num_traits::{One, Signed, Zero};

use crate::scalar::{int, midpoint, Rational};

pub type Dense = Vec<Rational>;

pub fn trim(mut p: Dense) -> Dense {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

pub fn degree(p: &[Rational]) -> Option<usize> {
    if p.is_empty() {
        None
    } else {
        Some(p.len() - 1)
    }
}

pub fn eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn sign_at(p: &[Rational], x: &Rational) -> i8 {
    let v = eval(p, x);
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

pub fn derivative(p: &[Rational]) -> Dense {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * int(k as i64))
            .collect(),
    )
}

/// Euclidean division `a = q b + r` with `deg r < deg b`.
pub fn div_rem(a: &[Rational], b: &[Rational]) -> (Dense, Dense) {
    assert!(!b.is_empty(), "division by the zero polynomial");
    let mut r: Dense = a.to_vec();
    let db = b.len() - 1;
    let lead = &b[db];
    if r.len() < b.len() {
        return (Vec::new(), trim(r));
    }
    let mut q = vec![Rational::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let c = r.last().expect("nonempty") / lead;
        for (i, bc) in b.iter().enumerate() {
            let t = &r[shift + i] - &c * bc;
            r[shift + i] = t;
        }
        q[shift] = c;
        r.pop();
        r = trim(r);
    }
    (trim(q), trim(r))
}

pub fn monic(p: &[Rational]) -> Dense {
    match p.last() {
        Some(lc) => p.iter().map(|c| c / lc).collect(),
        None => Vec::new(),
    }
}

pub fn gcd(a: &[Rational], b: &[Rational]) -> Dense {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let (_, r) = div_rem(&x, &y);
        x = y;
        y = r;
    }
    monic(&x)
}

/// `p / gcd(p, p')`: same real roots, all simple.
pub fn square_free(p: &[Rational]) -> Dense {
    let p = trim(p.to_vec());
    if p.len() <= 2 {
        return p;
    }
    let g = gcd(&p, &derivative(&p));
    if g.len() <= 1 {
        return p;
    }
    div_rem(&p, &g).0
}

/// Scale by a positive rational so the largest coefficient magnitude is 1.
fn normalize_positive(p: Dense) -> Dense {
    let m = p.iter().map(|c| c.abs()).fold(Rational::zero(), |a, b| if b > a { b } else { a });
    if m.is_zero() {
        return p;
    }
    p.into_iter().map(|c| c / &m).collect()
}

/// Sturm chain of a square-free polynomial.
#[derive(Debug, Clone)]
pub struct Sturm {
    chain: Vec<Dense>,
}

impl Sturm {
    pub fn new(p: &[Rational]) -> Self {
        let p0 = trim(p.to_vec());
        let mut chain = vec![p0.clone()];
        if p0.len() <= 1 {
            return Sturm { chain };
        }
        chain.push(normalize_positive(derivative(&p0)));
        loop {
            let n = chain.len();
            let (_, r) = div_rem(&chain[n - 2], &chain[n - 1]);
            if r.is_empty() {
                break;
            }
            chain.push(normalize_positive(r.into_iter().map(|c| -c).collect()));
        }
        Sturm { chain }
    }

    fn changes(signs: impl Iterator<Item = i8>) -> usize {
        let mut last = 0i8;
        let mut count = 0;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    pub fn variations_at(&self, x: &Rational) -> usize {
        Self::changes(self.chain.iter().map(|p| sign_at(p, x)))
    }

    pub fn variations_at_neg_inf(&self) -> usize {
        Self::changes(self.chain.iter().map(|p| {
            let d = p.len().saturating_sub(1);
            let s: i8 = if p.last().map_or(true, |c| c.is_positive()) { 1 } else { -1 };
            if d % 2 == 1 {
                -s
            } else {
                s
            }
        }))
    }

    pub fn variations_at_pos_inf(&self) -> usize {
        Self::changes(
            self.chain
                .iter()
                .map(|p| if p.last().map_or(true, |c| c.is_positive()) { 1 } else { -1 }),
        )
    }

    /// Number of distinct roots in `(a, b]`.
    pub fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.variations_at(a).saturating_sub(self.variations_at(b))
    }

    pub fn count_real(&self) -> usize {
        self.variations_at_neg_inf().saturating_sub(self.variations_at_pos_inf())
    }
}

/// Cauchy bound: every real root lies in `(-B, B)`.
pub fn cauchy_bound(p: &[Rational]) -> Rational {
    let p = trim(p.to_vec());
    let Some(lc) = p.last() else { return Rational::one() };
    let m = p[..p.len() - 1]
        .iter()
        .map(|c| (c / lc).abs())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a });
    m + Rational::one()
}

/// A located real root.
#[derive(Debug, Clone, PartialEq)]
pub enum RootLoc {
    Exact(Rational),
    /// Exactly one root in the open interval; the polynomial is nonzero at both ends.
    Open(Rational, Rational),
}

impl RootLoc {
    pub fn lower(&self) -> &Rational {
        match self {
            RootLoc::Exact(q) => q,
            RootLoc::Open(l, _) => l,
        }
    }

    pub fn upper(&self) -> &Rational {
        match self {
            RootLoc::Exact(q) => q,
            RootLoc::Open(_, r) => r,
        }
    }
}

/// Isolate all distinct real roots of `p` in `[lo, hi]` (ascending).
///
/// `None` for either bound means unbounded on that side.
pub fn isolate_roots(p: &[Rational], lo: Option<&Rational>, hi: Option<&Rational>) -> Vec<RootLoc> {
    let g = square_free(p);
    if g.len() <= 1 {
        return Vec::new();
    }
    let bound = cauchy_bound(&g);
    let a = lo.cloned().unwrap_or_else(|| -bound.clone());
    let b = hi.cloned().unwrap_or_else(|| bound.clone());
    if a > b {
        return Vec::new();
    }
    let sturm = Sturm::new(&g);
    let mut out = Vec::new();
    if sign_at(&g, &a) == 0 {
        out.push(RootLoc::Exact(a.clone()));
    }
    if a < b {
        isolate_rec(&g, &sturm, a, b, &mut out);
    }
    out
}

fn isolate_rec(g: &[Rational], sturm: &Sturm, l: Rational, r: Rational, out: &mut Vec<RootLoc>) {
    let n = sturm.count(&l, &r);
    if n == 0 {
        return;
    }
    let gr = sign_at(g, &r);
    if n == 1 {
        if gr == 0 {
            out.push(RootLoc::Exact(r));
            return;
        }
        if sign_at(g, &l) != 0 {
            out.push(RootLoc::Open(l, r));
            return;
        }
    }
    let m = midpoint(&l, &r);
    isolate_rec(g, sturm, l, m.clone(), out);
    isolate_rec(g, sturm, m, r, out);
}

/// Shrink an open isolating interval of a simple root of `g` by bisection
/// until its width is at most `width`.
pub fn refine(g: &[Rational], loc: RootLoc, width: &Rational) -> RootLoc {
    let RootLoc::Open(mut l, mut r) = loc else { return loc };
    let sl = sign_at(g, &l);
    while &r - &l > *width {
        let m = midpoint(&l, &r);
        let sm = sign_at(g, &m);
        if sm == 0 {
            return RootLoc::Exact(m);
        }
        if sm == sl {
            l = m;
        } else {
            r = m;
        }
    }
    RootLoc::Open(l, r)
}

/// The rational with the smallest denominator in `[l, r]`.
pub fn simplest_between(l: &Rational, r: &Rational) -> Rational {
    debug_assert!(l <= r);
    let fl = l.floor();
    if fl == *l {
        return fl;
    }
    if &fl + Rational::one() <= *r {
        return fl + Rational::one();
    }
    let inner = simplest_between(&(Rational::one() / (r - &fl)), &(Rational::one() / (l - &fl)));
    fl + Rational::one() / inner
}

/// All rational roots of `p` in `[lo, hi]`, ascending, and whether every
/// real root there was rational.
pub fn rational_roots(p: &[Rational], lo: Option<&Rational>, hi: Option<&Rational>) -> (Vec<Rational>, bool) {
    let g = square_free(p);
    if g.len() <= 1 {
        return (Vec::new(), true);
    }
    // Clear denominators: a rational root p/q in lowest terms has q | lc.
    let lcm = g
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
    let lc = (g.last().expect("nonempty") * Rational::from_integer(lcm)).abs();
    let width = Rational::one() / (&lc * &lc * int(4));
    let mut roots = Vec::new();
    let mut all_rational = true;
    for loc in isolate_roots(&g, lo, hi) {
        match refine(&g, loc, &width) {
            RootLoc::Exact(q) => roots.push(q),
            RootLoc::Open(l, r) => {
                let cand = simplest_between(&l, &r);
                if sign_at(&g, &cand) == 0 {
                    roots.push(cand);
                } else {
                    all_rational = false;
                }
            }
        }
    }
    (roots, all_rational)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn d(v: &[i64]) -> Dense {
        trim(v.iter().map(|&c| int(c)).collect())
    }

    #[test]
    fn division_and_gcd() {
        let a = d(&[-1, 0, 1]);
        let b = d(&[1, 1]);
        let (q, r) = div_rem(&a, &b);
        assert_eq!(q, d(&[-1, 1]));
        assert!(r.is_empty());
        let g = gcd(&d(&[1, 2, 1]), &d(&[-1, 0, 1]));
        assert_eq!(g, d(&[1, 1]));
        assert_eq!(square_free(&d(&[0, 0, 1])), d(&[0, 1]));
    }

    #[test]
    fn sturm_counts() {
        // x^2 - 2 has two real roots.
        let p = d(&[-2, 0, 1]);
        let s = Sturm::new(&p);
        assert_eq!(s.count_real(), 2);
        assert_eq!(s.count(&int(0), &int(2)), 1);
        assert_eq!(s.count(&int(-2), &int(2)), 2);
        // (x-1)(x-2)(x-3), root at right endpoint counted, at left not.
        let q = d(&[-6, 11, -6, 1]);
        let s = Sturm::new(&q);
        assert_eq!(s.count(&int(1), &int(3)), 2);
    }

    #[test]
    fn isolation_and_rational_roots() {
        let p = d(&[-6, 11, -6, 1]);
        let (roots, all) = rational_roots(&p, None, None);
        assert!(all);
        assert_eq!(roots, vec![int(1), int(2), int(3)]);
        let q = trim(vec![rat(-1, 4), int(0), int(1)]);
        let (roots, _) = rational_roots(&q, Some(&int(0)), None);
        assert_eq!(roots, vec![rat(1, 2)]);
        let (roots, all) = rational_roots(&d(&[-2, 0, 1]), None, None);
        assert!(roots.is_empty() && !all);
        let locs = isolate_roots(&d(&[-2, 0, 1]), Some(&int(-1)), Some(&int(1)));
        assert!(locs.is_empty());
        assert_eq!(isolate_roots(&d(&[1, 1]), Some(&int(-1)), Some(&int(1))), vec![RootLoc::Exact(int(-1))]);
    }

    #[test]
    fn simplest_rational() {
        assert_eq!(simplest_between(&rat(3, 10), &rat(4, 10)), rat(1, 3));
        assert_eq!(simplest_between(&rat(-7, 4), &rat(-5, 4)), rat(-3, 2));
        assert_eq!(simplest_between(&rat(-3, 2), &rat(1, 3)), int(-1));
        assert_eq!(simplest_between(&rat(2, 3), &rat(2, 3)), rat(2, 3));
    }
}
