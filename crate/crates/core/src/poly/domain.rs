use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::text::Cursor;
use crate::scalar::{fmt_rational, Rational};

/// The set `S ⊆ ℝⁿ` on which nonnegativity is measured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainSet {
    Interval(Rational, Rational),
    Box(Vec<(Rational, Rational)>),
    /// `[c, ∞)`.
    HalfLine(Rational),
    RealLine,
    RealSpace(usize),
}

impl DomainSet {
    pub fn interval(a: Rational, b: Rational) -> Result<Self> {
        if a >= b {
            return Err(Error::InvalidArgument(format!(
                "empty interval [{}, {}]",
                fmt_rational(&a),
                fmt_rational(&b)
            )));
        }
        Ok(DomainSet::Interval(a, b))
    }

    pub fn boxed(sides: Vec<(Rational, Rational)>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidArgument("box needs at least one side".into()));
        }
        if let Some((a, b)) = sides.iter().find(|(a, b)| a >= b) {
            return Err(Error::InvalidArgument(format!(
                "empty side [{}, {}]",
                fmt_rational(a),
                fmt_rational(b)
            )));
        }
        Ok(DomainSet::Box(sides))
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSet::Interval(..) | DomainSet::HalfLine(_) | DomainSet::RealLine => 1,
            DomainSet::Box(s) => s.len(),
            DomainSet::RealSpace(n) => *n,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, DomainSet::Interval(..) | DomainSet::Box(_))
    }

    pub fn is_connected(&self) -> bool {
        true
    }

    pub fn is_zariski_dense(&self) -> bool {
        true
    }

    /// Box sides for compact domains.
    pub fn bounds(&self) -> Option<Vec<(Rational, Rational)>> {
        match self {
            DomainSet::Interval(a, b) => Some(vec![(a.clone(), b.clone())]),
            DomainSet::Box(s) => Some(s.clone()),
            _ => None,
        }
    }

    pub fn compact_bounds(&self) -> Result<Vec<(Rational, Rational)>> {
        self.bounds().ok_or_else(|| Error::NonCompact(self.to_string()))
    }

    /// Per-axis `(lower, upper)` with `None` for unbounded sides.
    pub fn axis_limits(&self) -> Vec<(Option<Rational>, Option<Rational>)> {
        match self {
            DomainSet::Interval(a, b) => vec![(Some(a.clone()), Some(b.clone()))],
            DomainSet::Box(s) => s.iter().map(|(a, b)| (Some(a.clone()), Some(b.clone()))).collect(),
            DomainSet::HalfLine(c) => vec![(Some(c.clone()), None)],
            DomainSet::RealLine => vec![(None, None)],
            DomainSet::RealSpace(n) => vec![(None, None); *n],
        }
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.dim()
            && self.axis_limits().iter().zip(x).all(|((lo, hi), v)| {
                lo.as_ref().map_or(true, |l| v >= l) && hi.as_ref().map_or(true, |h| v <= h)
            })
    }

    /// Whether the closed box `hull` lies inside this (closed) set.
    pub fn contains_box(&self, hull: &[(Rational, Rational)]) -> bool {
        hull.len() == self.dim()
            && self.axis_limits().iter().zip(hull).all(|((lo, hi), (a, b))| {
                lo.as_ref().map_or(true, |l| a >= l) && hi.as_ref().map_or(true, |h| b <= h)
            })
    }

    /// Translate by `shift` (`S + a`).
    pub fn translate(&self, shift: &[Rational]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::dim(self.dim(), shift.len()));
        }
        Ok(match self {
            DomainSet::Interval(a, b) => DomainSet::Interval(a + &shift[0], b + &shift[0]),
            DomainSet::Box(s) => DomainSet::Box(
                s.iter().zip(shift).map(|((a, b), t)| (a + t, b + t)).collect(),
            ),
            DomainSet::HalfLine(c) => DomainSet::HalfLine(c + &shift[0]),
            DomainSet::RealLine | DomainSet::RealSpace(_) => self.clone(),
        })
    }

    /// A deterministic point of the set (its center when compact).
    pub fn sample_point(&self) -> Vec<Rational> {
        self.axis_limits()
            .into_iter()
            .map(|(lo, hi)| match (lo, hi) {
                (Some(a), Some(b)) => crate::scalar::midpoint(&a, &b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => Rational::zero(),
            })
            .collect()
    }

    /// Parse `[a,b]`, `[a,b]x[c,d]`, `[c,inf)`, `R`, or `R^n`.
    pub fn parse(src: &str) -> Result<Self> {
        let mut cur = Cursor::new(src);
        let d = Self::parse_at(&mut cur)?;
        cur.finish()?;
        Ok(d)
    }

    pub(crate) fn parse_at(cur: &mut Cursor) -> Result<Self> {
        if cur.eat_keyword("R") {
            if cur.eat('^') {
                let at = cur.pos();
                let n = cur.number()?;
                let n: usize = n
                    .to_integer()
                    .try_into()
                    .ok()
                    .filter(|&k: &usize| k >= 1)
                    .ok_or(Error::Parse { pos: at, msg: "dimension must be a positive integer".into() })?;
                return Ok(if n == 1 { DomainSet::RealLine } else { DomainSet::RealSpace(n) });
            }
            return Ok(DomainSet::RealLine);
        }
        let mut sides = Vec::new();
        loop {
            let start = cur.pos();
            cur.expect('[')?;
            let a = cur.rational()?;
            cur.expect(',')?;
            if cur.eat_keyword("inf") || cur.eat_keyword("oo") {
                cur.expect(')')?;
                if !sides.is_empty() || cur.peek() == Some('x') {
                    return cur.err("half-lines cannot be combined into boxes");
                }
                return Ok(DomainSet::HalfLine(a));
            }
            let b = cur.rational()?;
            cur.expect(']')?;
            if a >= b {
                return Err(Error::Parse { pos: start, msg: "interval must satisfy a < b".into() });
            }
            sides.push((a, b));
            if !cur.eat('x') {
                break;
            }
        }
        Ok(if sides.len() == 1 {
            let (a, b) = sides.pop().expect("one side");
            DomainSet::Interval(a, b)
        } else {
            DomainSet::Box(sides)
        })
    }
}

impl fmt::Display for DomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSet::Interval(a, b) => write!(f, "[{},{}]", fmt_rational(a), fmt_rational(b)),
            DomainSet::Box(s) => {
                let parts: Vec<String> = s
                    .iter()
                    .map(|(a, b)| format!("[{},{}]", fmt_rational(a), fmt_rational(b)))
                    .collect();
                f.write_str(&parts.join("x"))
            }
            DomainSet::HalfLine(c) => write!(f, "[{},inf)", fmt_rational(c)),
            DomainSet::RealLine => f.write_str("R"),
            DomainSet::RealSpace(n) => write!(f, "R^{n}"),
        }
    }
}

/// One axis of a [`SetBox`]: `[lo, hi]`, or `[lo, hi)` when `hi_open`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Side {
    pub lo: Rational,
    pub hi: Rational,
    pub hi_open: bool,
}

impl Side {
    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Side { lo, hi, hi_open: false }
    }

    pub fn half_open(lo: Rational, hi: Rational) -> Self {
        Side { lo, hi, hi_open: true }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        *v >= self.lo && if self.hi_open { *v < self.hi } else { *v <= self.hi }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Axis-aligned box whose sides are closed or right-open intervals.
///
/// Used both for closed query sets `A` and for partition cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetBox {
    pub sides: Vec<Side>,
}

impl SetBox {
    pub fn closed(bounds: &[(Rational, Rational)]) -> Self {
        SetBox { sides: bounds.iter().map(|(a, b)| Side::closed(a.clone(), b.clone())).collect() }
    }

    pub fn interval(a: Rational, b: Rational) -> Self {
        SetBox { sides: vec![Side::closed(a, b)] }
    }

    /// Uniform grid of `r` cells per axis over a closed box, in row-major
    /// order. Cells are right-open except along the upper face of the box,
    /// so they are pairwise disjoint and cover it.
    pub fn grid(bounds: &[(Rational, Rational)], r: usize) -> Vec<SetBox> {
        assert!(r >= 1, "grid needs at least one cell per axis");
        let steps = Rational::from_integer(r.into());
        let axes: Vec<Vec<Side>> = bounds
            .iter()
            .map(|(a, b)| {
                let h = (b - a) / &steps;
                (0..r)
                    .map(|i| {
                        let lo = a + &h * Rational::from_integer(i.into());
                        if i + 1 == r {
                            Side::closed(lo, b.clone())
                        } else {
                            let hi = &lo + &h;
                            Side::half_open(lo, hi)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut cells = vec![Vec::new()];
        for axis in &axes {
            cells = cells
                .into_iter()
                .flat_map(|prefix: Vec<Side>| {
                    axis.iter().map(move |s| {
                        let mut c = prefix.clone();
                        c.push(s.clone());
                        c
                    })
                })
                .collect();
        }
        cells.into_iter().map(|sides| SetBox { sides }).collect()
    }

    /// Whether the two boxes share a point, honouring open upper ends.
    pub fn intersects(&self, other: &SetBox) -> bool {
        self.sides.iter().zip(&other.sides).all(|(s, t)| {
            let lo = if s.lo > t.lo { &s.lo } else { &t.lo };
            let (hi, open) = match s.hi.cmp(&t.hi) {
                std::cmp::Ordering::Less => (&s.hi, s.hi_open),
                std::cmp::Ordering::Greater => (&t.hi, t.hi_open),
                std::cmp::Ordering::Equal => (&s.hi, s.hi_open || t.hi_open),
            };
            lo < hi || (lo == hi && !open)
        })
    }

    pub fn diameter_squared(&self) -> Rational {
        self.sides.iter().map(|s| s.width() * s.width()).sum()
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        x.len() == self.sides.len() && self.sides.iter().zip(x).all(|(s, v)| s.contains(v))
    }

    pub fn bounds(&self) -> Vec<(Rational, Rational)> {
        self.sides.iter().map(|s| (s.lo.clone(), s.hi.clone())).collect()
    }

    pub fn center(&self) -> Vec<Rational> {
        self.sides.iter().map(|s| crate::scalar::midpoint(&s.lo, &s.hi)).collect()
    }

    /// Lebesgue-relevant intersection with a closed box: `None` when the
    /// overlap has empty interior.
    pub fn overlap(&self, bounds: &[(Rational, Rational)]) -> Option<Vec<(Rational, Rational)>> {
        let mut out = Vec::with_capacity(bounds.len());
        for (s, (a, b)) in self.sides.iter().zip(bounds) {
            let lo = if s.lo > *a { s.lo.clone() } else { a.clone() };
            let hi = if s.hi < *b { s.hi.clone() } else { b.clone() };
            if lo >= hi {
                return None;
            }
            out.push((lo, hi));
        }
        Some(out)
    }
}

impl fmt::Display for SetBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .sides
            .iter()
            .map(|s| {
                format!(
                    "[{},{}{}",
                    fmt_rational(&s.lo),
                    fmt_rational(&s.hi),
                    if s.hi_open { ")" } else { "]" }
                )
            })
            .collect();
        f.write_str(&parts.join("x"))
    }
}
