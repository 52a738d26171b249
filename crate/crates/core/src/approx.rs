//! Approximation of a preserver by simple finite-rank operators
//! `p ↦ Σ p(a_i)·Φ(f_i)` built from a partition of a compact `S`.

use num_traits::{One, Signed, Zero};

use crate::adjoint::mu_x;
use crate::error::{Error, Result};
use crate::measure::MeasureExpr;
use crate::operator::OperatorExpr;
use crate::poly::{nonneg_on, sup_norm, Budget, DomainSet, MultiIndex, Polynomial, SetBox};
use crate::scalar::{binomial, fmt_rational, rat, sqrt_upper, Rational};

type QPoly = Polynomial<Rational>;

/// Default number of grid points per axis for measured errors.
pub const DEFAULT_GRID: usize = 101;

/// Uniform grid partition of a compact box into right-open cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub bounds: Vec<(Rational, Rational)>,
    /// Cells per axis.
    pub r: usize,
    pub cells: Vec<SetBox>,
    /// Cell midpoints.
    pub anchors: Vec<Vec<Rational>>,
    /// Upper bound for every cell diameter.
    pub diameter: Rational,
    /// Whether `diameter` is the exact cell diameter.
    pub diameter_exact: bool,
}

pub fn partition(s: &DomainSet, r: usize) -> Result<Partition> {
    if r == 0 {
        return Err(Error::InvalidArgument("partition needs r ≥ 1".into()));
    }
    let bounds = s.compact_bounds()?;
    let cells = SetBox::grid(&bounds, r);
    let anchors = cells.iter().map(|c| c.center()).collect();
    let d2 = cells[0].diameter_squared();
    let exact = perfect_square_root(&d2);
    let diameter_exact = exact.is_some();
    let diameter = exact.unwrap_or_else(|| sqrt_upper(&d2, 24));
    Ok(Partition { bounds, r, cells, anchors, diameter, diameter_exact })
}

fn perfect_square_root(q: &Rational) -> Option<Rational> {
    let (n, d) = (q.numer(), q.denom());
    if n.is_negative() {
        return None;
    }
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Degree-`n` tensor Bernstein approximant of `1_A` over the box `bounds`.
///
/// Every Bernstein coefficient is 0 or 1, so the result takes values in
/// `[0, 1]` on the box, and the approximants of the cells of a partition
/// sum to 1.
pub fn indicator_poly(cell: &SetBox, bounds: &[(Rational, Rational)], n: u32) -> Result<QPoly> {
    if cell.dim() != bounds.len() {
        return Err(Error::dim(bounds.len(), cell.dim()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("indicator degree must be at least 1".into()));
    }
    let nv = bounds.len();
    let mut out = QPoly::one(nv);
    for (i, (side, (a, b))) in cell.sides.iter().zip(bounds).enumerate() {
        let t = (&QPoly::var(nv, i) - &QPoly::constant(nv, a.clone())).scale(&(Rational::one() / (b - a)));
        let u = &QPoly::one(nv) - &t;
        let mut factor = QPoly::zero(nv);
        for k in 0..=n {
            let node = a + (b - a) * rat(k as i64, n as i64);
            if side.contains(&node) {
                let basis = (&t.pow(k) * &u.pow(n - k)).scale(&Rational::from_integer(binomial(n, k)));
                factor = &factor + &basis;
            }
        }
        out = &out * &factor;
    }
    Ok(out)
}

/// Equispaced grid with `k` points per axis, endpoints included.
pub fn grid_points(bounds: &[(Rational, Rational)], k: usize) -> Vec<Vec<Rational>> {
    let axes: Vec<Vec<Rational>> = bounds
        .iter()
        .map(|(a, b)| {
            if k <= 1 {
                return vec![crate::scalar::midpoint(a, b)];
            }
            (0..k).map(|i| a + (b - a) * rat(i as i64, (k - 1) as i64)).collect()
        })
        .collect();
    let mut pts = vec![Vec::new()];
    for axis in &axes {
        pts = pts
            .into_iter()
            .flat_map(|prefix: Vec<Rational>| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub enum Accuracy {
    /// `max |μ_x(A_i) − ∫ f_i dμ_x| ≤ D/r` over the grid.
    Pass { max_deviation: Rational },
    Fail { max_deviation: Rational },
    /// The set measures of `μ_x` could not be evaluated.
    Skipped { reason: String },
}

impl Accuracy {
    pub fn passed(&self) -> bool {
        matches!(self, Accuracy::Pass { .. })
    }
}

/// Grid surrogate of the uniform indicator accuracy `‖m(A_i) − ∫ f_i dm‖∞ ≤ D/r`.
pub fn accuracy_check(op: &OperatorExpr, part: &Partition, f: &[QPoly], grid: &[Vec<Rational>]) -> Result<Accuracy> {
    if f.len() != part.cells.len() {
        return Err(Error::InvalidArgument(format!("{} indicators for {} cells", f.len(), part.cells.len())));
    }
    let g = f.iter().map(|fi| op.apply(fi)).collect::<Result<Vec<_>>>()?;
    accuracy_with_images(op, part, &g, grid)
}

fn accuracy_with_images(op: &OperatorExpr, part: &Partition, g: &[QPoly], grid: &[Vec<Rational>]) -> Result<Accuracy> {
    let mut worst = Rational::zero();
    for x in grid {
        let mu = match mu_x(op, x) {
            Ok(m) => m,
            Err(e @ (Error::NoConstructiveAdjoint(_) | Error::UnsupportedPreimage(_))) => {
                return Ok(Accuracy::Skipped { reason: e.to_string() })
            }
            Err(e) => return Err(e),
        };
        for (cell, gi) in part.cells.iter().zip(g) {
            let m = match mu.measure_of_set(cell) {
                Ok(m) => m,
                Err(e @ Error::UnsupportedPreimage(_)) => return Ok(Accuracy::Skipped { reason: e.to_string() }),
                Err(e) => return Err(e),
            };
            let dev = (m - gi.eval(x)?).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    let tol = &part.diameter / Rational::from_integer(part.r.into());
    Ok(if worst <= tol { Accuracy::Pass { max_deviation: worst } } else { Accuracy::Fail { max_deviation: worst } })
}

/// `Ψ: p ↦ Σ p(a_i)·Φ(f_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleApproximant {
    pub source: OperatorExpr,
    pub partition: Partition,
    pub degree: u32,
    pub indicators: Vec<QPoly>,
    /// `g_i = Φ(f_i)`.
    pub images: Vec<QPoly>,
    /// `Ψ` as a finite-rank operator with `ν_i = δ_{a_i}`.
    pub operator: OperatorExpr,
    pub accuracy: Accuracy,
}

impl SimpleApproximant {
    pub fn apply(&self, p: &QPoly) -> Result<QPoly> {
        let mut out = QPoly::zero(p.nvars());
        for (a, g) in self.partition.anchors.iter().zip(&self.images) {
            out = &out + &g.scale(&p.eval(a)?);
        }
        Ok(out)
    }

    /// Whether every `g_i` is certified nonnegative on `S`, which makes `Ψ`
    /// a sum of nonnegative point evaluations times nonnegative polynomials.
    pub fn certify_membership(&self, s: &DomainSet, budget: Budget) -> Result<bool> {
        for g in &self.images {
            if !nonneg_on(g, s, budget)?.is_certified() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Partition, indicators, images and the accuracy check on a grid of
/// [`DEFAULT_GRID`] points per axis.
pub fn build_simple(op: &OperatorExpr, s: &DomainSet, r: usize, n: u32) -> Result<SimpleApproximant> {
    let bounds = s.compact_bounds()?;
    build_simple_on(op, s, r, n, &grid_points(&bounds, DEFAULT_GRID))
}

pub fn build_simple_on(op: &OperatorExpr, s: &DomainSet, r: usize, n: u32, grid: &[Vec<Rational>]) -> Result<SimpleApproximant> {
    if op.nvars() != s.dim() {
        return Err(Error::dim(s.dim(), op.nvars()));
    }
    let part = partition(s, r)?;
    let indicators = part.cells.iter().map(|c| indicator_poly(c, &part.bounds, n)).collect::<Result<Vec<_>>>()?;
    let images = indicators.iter().map(|f| op.apply(f)).collect::<Result<Vec<_>>>()?;
    let pairs = part
        .anchors
        .iter()
        .zip(&images)
        .map(|(a, g)| (g.clone(), MeasureExpr::dirac(a.clone())))
        .collect();
    let operator = OperatorExpr::finite_rank(pairs)?;
    let accuracy = accuracy_with_images(op, &part, &images, grid)?;
    Ok(SimpleApproximant { source: op.clone(), partition: part, degree: n, indicators, images, operator, accuracy })
}

/// Sup-norm tolerance for the enclosures inside [`error_bound`].
pub fn bound_tolerance() -> Rational {
    rat(1, 1_000_000)
}

/// `J(p) = 1 + Σ_j (∂p/∂X_j)²`.
pub fn gradient_weight(p: &QPoly) -> Result<QPoly> {
    let n = p.nvars();
    let mut j = QPoly::one(n);
    for i in 0..n {
        let d = p.derivative(&MultiIndex::unit(n, i))?;
        j = &j + &(&d * &d);
    }
    Ok(j)
}

/// `D·(‖Φ(1)‖∞·‖J(p)‖∞ + ‖p‖∞)` with every norm replaced by a rational upper enclosure.
pub fn error_bound(op: &OperatorExpr, p: &QPoly, d: &Rational, s: &DomainSet) -> Result<Rational> {
    let eps = bound_tolerance();
    let one = op.apply(&QPoly::one(s.dim()))?;
    let phi1 = sup_norm(&one, s, &eps)?.hi;
    let jp = sup_norm(&gradient_weight(p)?, s, &eps)?.hi;
    let pn = sup_norm(p, s, &eps)?.hi;
    Ok(d * (phi1 * jp + pn))
}

/// How the indicator degree `N` depends on `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeRule {
    /// `N = k·r`.
    Multiple(u32),
    Fixed(u32),
}

impl Default for DegreeRule {
    fn default() -> Self {
        DegreeRule::Multiple(4)
    }
}

impl DegreeRule {
    pub fn degree(&self, r: usize) -> u32 {
        match *self {
            DegreeRule::Multiple(k) => k * r as u32,
            DegreeRule::Fixed(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub r: usize,
    pub diameter: Rational,
    pub degree: u32,
    pub poly_id: String,
    pub measured_error: Rational,
    pub bound: Rational,
    /// The accuracy check passed, so the bound is asserted.
    pub bound_claimed: bool,
    /// `measured_error ≤ bound`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

pub const CSV_COLUMNS: [&str; 8] = ["r", "D", "N", "poly-id", "measured_error", "bound", "bound_claimed", "pass"];

impl ConvergenceTable {
    /// CSV with a header row; rationals are written exactly.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for row in &self.rows {
            w.write_record([
                row.r.to_string(),
                fmt_rational(&row.diameter),
                row.degree.to_string(),
                row.poly_id.clone(),
                fmt_rational(&row.measured_error),
                fmt_rational(&row.bound),
                row.bound_claimed.to_string(),
                row.pass.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Rows whose claimed bound is violated.
    pub fn violations(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.bound_claimed && !r.pass)
    }

    pub fn error_at(&self, r: usize, poly_id: &str) -> Option<&Rational> {
        self.rows.iter().find(|row| row.r == r && row.poly_id == poly_id).map(|row| &row.measured_error)
    }
}

/// One row per `(r, p)`, sorted by `r` then input order of the polynomials.
pub fn converge_report(
    op: &OperatorExpr,
    s: &DomainSet,
    polys: &[(String, QPoly)],
    schedule: &[usize],
    rule: DegreeRule,
    grid_size: usize,
) -> Result<ConvergenceTable> {
    let bounds = s.compact_bounds()?;
    let grid = grid_points(&bounds, grid_size);
    let mut schedule = schedule.to_vec();
    schedule.sort_unstable();
    schedule.dedup();
    let exact_images: Vec<QPoly> = polys.iter().map(|(_, p)| op.apply(p)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &r in &schedule {
        let n = rule.degree(r);
        let simple = build_simple_on(op, s, r, n, &grid)?;
        let claimed = simple.accuracy.passed();
        for ((id, p), exact) in polys.iter().zip(&exact_images) {
            let approx = simple.apply(p)?;
            let diff = exact - &approx;
            let mut err = Rational::zero();
            for x in &grid {
                let v = diff.eval(x)?.abs();
                if v > err {
                    err = v;
                }
            }
            let bound = error_bound(op, p, &simple.partition.diameter, s)?;
            rows.push(ConvergenceRow {
                r,
                diameter: simple.partition.diameter.clone(),
                degree: n,
                poly_id: id.clone(),
                pass: err <= bound,
                measured_error: err,
                bound,
                bound_claimed: claimed,
            });
        }
    }
    Ok(ConvergenceTable { rows })
}

/// The test polynomials `1, X, X², X³ − X` in one variable.
pub fn default_test_polys() -> Vec<(String, QPoly)> {
    let x = QPoly::var(1, 0);
    vec![
        ("1".into(), QPoly::one(1)),
        ("x".into(), x.clone()),
        ("x^2".into(), x.pow(2)),
        ("x^3 - x".into(), &x.pow(3) - &x),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use crate::scalar::int;
    use proptest::prelude::*;

    fn p1(s: &str) -> QPoly {
        parse_poly(s, 1).unwrap()
    }

    fn iv(a: i64, b: i64) -> DomainSet {
        DomainSet::interval(int(a), int(b)).unwrap()
    }

    #[test]
    fn partition_examples() {
        let p = partition(&iv(-1, 1), 2).unwrap();
        assert_eq!(p.cells.len(), 2);
        assert_eq!(p.diameter, int(1));
        assert!(p.diameter_exact);
        assert_eq!(p.anchors, vec![vec![rat(-1, 2)], vec![rat(1, 2)]]);
        assert!(p.cells[0].contains(&[rat(-1, 1)]) && !p.cells[0].contains(&[int(0)]));
        assert!(p.cells[1].contains(&[int(0)]) && p.cells[1].contains(&[int(1)]));

        let sq = DomainSet::boxed(vec![(int(0), int(1)), (int(0), int(1))]).unwrap();
        let p = partition(&sq, 2).unwrap();
        assert_eq!(p.cells.len(), 4);
        assert!(!p.diameter_exact);
        assert!(&p.diameter * &p.diameter >= rat(1, 2));
        assert!(p.diameter <= rat(3, 4));

        let p = partition(&iv(2, 5), 1).unwrap();
        assert_eq!(p.diameter, int(3));
        assert!(partition(&DomainSet::RealLine, 2).is_err());
        assert!(partition(&iv(0, 1), 0).is_err());
    }

    #[test]
    fn indicator_examples() {
        let s = [(int(0), int(1))];
        assert_eq!(indicator_poly(&SetBox::closed(&s), &s, 5).unwrap(), QPoly::one(1));
        let half = SetBox { sides: vec![crate::poly::Side::half_open(int(0), rat(1, 2))] };
        assert_eq!(indicator_poly(&half, &s, 1).unwrap(), p1("1 - x"));
        let p = partition(&iv(0, 1), 2).unwrap();
        let f: Vec<QPoly> = p.cells.iter().map(|c| indicator_poly(c, &p.bounds, 3).unwrap()).collect();
        assert_eq!(&f[0] + &f[1], QPoly::one(1));
    }

    #[test]
    fn accuracy_examples() {
        let s = iv(-1, 1);
        let p = partition(&s, 2).unwrap();
        let f: Vec<QPoly> = p.cells.iter().map(|c| indicator_poly(c, &p.bounds, 8).unwrap()).collect();
        let grid = grid_points(&p.bounds, 11);
        let zero = OperatorExpr::mul(QPoly::zero(1));
        assert_eq!(accuracy_check(&zero, &p, &f, &grid).unwrap(), Accuracy::Pass { max_deviation: int(0) });

        // Identity: deviation is max |1_A(x) - f(x)| on the grid.
        let id = OperatorExpr::identity(1);
        let expected = grid
            .iter()
            .flat_map(|x| p.cells.iter().zip(&f).map(move |(c, fi)| {
                let ind = if c.contains(x) { int(1) } else { int(0) };
                (ind - fi.eval(x).unwrap()).abs()
            }))
            .max()
            .unwrap();
        match accuracy_check(&id, &p, &f, &grid).unwrap() {
            Accuracy::Fail { max_deviation } | Accuracy::Pass { max_deviation } => assert_eq!(max_deviation, expected),
            other => panic!("{other:?}"),
        }

        let at0 = OperatorExpr::parse("rank{(1; dirac(0))}", 1).unwrap();
        let expected = p
            .cells
            .iter()
            .zip(&f)
            .map(|(c, fi)| {
                let ind = if c.contains(&[int(0)]) { int(1) } else { int(0) };
                (ind - fi.eval(&[int(0)]).unwrap()).abs()
            })
            .max()
            .unwrap();
        match accuracy_check(&at0, &p, &f, &grid).unwrap() {
            Accuracy::Fail { max_deviation } | Accuracy::Pass { max_deviation } => assert_eq!(max_deviation, expected),
            other => panic!("{other:?}"),
        }
        let d = OperatorExpr::diff(MultiIndex::new(vec![1]));
        assert!(matches!(accuracy_check(&d, &p, &f, &grid).unwrap(), Accuracy::Skipped { .. }));
    }

    #[test]
    fn build_examples() {
        let s = iv(0, 1);
        let b = build_simple(&OperatorExpr::identity(1), &s, 1, 3).unwrap();
        assert_eq!(b.apply(&p1("x^3 + x")).unwrap(), QPoly::constant(1, rat(5, 8)));

        let s = iv(-1, 1);
        let m = OperatorExpr::mul(p1("x^2"));
        let b = build_simple(&m, &s, 2, 4).unwrap();
        let p = p1("x^3 - 2*x + 1");
        let expected = &(&p1("x^2") * &b.indicators[0]).scale(&p.eval(&[rat(-1, 2)]).unwrap())
            + &(&p1("x^2") * &b.indicators[1]).scale(&p.eval(&[rat(1, 2)]).unwrap());
        assert_eq!(b.apply(&p).unwrap(), expected);
        assert_eq!(b.operator.apply(&p).unwrap(), expected);

        let half = OperatorExpr::parse("endo(x0/2)", 1).unwrap();
        let b = build_simple(&half, &s, 4, 6).unwrap();
        assert_eq!(b.images.len(), 4);
        for (f, g) in b.indicators.iter().zip(&b.images) {
            assert_eq!(*g, f.compose(&[p1("x/2")]).unwrap());
        }
        assert!(b.certify_membership(&s, Budget::default()).unwrap());
    }

    #[test]
    fn bound_examples() {
        let s = iv(-1, 1);
        let tol = bound_tolerance();
        let phi = OperatorExpr::mul(p1("x + 2"));
        let b = error_bound(&phi, &QPoly::constant(1, int(-3)), &int(1), &s).unwrap();
        assert!(b >= int(6) && b <= int(6) + &tol * int(3));
        let b = error_bound(&phi, &p1("x"), &rat(1, 2), &s).unwrap();
        // D·(2·3 + 1)
        assert!(b >= rat(7, 2) && b <= rat(7, 2) + &tol * int(5));
        let id = OperatorExpr::identity(1);
        for r in [1i64, 2, 8] {
            let b = error_bound(&id, &p1("x"), &rat(2, r), &s).unwrap();
            assert!(b >= rat(6, r) && b <= rat(6, r) + &tol * int(10));
        }
        assert_eq!(gradient_weight(&p1("x")).unwrap(), QPoly::constant(1, int(2)));
    }

    #[test]
    fn identity_errors_decrease() {
        let s = iv(-1, 1);
        let t = converge_report(
            &OperatorExpr::identity(1),
            &s,
            &[("x".into(), p1("x"))],
            &[16, 2, 8, 4],
            DegreeRule::default(),
            DEFAULT_GRID,
        )
        .unwrap();
        let rs: Vec<usize> = t.rows.iter().map(|r| r.r).collect();
        assert_eq!(rs, vec![2, 4, 8, 16]);
        for w in t.rows.windows(2) {
            assert!(w[1].measured_error < w[0].measured_error);
        }
        assert!(t.rows.iter().all(|r| r.pass));
        let zero = converge_report(&OperatorExpr::mul(QPoly::zero(1)), &s, &default_test_polys(), &[2, 4], DegreeRule::default(), 21).unwrap();
        assert!(zero.rows.iter().all(|r| r.measured_error.is_zero()));
        let csv = zero.to_csv().unwrap();
        assert!(csv.starts_with("r,D,N,poly-id,measured_error,bound,bound_claimed,pass\n"));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn psi_of_one_tracks_phi_of_one() {
        let s = iv(-1, 1);
        let phi = OperatorExpr::parse("rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}", 1).unwrap();
        for r in [2, 4] {
            let b = build_simple(&phi, &s, r, 4 * r as u32).unwrap();
            let diff = &phi.apply(&QPoly::one(1)).unwrap() - &b.apply(&QPoly::one(1)).unwrap();
            let bound = error_bound(&phi, &QPoly::one(1), &b.partition.diameter, &s).unwrap();
            for x in grid_points(&b.partition.bounds, 41) {
                assert!(diff.eval(&x).unwrap().abs() <= bound);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn indicators_form_a_partition_of_unity(a in -3i64..3, w in 1i64..4, r in 1usize..5, n in 1u32..9, two in any::<bool>()) {
            let s = if two {
                DomainSet::boxed(vec![(int(a), int(a + w)), (int(0), int(1))]).unwrap()
            } else {
                iv(a, a + w)
            };
            let p = partition(&s, r).unwrap();
            let mut total = QPoly::zero(s.dim());
            for (c, anchor) in p.cells.iter().zip(&p.anchors) {
                prop_assert!(c.contains(anchor));
                prop_assert!(c.diameter_squared() <= &p.diameter * &p.diameter);
                let f = indicator_poly(c, &p.bounds, n).unwrap();
                prop_assert!(nonneg_on(&f, &s, Budget::default()).unwrap().is_certified());
                total = &total + &f;
            }
            prop_assert_eq!(total, QPoly::one(s.dim()));
        }
    }
}
