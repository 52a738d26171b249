//! End-to-end checks through the public API only.

use preserver_core::adjoint::{finite_range_detect, mu_x, FiniteRange};
use preserver_core::approx::{build_simple, error_bound, partition};
use preserver_core::momentcheck::{hankel, moment_check};
use preserver_core::operator::{
    check_preserver, extract_coeffs, finite_order_verdict, global_preserver_check, taylor_endo_coeffs, CheckOptions,
    FiniteOrderVerdict,
};
use preserver_core::poly::{nonneg_on, parse_poly, sup_norm};
use preserver_core::scalar::{int, rat, to_f64};
use preserver_core::{
    Budget, DomainSet, FPoly, MeasureExpr, MomentSequence, MomentVerdict, MultiIndex, OperatorExpr, PreserverVerdict,
    QMatrix, QPoly,
};

fn p1(s: &str) -> QPoly {
    parse_poly(s, 1).unwrap()
}

#[test]
fn float_and_exact_polynomials_agree() {
    let p = parse_poly("3*x0^2*x1 - x1/4 + 7", 2).unwrap();
    let f: FPoly = p.map_coeffs(to_f64);
    for (x, y) in [(0.5, -2.0), (1.25, 3.0), (-1.0, 0.0)] {
        let exact = p.eval(&[rat((x * 4.0) as i64, 4), rat((y * 4.0) as i64, 4)]).unwrap();
        let approx = f.eval(&[x, y]).unwrap();
        assert!((to_f64(&exact) - approx).abs() < 1e-12);
    }
    let g: preserver_core::F32Poly = p.map_coeffs(|c| to_f64(c) as f32);
    assert_eq!(g.degree(), Some(3));
}

#[test]
fn domain_text_round_trips() {
    for src in ["R", "R^3", "[2,inf)", "[-1,1]", "[0,1]x[-1/2,3]"] {
        let d = DomainSet::parse(src).unwrap();
        assert_eq!(DomainSet::parse(&d.to_string()).unwrap(), d);
    }
    assert!(DomainSet::parse("[1,0]").is_err());
}

#[test]
fn shifted_moments_expose_the_translation() {
    // E_{X+1} has constant coefficients 1/k!, i.e. moments of δ_1.
    let rep = taylor_endo_coeffs(&[p1("x + 1")], 6).unwrap();
    let check = global_preserver_check(&rep, &DomainSet::HalfLine(int(2)), 3).unwrap();
    assert_eq!(check.sequence, MeasureExpr::dirac(vec![int(1)]).moments(6).unwrap());
    assert!(check.direct.is_refuted());
    assert!(!check.refutes_preserver);
    assert!(matches!(
        check_preserver(&OperatorExpr::parse("endo(x0 + 1)", 1).unwrap(), &DomainSet::HalfLine(int(2)), &CheckOptions::default()).unwrap(),
        PreserverVerdict::CertifiedPreserver { .. }
    ));
    assert_eq!(finite_order_verdict(&rep, false), FiniteOrderVerdict::Inconclusive { order: 6 });
}

#[test]
fn derivative_is_refuted_on_the_line() {
    let d = OperatorExpr::diff(MultiIndex::new(vec![1]));
    let rep = extract_coeffs(&d, 4).unwrap();
    let check = global_preserver_check(&rep, &DomainSet::RealLine, 2).unwrap();
    assert!(check.refutes_preserver);
    assert!(matches!(
        finite_order_verdict(&rep, d.known_finite_order()),
        FiniteOrderVerdict::NotGlobalPreserver { .. }
    ));
}

#[test]
fn hankel_psd_of_a_measure() {
    let mu = MeasureExpr::parse("sum(dirac(-1), times(2; dirac(1/2)), lebesgue([0,1]))", 1).unwrap();
    let r = mu.moments(8).unwrap();
    let h: QMatrix = hankel(&r, 4).unwrap();
    assert!(h.is_psd_exact().is_ok());
    assert!(matches!(moment_check(&r, &DomainSet::interval(int(-1), int(1)).unwrap(), 3).unwrap(), MomentVerdict::ConsistentUpTo { .. }));
    let r = MomentSequence::univariate(vec![int(1), int(0), int(-1)]).unwrap();
    match moment_check(&r, &DomainSet::RealLine, 1).unwrap() {
        MomentVerdict::RefutedAtOrder { certificate, value, .. } => {
            assert_eq!(certificate, vec![int(0), int(1)]);
            assert_eq!(value, int(-1));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn approximant_is_a_simple_preserver() {
    let s = DomainSet::interval(int(-1), int(1)).unwrap();
    let phi = OperatorExpr::parse("rank{(x0 + 2; lebesgue([-1,1])), (x0^2; neg(lebesgue([0,1])))}", 1).unwrap();
    let simple = build_simple(&phi, &s, 4, 16).unwrap();
    assert!(simple.certify_membership(&s, Budget::default()).unwrap());
    assert!(matches!(
        check_preserver(&simple.operator, &s, &CheckOptions::default()).unwrap(),
        PreserverVerdict::CertifiedPreserver { .. }
    ));
    let p = p1("x^2 - x");
    let diff = &phi.apply(&p).unwrap() - &simple.apply(&p).unwrap();
    let err = sup_norm(&diff, &s, &rat(1, 1000)).unwrap();
    let bound = error_bound(&phi, &p, &partition(&s, 4).unwrap().diameter, &s).unwrap();
    assert!(err.hi <= bound);
    assert!(matches!(finite_range_detect(&simple.operator, 3).unwrap(), FiniteRange::Basis(ref b) if b.len() == 4));
    let mu = mu_x(&simple.operator, &[rat(1, 3)]).unwrap();
    assert!(mu.is_nonnegative(Budget::default()).unwrap());
    assert!(nonneg_on(&simple.images[0], &s, Budget::default()).unwrap().is_certified());
}
