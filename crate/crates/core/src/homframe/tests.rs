use std::sync::Arc;

use super::*;
use crate::calculus::Chart;
use crate::exprcore::{q, qr};
use crate::random;

fn pol() -> ZeroTestPolicy {
    ZeroTestPolicy::default()
}

fn line(branch: Branch) -> LineBundle {
    LineBundle::new(&Chart::real("R", &["x"]), branch).unwrap()
}

fn contact_bundle(branch: Branch) -> LineBundle {
    LineBundle::new(&Chart::real("R3", &["x", "u", "p"]), branch).unwrap()
}

fn fields(lb: &LineBundle, cols: &[&[&str]]) -> Vec<VectorField> {
    let t: &Arc<Chart> = lb.total();
    cols.iter().map(|c| VectorField::new(t, c.iter().map(|s| t.parse(s).unwrap()).collect()).unwrap()).collect()
}

fn exprs(lb: &LineBundle, xs: &[&str]) -> Vec<Expr> {
    xs.iter().map(|s| lb.total().parse(s).unwrap()).collect()
}

fn darboux(lb: &LineBundle) -> Vec<Expr> {
    exprs(lb, &["u", "x", "-mu", "mu*p"])
}

fn rq(m: &ExprMatrix) -> QMatrix {
    QMatrix::from_expr(m).unwrap()
}

fn r_diag(lb: &LineBundle, d: &[&str]) -> ExprMatrix {
    ExprMatrix::diagonal(&d.iter().map(|s| lb.total().parse(s).unwrap()).collect::<Vec<_>>())
}

#[test]
fn transition_examples() {
    for branch in [Branch::Full, Branch::Positive] {
        let lb = line(branch);
        let s = Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["0", "mu"]]), &pol()).unwrap();
        let t = transition(&s, &pol()).unwrap();
        assert!(t.homogeneous);
        assert_eq!(t.degree.unwrap(), DegreeHom::trivial(2));
        assert_eq!(rq(&t.matrix), QMatrix::identity(2));

        let s = Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["0", "1"]]), &pol()).unwrap();
        let t = transition(&s, &pol()).unwrap();
        assert!(t.homogeneous);
        assert!(t.matrix.equals(&r_diag(&lb, &["1", "r"]), &pol()).unwrap());
        let d = t.degree.unwrap();
        assert_eq!(*d.b(), QMatrix::diagonal(&[q(0), q(1)]));
        if branch == Branch::Full {
            assert_eq!(*d.c(), QMatrix::diagonal(&[q(1), q(-1)]));
        }
    }
    let lb = contact_bundle(Branch::Full);
    let s = Frame::of_chart(&lb, &darboux(&lb), &pol()).unwrap();
    let t = transition(&s, &pol()).unwrap();
    assert!(t.homogeneous);
    assert!(t.matrix.equals(&r_diag(&lb, &["1", "1", "r", "r"]), &pol()).unwrap());
    assert_eq!(t.degree.unwrap(), DegreeHom::contact(2));
}

#[test]
fn inhomogeneous_frame_is_detected() {
    let lb = line(Branch::Full);
    let s = Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["0", "mu + mu^3"]]), &pol()).unwrap();
    let t = transition(&s, &pol()).unwrap();
    assert!(!t.homogeneous);
    assert!(t.reason.unwrap().contains("mu"));
    // homogeneous on r > 0 but with an r = −1 mismatch: |μ| scaling of an odd field
    let s = Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["0", "abs(mu)"]]), &pol()).unwrap();
    let t = transition(&s, &pol()).unwrap();
    assert!(t.homogeneous);
    assert_eq!(*t.degree.unwrap().c(), QMatrix::diagonal(&[q(1), q(-1)]));
    assert!(matches!(
        Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["2", "0"]]), &pol()),
        Err(HomFrameError::Degenerate)
    ));
}

#[test]
fn homomorphism_law_for_homogeneous_frames() {
    let lb = contact_bundle(Branch::Full);
    let frames = vec![
        Frame::of_chart(&lb, &darboux(&lb), &pol()).unwrap(),
        Frame::new(&lb, &fields(&lb, &[&["1", "0", "0", "0"], &["0", "1", "0", "0"], &["0", "0", "1", "0"], &["0", "0", "0", "mu"]]), &pol()).unwrap(),
        Frame::new(&lb, &fields(&lb, &[&["mu", "0", "0", "0"], &["x", "1", "0", "0"], &["0", "0", "mu^2", "0"], &["0", "0", "0", "1"]]), &pol()).unwrap(),
    ];
    for s in frames {
        let t = transition(&s, &pol()).unwrap();
        assert!(t.homogeneous, "{:?}", t.reason);
        assert!(check_homomorphism(&t, &pol()).unwrap());
    }
}

#[test]
fn degree_coset_examples() {
    let lb = contact_bundle(Branch::Full);
    let s = Frame::of_chart(&lb, &darboux(&lb), &pol()).unwrap();
    let c = degree_coset(&s, GroupId::Sp(2), &pol()).unwrap();
    assert_eq!(c.quotient, SymbolicQuotient::Scalar(Expr::var(&Symbol::action())));
    assert_eq!(c.at_minus_one, Some(QuotientValue::Scalar(q(-1))));

    let cosym = Frame::new(
        &lb,
        &fields(&lb, &[&["1", "0", "0", "0"], &["0", "1", "0", "0"], &["0", "0", "1", "0"], &["0", "0", "0", "mu"]]),
        &pol(),
    )
    .unwrap();
    let c = degree_coset(&cosym, GroupId::Sp(2), &pol()).unwrap();
    assert_eq!(c.quotient, SymbolicQuotient::Scalar(Expr::one()));
    assert_eq!(c.at_minus_one, Some(QuotientValue::Scalar(q(1))));

    // O case: A_σ(r) = |r|^{1/2} I needs fields scaled by |μ|^{-1/2}
    let l = LineBundle::new(&Chart::real("R2", &["x", "y"]), Branch::Full).unwrap();
    let o = Frame::new(
        &l,
        &fields(&l, &[&["abs(mu)^(-1/2)", "0", "0"], &["0", "abs(mu)^(-1/2)", "0"], &["0", "0", "mu*abs(mu)^(-1/2)"]]),
        &pol(),
    )
    .unwrap();
    let c = degree_coset(&o, GroupId::O(3), &pol()).unwrap();
    assert_eq!(c.hom, DegreeHom::scalar(3, qr(1, 2)));
    let r = Expr::var(&Symbol::action());
    assert_eq!(c.quotient, SymbolicQuotient::Scalar(r.clone()));
    assert_eq!(c.scale, Some(r.pow_q(qr(1, 2))));
    assert_eq!(c.at_minus_one, Some(QuotientValue::Scalar(q(1))));
    // the Darboux frame is not orthogonally homogeneous
    assert!(matches!(degree_coset(&s, GroupId::O(4), &pol()), Err(HomFrameError::Invariance { .. })));
}

#[test]
fn build_frame_examples() {
    let lb = line(Branch::Full);
    let coord = Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["0", "1"]]), &pol()).unwrap();
    let built = build_frame(&coord, &Expr::one(), &DegreeHom::trivial(2), &pol()).unwrap();
    let expected = Frame::new(&lb, &fields(&lb, &[&["1", "0"], &["0", "mu"]]), &pol()).unwrap();
    assert!(built.matrix().equals(expected.matrix(), &pol()).unwrap());

    // a frame built from any lift has that lift as its degree
    let cb = contact_bundle(Branch::Full);
    let dar = Frame::of_chart(&cb, &darboux(&cb), &pol()).unwrap();
    let section = cb.base().parse("1 + x^2").unwrap();
    for a in [DegreeHom::contact(2), DegreeHom::trivial(4), DegreeHom::scalar(4, qr(1, 2))] {
        let f = build_frame(&dar, &section, &a, &pol()).unwrap();
        let t = transition(&f, &pol()).unwrap();
        assert_eq!(t.degree.as_ref(), Some(&a));
        // σ0 is reproduced on the section itself
        let on_section = f.matrix().subst(&cb.fibre_subst(&section));
        assert!(on_section.equals(&dar.matrix().subst(&cb.fibre_subst(&section)), &pol()).unwrap());
    }
    let f = build_frame(&dar, &Expr::one(), &DegreeHom::contact(2), &pol()).unwrap();
    assert!(frames_g_equivalent(&f, &dar, GroupId::Sp(2), &pol()).unwrap());
}

#[test]
fn rebuilding_from_a_section_is_gl_equivalent() {
    let lb = contact_bundle(Branch::Full);
    let frames = vec![
        Frame::of_chart(&lb, &darboux(&lb), &pol()).unwrap(),
        Frame::new(&lb, &fields(&lb, &[&["mu", "0", "0", "0"], &["x", "1", "0", "0"], &["0", "0", "mu^2", "0"], &["0", "0", "0", "1"]]), &pol()).unwrap(),
    ];
    for s in frames {
        let a = transition(&s, &pol()).unwrap().degree.unwrap();
        let rebuilt = build_frame(&s, &lb.base().parse("2 + u^2").unwrap(), &a, &pol()).unwrap();
        assert!(frames_g_equivalent(&s, &rebuilt, GroupId::Gl(4), &pol()).unwrap());
        assert!(rebuilt.matrix().equals(s.matrix(), &pol()).unwrap());
    }
}

#[test]
fn frame_equivalence_examples() {
    let lb = contact_bundle(Branch::Full);
    let dar = Frame::of_chart(&lb, &darboux(&lb), &pol()).unwrap();
    let mut rng = random::rng(12);
    let g = GroupId::Sp(2).random_element(&mut rng);
    let moved = dar.compose(&g.to_expr(), &pol()).unwrap();
    assert!(frames_g_equivalent(&dar, &moved, GroupId::Sp(2), &pol()).unwrap());
    let d = QMatrix::diagonal(&[q(2), q(1), q(1), q(1)]);
    assert!(!frames_g_equivalent(&dar, &dar.compose(&d.to_expr(), &pol()).unwrap(), GroupId::O(4), &pol()).unwrap());
    // a second Darboux chart of du − p dx: u' = u − xp, x' = −p, p' = x
    let other = Frame::of_chart(&lb, &exprs(&lb, &["u - x*p", "-p", "-mu", "mu*x"]), &pol()).unwrap();
    assert!(frames_g_equivalent(&dar, &other, GroupId::Sp(2), &pol()).unwrap());
    assert!(!frames_g_equivalent(&dar, &other, GroupId::O(4), &pol()).unwrap());
}

#[test]
fn right_translation_keeps_the_coset() {
    let lb = contact_bundle(Branch::Full);
    let dar = Frame::of_chart(&lb, &darboux(&lb), &pol()).unwrap();
    let a = transition(&dar, &pol()).unwrap().degree.unwrap();
    let mut rng = random::rng(13);
    for _ in 0..3 {
        let g = GroupId::Sp(2).random_element(&mut rng);
        let moved = dar.compose(&g.to_expr(), &pol()).unwrap();
        let b = transition(&moved, &pol()).unwrap().degree.unwrap();
        // A_{σg} = g^{-1} A_σ g
        assert_eq!(*b.b(), g.inverse().unwrap().mul(a.b()).unwrap().mul(&g).unwrap());
        assert!(a.coset_eq(&b, GroupId::Sp(2), &pol()).unwrap());
    }
}

#[test]
fn homogeneous_chart_examples() {
    let lb = line(Branch::Positive);
    let rep = is_homogeneous_chart(&lb, &exprs(&lb, &["x", "log(mu)"]), &pol()).unwrap();
    assert_eq!(rq(&rep.a), QMatrix::identity(2));
    assert_eq!(rep.b[0], Expr::zero());
    assert_eq!(rep.b[1], Expr::var(&Symbol::action()).log());
    assert!(rep.cocycle && rep.matches_frame);

    let cb = contact_bundle(Branch::Full);
    let rep = is_homogeneous_chart(&cb, &darboux(&cb), &pol()).unwrap();
    assert!(rep.a.equals(&r_diag(&cb, &["1", "1", "r", "r"]), &pol()).unwrap());
    assert!(rep.b.iter().all(|e| e.is_zero_literal()));
    assert!(rep.cocycle && rep.matches_frame);

    let lf = line(Branch::Full);
    let rep = is_homogeneous_chart(&lf, &exprs(&lf, &["x", "mu^2"]), &pol()).unwrap();
    assert!(rep.a.equals(&r_diag(&lf, &["1", "r^2"]), &pol()).unwrap());
    assert!(rep.cocycle && rep.matches_frame);

    // affine but not diagonal: (x, μ + x) has A = [[1, 0], [1 − r, r]]
    let rep = is_homogeneous_chart(&lf, &exprs(&lf, &["x", "mu + x"]), &pol()).unwrap();
    let expect = ExprMatrix::from_rows(vec![exprs(&lf, &["1", "0"]), exprs(&lf, &["1 - r", "r"])]).unwrap();
    assert!(rep.a.equals(&expect, &pol()).unwrap());
    assert!(rep.cocycle && rep.matches_frame);

    assert!(matches!(
        is_homogeneous_chart(&lf, &exprs(&lf, &["x", "mu + mu^3"]), &pol()),
        Err(HomFrameError::NotHomogeneous(_))
    ));
}

#[test]
fn continued_fraction_recovery() {
    assert_eq!(recover_rational(0.5), Some(qr(1, 2)));
    assert_eq!(recover_rational(-2.0 / 3.0), Some(qr(-2, 3)));
    assert_eq!(recover_rational(3.0), Some(q(3)));
    assert_eq!(recover_rational(std::f64::consts::PI), None);
}
