use super::*;
use crate::exprcore::q;
use crate::random;

fn pol() -> ZeroTestPolicy {
    ZeroTestPolicy::default()
}

fn r3(branch: Branch) -> LineBundle {
    LineBundle::new(&darboux_base(2), branch).unwrap()
}

fn form2(lb: &LineBundle, terms: &[((usize, usize), &str)]) -> KForm {
    let t = lb.total();
    KForm::from_terms(t, 2, terms.iter().map(|((i, j), s)| (vec![*i, *j], t.parse(s).unwrap())).collect()).unwrap()
}

// base (x, u, p) = indices 0, 1, 2; μ = 3
#[test]
fn symplectization_examples() {
    let pair = standard_pair(2, Branch::Full).unwrap();
    let w = pair_to_omega(&pair).unwrap();
    let expected = form2(&pair.lb, &[((1, 3), "-1"), ((0, 3), "p"), ((0, 2), "mu")]);
    assert!(w.equals(&expected, &pol()).unwrap());
    assert!(pair.lb.is_homogeneous(&AtiyahObject::Form(w.clone()), &ScalarDegree::identity(), &pol()).unwrap());

    let lb1 = LineBundle::new(&darboux_base(1), Branch::Full).unwrap();
    let p1 = ContactPair::parse(&lb1, &["1"], &[]).unwrap();
    assert!(pair_to_omega(&p1).unwrap().equals(&form2(&lb1, &[((0, 1), "-1")]), &pol()).unwrap());

    let lb = r3(Branch::Full);
    let p = ContactPair::parse(&lb, &["-p", "1", "0"], &[((0, 2), "1")]).unwrap();
    let expected = form2(&lb, &[((1, 3), "-1"), ((0, 3), "p"), ((0, 2), "2*mu")]);
    assert!(pair_to_omega(&p).unwrap().equals(&expected, &pol()).unwrap());
}

#[test]
fn omega_to_pair_inverts() {
    let pair = standard_pair(2, Branch::Full).unwrap();
    let back = omega_to_pair(&pair.lb, &pair_to_omega(&pair).unwrap(), &pol()).unwrap();
    assert!(back.theta.equals(&pair.theta, &pol()).unwrap());
    assert!(back.upsilon.is_zero(&pol()).unwrap());

    // i_ℰ dω̃ = 0 for closed ω̃, on the closed form d(μ x du)
    let lb = r3(Branch::Full);
    let closed = form2(&lb, &[((0, 1), "mu"), ((3, 1), "x")]);
    assert!(closed.d().unwrap().is_zero(&pol()).unwrap());
    assert!(omega_to_pair(&lb, &closed, &pol()).unwrap().upsilon.is_zero(&pol()).unwrap());

    // a degree-2 form is rejected
    let bad = form2(&lb, &[((0, 2), "mu^2")]);
    assert!(matches!(omega_to_pair(&lb, &bad, &pol()), Err(ContactError::Degree(_))));
}

#[test]
fn random_pairs_round_trip() {
    let mut rng = random::rng(21);
    for k in [1usize, 2] {
        let lb = LineBundle::new(&darboux_base(k), Branch::Full).unwrap();
        for _ in 0..10 {
            let theta = random::form(&mut rng, lb.base(), 1, 2, 3);
            let ups = random::form(&mut rng, lb.base(), 2, 2, 3);
            let pair = ContactPair::new(&lb, theta, ups).unwrap();
            let w = pair_to_omega(&pair).unwrap();
            let back = omega_to_pair(&lb, &w, &pol()).unwrap();
            assert!(back.theta.equals(&pair.theta, &pol()).unwrap());
            assert!(back.upsilon.equals(&pair.upsilon, &pol()).unwrap());
            assert!(pair_to_omega(&back).unwrap().equals(&w, &pol()).unwrap());
        }
    }
}

#[test]
fn pair_checks() {
    let pair = standard_pair(2, Branch::Full).unwrap();
    let dc = h_basis(&pair, &pol()).unwrap();
    assert_eq!(dc.pivot, 1);
    // basis (∂x + p∂u, ∂p); R_H(∂p, ∂x + p∂u) = θ(∂u) = 1
    assert!(dc.basis[0].equals(&VectorField::new(pair.lb.base(), vec![q(1).into(), pair.lb.base().parse("p").unwrap(), Expr::zero()]).unwrap(), &pol()).unwrap());
    assert_eq!(dc.r_h[(1, 0)], Expr::one());
    let c = check_pair(&pair, &pol()).unwrap();
    assert!(c.nondeg_on_h && c.omega_nondegenerate && c.curvature_consistent && c.equivalence_holds());

    let lb = r3(Branch::Full);
    let foliation = ContactPair::parse(&lb, &["0", "1", "0"], &[]).unwrap();
    let c = check_pair(&foliation, &pol()).unwrap();
    assert!(!c.nondeg_on_h && !c.omega_nondegenerate && c.equivalence_holds());
    assert!(h_basis(&foliation, &pol()).unwrap().r_h.is_zero(&pol()).unwrap());

    let compensated = ContactPair::parse(&lb, &["0", "1", "0"], &[((0, 2), "1")]).unwrap();
    let c = check_pair(&compensated, &pol()).unwrap();
    assert!(c.nondeg_on_h && c.omega_nondegenerate && c.equivalence_holds());

    let vanishing = ContactPair::parse(&lb, &["x", "0", "0"], &[]).unwrap();
    assert!(matches!(check_pair(&vanishing, &pol()), Err(ContactError::InvalidPair(_))));
}

#[test]
fn nondegeneracy_criteria_agree_on_random_cases() {
    let mut rng = random::rng(22);
    for k in [2usize, 3] {
        let lb = LineBundle::new(&darboux_base(k), Branch::Full).unwrap();
        let std = standard_pair(k, Branch::Full).unwrap();
        for i in 0..5 {
            let theta = std.theta.add(&random::form(&mut rng, lb.base(), 1, 1, 2).scale(&q(1).into())).unwrap();
            // keep the du coefficient equal to one so θ never vanishes
            let mut c = theta.one_form_coeffs();
            c[k - 1] = Expr::one();
            let theta = KForm::one_form(lb.base(), c).unwrap();
            let ups = random::form(&mut rng, lb.base(), 2, 2, 3);
            let pos = ContactPair::new(&lb, theta.clone(), ups).unwrap();
            let cp = check_pair(&pos, &pol()).unwrap();
            assert!(cp.omega_nondegenerate && cp.nondeg_on_h, "k = {k}, case {i}");
            assert!(cp.equivalence_holds() && cp.curvature_consistent);

            // υ = −dθ + θ∧β kills υ|_H − R_H
            let beta = random::form(&mut rng, lb.base(), 1, 1, 2);
            let neg_ups = theta.d().unwrap().neg().add(&theta.wedge(&beta).unwrap()).unwrap();
            let neg = ContactPair::new(&lb, theta, neg_ups).unwrap();
            let cn = check_pair(&neg, &pol()).unwrap();
            assert!(!cn.omega_nondegenerate && !cn.nondeg_on_h, "k = {k}, case {i}");
            assert!(cn.equivalence_holds());
        }
    }
}

#[test]
fn curvature_is_connection_independent_on_h() {
    let mut rng = random::rng(23);
    let lb = r3(Branch::Full);
    for _ in 0..5 {
        let mut c = random::form(&mut rng, lb.base(), 1, 2, 3).one_form_coeffs();
        c[1] = Expr::one();
        let pair = ContactPair::new(&lb, KForm::one_form(lb.base(), c).unwrap(), KForm::zero(lb.base(), 2)).unwrap();
        let dc = h_basis(&pair, &pol()).unwrap();
        let beta = random::form(&mut rng, lb.base(), 1, 2, 3);
        assert!(twisted_curvature(&pair, &beta, &dc).unwrap().equals(&dc.r_h, &pol()).unwrap());
    }
}

#[test]
fn omega_expansion_on_promoted_derivations() {
    // ω̃(Δ, Δ') = μ[Δθ(X') − Δ'θ(X) − θ([X, X']) + υ(X, X')]
    let mut rng = random::rng(24);
    let lb = r3(Branch::Full);
    let base = lb.base().clone();
    for _ in 0..4 {
        let pair = ContactPair::new(&lb, random::form(&mut rng, &base, 1, 2, 3), random::form(&mut rng, &base, 2, 2, 3)).unwrap();
        let w = pair_to_omega(&pair).unwrap();
        let x = random::vector_field(&mut rng, &base, 2, 2);
        let y = random::vector_field(&mut rng, &base, 2, 2);
        let f = random::polynomial(&mut rng, base.coords(), 2, 2);
        let g = random::polynomial(&mut rng, base.coords(), 2, 2);
        let d1 = lb.promote_derivation(&x, &f).unwrap();
        let d2 = lb.promote_derivation(&y, &g).unwrap();
        let act = |v: &VectorField, h: &Expr, s: &Expr| v.apply(s).unwrap() + h * s;
        let tx = pair.theta.eval(std::slice::from_ref(&x)).unwrap();
        let ty = pair.theta.eval(std::slice::from_ref(&y)).unwrap();
        let rhs = act(&x, &f, &ty) - act(&y, &g, &tx) - pair.theta.eval(&[x.bracket(&y).unwrap()]).unwrap()
            + pair.upsilon.eval(&[x.clone(), y.clone()]).unwrap();
        let lhs = w.eval(&[d1, d2]).unwrap();
        assert!(pol().is_zero(&(lhs - lb.mu() * rhs)).unwrap());
    }
}

#[test]
fn symplectic_frames() {
    let pair = standard_pair(2, Branch::Full).unwrap();
    let lb = &pair.lb;
    let w = pair_to_omega(&pair).unwrap();
    let sigma = sp_frame_from_omega(lb, &w, &pol()).unwrap();
    assert!(frame_to_omega(&sigma, &pol()).unwrap().equals(&w, &pol()).unwrap());
    let dar = Frame::of_chart(lb, &darboux_chart(lb), &pol()).unwrap();
    assert!(crate::homframe::frames_g_equivalent(&sigma, &dar, GroupId::Sp(2), &pol()).unwrap());
    assert_eq!(crate::homframe::transition(&sigma, &pol()).unwrap().degree, Some(crate::groups::DegreeHom::contact(2)));
    // the Darboux frame reproduces dχ¹∧dχ³ + dχ²∧dχ⁴ = ω̃
    assert!(frame_to_omega(&dar, &pol()).unwrap().equals(&w, &pol()).unwrap());

    // k = 1: ω̃ = −du∧dμ; the frame pairs to μ before rescaling
    let lb1 = LineBundle::new(&darboux_base(1), Branch::Full).unwrap();
    let w1 = form2(&lb1, &[((0, 1), "-1")]);
    let s1 = sp_frame_from_omega(&lb1, &w1, &pol()).unwrap();
    let e = s1.field(0);
    let y = s1.field(1);
    assert!(pol().is_zero(&(w1.eval(&[e.clone(), y.scale(&lb1.mu())]).unwrap() - lb1.mu())).unwrap());
    assert!(frame_to_omega(&s1, &pol()).unwrap().equals(&w1, &pol()).unwrap());

    // Sp-translates give the same ω̃
    let mut rng = random::rng(25);
    let g = GroupId::Sp(2).random_element(&mut rng);
    let moved = sigma.compose(&g.to_expr(), &pol()).unwrap();
    assert!(frame_to_omega(&moved, &pol()).unwrap().equals(&w, &pol()).unwrap());

    // a frame of the wrong degree is refused
    let coord: Vec<VectorField> = (0..4).map(|i| VectorField::coord(lb.total(), i)).collect();
    let plain = Frame::new(lb, &coord[..3].iter().cloned().chain([lb.euler()]).collect::<Vec<_>>(), &pol()).unwrap();
    assert!(matches!(frame_to_omega(&plain, &pol()), Err(ContactError::WrongDegree(_))));
}

#[test]
fn random_symplectizations_have_symplectic_frames() {
    let mut rng = random::rng(26);
    let lb = r3(Branch::Full);
    let std = standard_pair(2, Branch::Full).unwrap();
    for _ in 0..3 {
        let mut c = std.theta.add(&random::form(&mut rng, lb.base(), 1, 2, 2)).unwrap().one_form_coeffs();
        c[1] = Expr::one();
        let pair = ContactPair::new(&lb, KForm::one_form(lb.base(), c).unwrap(), KForm::zero(lb.base(), 2)).unwrap();
        assert!(check_pair(&pair, &pol()).unwrap().omega_nondegenerate);
        let w = pair_to_omega(&pair).unwrap();
        let sigma = sp_frame_from_omega(&lb, &w, &pol()).unwrap();
        assert!(frame_to_omega(&sigma, &pol()).unwrap().equals(&w, &pol()).unwrap());
    }
}

#[test]
fn integrability_reports() {
    let pair = standard_pair(2, Branch::Full).unwrap();
    let r = integrability_report(&pair, None, &pol()).unwrap();
    assert_eq!((r.homogeneous_integrable, r.integrable, r.contact), (Some(true), true, true));
    assert!(!r.falsification());

    let lb = r3(Branch::Full);
    let fol = ContactPair::parse(&lb, &["0", "1", "0"], &[]).unwrap();
    let r = integrability_report(&fol, None, &pol()).unwrap();
    assert_eq!((r.homogeneous_integrable, r.integrable, r.contact), (Some(false), false, false));

    let twisted = ContactPair::parse(&lb, &["-p", "1", "0"], &[((0, 2), "1")]).unwrap();
    assert!(check_pair(&twisted, &pol()).unwrap().omega_nondegenerate);
    let r = integrability_report(&twisted, None, &pol()).unwrap();
    assert!(!r.integrable && !r.contact && r.homogeneous_integrable == Some(false));

    // a second Darboux chart u' = u − xp, x' = −p, p' = x of the same form
    let other = exprs(&lb, &["u - x*p", "-p", "-mu", "mu*x"]);
    let r = integrability_report(&pair, Some(&other), &pol()).unwrap();
    assert_eq!(r.homogeneous_integrable, Some(true));
}

fn exprs(lb: &LineBundle, xs: &[&str]) -> Vec<Expr> {
    xs.iter().map(|s| lb.total().parse(s).unwrap()).collect()
}

#[test]
fn darboux_charts() {
    for k in 1..=3 {
        let (pair, chi, check) = darboux_homogeneous_chart(k, &pol()).unwrap();
        assert!(check.passed(), "k = {k}: {check:?}");
        assert_eq!(chi.len(), 2 * k);
        assert_eq!(pair.lb.n(), 2 * k - 1);
    }
    let (pair, chi, _) = darboux_homogeneous_chart(1, &pol()).unwrap();
    assert_eq!(chi, exprs(&pair.lb, &["u", "-mu"]));
    let (pair, chi, _) = darboux_homogeneous_chart(2, &pol()).unwrap();
    assert_eq!(chi, exprs(&pair.lb, &["u", "x", "-mu", "mu*p"]));
    // a chart with b ≠ 0 fails the check
    let w = pair_to_omega(&pair).unwrap();
    let shifted = exprs(&pair.lb, &["u + log(abs(mu))", "x", "-mu", "mu*p"]);
    assert!(!verify_darboux_chart(&pair.lb, &w, &shifted, &pol()).unwrap().passed());
}
