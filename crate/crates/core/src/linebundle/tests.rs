use super::*;
use crate::exprcore::{qr, ZeroTestPolicy};
use crate::random;

fn pol() -> ZeroTestPolicy {
    ZeroTestPolicy::default()
}

fn r3() -> LineBundle {
    LineBundle::new(&Chart::real("R3", &["x", "u", "p"]), Branch::Full).unwrap()
}

fn form(c: &Arc<Chart>, k: usize, items: &[(&[&str], &str)]) -> KForm {
    let terms = items
        .iter()
        .map(|(ix, coef)| (ix.iter().map(|n| c.index_of(n).unwrap()).collect(), c.parse(coef).unwrap()))
        .collect();
    KForm::from_terms(c, k, terms).unwrap()
}

fn theta_std(lb: &LineBundle) -> KForm {
    form(lb.total(), 1, &[(&["u"], "mu"), (&["x"], "-p*mu")])
}

#[test]
fn action_law_and_projection() {
    let lb = r3();
    assert!(lb.check_action_law(&pol()).unwrap());
    let p = lb.bundle_projection();
    assert_eq!(p.comps().len(), 3);
    assert_eq!(lb.total().dim(), 4);
    assert_eq!(lb.mu_symbol().assumption(), Assumption::NonZero);
    let pos = LineBundle::new(lb.base(), Branch::Positive).unwrap();
    assert_eq!(pos.mu_symbol().assumption(), Assumption::Positive);
}

#[test]
fn homogeneity_examples() {
    let lb = r3();
    let id = ScalarDegree::identity();
    assert!(lb.is_homogeneous(&AtiyahObject::Function(lb.mu()), &id, &pol()).unwrap());
    let omega = theta_std(&lb).d().unwrap();
    assert!(lb.is_homogeneous(&AtiyahObject::Form(omega), &id, &pol()).unwrap());
    let mu2 = lb.mu().powi(2);
    assert!(!lb.is_homogeneous(&AtiyahObject::Function(mu2.clone()), &id, &pol()).unwrap());
    assert!(lb.is_homogeneous(&AtiyahObject::Function(mu2), &ScalarDegree::new(qr(2, 1), false), &pol()).unwrap());
    // |μ| passes for r > 0 only with the even parity; r = −1 separates the two
    let absmu = AtiyahObject::Function(lb.mu().abs());
    assert!(lb.is_homogeneous(&absmu, &ScalarDegree::density(), &pol()).unwrap());
    assert!(!lb.is_homogeneous(&absmu, &id, &pol()).unwrap());
    let pos = LineBundle::new(lb.base(), Branch::Positive).unwrap();
    assert!(pos.is_homogeneous(&AtiyahObject::Function(pos.mu().abs()), &id, &pol()).unwrap());
    // degree-0 fields
    assert!(lb.is_homogeneous(&AtiyahObject::Field(lb.euler()), &ScalarDegree::trivial(), &pol()).unwrap());
    let dmu = VectorField::coord(lb.total(), 3);
    assert!(!lb.is_homogeneous(&AtiyahObject::Field(dmu.clone()), &ScalarDegree::trivial(), &pol()).unwrap());
    // (h_r)_*∂μ = r∂μ, so the pullback (h_r^{-1})_*∂μ is r^{-1}∂μ
    assert!(lb.is_homogeneous(&AtiyahObject::Field(dmu), &ScalarDegree::new(qr(-1, 1), true), &pol()).unwrap());
}

#[test]
fn density_metric_is_homogeneous() {
    // |μ|(θ0⊗θ0 + dx²) with θ0 = dμ/μ − x dx on ℝ × ℝ^×
    let base = Chart::real("R", &["x"]);
    let lb = LineBundle::new(&base, Branch::Full).unwrap();
    let c = lb.total();
    let theta0 = form(c, 1, &[(&["mu"], "1/mu"), (&["x"], "-x")]);
    let dx = KForm::dx(c, 0);
    let g = SymTensor2::sym_product(&theta0, &theta0).unwrap().add(&SymTensor2::sym_product(&dx, &dx).unwrap()).unwrap();
    let gt = g.scale(&lb.mu().abs());
    assert!(lb.is_homogeneous(&AtiyahObject::Sym(gt.clone()), &ScalarDegree::density(), &pol()).unwrap());
    assert!(!lb.is_homogeneous(&AtiyahObject::Sym(gt), &ScalarDegree::identity(), &pol()).unwrap());
}

#[test]
fn degree_arithmetic() {
    let lb = r3();
    let a = ScalarDegree::identity();
    let b = ScalarDegree::new(qr(1, 2), false);
    let f1 = lb.mu() * lb.base().parse("x").unwrap();
    let f2 = lb.mu().abs().sqrt();
    assert!(lb.is_homogeneous(&AtiyahObject::Function(f1.clone()), &a, &pol()).unwrap());
    assert!(lb.is_homogeneous(&AtiyahObject::Function(f2.clone()), &b, &pol()).unwrap());
    let ab = a.times(&b);
    assert_eq!(ab, ScalarDegree::new(qr(3, 2), true));
    assert!(lb.is_homogeneous(&AtiyahObject::Function(f1 * f2), &ab, &pol()).unwrap());
    assert_eq!(ScalarDegree::identity().times(&ScalarDegree::identity()), ScalarDegree::new(qr(2, 1), false));
}

#[test]
fn section_promotion() {
    let lb = r3();
    assert_eq!(lb.promote_section(&Expr::one()), lb.mu());
    let x = lb.base().parse("x").unwrap();
    assert_eq!(lb.promote_section(&x), lb.total().parse("x*mu").unwrap());
    let mut rng = random::rng(1);
    for _ in 0..20 {
        let s = random::polynomial(&mut rng, lb.base().coords(), 3, 4);
        let back = lb.descend_section(&lb.promote_section(&s), &pol()).unwrap();
        assert!(pol().is_zero(&(back - &s)).unwrap());
    }
    assert!(matches!(lb.descend_section(&lb.mu().powi(2), &pol()), Err(LineBundleError::NotFibreLinear(_))));
}

#[test]
fn derivation_promotion() {
    let lb = r3();
    let zero = VectorField::zero(lb.base());
    assert_eq!(lb.promote_derivation(&zero, &Expr::one()).unwrap(), lb.euler());
    let dx = VectorField::coord(lb.base(), 0);
    assert_eq!(lb.promote_derivation(&dx, &Expr::zero()).unwrap(), VectorField::coord(lb.total(), 0));

    let x = lb.base().parse("x").unwrap();
    let xdx = dx.scale(&x);
    let up = lb.promote_derivation(&xdx, &x).unwrap();
    let t = lb.total();
    let expected = VectorField::new(t, vec![t.parse("x").unwrap(), Expr::zero(), Expr::zero(), t.parse("x*mu").unwrap()]).unwrap();
    assert!(up.equals(&expected, &pol()).unwrap());
    let mut rng = random::rng(2);
    for _ in 0..10 {
        let s = random::polynomial(&mut rng, lb.base().coords(), 3, 4);
        let lhs = up.apply(&lb.promote_section(&s)).unwrap();
        let rhs = lb.mu() * (xdx.apply(&s).unwrap() + &x * &s);
        assert!(pol().is_zero(&(lhs - rhs)).unwrap());
    }
    let (back, f) = lb.descend_derivation(&up, &pol()).unwrap();
    assert!(back.equals(&xdx, &pol()).unwrap());
    assert!(pol().is_zero(&(f - x)).unwrap());
}

/// (Δ₁Δ₂ − Δ₂Δ₁)(s) computed downstairs, with Δ(s) = X(s) + f s.
fn commutator_on_section(x: &VectorField, f: &Expr, y: &VectorField, g: &Expr, s: &Expr) -> Expr {
    let d = |v: &VectorField, h: &Expr, t: &Expr| v.apply(t).unwrap() + h * t;
    d(x, f, &d(y, g, s)) - d(y, g, &d(x, f, s))
}

#[test]
fn derivation_promotion_preserves_brackets() {
    let lb = r3();
    let mut rng = random::rng(3);
    let vars = lb.base().coords().to_vec();
    for _ in 0..10 {
        let x = random::vector_field(&mut rng, lb.base(), 2, 2);
        let y = random::vector_field(&mut rng, lb.base(), 2, 2);
        let f = random::polynomial(&mut rng, &vars, 2, 2);
        let g = random::polynomial(&mut rng, &vars, 2, 2);
        let br = lb.promote_derivation(&x, &f).unwrap().bracket(&lb.promote_derivation(&y, &g).unwrap()).unwrap();
        let s = random::polynomial(&mut rng, &vars, 3, 3);
        let lhs = br.apply(&lb.promote_section(&s)).unwrap();
        let rhs = lb.promote_section(&commutator_on_section(&x, &f, &y, &g, &s));
        assert!(lb.policy(&pol()).is_zero(&(lhs - rhs)).unwrap());
    }
}

#[test]
fn form_descent_examples() {
    let lb = r3();
    let theta = lb.descend_form(&theta_std(&lb), &pol()).unwrap();
    assert!(theta.equals(&form(lb.base(), 1, &[(&["u"], "1"), (&["x"], "-p")]), &pol()).unwrap());
    let w = form(lb.total(), 2, &[(&["x", "u"], "mu")]);
    assert_eq!(lb.descend_form(&w, &pol()).unwrap(), form(lb.base(), 2, &[(&["x", "u"], "1")]));
    let bad = form(lb.total(), 2, &[(&["mu", "x"], "1")]);
    assert!(matches!(lb.descend_form(&bad, &pol()), Err(LineBundleError::NotBasic(_))));
}

fn random_degree_one(lb: &LineBundle, rng: &mut rand_chacha::ChaCha8Rng, k: usize) -> KForm {
    let a = random::form(rng, lb.base(), k, 2, 2);
    let b = if k == 0 { KForm::zero(lb.base(), 0) } else { random::form(rng, lb.base(), k - 1, 2, 2) };
    if k == 0 {
        return KForm::scalar(lb.total(), lb.mu() * a.coeff(&[]));
    }
    lb.promote_atiyah_form(&a, &b).unwrap()
}

#[test]
fn atiyah_forms_round_trip() {
    let lb = r3();
    let mut rng = random::rng(7);
    for k in 1..=3 {
        for _ in 0..5 {
            let a = random::form(&mut rng, lb.base(), k, 2, 2);
            let b = random::form(&mut rng, lb.base(), k - 1, 2, 2);
            let w = lb.promote_atiyah_form(&a, &b).unwrap();
            assert!(lb.is_homogeneous(&AtiyahObject::Form(w.clone()), &ScalarDegree::identity(), &pol()).unwrap());
            let (a2, b2) = lb.descend_atiyah_form(&w, &pol()).unwrap();
            assert!(a2.equals(&a, &pol()).unwrap() && b2.equals(&b, &pol()).unwrap());
        }
    }
}

#[test]
fn homotopy_formula_on_degree_one_forms() {
    let lb = r3();
    let mut rng = random::rng(9);
    let mut count = 0;
    for k in 1..=3 {
        for _ in 0..7 {
            let w = random_degree_one(&lb, &mut rng, k);
            let di = lb.d_d(&lb.i_identity(&w, &pol()).unwrap(), &pol()).unwrap();
            let id = lb.i_identity(&lb.d_d(&w, &pol()).unwrap(), &pol()).unwrap();
            assert!(di.add(&id).unwrap().equals(&w, &pol()).unwrap());
            assert!(lb.d_d(&lb.d_d(&w, &pol()).unwrap(), &pol()).unwrap().is_zero(&pol()).unwrap());
            count += 1;
        }
    }
    assert!(count >= 20);
    // i_ℰ of the promoted θ vanishes after one more contraction
    let th = theta_std(&lb);
    let once = lb.i_identity(&th, &pol()).unwrap();
    assert!(once.interior(&lb.euler()).unwrap().is_zero(&pol()).unwrap());
    assert!(pol().is_zero(&(once.coeff(&[]))).unwrap());
}

#[test]
fn closed_degree_one_forms_are_exact() {
    let lb = r3();
    let mut rng = random::rng(10);
    for k in 1..=2 {
        for _ in 0..6 {
            let closed = random_degree_one(&lb, &mut rng, k).d().unwrap();
            let primitive = closed.interior(&lb.euler()).unwrap();
            assert!(primitive.d().unwrap().equals(&closed, &pol()).unwrap());
        }
    }
}

#[test]
fn degree_violation_is_reported() {
    let lb = r3();
    let w = form(lb.total(), 1, &[(&["x"], "mu^2")]);
    assert!(matches!(lb.d_d(&w, &pol()), Err(LineBundleError::Degree(_))));
    assert!(matches!(lb.i_identity(&w, &pol()), Err(LineBundleError::Degree(_))));
}
