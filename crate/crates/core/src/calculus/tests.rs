use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::exprcore::{q, qr, Constraint, Expr, ExprMatrix, Symbol, ZeroTestPolicy};
use crate::random;

fn pol() -> ZeroTestPolicy {
    ZeroTestPolicy::default()
}

fn contact_chart() -> Arc<Chart> {
    Chart::new("total", vec![Symbol::real("x"), Symbol::real("u"), Symbol::real("p"), Symbol::nonzero("mu")]).unwrap()
}

fn form1(c: &Arc<Chart>, items: &[(&str, &str)]) -> KForm {
    let terms =
        items.iter().map(|(dx, coef)| (vec![c.index_of(dx).unwrap()], c.parse(coef).unwrap())).collect();
    KForm::from_terms(c, 1, terms).unwrap()
}

fn form2(c: &Arc<Chart>, items: &[(&str, &str, &str)]) -> KForm {
    let terms = items
        .iter()
        .map(|(a, b, coef)| (vec![c.index_of(a).unwrap(), c.index_of(b).unwrap()], c.parse(coef).unwrap()))
        .collect();
    KForm::from_terms(c, 2, terms).unwrap()
}

fn vf(c: &Arc<Chart>, comps: &[&str]) -> VectorField {
    VectorField::new(c, comps.iter().map(|s| c.parse(s).unwrap()).collect()).unwrap()
}

/// h_r on a chart whose last coordinate is the fibre.
fn action(c: &Arc<Chart>) -> SmoothMap {
    let n = c.dim();
    let r = Expr::var(&Symbol::action());
    let fwd: Vec<Expr> = (0..n).map(|i| if i + 1 == n { &r * c.coord(i) } else { c.coord(i) }).collect();
    let inv: Vec<Expr> = (0..n).map(|i| if i + 1 == n { c.coord(i) / &r } else { c.coord(i) }).collect();
    SmoothMap::new(c, c, fwd).unwrap().with_inverse(inv).unwrap()
}

#[test]
fn exterior_derivative_examples() {
    let c = Chart::real("R3", &["x", "y", "z"]);
    let w = form1(&c, &[("y", "x")]);
    assert_eq!(w.d().unwrap(), form2(&c, &[("x", "y", "1")]));
    assert!(form2(&c, &[("x", "y", "1")]).d().unwrap().terms().is_empty());

    let t = contact_chart();
    let theta = form1(&t, &[("u", "mu"), ("x", "-p*mu")]);
    let expected = form2(&t, &[("u", "mu", "-1"), ("x", "mu", "p"), ("x", "p", "mu")]);
    assert!(theta.d().unwrap().equals(&expected, &pol()).unwrap());
}

#[test]
fn wedge_examples() {
    let c = Chart::real("R3", &["x", "y", "z"]);
    let dx = KForm::dx(&c, 0);
    let dy = KForm::dx(&c, 1);
    let dz = KForm::dx(&c, 2);
    assert!(dx.wedge(&dx).unwrap().terms().is_empty());
    let dxdy = dx.wedge(&dy).unwrap();
    let v = dxdy.eval(&[VectorField::coord(&c, 0), VectorField::coord(&c, 1)]).unwrap();
    assert_eq!(v, Expr::one());
    let top = dz.wedge(&dxdy).unwrap();
    assert_eq!(top.coeff(&[0, 1, 2]), Expr::one());
    // the convention pins (a∧b)(X,Y) = a(X)b(Y) − a(Y)b(X)
    assert_eq!(dxdy.eval(&[VectorField::coord(&c, 1), VectorField::coord(&c, 0)]).unwrap(), Expr::int(-1));
}

#[test]
fn chart_mismatch_is_reported() {
    let a = Chart::real("A", &["x"]);
    let b = Chart::real("B", &["y"]);
    assert!(matches!(KForm::dx(&a, 0).wedge(&KForm::dx(&b, 0)), Err(CalcError::ChartMismatch(..))));
}

/// X(Y f) − Y(X f) on a generic polynomial, the oracle for brackets.
fn commutator_on(x: &VectorField, y: &VectorField, f: &Expr) -> Expr {
    x.apply(&y.apply(f).unwrap()).unwrap() - y.apply(&x.apply(f).unwrap()).unwrap()
}

#[test]
fn bracket_examples() {
    let c = Chart::new("R2", vec![Symbol::real("x"), Symbol::real("y")]).unwrap();
    let f = c.parse("x^3*y + 2*x*y^2 - y^3 + x").unwrap();
    let x_dy = vf(&c, &["0", "x"]);
    let dx = vf(&c, &["1", "0"]);
    let got = x_dy.bracket(&dx).unwrap();
    assert!(got.equals(&vf(&c, &["0", "-1"]), &pol()).unwrap());
    assert!(pol().is_zero(&(got.apply(&f).unwrap() - commutator_on(&x_dy, &dx, &f))).unwrap());
    assert!(dx.bracket(&vf(&c, &["0", "1"])).unwrap().is_zero(&pol()).unwrap());

    let t = Chart::new("L", vec![Symbol::real("x"), Symbol::nonzero("mu")]).unwrap();
    let euler = vf(&t, &["0", "mu"]);
    let mdx = vf(&t, &["mu", "0"]);
    let b = euler.bracket(&mdx).unwrap();
    assert!(b.equals(&mdx, &pol()).unwrap());
    let g = t.parse("x^2*mu + mu^3").unwrap();
    assert!(pol().is_zero(&(b.apply(&g).unwrap() - commutator_on(&euler, &mdx, &g))).unwrap());
}

#[test]
fn interior_pullback_pushforward_examples() {
    let c = Chart::real("R2", &["x", "u"]);
    let w = form2(&c, &[("x", "u", "1")]);
    assert_eq!(w.interior(&VectorField::coord(&c, 0)).unwrap(), KForm::dx(&c, 1));

    let t = Chart::new("L", vec![Symbol::real("x"), Symbol::nonzero("mu")]).unwrap();
    let h = action(&t);
    let dmu = KForm::dx(&t, 1);
    let r = Expr::var(&Symbol::action());
    assert!(h.pullback(&dmu).unwrap().equals(&dmu.scale(&r), &pol()).unwrap());

    let euler = vf(&t, &["0", "mu"]);
    let pushed = h.pushforward(&euler).unwrap();
    assert!(pushed.equals(&euler, &pol()).unwrap());
    // oracle: (F_*X)(f) = X(f∘F)∘F^{-1}
    let f = t.parse("x*mu^2 + mu").unwrap();
    let lhs = pushed.apply(&f).unwrap();
    let inv_map: std::collections::HashMap<Symbol, Expr> =
        t.coords().iter().cloned().zip(h.inverse().unwrap().iter().cloned()).collect();
    let rhs = euler.apply(&h.pull_fn(&f)).unwrap().subst(&inv_map);
    assert!(pol().is_zero(&(lhs - rhs)).unwrap());

    let no_inv = SmoothMap::new(&t, &t, h.comps().to_vec()).unwrap();
    assert_eq!(no_inv.pushforward(&euler), Err(CalcError::MissingInverse));
}

#[test]
fn flat_metric_has_no_curvature() {
    let c = Chart::real("R2", &["x", "y"]);
    let m = Metric::new(SymTensor2::euclidean(&c), &pol()).unwrap();
    assert!(m.christoffel().all().iter().all(|e| e.is_zero_literal()));
    assert!(m.riemann().unwrap().all().iter().all(|e| e.is_zero_literal()));
}

fn sphere2_chart() -> Arc<Chart> {
    Chart::with_constraints(
        "S2",
        vec![Symbol::real("th"), Symbol::real("ph")],
        vec![Constraint::gt("th", qr(1, 10)), Constraint::lt("th", q(3))],
    )
    .unwrap()
}

/// Brioschi formula for an orthogonal metric E du² + G dv², as an oracle.
/// `w` is √(EG), passed in so the caller can fix its sign.
fn gauss_curvature_orthogonal(c: &Arc<Chart>, e: &Expr, g: &Expr, w: &Expr) -> Expr {
    let (u, v) = (c.symbol(0), c.symbol(1));
    let a = (g.diff(u).unwrap() / w).diff(u).unwrap();
    let b = (e.diff(v).unwrap() / w).diff(v).unwrap();
    -(a + b) / (Expr::int(2) * w)
}

#[test]
fn sphere_of_radius_two_has_curvature_quarter() {
    let c = sphere2_chart();
    let e = Expr::int(4);
    let g = c.parse("4*sin(th)^2").unwrap();
    let metric = SymTensor2::new(&c, ExprMatrix::diagonal(&[e.clone(), g.clone()])).unwrap();
    let m = Metric::new(metric, &pol()).unwrap();
    let r = m.riemann().unwrap();
    let k = m.sectional(&r, &VectorField::coord(&c, 0), &VectorField::coord(&c, 1)).unwrap();
    assert!(c.policy(&pol()).is_zero(&(&k - Expr::rational(1, 4))).unwrap());
    assert!(c.policy(&pol()).is_zero(&(&k - gauss_curvature_orthogonal(&c, &e, &g, &c.parse("4*sin(th)").unwrap()))).unwrap());
}

#[test]
fn cone_over_round_sphere_is_flat() {
    let c = Chart::with_constraints(
        "cone",
        vec![Symbol::positive("R"), Symbol::real("th"), Symbol::real("ph")],
        vec![Constraint::gt("th", qr(1, 10)), Constraint::lt("th", q(3))],
    )
    .unwrap();
    let g = ExprMatrix::diagonal(&[Expr::one(), c.parse("R^2").unwrap(), c.parse("R^2*sin(th)^2").unwrap()]);
    let m = Metric::new(SymTensor2::new(&c, g).unwrap(), &pol()).unwrap();
    let r = m.riemann().unwrap();
    assert!(c.policy(&pol()).all_zero(r.all()).unwrap());
}

#[test]
fn sharp_and_flat() {
    let c = Chart::real("R2", &["x", "y"]);
    let e = Metric::new(SymTensor2::euclidean(&c), &pol()).unwrap();
    assert_eq!(e.sharp(&KForm::dx(&c, 0)).unwrap(), VectorField::coord(&c, 0));
    let four = Metric::new(SymTensor2::euclidean(&c).scale(&Expr::int(4)), &pol()).unwrap();
    assert!(four
        .sharp(&KForm::dx(&c, 0))
        .unwrap()
        .equals(&VectorField::coord(&c, 0).scale(&Expr::rational(1, 4)), &pol())
        .unwrap());
    let mut rng = random::rng(3);
    let g = Metric::new(random::metric(&mut rng, &c, 1), &pol()).unwrap();
    for _ in 0..5 {
        let a = random::form(&mut rng, &c, 1, 2, 3);
        assert!(g.flat(&g.sharp(&a).unwrap()).unwrap().equals(&a, &pol()).unwrap());
        let y = random::vector_field(&mut rng, &c, 1, 2);
        let lhs = g.inner(&g.sharp(&a).unwrap(), &y).unwrap();
        assert!(pol().is_zero(&(lhs - a.eval(&[y]).unwrap())).unwrap());
    }
}

#[test]
fn degenerate_metric_is_rejected() {
    let c = Chart::real("R2", &["x", "y"]);
    let a = c.parse("x").unwrap();
    let m = ExprMatrix::from_rows(vec![vec![a.clone(), a.clone()], vec![a.clone(), a]]).unwrap();
    assert!(matches!(Metric::new(SymTensor2::new(&c, m).unwrap(), &pol()), Err(CalcError::Degenerate)));
}

#[test]
fn d_squared_vanishes_on_random_forms() {
    let c = Chart::real("R4", &["a", "b", "c", "e"]);
    let mut rng = random::rng(11);
    for k in 0..=3 {
        for _ in 0..50 {
            let w = random::form(&mut rng, &c, k, 3, 3);
            let dd = w.d().unwrap().d().unwrap();
            assert!(dd.is_zero(&pol()).unwrap(), "d∘d ≠ 0 on {w}");
        }
    }
}

#[test]
fn first_bianchi_on_random_metrics() {
    let c = Chart::real("R2", &["x", "y"]);
    let mut rng = random::rng(5);
    for _ in 0..3 {
        let m = Metric::new(random::metric(&mut rng, &c, 1), &pol()).unwrap();
        let r = m.riemann().unwrap();
        let n = 2;
        let mut sums = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        // R(X,Y)Z + R(Y,Z)X + R(Z,X)Y with X=∂c, Y=∂d, Z=∂b
                        sums.push(r.get(a, b, cc, d) + r.get(a, cc, d, b) + r.get(a, d, b, cc));
                    }
                }
            }
        }
        assert!(pol().all_zero(&sums).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cartan_formula(seed in any::<u64>(), k in 0usize..3) {
        let c = Chart::real("R3", &["x", "y", "z"]);
        let mut rng = random::rng(seed);
        let w = random::form(&mut rng, &c, k, 2, 3);
        let x = random::vector_field(&mut rng, &c, 2, 2);
        let lhs = w.lie_derivative(&x).unwrap();
        let mut rhs = w.d().unwrap().interior(&x).unwrap();
        // i_X vanishes on functions, so the second term only exists for k ≥ 1
        if k > 0 {
            rhs = rhs.add(&w.interior(&x).unwrap().d().unwrap()).unwrap();
        }
        prop_assert!(lhs.equals(&rhs, &pol()).unwrap());
    }

    #[test]
    fn pullback_commutes_with_d(seed in any::<u64>(), k in 0usize..3) {
        let c = Chart::new("L", vec![Symbol::real("x"), Symbol::real("y"), Symbol::nonzero("mu")]).unwrap();
        let mut rng = random::rng(seed);
        let w = random::form(&mut rng, &c, k, 3, 3);
        let h = action(&c);
        let a = h.pullback(&w.d().unwrap()).unwrap();
        let b = h.pullback(&w).unwrap().d().unwrap();
        prop_assert!(a.equals(&b, &pol()).unwrap());
    }

    #[test]
    fn jacobi_identity(seed in any::<u64>()) {
        let c = Chart::real("R3", &["x", "y", "z"]);
        let mut rng = random::rng(seed);
        let x = random::vector_field(&mut rng, &c, 2, 2);
        let y = random::vector_field(&mut rng, &c, 2, 2);
        let z = random::vector_field(&mut rng, &c, 2, 2);
        let j = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(j.is_zero(&pol()).unwrap());
    }

    #[test]
    fn pushforward_preserves_brackets(seed in any::<u64>()) {
        let c = Chart::new("L", vec![Symbol::real("x"), Symbol::nonzero("mu")]).unwrap();
        let mut rng = random::rng(seed);
        let x = random::vector_field(&mut rng, &c, 2, 2);
        let y = random::vector_field(&mut rng, &c, 2, 2);
        let h = action(&c);
        let lhs = h.pushforward(&x.bracket(&y).unwrap()).unwrap();
        let rhs = h.pushforward(&x).unwrap().bracket(&h.pushforward(&y).unwrap()).unwrap();
        prop_assert!(lhs.equals(&rhs, &pol()).unwrap());
    }
}
