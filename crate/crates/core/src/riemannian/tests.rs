use super::*;
use crate::exprcore::q;
use crate::random;
use rand::Rng;

fn pol() -> ZeroTestPolicy {
    ZeroTestPolicy::default()
}

fn plane(branch: Branch) -> LineBundle {
    LineBundle::new(&Chart::real("R2", &["x", "y"]), branch).unwrap()
}

fn space(branch: Branch) -> LineBundle {
    LineBundle::new(&Chart::real("R3", &["x", "y", "z"]), branch).unwrap()
}

/// g = I + a⊗a, definite for any a; η random.
fn random_triple<R: Rng>(rng: &mut R, lb: &LineBundle) -> MetricTriple {
    let base = lb.base();
    let n = base.dim();
    let a: Vec<Expr> = (0..n).map(|_| random::polynomial(rng, base.coords(), 1, 2)).collect();
    let g = symmetric(base, n, |i, j| {
        let d = if i == j { Expr::one() } else { Expr::zero() };
        d + &a[i] * &a[j]
    })
    .unwrap();
    let eta = KForm::one_form(base, (0..n).map(|_| random::polynomial(rng, base.coords(), 2, 2)).collect()).unwrap();
    MetricTriple::new(lb, g, eta, &pol()).unwrap()
}

fn all_zero(lb: &LineBundle, es: &[Expr]) -> bool {
    lb.base().policy(&pol()).all_zero(es).unwrap()
}

fn delta(i: usize, j: usize) -> Expr {
    if i == j {
        Expr::one()
    } else {
        Expr::zero()
    }
}

#[test]
fn euclidean_connection_by_hand() {
    let lb = plane(Branch::Positive);
    let t = MetricTriple::euclidean(&lb);
    let gm = triple_to_G(&t).unwrap();
    assert!(gm.gram.equals(&ExprMatrix::identity(3), &pol()).unwrap());
    let conn = koszul_connection(&gm, &pol()).unwrap();
    assert_eq!(conn.residuals_vanish(&pol()).unwrap(), (true, true));
    let half = Expr::rational(1, 2);
    let mut expected = vec![Expr::zero(); 27];
    let at = |d: usize, a: usize, b: usize| (d * 3 + a) * 3 + b;
    // ∇_𝕀𝕀 = ½𝕀, ∇_i𝕀 = ∇_𝕀∇_i = ½∇_i, ∇_i∇_j = −½δ_ij𝕀
    expected[at(0, 0, 0)] = half.clone();
    for i in 1..3 {
        expected[at(i, i, 0)] = half.clone();
        expected[at(i, 0, i)] = half.clone();
        expected[at(0, i, i)] = -half.clone();
    }
    let diffs: Vec<Expr> = conn.all().iter().zip(&expected).map(|(a, b)| a - b).collect();
    assert!(all_zero(&lb, &diffs));

    // R^D(∇_i,∇_j)∇_k = ¼(δ_ik ∇_j − δ_jk ∇_i), everything else zero
    let rd = curvature_rd(&conn).unwrap();
    for f in 0..3 {
        for c in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    let want = if f > 0 && c > 0 && a > 0 && b > 0 {
                        Expr::rational(1, 4) * (delta(a, c) * delta(f, b) - delta(b, c) * delta(f, a))
                    } else {
                        Expr::zero()
                    };
                    assert!(all_zero(&lb, &[rd.get(f, c, a, b) - &want]), "R^D {f} {c} {a} {b}");
                }
            }
        }
    }
    assert!(all_zero(&lb, &rd.antisymmetry_residuals()));
}

#[test]
fn euclidean_tensors() {
    let lb = plane(Branch::Positive);
    let t = MetricTriple::euclidean(&lb);
    let abcd = tensors_abcd(&t, &pol()).unwrap();
    assert!(all_zero(&lb, &abcd.a) && all_zero(&lb, &abcd.b) && all_zero(&lb, &abcd.c));
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                for w in 0..2 {
                    let want = delta(x, z) * delta(y, w) - delta(y, z) * delta(x, w);
                    assert!(all_zero(&lb, &[abcd.d_low(x, y, z, w) - &want]));
                }
            }
        }
    }
    assert!(verify_rd_formulas(&t, &pol()).unwrap().agree);
    let r = integrability_report_o(&t, &pol()).unwrap();
    assert!(!r.rd_zero && !r.d_zero && r.a_zero && r.b_zero && !r.gtilde_flat && !r.integrable);
    assert_eq!(r.homogeneous_integrable, Some(false));
    assert!(r.witness.as_deref().unwrap().starts_with('D'));
    assert!(!r.falsification());
}

#[test]
fn dz_on_euclidean_space() {
    let lb = space(Branch::Positive);
    let t = MetricTriple::parse(&lb, &[&["1", "0", "0"], &["1", "0"], &["1"]], &["0", "0", "1"], &pol()).unwrap();
    let abcd = tensors_abcd(&t, &pol()).unwrap();
    // A = identity on ker η, zero on ∂_z
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j && i < 2 { Expr::one() } else { Expr::zero() };
            assert!(all_zero(&lb, &[abcd.a(j, i) - &want]), "A {j} {i}");
        }
    }
    // C(∂x, ∂z) = −∂x ≠ 0 exposes the sign of the 𝕀-term of R^D(∇X,∇Y)∇Z
    let cmp = verify_rd_formulas(&t, &pol()).unwrap();
    assert!(!cmp.agree);
    assert!(cmp.witness.unwrap().starts_with("component (0, "));
    assert!(verify_rd_formulas_with(&t, FormulaSet::Corrected, &pol()).unwrap().agree);
    let r = integrability_report_o(&t, &pol()).unwrap();
    assert!(!r.integrable && !r.rd_zero && !r.abd_zero());
    assert!(r.corrected_agree && !r.formulas_agree && r.falsification());
    assert_eq!(r.homogeneous_integrable, None);
}

#[test]
fn round_sphere_is_flat_upstairs() {
    for n in 1..=2 {
        let lb = sphere_bundle(n).unwrap();
        let g = round_sphere(lb.base()).unwrap().scale(&Expr::int(4));
        let t = MetricTriple::new(&lb, g, KForm::zero(lb.base(), 1), &pol()).unwrap();
        let abcd = tensors_abcd(&t, &pol()).unwrap();
        for arr in [&abcd.a, &abcd.b, &abcd.c, &abcd.d] {
            assert!(all_zero(&lb, arr));
        }
        let rd = rd_of_triple(&t, &pol()).unwrap();
        assert!(all_zero(&lb, rd.all()));
        assert!(verify_rd_formulas(&t, &pol()).unwrap().agree);
        let r = integrability_report_o(&t, &pol()).unwrap();
        assert!(r.integrable && r.rd_zero && r.abd_zero() && r.gtilde_flat);
        assert_eq!(r.homogeneous_integrable, Some(true));
        assert!(!r.falsification());
    }
}

#[test]
fn unit_sphere_is_not_flat() {
    // curvature 1 instead of 1/4
    let lb = sphere_bundle(2).unwrap();
    let t = MetricTriple::new(&lb, round_sphere(lb.base()).unwrap(), KForm::zero(lb.base(), 1), &pol()).unwrap();
    let r = integrability_report_o(&t, &pol()).unwrap();
    assert!(!r.d_zero && !r.rd_zero && !r.gtilde_flat && !r.falsification());
}

#[test]
fn corrected_formulas_match_the_koszul_curvature() {
    let lb = plane(Branch::Positive);
    for seed in 0..5 {
        let mut rng = random::rng(100 + seed);
        let t = random_triple(&mut rng, &lb);
        let cmp = verify_rd_formulas_with(&t, FormulaSet::Corrected, &pol()).unwrap();
        assert!(cmp.agree, "seed {seed}: {:?}", cmp.witness);
    }
}

#[test]
fn printed_formulas_miss_on_random_triples() {
    let lb = plane(Branch::Positive);
    for seed in 0..5 {
        let mut rng = random::rng(100 + seed);
        let t = random_triple(&mut rng, &lb);
        let rd = rd_of_triple(&t, &pol()).unwrap();
        let printed = predicted_rd(&t, &tensors_abcd(&t, &pol()).unwrap(), FormulaSet::Printed);
        let pol = lb.base().policy(&pol());
        // only R^D(∇X,∇Y)∇Z disagrees; the other three formulas hold as printed
        for i in 0..rd.all().len() {
            let (f, c, a, b) = rd.index(i);
            let same = pol.is_zero(&(&rd.all()[i] - &printed.all()[i])).unwrap();
            if c == 0 || a == 0 || b == 0 {
                assert!(same, "seed {seed}: ({f}, {c}, {a}, {b})");
            }
        }
        assert!(!verify_rd_formulas(&t, &pol).unwrap().agree, "seed {seed}");
    }
}

/// G(R(a,b)c, d) + G(c, R(a,b)d) for all basis indices.
fn skewness(gram: &ExprMatrix, rd: &CurvatureRD) -> Vec<Expr> {
    let m = rd.dim();
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut t = Vec::new();
                    for f in 0..m {
                        t.push(rd.get(f, c, a, b) * &gram[(f, d)]);
                        t.push(&gram[(c, f)] * rd.get(f, d, a, b));
                    }
                    out.push(Expr::add_all(t));
                }
            }
        }
    }
    out
}

#[test]
fn curvature_is_g_skew_but_the_printed_formulas_are_not() {
    let lb = space(Branch::Positive);
    let t = MetricTriple::parse(&lb, &[&["1", "0", "0"], &["1", "0"], &["1"]], &["0", "0", "1"], &pol()).unwrap();
    let gram = triple_to_G(&t).unwrap().gram;
    assert!(all_zero(&lb, &skewness(&gram, &rd_of_triple(&t, &pol()).unwrap())));
    let printed = predicted_rd(&t, &tensors_abcd(&t, &pol()).unwrap(), FormulaSet::Printed);
    assert!(!all_zero(&lb, &skewness(&gram, &printed)));
    let fixed = predicted_rd(&t, &tensors_abcd_with(&t, FormulaSet::Corrected, &pol()).unwrap(), FormulaSet::Corrected);
    assert!(all_zero(&lb, &skewness(&gram, &fixed)));
}

#[test]
fn random_triples_are_not_integrable() {
    let lb = plane(Branch::Positive);
    for seed in 0..5 {
        let mut rng = random::rng(200 + seed);
        let t = random_triple(&mut rng, &lb);
        let r = integrability_report_o(&t, &pol()).unwrap();
        assert!(!r.rd_zero && !r.abd_zero() && !r.d_corrected_zero && !r.gtilde_flat, "seed {seed}");
        assert!(r.corrected_agree);
    }
}

/// R̃(ẽ_a, ẽ_b)ẽ_c of g̃ on the lifted basis, in that basis.
fn upstairs_rd(t: &MetricTriple) -> Vec<Expr> {
    let lb = &t.lb;
    let basis = AlgebroidBasis::twisted(lb, &t.eta).unwrap();
    let m = basis.len();
    let lifts: Vec<VectorField> = (0..m).map(|a| basis.lift(a).unwrap()).collect();
    let pol = lb.policy(&pol());
    let metric = Metric::new(triple_to_gtilde(t).unwrap(), &pol).unwrap();
    let riem = metric.riemann().unwrap();
    let frame = ExprMatrix::from_fn(m, m, |i, a| lifts[a].comp(i).clone());
    let inv = frame.inverse(&pol).unwrap();
    let mut out = vec![Expr::zero(); m * m * m * m];
    for c in 0..m {
        for a in 0..m {
            for b in 0..m {
                let v = Metric::riemann_apply(&riem, &lifts[a], &lifts[b], &lifts[c]).unwrap();
                let coeffs = inv.mul_vec(v.comps()).unwrap();
                for (f, e) in coeffs.into_iter().enumerate() {
                    out[((f * m + c) * m + a) * m + b] = e;
                }
            }
        }
    }
    out
}

#[test]
fn koszul_curvature_matches_the_curvature_of_gtilde() {
    let lb = plane(Branch::Positive);
    let mut rng = random::rng(7);
    let mut cases = vec![MetricTriple::euclidean(&lb)];
    cases.push(MetricTriple::parse(&lb, &[&["1", "0"], &["1 + x^2"]], &["y", "x*y"], &pol()).unwrap());
    cases.push(random_triple(&mut rng, &lb));
    for t in cases {
        let rd = rd_of_triple(&t, &pol()).unwrap();
        let up = upstairs_rd(&t);
        let diffs: Vec<Expr> = rd.all().iter().zip(&up).map(|(a, b)| a - b).collect();
        assert!(lb.policy(&pol()).all_zero(&diffs).unwrap());
    }
}

#[test]
fn curvature_is_basis_independent() {
    let lb = plane(Branch::Positive);
    let mut rng = random::rng(9);
    let t = random_triple(&mut rng, &lb);
    let gm = triple_to_G(&t).unwrap();
    let base = lb.base();
    // M = constant GL element plus an x-dependent shear
    let mut mm = GroupId::Gl(3).random_element(&mut rng).to_expr();
    mm[(1, 2)] = &mm[(1, 2)] + &base.coord(0);
    let det_ok = !base.policy(&pol()).is_zero(&mm.det(&base.policy(&pol())).unwrap()).unwrap();
    assert!(det_ok);
    let rotated = gm.rebase(&mm, &pol()).unwrap();
    let conn = koszul_connection(&rotated, &pol()).unwrap();
    assert_eq!(conn.residuals_vanish(&pol()).unwrap(), (true, true));
    let r2 = curvature_rd(&conn).unwrap();
    let r1 = rd_of_triple(&t, &pol()).unwrap();
    let inv = mm.inverse(&base.policy(&pol())).unwrap();
    let m = 3;
    let mut diffs = Vec::new();
    for f in 0..m {
        for c in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let mut s = Vec::new();
                    for f1 in 0..m {
                        for c1 in 0..m {
                            for a1 in 0..m {
                                for b1 in 0..m {
                                    s.push(&inv[(f, f1)] * r1.get(f1, c1, a1, b1) * &mm[(c1, c)] * &mm[(a1, a)] * &mm[(b1, b)]);
                                }
                            }
                        }
                    }
                    diffs.push(r2.get(f, c, a, b) - Expr::add_all(s));
                }
            }
        }
    }
    assert!(all_zero(&lb, &diffs));
}

#[test]
fn random_connections_satisfy_both_conditions() {
    let lb = space(Branch::Full);
    for seed in 0..3 {
        let mut rng = random::rng(300 + seed);
        let t = random_triple(&mut rng, &lb);
        let gm = triple_to_G(&t).unwrap();
        assert!(gm.is_definite(&pol()));
        let conn = koszul_connection(&gm, &pol()).unwrap();
        assert_eq!(conn.residuals_vanish(&pol()).unwrap(), (true, true));
    }
}

#[test]
fn gram_from_gtilde_matches_the_triple() {
    for branch in [Branch::Positive, Branch::Full] {
        let lb = plane(branch);
        let t = MetricTriple::parse(&lb, &[&["2", "x"], &["1 + x^2"]], &["1", "0"], &pol()).unwrap();
        let basis = AlgebroidBasis::twisted(&lb, &t.eta).unwrap();
        let gm = AlgebroidMetric::from_gtilde(basis, &triple_to_gtilde(&t).unwrap(), &pol()).unwrap();
        assert!(gm.gram.equals(&triple_to_G(&t).unwrap().gram, &pol()).unwrap());
        assert!(all_zero(&lb, &[gm.unit() - Expr::one()]));
    }
}

#[test]
fn gtilde_round_trips() {
    for branch in [Branch::Positive, Branch::Full] {
        let lb = plane(branch);
        for seed in 0..5 {
            let mut rng = random::rng(400 + seed);
            let t = random_triple(&mut rng, &lb);
            let gt = triple_to_gtilde(&t).unwrap();
            assert!(lb.is_homogeneous(&AtiyahObject::Sym(gt.clone()), &ScalarDegree::density(), &pol()).unwrap());
            let (back, u) = gtilde_to_triple(&lb, &gt, &pol()).unwrap();
            assert!(all_zero(&lb, &[u - Expr::one()]));
            assert!(back.g.equals(&t.g, &pol()).unwrap());
            assert!(back.eta.equals(&t.eta, &pol()).unwrap());
        }
    }
}

#[test]
fn orthogonal_and_sheared_gtilde() {
    let lb = plane(Branch::Positive);
    let total = lb.total();
    // ℰ ⟂ ∂_x, ∂_y: η = 0
    let gt = SymTensor2::new(total, ExprMatrix::diagonal(&[total.parse("mu").unwrap(), total.parse("mu").unwrap(), total.parse("1/mu").unwrap()])).unwrap();
    let (t, u) = gtilde_to_triple(&lb, &gt, &pol()).unwrap();
    assert!(t.eta.is_zero(&pol()).unwrap());
    assert!(all_zero(&lb, &[u - Expr::one()]));

    // w·g̃ → u = w, η' = η + d log w, g' = g
    let base = lb.base();
    let t0 = MetricTriple::parse(&lb, &[&["1", "0"], &["1"]], &["y", "0"], &pol()).unwrap();
    let w = base.parse("1 + x^2").unwrap();
    let gt = triple_to_gtilde(&t0).unwrap().scale(&w);
    let (t, u) = gtilde_to_triple(&lb, &gt, &pol()).unwrap();
    assert!(all_zero(&lb, &[&u - &w]));
    let expected = KForm::one_form(base, vec![base.parse("y + 2*x/(1 + x^2)").unwrap(), Expr::zero()]).unwrap();
    assert!(t.eta.equals(&expected, &pol()).unwrap());
    assert!(t.g.equals(&t0.g, &pol()).unwrap());

    // a μ-dependent ratio g̃(ℰ,ℰ)/|μ| is rejected
    let bad = SymTensor2::new(total, ExprMatrix::diagonal(&[Expr::one(), Expr::one(), Expr::one()])).unwrap();
    assert!(matches!(gtilde_to_triple(&lb, &bad, &pol()), Err(RiemannianError::Invalid(_))));
}

#[test]
fn orthonormal_frames() {
    let lb = plane(Branch::Full);
    let mut rng = random::rng(13);
    let t = random_triple(&mut rng, &lb);
    let gt = triple_to_gtilde(&t).unwrap();
    let sigma = frame_from_triple(&t, &pol()).unwrap();
    let fs = sigma.fields();
    for a in 0..3 {
        for b in 0..3 {
            let e = gt.eval(&fs[a], &fs[b]).unwrap() - delta(a, b);
            assert!(lb.policy(&pol()).is_zero(&e).unwrap(), "g̃({a},{b})");
        }
    }
    let coset = degree_coset(&sigma, GroupId::O(3), &pol()).unwrap();
    assert_eq!(coset.at_minus_one, Some(QuotientValue::Scalar(q(1))));
    assert!(frame_to_gtilde(&sigma, &pol()).unwrap().equals(&gt, &pol()).unwrap());

    // O-translates give the same metric
    for _ in 0..2 {
        let o = GroupId::O(3).random_element(&mut rng);
        let s2 = sigma.compose(&o.to_expr(), &pol()).unwrap();
        assert!(frame_to_gtilde(&s2, &pol()).unwrap().equals(&gt, &pol()).unwrap());
    }

    // a degree-0 frame is rejected
    let flat = Frame::new(&lb, &[VectorField::coord(lb.total(), 0), VectorField::coord(lb.total(), 1), lb.euler()], &pol()).unwrap();
    assert!(frame_to_gtilde(&flat, &pol()).is_err());
}

#[test]
fn b_controls_c() {
    let lb = plane(Branch::Positive);
    let mut rng = random::rng(21);
    let t = random_triple(&mut rng, &lb);
    let abcd = tensors_abcd(&t, &pol()).unwrap();
    let mut anti = Vec::new();
    for w in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                anti.push(abcd.c(w, i, j) + abcd.c(w, j, i));
            }
        }
    }
    assert!(all_zero(&lb, &anti));
    // η closed and parallel: B = 0 forces C = 0
    let t = MetricTriple::parse(&lb, &[&["1", "0"], &["1"]], &["0", "0"], &pol()).unwrap();
    let abcd = tensors_abcd(&t, &pol()).unwrap();
    assert!(all_zero(&lb, &abcd.b) && all_zero(&lb, &abcd.c));
}

#[test]
fn sphere_charts() {
    for n in 1..=3 {
        let sc = sphere_flat_chart(n, &pol()).unwrap();
        assert!(sc.flat, "n = {n} flat");
        assert!(sc.polar_form, "n = {n} polar");
        assert!(sc.normal_form, "n = {n} normal form");
        assert!(sc.homogeneous, "n = {n} homogeneity");
        assert_eq!(sc.chi.len(), n + 1);
        let (back, u) = gtilde_to_triple(&sc.triple.lb, &sc.gtilde, &pol()).unwrap();
        assert!(all_zero(&sc.triple.lb, &[u - Expr::one()]));
        assert!(back.eta.is_zero(&pol()).unwrap());
        assert!(back.g.equals(&sc.triple.g, &pol()).unwrap());
    }
    assert!(matches!(sphere_flat_chart(4, &pol()), Err(RiemannianError::UnsupportedDimension(4))));
}

#[test]
fn indefinite_metrics_are_rejected() {
    let lb = plane(Branch::Positive);
    let r = MetricTriple::parse(&lb, &[&["1", "0"], &["-1"]], &["0", "0"], &pol());
    assert!(matches!(r, Err(RiemannianError::NotDefinite(_))));
    let r = MetricTriple::parse(&lb, &[&["x^2", "0"], &["1"]], &["0", "0"], &pol());
    assert!(matches!(r, Err(RiemannianError::NotDefinite(_))) || r.is_ok());
}
