//! Check pipelines, one per scenario kind.

use std::time::Instant;

use homogeom::calculus::{KForm, SymTensor2, VectorField};
use homogeom::complex::{frame_to_j, report_for};
use homogeom::contact::{
    check_pair, darboux_chart, integrability_report, omega_to_pair, pair_to_omega, standard_candidate, verify_darboux_chart, ContactPair,
};
use homogeom::cosymplectic::{check_cosymplectic, integrability_report0, omega0_to_pair, pair_to_omega0, CosymplecticPair};
use homogeom::exprcore::{Expr, ExprMatrix, ZeroTestPolicy};
use homogeom::groups::{GroupId, QMatrix, QuotientValue};
use homogeom::homframe::{check_homomorphism, degree_coset, is_homogeneous_chart, transition, Frame};
use homogeom::linebundle::{AtiyahObject, LineBundle, ScalarDegree};
use homogeom::random;
use homogeom::riemannian::{
    gtilde_to_triple, integrability_report_o, koszul_connection, sphere_flat_chart, tensors_abcd, triple_to_G, triple_to_gtilde,
    verify_rd_formulas, verify_rd_formulas_with, Abcd, FormulaSet, MetricTriple,
};

use crate::error::InputError;
use crate::report::{Check, PolicyEcho, Report, Verdict};
use crate::scenario::{Body, PolicySpec, Scenario};

type Res<T> = Result<T, InputError>;

fn inv<E: std::fmt::Display>(e: E) -> InputError {
    InputError::invalid(e)
}

/// Flags and scenario settings over the defaults.
pub fn effective_policy(spec: PolicySpec) -> ZeroTestPolicy {
    let d = ZeroTestPolicy::default();
    ZeroTestPolicy {
        sample_count: spec.samples.unwrap_or(d.sample_count),
        tolerance: spec.tolerance.unwrap_or(d.tolerance),
        seed: spec.seed.unwrap_or(d.seed),
        constraints: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides from the command line; these win over the scenario.
    pub policy: PolicySpec,
    pub timing: bool,
}

pub fn run(sc: &Scenario, opts: &RunOptions) -> Res<Report> {
    let start = Instant::now();
    let pol = effective_policy(opts.policy.over(sc.policy));
    let wants = |c: &str| sc.checks.contains(&c);
    let mut checks = match &sc.body {
        Body::Contact { lb, theta, upsilon, chart } => contact(lb, theta, upsilon, chart.as_deref(), &wants, &pol)?,
        Body::Cosymplectic { lb, big_omega, eta } => cosymplectic(lb, big_omega, eta, &wants, &pol)?,
        Body::Complex { lb, frame } => complex(lb, frame, &wants, &pol)?,
        Body::Riemannian { lb, g, eta } => {
            let m = ExprMatrix::from_fn(g.len(), g.len(), |i, j| g[i][j].clone());
            let t = MetricTriple::new(lb, SymTensor2::new(lb.base(), m).map_err(inv)?, eta.clone(), &pol).map_err(inv)?;
            if sc.checks.len() == 1 && wants("sphere_chart") {
                return Err(InputError::schema("checks", "sphere_chart needs `objects.sphere`"));
            }
            riemannian(&t, &wants, &pol)?
        }
        Body::Sphere { n } => {
            let sphere = sphere_flat_chart(*n, &pol).map_err(inv)?;
            let mut out = riemannian(&sphere.triple, &wants, &pol)?;
            if wants("sphere_chart") {
                let chi: Vec<String> = sphere.chi.iter().map(Expr::to_string).collect();
                out.push(
                    Check::new("sphere_chart")
                        .fact("flat", sphere.flat)
                        .fact("polar_form", sphere.polar_form)
                        .fact("normal_form", sphere.normal_form)
                        .fact("homogeneous_sqrt_r", sphere.homogeneous)
                        .fact("chart", chi.join(", "))
                        .require(sphere.passed()),
                );
            }
            out
        }
        Body::Frame { lb, frame, group } => frame_checks(lb, frame, *group, &wants, &pol)?,
        Body::Group { group, elements, values, random } => group_checks(*group, elements, values, *random, &wants, &pol)?,
    };
    if !sc.expect.is_empty() {
        checks.push(expectations(sc, &checks));
    }
    let verdict = checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass);
    Ok(Report {
        scenario: sc.name.clone(),
        kind: sc.kind,
        verdict,
        description: sc.description.clone(),
        timing_ms: opts.timing.then(|| start.elapsed().as_millis() as u64),
        policy: PolicyEcho::from(&pol),
        input: sc.input.clone(),
        checks,
    })
}

fn expectations(sc: &Scenario, checks: &[Check]) -> Check {
    let mut c = Check::new("expectations");
    let mut misses = Vec::new();
    for (key, want) in &sc.expect {
        let (check, fact) = key.split_once('.').expect("validated on load");
        let got = checks.iter().find(|c| c.name == check).and_then(|c| c.facts.get(fact));
        match got {
            Some(g) if g == want => {}
            Some(g) => misses.push(format!("{key}: expected {want}, got {g}")),
            None => misses.push(format!("{key}: expected {want}, not reported")),
        }
    }
    c = c.fact("count", sc.expect.len()).fact("mismatches", misses.len());
    if !misses.is_empty() {
        c = c.fact("detail", misses.join("; "));
    }
    c.require(misses.is_empty())
}

/// `diag(…)` for diagonal matrices, nested rows otherwise.
pub fn fmt_matrix(m: &ExprMatrix) -> String {
    let n = m.rows();
    let diagonal = m.rows() == m.cols() && (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].is_zero_literal()));
    if diagonal {
        let d: Vec<String> = (0..n).map(|i| m[(i, i)].to_string()).collect();
        format!("diag({})", d.join(", "))
    } else {
        m.to_string()
    }
}

fn fmt_q(m: &QMatrix) -> String {
    fmt_matrix(&m.to_expr())
}

fn contact(
    lb: &LineBundle,
    theta: &KForm,
    upsilon: &KForm,
    chart: Option<&[Expr]>,
    wants: &dyn Fn(&str) -> bool,
    pol: &ZeroTestPolicy,
) -> Res<Vec<Check>> {
    let pair = ContactPair::new(lb, theta.clone(), upsilon.clone()).map_err(inv)?;
    let omega = pair_to_omega(&pair).map_err(inv)?;
    let bpol = lb.base().policy(pol);
    let mut out = Vec::new();
    if wants("homogeneity") {
        let ok = lb.is_homogeneous(&AtiyahObject::Form(omega.clone()), &ScalarDegree::identity(), pol).map_err(inv)?;
        out.push(Check::new("homogeneity").fact("object", "omega").fact("degree", "r").fact("homogeneous", ok).require(ok));
    }
    if wants("round_trip") {
        let back = omega_to_pair(lb, &omega, pol).map_err(inv)?;
        let ok = back.theta.equals(theta, &bpol).map_err(inv)? && back.upsilon.equals(upsilon, &bpol).map_err(inv)?;
        out.push(Check::new("round_trip").fact("pair_recovered", ok).require(ok));
    }
    if wants("nondegeneracy") {
        let c = check_pair(&pair, pol).map_err(inv)?;
        out.push(
            Check::new("nondegeneracy")
                .fact("theta_nowhere_zero", c.theta_nowhere_zero)
                .fact("nondegenerate_on_h", c.nondeg_on_h)
                .fact("omega_nondegenerate", c.omega_nondegenerate)
                .fact("curvature_consistent", c.curvature_consistent)
                .fact("gram_det", c.gram_det.to_string())
                .equivalence(c.equivalence_holds()),
        );
    }
    if wants("integrability") {
        let rep = integrability_report(&pair, chart, pol).map_err(inv)?;
        let mut c = Check::new("integrability")
            .fact("integrable", rep.integrable)
            .fact("contact", rep.contact)
            .fact("homogeneous_integrable", rep.homogeneous_integrable);
        if let Some(note) = &rep.note {
            c = c.fact("note", note.as_str());
        }
        if rep.falsification() {
            c = c.witness(Some(format!("integrable = {}, contact = {}, homogeneous = {:?}", rep.integrable, rep.contact, rep.homogeneous_integrable)));
        }
        out.push(c.equivalence(!rep.falsification()));
    }
    if wants("darboux_chart") {
        let candidate = match chart {
            Some(c) => Some(c.to_vec()),
            None => standard_candidate(&pair, pol).map_err(inv)?,
        };
        let mut c = Check::new("darboux_chart");
        match candidate {
            None => c = c.fact("candidate", false),
            Some(chi) => {
                let v = verify_darboux_chart(lb, &omega, &chi, pol).map_err(inv)?;
                let names: Vec<String> = chi.iter().map(Expr::to_string).collect();
                c = c
                    .fact("candidate", true)
                    .fact("chart", names.join(", "))
                    .fact("standard", chart.is_none() || chi == darboux_chart(lb))
                    .fact("a_is_contact_lift", v.a_is_contact_lift)
                    .fact("b_zero", v.b_zero)
                    .fact("symplectic_frame", v.symplectic)
                    .fact("cocycle", v.cocycle);
                if let Ok(rep) = is_homogeneous_chart(lb, &chi, pol) {
                    let b: Vec<String> = rep.b.iter().map(Expr::to_string).collect();
                    c = c.fact("A", fmt_matrix(&rep.a)).fact("b", format!("({})", b.join(", "))).fact("matches_frame", rep.matches_frame);
                }
                c = c.require(v.passed());
            }
        }
        out.push(c);
    }
    Ok(out)
}

fn cosymplectic(lb: &LineBundle, big_omega: &KForm, eta: &KForm, wants: &dyn Fn(&str) -> bool, pol: &ZeroTestPolicy) -> Res<Vec<Check>> {
    let pair = CosymplecticPair::new(lb, big_omega.clone(), eta.clone()).map_err(inv)?;
    let w = pair_to_omega0(&pair).map_err(inv)?;
    let bpol = lb.base().policy(pol);
    let mut out = Vec::new();
    if wants("homogeneity") {
        let ok = lb.is_homogeneous(&AtiyahObject::Form(w.clone()), &ScalarDegree::trivial(), pol).map_err(inv)?;
        out.push(Check::new("homogeneity").fact("object", "omega").fact("degree", "1").fact("homogeneous", ok).require(ok));
    }
    if wants("round_trip") {
        let back = omega0_to_pair(lb, &w, pol).map_err(inv)?;
        let ok = back.big_omega.equals(big_omega, &bpol).map_err(inv)? && back.eta.equals(eta, &bpol).map_err(inv)?;
        out.push(Check::new("round_trip").fact("pair_recovered", ok).require(ok));
    }
    if wants("dictionary") {
        let k = lb.n().div_ceil(2);
        let c = check_cosymplectic(&pair, k, pol).map_err(inv)?;
        out.push(
            Check::new("dictionary")
                .fact("volume", c.volume)
                .fact("d_Omega_zero", c.d_big_omega_zero)
                .fact("d_eta_zero", c.d_eta_zero)
                .fact("omega_nondegenerate", c.omega_nondegenerate)
                .fact("omega_closed", c.omega_closed)
                .equivalence(c.equivalences_hold()),
        );
    }
    if wants("integrability") {
        let rep = integrability_report0(lb, &w, pol).map_err(inv)?;
        let mut c = Check::new("integrability")
            .fact("integrable", rep.integrable)
            .fact("cocycle", rep.cocycle)
            .fact("homogeneous_integrable", rep.homogeneous_integrable);
        if let Some(chi) = &rep.chart {
            let names: Vec<String> = chi.iter().map(Expr::to_string).collect();
            c = c.fact("chart", names.join(", "));
        }
        if let Some(note) = &rep.note {
            c = c.fact("note", note.as_str());
        }
        if rep.falsification() {
            c = c.witness(Some(format!("integrable = {}, cocycle = {}, homogeneous = {:?}", rep.integrable, rep.cocycle, rep.homogeneous_integrable)));
        }
        out.push(c.equivalence(!rep.falsification()));
    }
    Ok(out)
}

fn fields(lb: &LineBundle, cols: &[Vec<Expr>]) -> Res<Vec<VectorField>> {
    cols.iter().map(|c| VectorField::new(lb.total(), c.clone()).map_err(inv)).collect()
}

fn complex(lb: &LineBundle, cols: &[Vec<Expr>], wants: &dyn Fn(&str) -> bool, pol: &ZeroTestPolicy) -> Res<Vec<Check>> {
    let frame = Frame::new(lb, &fields(lb, cols)?, pol).map_err(inv)?;
    let j = frame_to_j(&frame, pol).map_err(inv)?;
    let mut out = Vec::new();
    if wants("homogeneity") {
        let ok = lb.is_homogeneous(&AtiyahObject::Endo(j.endo().clone()), &ScalarDegree::trivial(), pol).map_err(inv)?;
        out.push(
            Check::new("homogeneity")
                .fact("object", "J")
                .fact("degree", "1")
                .fact("homogeneous", ok)
                .fact("J", j.matrix().to_string())
                .require(ok),
        );
    }
    if wants("torsion") {
        let rep = report_for(&j, pol).map_err(inv)?;
        out.push(
            Check::new("torsion")
                .fact("torsion_zero", rep.torsion_zero)
                .fact("integrable", rep.integrable)
                .fact("constant_in_chart", rep.constant_in_chart)
                .fact("homogeneous_integrable", rep.homogeneous_integrable_by_torsion)
                .fact("note", rep.note)
                .witness(rep.witness.clone())
                .equivalence(!rep.falsification()),
        );
    }
    Ok(out)
}

/// Nonzero components as `X[i][j] = e; …`, or `0`.
fn components(label: &str, es: &[Expr], n: usize, rank: usize) -> String {
    let mut out = Vec::new();
    for (k, e) in es.iter().enumerate() {
        if e.is_zero_literal() {
            continue;
        }
        let mut idx = Vec::with_capacity(rank);
        let mut rest = k;
        for _ in 0..rank {
            idx.push(rest % n);
            rest /= n;
        }
        idx.reverse();
        let s: String = idx.iter().map(|i| format!("[{i}]")).collect();
        out.push(format!("{label}{s} = {e}"));
    }
    if out.is_empty() {
        "0".into()
    } else {
        out.join("; ")
    }
}

fn abcd_facts(c: Check, t: &Abcd) -> Check {
    let n = t.n;
    c.fact("A", components("A", &t.a, n, 2))
        .fact("B", components("B", &t.b, n, 3))
        .fact("C", components("C", &t.c, n, 3))
        .fact("D", components("D", &t.d, n, 4))
}

fn riemannian(t: &MetricTriple, wants: &dyn Fn(&str) -> bool, pol: &ZeroTestPolicy) -> Res<Vec<Check>> {
    let lb = &t.lb;
    let bpol = lb.base().policy(pol);
    let gt = triple_to_gtilde(t).map_err(inv)?;
    let mut out = Vec::new();
    if wants("homogeneity") {
        let ok = lb.is_homogeneous(&AtiyahObject::Sym(gt.clone()), &ScalarDegree::density(), pol).map_err(inv)?;
        out.push(Check::new("homogeneity").fact("object", "gtilde").fact("degree", "|r|").fact("homogeneous", ok).require(ok));
    }
    if wants("round_trip") {
        let (back, u) = gtilde_to_triple(lb, &gt, pol).map_err(inv)?;
        let unit = bpol.is_zero(&(&u - &Expr::one())).map_err(inv)?;
        let same = back.g.equals(&t.g, &bpol).map_err(inv)? && back.eta.equals(&t.eta, &bpol).map_err(inv)?;
        out.push(Check::new("round_trip").fact("scale_is_one", unit).fact("triple_recovered", same).require(unit && same));
    }
    if wants("connection") {
        let g = triple_to_G(t).map_err(inv)?;
        let conn = koszul_connection(&g, pol).map_err(inv)?;
        let (torsion_free, metric) = conn.residuals_vanish(pol).map_err(inv)?;
        out.push(Check::new("connection").fact("torsion_free", torsion_free).fact("metric", metric).require(torsion_free && metric));
    }
    if wants("rd_formulas") {
        let printed = verify_rd_formulas(t, pol).map_err(inv)?;
        let corrected = verify_rd_formulas_with(t, FormulaSet::Corrected, pol).map_err(inv)?;
        out.push(
            Check::new("rd_formulas")
                .fact("printed_agree", printed.agree)
                .fact("corrected_agree", corrected.agree)
                .witness(printed.witness.clone())
                .equivalence(printed.agree),
        );
    }
    if wants("tensors") {
        let abcd = tensors_abcd(t, pol).map_err(inv)?;
        out.push(abcd_facts(Check::new("tensors"), &abcd));
    }
    if wants("integrability") {
        let rep = integrability_report_o(t, pol).map_err(inv)?;
        out.push(
            Check::new("integrability")
                .fact("rd_zero", rep.rd_zero)
                .fact("a_zero", rep.a_zero)
                .fact("b_zero", rep.b_zero)
                .fact("c_zero", rep.c_zero)
                .fact("d_zero", rep.d_zero)
                .fact("d_corrected_zero", rep.d_corrected_zero)
                .fact("gtilde_flat", rep.gtilde_flat)
                .fact("integrable", rep.integrable)
                .fact("homogeneous_integrable", rep.homogeneous_integrable)
                .fact("note", rep.note)
                .witness(rep.witness.clone())
                .equivalence(!rep.equivalence_violated()),
        );
    }
    Ok(out)
}

fn frame_checks(lb: &LineBundle, cols: &[Vec<Expr>], group: GroupId, wants: &dyn Fn(&str) -> bool, pol: &ZeroTestPolicy) -> Res<Vec<Check>> {
    let frame = Frame::new(lb, &fields(lb, cols)?, pol).map_err(inv)?;
    let t = transition(&frame, pol).map_err(inv)?;
    let mut out = Vec::new();
    if wants("transition") {
        let mut c = Check::new("transition").fact("homogeneous", t.homogeneous).fact("A", fmt_matrix(&t.matrix));
        if let Some(h) = &t.degree {
            c = c.fact("B", fmt_q(h.b())).fact("C", fmt_q(h.c()));
        }
        if let Some(r) = &t.reason {
            c = c.fact("reason", r.as_str());
        }
        out.push(c);
    }
    if wants("homomorphism") {
        let mut c = Check::new("homomorphism");
        if t.homogeneous {
            let ok = check_homomorphism(&t, pol).map_err(inv)?;
            c = c.fact("homomorphism", ok).equivalence(ok);
        } else {
            c = c.fact("homomorphism", "not applicable");
        }
        out.push(c);
    }
    if wants("degree") {
        let mut c = Check::new("degree").fact("group", group.to_string());
        if t.homogeneous {
            match degree_coset(&frame, group, pol) {
                Ok(d) => {
                    c = c.fact("in_normalizer", true).fact("quotient", d.quotient.to_string());
                    if let Some(v) = &d.at_minus_one {
                        c = c.fact("at_minus_one", v.to_string());
                    }
                    if let Some(s) = &d.scale {
                        c = c.fact("scale", s.to_string());
                    }
                }
                Err(e) => c = c.fact("in_normalizer", false).fact("reason", e.to_string()),
            }
        } else {
            c = c.fact("in_normalizer", "not applicable");
        }
        out.push(c);
    }
    Ok(out)
}

fn group_checks(
    group: GroupId,
    elements: &[QMatrix],
    values: &[QuotientValue],
    count: usize,
    wants: &dyn Fn(&str) -> bool,
    pol: &ZeroTestPolicy,
) -> Res<Vec<Check>> {
    let mut out = Vec::new();
    if wants("membership") {
        let mut c = Check::new("membership").fact("group", group.to_string());
        for (k, m) in elements.iter().enumerate() {
            let member = group.member(m).map_err(inv)?;
            let q = match group.normalizer_p(m) {
                Ok(v) => v.to_string(),
                Err(_) => "not in normalizer".into(),
            };
            c = c.fact(&format!("element{k}_member"), member).fact(&format!("element{k}_quotient"), q);
        }
        out.push(c);
    }
    let splittings: Vec<(QuotientValue, Option<QMatrix>)> = values.iter().map(|v| (v.clone(), group.splitting(v).ok())).collect();
    if wants("splitting") {
        let mut c = Check::new("splitting");
        let mut ok = true;
        for (k, (v, s)) in splittings.iter().enumerate() {
            match s {
                Some(s) => {
                    let back = group.normalizer_p(s).map_err(inv)?;
                    c = c.fact(&format!("value{k}"), format!("{v} -> {}", fmt_q(s)));
                    if &back != v {
                        ok = false;
                        c = c.witness(Some(format!("splitting({v}) has quotient {back}")));
                    }
                }
                None => c = c.fact(&format!("value{k}"), format!("{v} has no exact splitting")),
            }
        }
        out.push(c.equivalence(ok));
    }
    if wants("exact_sequence") {
        let mut rng = random::rng(pol.seed);
        let mut ok = true;
        let mut witness = None;
        for _ in 0..count {
            let x = group.random_element(&mut rng);
            if !group.member(&x).map_err(inv)? || group.normalizer_p(&x).map_err(inv)? != group.neutral() {
                ok = false;
                witness.get_or_insert_with(|| format!("{x} is not a neutral member"));
            }
            for (v, s) in &splittings {
                let Some(s) = s else { continue };
                if group.normalizer_p(&x.mul(s).map_err(inv)?).map_err(inv)? != *v {
                    ok = false;
                    witness.get_or_insert_with(|| format!("{x}·splitting({v}) leaves the coset"));
                }
            }
        }
        out.push(Check::new("exact_sequence").fact("group", group.to_string()).fact("random_elements", count).witness(witness).equivalence(ok));
    }
    Ok(out)
}
