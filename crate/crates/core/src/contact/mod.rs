//! Identity-degree homogeneous Sp_k-structures and contact pairs (θ, υ):
//! the symplectization ω̃ = d(μθ) + μυ, the curvature of H = ker θ, the
//! symplectic frames of ω̃ and the homogeneous Darboux chart.

#[cfg(test)]
mod tests;

use std::sync::Arc;

use thiserror::Error;

use crate::calculus::{CalcError, Chart, KForm, VectorField};
use crate::exprcore::{Expr, ExprMatrix, MatrixError, Point, Symbol, ZeroTestError, ZeroTestPolicy};
use crate::groups::{GroupId, QuotientValue, SymbolicQuotient};
use crate::homframe::{degree_coset, is_homogeneous_chart, Frame, HomFrameError};
use crate::linebundle::{AtiyahObject, Branch, LineBundle, LineBundleError, ScalarDegree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContactError {
    #[error("invalid pair: {0}")]
    InvalidPair(String),
    #[error("2-form is degenerate: {0}")]
    Degenerate(String),
    #[error("form is not homogeneous of degree {0}")]
    Degree(ScalarDegree),
    #[error("frame has the wrong degree: {0}")]
    WrongDegree(String),
    #[error("dimension {0} is not odd")]
    EvenDimension(usize),
    #[error(transparent)]
    LineBundle(#[from] LineBundleError),
    #[error(transparent)]
    Frame(#[from] HomFrameError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

/// An L-valued 1-form θ and 2-form υ on U, in the trivialization of L.
#[derive(Debug, Clone)]
pub struct ContactPair {
    pub lb: LineBundle,
    pub theta: KForm,
    pub upsilon: KForm,
}

impl ContactPair {
    pub fn new(lb: &LineBundle, theta: KForm, upsilon: KForm) -> Result<Self, ContactError> {
        if theta.degree() != 1 || upsilon.degree() != 2 {
            return Err(ContactError::InvalidPair(format!("degrees {} and {}, expected 1 and 2", theta.degree(), upsilon.degree())));
        }
        for w in [&theta, &upsilon] {
            if **w.chart() != **lb.base() {
                return Err(CalcError::ChartMismatch(w.chart().to_string(), lb.base().to_string()).into());
            }
        }
        if lb.n() % 2 == 0 {
            return Err(ContactError::EvenDimension(lb.n()));
        }
        Ok(ContactPair { lb: lb.clone(), theta, upsilon })
    }

    pub fn parse(lb: &LineBundle, theta: &[&str], upsilon: &[((usize, usize), &str)]) -> Result<Self, ContactError> {
        let base = lb.base();
        let t: Vec<Expr> = theta.iter().map(|s| base.parse(s)).collect::<Result<_, _>>().map_err(CalcError::from)?;
        let mut terms = Vec::new();
        for ((i, j), s) in upsilon {
            terms.push((vec![*i, *j], base.parse(s).map_err(CalcError::from)?));
        }
        ContactPair::new(lb, KForm::one_form(base, t)?, KForm::from_terms(base, 2, terms)?)
    }

    /// k with dim U = 2k − 1.
    pub fn k(&self) -> usize {
        self.lb.n().div_ceil(2)
    }
}

/// Base chart (x_1, …, x_{k−1}, u, p_1, …, p_{k−1}); for k = 2 the names
/// are x, u, p.
pub fn darboux_base(k: usize) -> Arc<Chart> {
    assert!(k >= 1, "k must be positive");
    let m = k - 1;
    let name = |s: &str, i: usize| if m == 1 { s.to_string() } else { format!("{s}{}", i + 1) };
    let mut names: Vec<String> = (0..m).map(|i| name("x", i)).collect();
    names.push("u".into());
    names.extend((0..m).map(|i| name("p", i)));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Chart::real(&format!("R{}", 2 * k - 1), &refs)
}

/// The pair (du − Σ p_i dx^i, 0) on the Darboux base.
pub fn standard_pair(k: usize, branch: Branch) -> Result<ContactPair, ContactError> {
    let base = darboux_base(k);
    let lb = LineBundle::new(&base, branch)?;
    let m = k - 1;
    let mut c = vec![Expr::zero(); 2 * k - 1];
    c[m] = Expr::one();
    for i in 0..m {
        c[i] = -base.coord(m + 1 + i);
    }
    ContactPair::new(&lb, KForm::one_form(&base, c)?, KForm::zero(&base, 2))
}

/// ω̃ = d(μθ) + μυ.
pub fn pair_to_omega(pair: &ContactPair) -> Result<KForm, ContactError> {
    let lb = &pair.lb;
    let theta = lb.lift_form(&pair.theta)?.scale(&lb.mu());
    let ups = lb.lift_form(&pair.upsilon)?.scale(&lb.mu());
    Ok(theta.d()?.add(&ups)?)
}

/// θ = descend(i_ℰω̃), υ = descend(i_ℰ dω̃) for a degree-1 2-form.
pub fn omega_to_pair(lb: &LineBundle, omega: &KForm, policy: &ZeroTestPolicy) -> Result<ContactPair, ContactError> {
    let deg = ScalarDegree::identity();
    if omega.degree() != 2 || !lb.is_homogeneous(&AtiyahObject::Form(omega.clone()), &deg, policy)? {
        return Err(ContactError::Degree(deg));
    }
    let e = lb.euler();
    let theta = lb.descend_form(&omega.interior(&e)?, policy)?;
    let upsilon = lb.descend_form(&omega.d()?.interior(&e)?, policy)?;
    ContactPair::new(lb, theta, upsilon)
}

/// A basis of H = ker θ together with R_H(X_a, X_b) = θ([X_a, X_b]).
#[derive(Debug, Clone)]
pub struct DistributionCurvature {
    pub basis: Vec<VectorField>,
    /// Index of the coordinate solved for.
    pub pivot: usize,
    pub r_h: ExprMatrix,
}

fn nonvanishing_on_samples(e: &Expr, pts: &[Point]) -> bool {
    pts.iter().all(|p| e.eval_at(p).map(|v| v.to_f64().abs() > 1e-12).unwrap_or(false))
}

/// Nonvanishing with one sign on every sample; a sign change means a zero
/// somewhere in between.
fn definite_on_samples(e: &Expr, pts: &[Point]) -> bool {
    let vals: Vec<f64> = pts.iter().filter_map(|p| e.eval_at(p).ok().map(|v| v.to_f64())).collect();
    vals.len() == pts.len() && (vals.iter().all(|v| *v > 1e-12) || vals.iter().all(|v| *v < -1e-12))
}

fn samples(chart: &Chart, policy: &ZeroTestPolicy) -> Result<Vec<Point>, ContactError> {
    Ok(chart.policy(policy).sample_points(chart.coords(), policy.sample_count, 0xc0 ^ policy.seed)?)
}

/// Solves θ = 0 for the coordinate whose coefficient is simplest among those
/// nonvanishing at every sample; constants win, ties go to coordinate order.
pub fn h_basis(pair: &ContactPair, policy: &ZeroTestPolicy) -> Result<DistributionCurvature, ContactError> {
    let base = pair.lb.base();
    let coeffs = pair.theta.one_form_coeffs();
    let pts = samples(base, policy)?;
    let pivot = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero_literal() && definite_on_samples(c, &pts))
        .min_by_key(|(i, c)| (c.as_const().is_none(), c.leaf_count(), *i))
        .map(|(i, _)| i);
    let Some(p) = pivot else {
        for pt in &pts {
            if coeffs.iter().all(|c| c.eval_at(pt).map(|v| v.to_f64().abs() <= 1e-12).unwrap_or(true)) {
                let mut at: Vec<_> = pt.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                at.sort();
                return Err(ContactError::InvalidPair(format!("θ vanishes at ({})", at.join(", "))));
            }
        }
        return Err(ContactError::InvalidPair("no coefficient of θ keeps one sign on the sampled domain".into()));
    };
    let inv = coeffs[p].recip();
    let mut basis = Vec::new();
    for j in (0..base.dim()).filter(|&j| j != p) {
        let mut comps = vec![Expr::zero(); base.dim()];
        comps[j] = Expr::one();
        comps[p] = -(&coeffs[j] * &inv);
        basis.push(VectorField::new(base, comps)?);
    }
    let m = basis.len();
    let mut r_h = ExprMatrix::zeros(m, m);
    for a in 0..m {
        for b in a + 1..m {
            let v = pair.theta.eval(&[basis[a].bracket(&basis[b])?])?;
            r_h[(a, b)] = v.clone();
            r_h[(b, a)] = -v;
        }
    }
    Ok(DistributionCurvature { basis, pivot: p, r_h })
}

/// Outcome of the non-degeneracy tests on a pair.
#[derive(Debug, Clone)]
pub struct PairCheck {
    pub theta_nowhere_zero: bool,
    /// υ|_H − R_H has nonzero Gram determinant.
    pub nondeg_on_h: bool,
    /// ω̃ = pair_to_omega(pair) has nonzero determinant.
    pub omega_nondegenerate: bool,
    /// R_H agrees with −dθ|_H.
    pub curvature_consistent: bool,
    pub gram_det: Expr,
}

impl PairCheck {
    /// (i) ⇔ (ii) of the correspondence.
    pub fn equivalence_holds(&self) -> bool {
        self.omega_nondegenerate == (self.theta_nowhere_zero && self.nondeg_on_h)
    }
}

/// Gram matrix of υ|_H − R_H on the H-basis.
pub fn h_gram(pair: &ContactPair, dc: &DistributionCurvature) -> Result<ExprMatrix, ContactError> {
    let m = dc.basis.len();
    let mut g = ExprMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            if a != b {
                g[(a, b)] = pair.upsilon.eval(&[dc.basis[a].clone(), dc.basis[b].clone()])? - &dc.r_h[(a, b)];
            }
        }
    }
    Ok(g)
}

pub fn check_pair(pair: &ContactPair, policy: &ZeroTestPolicy) -> Result<PairCheck, ContactError> {
    let lb = &pair.lb;
    let pol = lb.base().policy(policy);
    let dc = h_basis(pair, policy)?;
    let gram = h_gram(pair, &dc)?;
    let gram_det = gram.det(&pol)?;
    let nondeg_on_h = !pol.is_zero(&gram_det)?;
    let dtheta = pair.theta.d()?;
    let mut residual = Vec::new();
    for a in 0..dc.basis.len() {
        for b in 0..dc.basis.len() {
            residual.push(dtheta.eval(&[dc.basis[a].clone(), dc.basis[b].clone()])? + &dc.r_h[(a, b)]);
        }
    }
    let curvature_consistent = pol.all_zero(&residual)?;
    let omega = pair_to_omega(pair)?;
    let tpol = lb.policy(policy);
    let omega_nondegenerate = !tpol.is_zero(&omega.two_form_matrix().det(&tpol)?)?;
    Ok(PairCheck { theta_nowhere_zero: true, nondeg_on_h, omega_nondegenerate, curvature_consistent, gram_det })
}

/// (dθ + β∧θ)|_H for a connection form β; equals dθ|_H for every β.
pub fn twisted_curvature(pair: &ContactPair, beta: &KForm, dc: &DistributionCurvature) -> Result<ExprMatrix, ContactError> {
    let dtheta = pair.theta.d()?.add(&beta.wedge(&pair.theta)?)?;
    let m = dc.basis.len();
    let mut out = ExprMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            out[(a, b)] = -dtheta.eval(&[dc.basis[a].clone(), dc.basis[b].clone()])?;
        }
    }
    Ok(out)
}

/// ξ¹∧η₁ + ⋯ + ξ^k∧η_k for the coframe dual to (X_1, …, X_k, Y_1, …, Y_k).
pub fn canonical_form_of_frame(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<KForm, ContactError> {
    let lb = sigma.bundle();
    let total = lb.total();
    let n1 = total.dim();
    if n1 % 2 != 0 {
        return Err(ContactError::WrongDegree(format!("frame of odd length {n1}")));
    }
    let k = n1 / 2;
    let co = sigma.dual(policy)?;
    let row = |i: usize| KForm::one_form(total, co.row(i));
    let mut w = KForm::zero(total, 2);
    for i in 0..k {
        w = w.add(&row(i)?.wedge(&row(k + i)?)?)?;
    }
    Ok(w)
}

/// ω̃ of a frame whose degree is the identity class in N(Sp_k)/Sp_k.
pub fn frame_to_omega(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<KForm, ContactError> {
    let lb = sigma.bundle();
    let k = sigma.len() / 2;
    let coset = degree_coset(sigma, GroupId::Sp(k), policy)?;
    let r = Expr::var(&Symbol::action());
    let ok_pos = match &coset.quotient {
        SymbolicQuotient::Scalar(p) => lb.policy(policy).is_zero(&(p - r))?,
        _ => false,
    };
    let ok_neg = coset.at_minus_one.as_ref().is_none_or(|v| *v == QuotientValue::Scalar(crate::exprcore::q(-1)));
    if !ok_pos || !ok_neg {
        return Err(ContactError::WrongDegree(format!("quotient {:?}, at −1 {:?}", coset.quotient, coset.at_minus_one)));
    }
    let w = canonical_form_of_frame(sigma, policy)?;
    if !lb.is_homogeneous(&AtiyahObject::Form(w.clone()), &ScalarDegree::identity(), policy)? {
        return Err(ContactError::Degree(ScalarDegree::identity()));
    }
    Ok(w)
}

/// Symplectic Gram–Schmidt with ω₀ = ω̃/μ on the degree-0 fields
/// (∂_1, …, ∂_n, ℰ). The pairs (e_i, f_i) become X_i = e_i, Y_i = f_i/μ.
pub fn sp_frame_from_omega(lb: &LineBundle, omega: &KForm, policy: &ZeroTestPolicy) -> Result<Frame, ContactError> {
    let deg = ScalarDegree::identity();
    if !lb.is_homogeneous(&AtiyahObject::Form(omega.clone()), &deg, policy)? {
        return Err(ContactError::Degree(deg));
    }
    let total = lb.total();
    let pol = lb.policy(policy);
    let n1 = total.dim();
    if n1 % 2 != 0 {
        return Err(ContactError::Degenerate(format!("odd total dimension {n1}")));
    }
    let w0 = omega.scale(&lb.mu().recip());
    let pts = samples(total, policy)?;
    let pairing = |a: &VectorField, b: &VectorField| w0.eval(&[a.clone(), b.clone()]);
    let mut pool: Vec<VectorField> = (0..lb.n()).map(|i| VectorField::coord(total, i)).collect();
    pool.push(lb.euler());
    let (mut es, mut fs) = (Vec::new(), Vec::new());
    while !pool.is_empty() {
        let mut best: Option<(usize, usize, (bool, bool, usize))> = None;
        for a in 0..pool.len() {
            for b in a + 1..pool.len() {
                let v = pairing(&pool[a], &pool[b])?;
                if v.is_zero_literal() || pol.is_zero(&v)? {
                    continue;
                }
                let key = (v.as_const().is_none(), !nonvanishing_on_samples(&v, &pts), v.leaf_count());
                if best.as_ref().is_none_or(|(_, _, bk)| key < *bk) {
                    best = Some((a, b, key));
                }
            }
        }
        let Some((a, b, _)) = best else {
            return Err(ContactError::Degenerate(format!("no symplectic partner among {} remaining fields", pool.len())));
        };
        let v = pairing(&pool[a], &pool[b])?;
        let e = pool[a].clone();
        let f = pool[b].scale(&v.recip());
        pool.remove(b);
        pool.remove(a);
        let mut rest = Vec::with_capacity(pool.len());
        for x in &pool {
            // x − ω₀(x, f)e + ω₀(x, e)f is ω₀-orthogonal to e and f
            let y = x.sub(&e.scale(&pairing(x, &f)?))?.add(&f.scale(&pairing(x, &e)?))?;
            rest.push(y);
        }
        pool = rest;
        es.push(e);
        fs.push(f);
    }
    let inv_mu = lb.mu().recip();
    let mut cols = es;
    cols.extend(fs.iter().map(|f| f.scale(&inv_mu)));
    Ok(Frame::new(lb, &cols, policy)?)
}

/// Verdicts of the three equivalent conditions. `None` means the property was
/// not decided (no candidate chart could be constructed or checked).
#[derive(Debug, Clone)]
pub struct IntegrabilityReport {
    pub homogeneous_integrable: Option<bool>,
    pub integrable: bool,
    pub contact: bool,
    /// The chart that certified homogeneous integrability.
    pub chart: Option<Vec<Expr>>,
    pub note: Option<String>,
}

impl IntegrabilityReport {
    /// True when two decided verdicts disagree.
    pub fn falsification(&self) -> bool {
        self.integrable != self.contact || self.homogeneous_integrable.is_some_and(|h| h != self.integrable)
    }
}

/// χ = (u, x^i, −μ, μp_i) on the Darboux base of `lb`.
pub fn darboux_chart(lb: &LineBundle) -> Vec<Expr> {
    let n = lb.n();
    let m = (n - 1) / 2;
    let t = lb.total();
    let mut chi = vec![t.coord(m)];
    chi.extend((0..m).map(|i| t.coord(i)));
    chi.push(-lb.mu());
    chi.extend((0..m).map(|i| lb.mu() * t.coord(m + 1 + i)));
    chi
}

/// Checks that χ is a homogeneous chart with A = diag(I, rI), b = 0, whose
/// coordinate frame is symplectic for ω̃.
pub fn verify_darboux_chart(lb: &LineBundle, omega: &KForm, chi: &[Expr], policy: &ZeroTestPolicy) -> Result<DarbouxCheck, ContactError> {
    let pol = lb.policy(policy);
    let k = chi.len() / 2;
    let rep = match is_homogeneous_chart(lb, chi, policy) {
        Ok(rep) => rep,
        Err(HomFrameError::NotHomogeneous(_)) | Err(HomFrameError::Degenerate) => {
            return Ok(DarbouxCheck { a_is_contact_lift: false, b_zero: false, symplectic: false, cocycle: false })
        }
        Err(e) => return Err(e.into()),
    };
    let r = Expr::var(&Symbol::action());
    let mut d = vec![Expr::one(); k];
    d.extend(std::iter::repeat_n(r, k));
    let a_is_contact_lift = rep.a.equals(&ExprMatrix::diagonal(&d), &pol)?;
    let b_zero = pol.all_zero(&rep.b)?;
    let sigma = Frame::of_chart(lb, chi, policy)?;
    let w = canonical_form_of_frame(&sigma, policy)?;
    let symplectic = w.equals(omega, &pol)?;
    Ok(DarbouxCheck { a_is_contact_lift, b_zero, symplectic, cocycle: rep.cocycle })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DarbouxCheck {
    pub a_is_contact_lift: bool,
    pub b_zero: bool,
    pub symplectic: bool,
    pub cocycle: bool,
}

impl DarbouxCheck {
    pub fn passed(&self) -> bool {
        self.a_is_contact_lift && self.b_zero && self.symplectic && self.cocycle
    }
}

/// The standard pair for k with its Darboux chart and verification.
pub fn darboux_homogeneous_chart(k: usize, policy: &ZeroTestPolicy) -> Result<(ContactPair, Vec<Expr>, DarbouxCheck), ContactError> {
    let pair = standard_pair(k, Branch::Full)?;
    let omega = pair_to_omega(&pair)?;
    let chi = darboux_chart(&pair.lb);
    let check = verify_darboux_chart(&pair.lb, &omega, &chi, policy)?;
    Ok((pair, chi, check))
}

/// The Darboux chart when the base has the Darboux coordinates and θ is
/// du − Σ p_i dx^i.
pub fn standard_candidate(pair: &ContactPair, policy: &ZeroTestPolicy) -> Result<Option<Vec<Expr>>, ContactError> {
    let lb = &pair.lb;
    let std = standard_pair(pair.k(), lb.branch())?;
    if std.lb.base().coords() != lb.base().coords() {
        return Ok(None);
    }
    let theta = std.theta.rechart(lb.base());
    Ok(pair.theta.equals(&theta, &lb.base().policy(policy))?.then(|| darboux_chart(lb)))
}

/// integrable := dω̃ = 0; contact := υ = 0 and R_H nondegenerate;
/// homogeneous integrable := a homogeneous Darboux chart is verified. The
/// candidate is `chart` if given, otherwise the standard chart when θ is in
/// standard form. A non-closed or degenerate ω̃ rules out every chart.
pub fn integrability_report(pair: &ContactPair, chart: Option<&[Expr]>, policy: &ZeroTestPolicy) -> Result<IntegrabilityReport, ContactError> {
    let lb = &pair.lb;
    let pol = lb.policy(policy);
    let omega = pair_to_omega(pair)?;
    let integrable_closed = omega.d()?.is_zero(&pol)?;
    let nondeg = !pol.is_zero(&omega.two_form_matrix().det(&pol)?)?;
    let integrable = integrable_closed && nondeg;
    let check = check_pair(pair, policy)?;
    let contact = pair.upsilon.is_zero(&lb.base().policy(policy))? && check.nondeg_on_h;
    let mut note = None;
    let (homogeneous_integrable, used) = if !integrable {
        (Some(false), None)
    } else {
        let candidate: Option<Vec<Expr>> = match chart {
            Some(c) => Some(c.to_vec()),
            None => standard_candidate(pair, policy)?,
        };
        match candidate {
            Some(chi) => {
                let c = verify_darboux_chart(lb, &omega, &chi, policy)?;
                if c.passed() {
                    (Some(true), Some(chi))
                } else {
                    note = Some(format!("candidate chart failed: {c:?}"));
                    (None, None)
                }
            }
            None => {
                note = Some("no candidate homogeneous Darboux chart".into());
                (None, None)
            }
        }
    };
    Ok(IntegrabilityReport { homogeneous_integrable, integrable, contact, chart: used, note })
}
