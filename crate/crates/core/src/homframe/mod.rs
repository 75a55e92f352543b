//! Frames of L̃ and their transition matrices A_σ(r, ε), defined by
//! σ(rε)·A_σ(r, ε) = (h_r)_*σ(ε); homogeneous charts with h_r^*χ = A(r)χ + b(r).
//!
//! A frame is stored as the matrix whose column a holds the coordinate
//! components of σ_a.

#[cfg(test)]
mod tests;

use std::collections::HashMap;

use thiserror::Error;

use crate::calculus::{gradient, CalcError, VectorField};
use crate::exprcore::{Expr, ExprMatrix, MatrixError, Symbol, ZeroTestError, ZeroTestPolicy, Q};
use crate::groups::{DegreeHom, GroupError, GroupId, QMatrix, QuotientValue, SymbolicQuotient};
use crate::linebundle::{Branch, LineBundle, LineBundleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomFrameError {
    #[error("frame is degenerate on the sampled domain")]
    Degenerate,
    #[error("not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("degree is not invariant under {group}: {reason}")]
    Invariance { group: GroupId, reason: String },
    #[error("expected {expected} fields, got {got}")]
    Size { expected: usize, got: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    LineBundle(#[from] LineBundleError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

impl From<crate::exprcore::DiffError> for HomFrameError {
    fn from(e: crate::exprcore::DiffError) -> Self {
        HomFrameError::Calc(e.into())
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    lb: LineBundle,
    m: ExprMatrix,
}

impl Frame {
    pub fn new(lb: &LineBundle, fields: &[VectorField], policy: &ZeroTestPolicy) -> Result<Self, HomFrameError> {
        let n1 = lb.total().dim();
        if fields.len() != n1 {
            return Err(HomFrameError::Size { expected: n1, got: fields.len() });
        }
        for f in fields {
            if **f.chart() != **lb.total() {
                return Err(CalcError::ChartMismatch(f.chart().to_string(), lb.total().to_string()).into());
            }
        }
        let m = ExprMatrix::from_fn(n1, n1, |i, a| fields[a].comp(i).clone());
        Self::from_matrix(lb, m, policy)
    }

    pub fn from_matrix(lb: &LineBundle, m: ExprMatrix, policy: &ZeroTestPolicy) -> Result<Self, HomFrameError> {
        let pol = lb.policy(policy);
        let n1 = lb.total().dim();
        if m.rows() != n1 || m.cols() != n1 {
            return Err(HomFrameError::Size { expected: n1, got: m.cols() });
        }
        if pol.is_zero(&m.det(&pol)?)? {
            return Err(HomFrameError::Degenerate);
        }
        Ok(Frame { lb: lb.clone(), m })
    }

    pub fn bundle(&self) -> &LineBundle {
        &self.lb
    }
    pub fn matrix(&self) -> &ExprMatrix {
        &self.m
    }
    pub fn len(&self) -> usize {
        self.m.cols()
    }
    pub fn is_empty(&self) -> bool {
        self.m.cols() == 0
    }
    pub fn field(&self, a: usize) -> VectorField {
        VectorField::new(self.lb.total(), self.m.col(a)).expect("matching dimension")
    }
    pub fn fields(&self) -> Vec<VectorField> {
        (0..self.len()).map(|a| self.field(a)).collect()
    }

    /// σ∘g for a matrix g of functions.
    pub fn compose(&self, g: &ExprMatrix, policy: &ZeroTestPolicy) -> Result<Frame, HomFrameError> {
        Frame::from_matrix(&self.lb, self.m.mul(g)?, policy)
    }

    /// The coframe dual to σ, as rows of σ^{-1}.
    pub fn dual(&self, policy: &ZeroTestPolicy) -> Result<ExprMatrix, HomFrameError> {
        Ok(self.m.inverse(&self.lb.policy(policy))?)
    }

    /// The coordinate frame ∂/∂χ^a of a chart χ on L̃_U.
    pub fn of_chart(lb: &LineBundle, chi: &[Expr], policy: &ZeroTestPolicy) -> Result<Frame, HomFrameError> {
        let j = jacobian(lb, chi)?;
        let pol = lb.policy(policy);
        if pol.is_zero(&j.det(&pol)?)? {
            return Err(HomFrameError::Degenerate);
        }
        Frame::from_matrix(lb, j.inverse(&pol)?, policy)
    }
}

/// Transition data of a frame.
#[derive(Debug, Clone)]
pub struct TransitionResult {
    /// A_σ(r, ε) for r > 0; when homogeneous, with ε replaced by a sample point.
    pub matrix: ExprMatrix,
    pub homogeneous: bool,
    pub degree: Option<DegreeHom>,
    /// Why the frame failed, when it did.
    pub reason: Option<String>,
}

fn dh(lb: &LineBundle, r: &Expr) -> ExprMatrix {
    let n1 = lb.total().dim();
    let mut d = vec![Expr::one(); n1];
    d[lb.fibre_index()] = r.clone();
    ExprMatrix::diagonal(&d)
}

fn jacobian(lb: &LineBundle, chi: &[Expr]) -> Result<ExprMatrix, HomFrameError> {
    let n1 = lb.total().dim();
    if chi.len() != n1 {
        return Err(HomFrameError::Size { expected: n1, got: chi.len() });
    }
    let rows: Vec<Vec<Expr>> = chi.iter().map(|c| gradient(lb.total(), c)).collect::<Result<_, _>>()?;
    Ok(ExprMatrix::from_rows(rows)?)
}

/// True when none of `entries` depends on the total chart coordinates.
fn coordinate_free(lb: &LineBundle, entries: &[Expr], policy: &ZeroTestPolicy) -> Result<Option<String>, HomFrameError> {
    let pol = lb.policy(policy);
    for v in lb.total().coords() {
        let ds: Vec<Expr> = entries.iter().map(|e| e.diff(v)).collect::<Result<_, _>>()?;
        if let Some(w) = pol.check_all(&ds)?.witness() {
            return Ok(Some(format!("∂/∂{} of entry {} is nonzero: {w}", v.name(), w.index)));
        }
    }
    Ok(None)
}

/// Replaces the chart coordinates by a domain point where every entry is defined.
fn freeze(lb: &LineBundle, entries: &[Expr], policy: &ZeroTestPolicy) -> Result<Vec<Expr>, HomFrameError> {
    let pol = lb.policy(policy);
    let pts = pol.sample_points(lb.total().coords(), 8, 0x5eed)?;
    let probe = |e: &Expr| {
        let mut p = crate::exprcore::Point::new();
        p.insert("r".into(), Q::new(3.into(), 2.into()));
        p.insert("s".into(), Q::new(5.into(), 3.into()));
        e.eval_at(&p).is_ok()
    };
    for pt in &pts {
        let map: HashMap<Symbol, Expr> =
            lb.total().coords().iter().map(|s| (s.clone(), Expr::constant(pt[s.name()].clone()))).collect();
        let out: Vec<Expr> = entries.iter().map(|e| e.subst(&map)).collect();
        if out.iter().all(probe) {
            return Ok(out);
        }
    }
    Ok(entries.to_vec())
}

/// Rational recovery of an approximate value by continued fractions.
pub fn recover_rational(x: f64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        if a.abs() > 1e12 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 10_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= 1e-10 * x.abs().max(1.0) {
            return Some(Q::new(h1.into(), k1.into()));
        }
        let frac = y - a;
        if frac.abs() < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    None
}

fn to_rational(e: &Expr) -> Option<Q> {
    if let Some(c) = e.as_const() {
        return Some(c.clone());
    }
    match e.eval_at(&Default::default()).ok()? {
        crate::exprcore::Value::Exact(q) => Some(q),
        crate::exprcore::Value::Approx(x) => recover_rational(x),
    }
}

fn to_qmatrix(m: &ExprMatrix) -> Option<QMatrix> {
    let rows: Option<Vec<Vec<Q>>> = (0..m.rows()).map(|i| m.row(i).iter().map(to_rational).collect()).collect();
    QMatrix::from_rows(rows?).ok()
}

/// Solves σ(rε)·A = (h_r)_*σ(ε) for A and decides ε-independence.
pub fn transition(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<TransitionResult, HomFrameError> {
    let lb = sigma.bundle();
    let pol = lb.policy(policy);
    let r = Expr::var(&Symbol::action());
    let shifted = sigma.m.subst(&lb.fibre_subst(&(&r * lb.mu())));
    let a = shifted.inverse(&pol)?.mul(&dh(lb, &r).mul(&sigma.m)?)?;
    if let Some(reason) = coordinate_free(lb, a.entries(), policy)? {
        return Ok(TransitionResult { matrix: a, homogeneous: false, degree: None, reason: Some(reason) });
    }
    let frozen = freeze(lb, a.entries(), policy)?;
    let n1 = a.rows();
    let a = ExprMatrix::from_fn(n1, n1, |i, j| frozen[i * n1 + j].clone());

    let rs = Symbol::action();
    let b_expr = a.diff(&rs)?.subst1(&rs, &Expr::one());
    let Some(b) = to_qmatrix(&b_expr) else {
        return Ok(TransitionResult { matrix: a, homogeneous: true, degree: None, reason: Some(format!("dA/dr at r = 1 is not rational: {b_expr}")) });
    };
    let c = match lb.branch() {
        Branch::Positive => QMatrix::identity(n1),
        Branch::Full => {
            let m1 = Expr::int(-1);
            let refl = sigma.m.subst(&lb.fibre_subst(&-lb.mu()));
            let cm = refl.inverse(&pol)?.mul(&dh(lb, &m1).mul(&sigma.m)?)?;
            if let Some(reason) = coordinate_free(lb, cm.entries(), policy)? {
                return Ok(TransitionResult { matrix: a, homogeneous: false, degree: None, reason: Some(format!("A(−1, ε): {reason}")) });
            }
            let cf = freeze(lb, cm.entries(), policy)?;
            let cm = ExprMatrix::from_fn(n1, n1, |i, j| cf[i * n1 + j].clone());
            match to_qmatrix(&cm) {
                Some(c) => c,
                None => {
                    return Ok(TransitionResult { matrix: a, homogeneous: false, degree: None, reason: Some(format!("A(−1) is not rational: {cm}")) })
                }
            }
        }
    };
    let hom = match DegreeHom::new(b, c) {
        Ok(h) => h,
        Err(e) => return Ok(TransitionResult { matrix: a, homogeneous: false, degree: None, reason: Some(e.to_string()) }),
    };
    // A must be the homomorphism generated by (B, C)
    if let Ok(expected) = hom.eval_symbolic(&rs) {
        if !a.equals(&expected, &pol)? {
            return Ok(TransitionResult { matrix: a, homogeneous: false, degree: None, reason: Some("A(r) is not exp(B log r)".into()) });
        }
    }
    Ok(TransitionResult { matrix: a, homogeneous: true, degree: Some(hom), reason: None })
}

/// A(rs) = A(r)A(s) and A(−1)² = I.
pub fn check_homomorphism(t: &TransitionResult, policy: &ZeroTestPolicy) -> Result<bool, HomFrameError> {
    let Some(hom) = &t.degree else { return Ok(false) };
    let r = Symbol::action();
    let s = Symbol::action2();
    let ar = &t.matrix;
    let as_ = ar.subst1(&r, &Expr::var(&s));
    let ars = ar.subst1(&r, &(Expr::var(&r) * Expr::var(&s)));
    let c2 = hom.c().mul(hom.c())?;
    Ok(ars.equals(&ar.mul(&as_)?, policy)? && c2 == QMatrix::identity(hom.dim()))
}

/// σ(ε) = (h_{r(ε)})_*σ₀(η(p(ε)))·A(r(ε))^{-1} with r(ε) = μ/η_μ(x).
pub fn build_frame(sigma0: &Frame, eta_mu: &Expr, a: &DegreeHom, policy: &ZeroTestPolicy) -> Result<Frame, HomFrameError> {
    let lb = sigma0.bundle();
    if eta_mu.depends_on(lb.mu_symbol()) {
        return Err(HomFrameError::NotHomogeneous(format!("section {eta_mu} depends on the fibre coordinate")));
    }
    let r_eps = lb.mu() / eta_mu;
    let at_section = sigma0.m.subst(&lb.fibre_subst(eta_mu));
    let ainv = a.eval_expr(&r_eps.recip())?;
    let m = dh(lb, &r_eps).mul(&at_section)?.mul(&ainv)?;
    Frame::from_matrix(lb, m, policy)
}

/// The class r ↦ A_σ(r)G.
#[derive(Debug, Clone)]
pub struct DegreeCoset {
    pub hom: DegreeHom,
    /// p(A_σ(r)) for r > 0.
    pub quotient: SymbolicQuotient,
    /// p(A_σ(−1)), on the full branch.
    pub at_minus_one: Option<QuotientValue>,
    /// For O: c(r) = √p(A_σ(r)), the factor with A_σ(r) ∈ c(r)·O.
    pub scale: Option<Expr>,
}

pub fn degree_coset(sigma: &Frame, g: GroupId, policy: &ZeroTestPolicy) -> Result<DegreeCoset, HomFrameError> {
    let t = transition(sigma, policy)?;
    let hom = t.degree.ok_or_else(|| HomFrameError::NotHomogeneous(t.reason.unwrap_or_default()))?;
    let quotient = hom.lands_in_normalizer(g, policy).map_err(|e| match e {
        GroupError::NotInNormalizer { group, reason } => HomFrameError::Invariance { group, reason },
        other => other.into(),
    })?;
    let at_minus_one = match sigma.bundle().branch() {
        Branch::Full => Some(hom.quotient_at_minus_one(g)?),
        Branch::Positive => None,
    };
    let scale = match (&quotient, g) {
        (SymbolicQuotient::Scalar(p), GroupId::O(_)) => Some(p.sqrt()),
        _ => None,
    };
    Ok(DegreeCoset { hom, quotient, at_minus_one, scale })
}

/// σ' = σ∘g with g(ε) pointwise in G.
pub fn frames_g_equivalent(s1: &Frame, s2: &Frame, g: GroupId, policy: &ZeroTestPolicy) -> Result<bool, HomFrameError> {
    let lb = s1.bundle();
    let pol = lb.policy(policy);
    let change = s1.m.inverse(&pol)?.mul(&s2.m)?;
    Ok(g.member_expr(&change, &pol)?)
}

/// Affine data of a homogeneous chart.
#[derive(Debug, Clone)]
pub struct ChartReport {
    pub a: ExprMatrix,
    pub b: Vec<Expr>,
    /// (A, b)(rs) = (A, b)(r)·(A, b)(s).
    pub cocycle: bool,
    /// A equals the transition matrix of σ_χ for r > 0.
    pub matches_frame: bool,
}

/// Solves h_r^*χ = A(r)χ + b(r) with A, b free of the chart coordinates.
pub fn is_homogeneous_chart(lb: &LineBundle, chi: &[Expr], policy: &ZeroTestPolicy) -> Result<ChartReport, HomFrameError> {
    let pol = lb.policy(policy);
    let j = jacobian(lb, chi)?;
    if pol.is_zero(&j.det(&pol)?)? {
        return Err(HomFrameError::Degenerate);
    }
    let r = Expr::var(&Symbol::action());
    let h = lb.action(&r);
    let pulled: Vec<Expr> = chi.iter().map(|c| h.pull_fn(c)).collect();
    let jp = jacobian(lb, &pulled)?;
    let jinv = j.inverse(&pol)?;
    let a = jp.mul(&jinv)?;
    if let Some(reason) = coordinate_free(lb, a.entries(), policy)? {
        return Err(HomFrameError::NotHomogeneous(format!("linear part depends on ε: {reason}")));
    }
    let achi = a.mul_vec(chi)?;
    let b: Vec<Expr> = pulled.iter().zip(&achi).map(|(p, q)| p - q).collect();
    if let Some(reason) = coordinate_free(lb, &b, policy)? {
        return Err(HomFrameError::NotHomogeneous(format!("translation part depends on ε: {reason}")));
    }
    let n1 = a.rows();
    let mut all: Vec<Expr> = a.entries().to_vec();
    all.extend(b.iter().cloned());
    let frozen = freeze(lb, &all, policy)?;
    let a = ExprMatrix::from_fn(n1, n1, |i, k| frozen[i * n1 + k].clone());
    let b: Vec<Expr> = frozen[n1 * n1..].to_vec();

    let rs = Symbol::action();
    let ss = Symbol::action2();
    let prod = Expr::var(&rs) * Expr::var(&ss);
    let a_s = a.subst1(&rs, &Expr::var(&ss));
    let b_s: Vec<Expr> = b.iter().map(|e| e.subst1(&rs, &Expr::var(&ss))).collect();
    let a_rs = a.subst1(&rs, &prod);
    let b_rs: Vec<Expr> = b.iter().map(|e| e.subst1(&rs, &prod)).collect();
    let mut diffs: Vec<Expr> = a_rs.sub(&a.mul(&a_s)?)?.entries().to_vec();
    let ab = a.mul_vec(&b_s)?;
    diffs.extend(b_rs.iter().zip(ab.iter().zip(&b)).map(|(x, (y, z))| x - y - z));
    let cocycle = pol.all_zero(&diffs)?;

    let sigma = Frame::of_chart(lb, chi, policy)?;
    let t = transition(&sigma, policy)?;
    let matches_frame = a.equals(&t.matrix, &pol)?;
    Ok(ChartReport { a, b, cocycle, matches_frame })
}
