//! Homogeneous O_{n+1}-structures of degree |r|^{1/2}: the triple (φ, g, η),
//! the algebroid metric G on D|L|, its Levi-Civita connection ∇^D and
//! curvature R^D, the tensors A, B, C, D, and the flat charts of the sphere
//! case.
//!
//! The algebroid basis is (𝕀, ∇_1, …, ∇_n) with ∇_i = ∂_i + η_i𝕀. It acts on
//! sections of |L| (functions, in the trivialization) by 𝕀·s = s and
//! ∇_i·s = ∂_i s + η_i s, and [∇_i, ∇_j] = dη(∂_i, ∂_j)𝕀.

#[cfg(test)]
mod tests;

use std::sync::Arc;

use thiserror::Error;

use crate::calculus::{CalcError, Chart, KForm, Metric, SymTensor2, VectorField};
use crate::exprcore::{
    qr, Constraint, Expr, ExprMatrix, MatrixError, Point, Symbol, ZeroTestError, ZeroTestPolicy, ZeroVerdict, Q,
};
use crate::groups::{GroupId, QuotientValue, SymbolicQuotient};
use crate::homframe::{degree_coset, Frame, HomFrameError};
use crate::linebundle::{AtiyahObject, Branch, LineBundle, LineBundleError, ScalarDegree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiemannianError {
    #[error("not positive definite: {0}")]
    NotDefinite(String),
    #[error("frame has the wrong degree: {0}")]
    WrongDegree(String),
    #[error("invalid metric on the total space: {0}")]
    Invalid(String),
    #[error("no spherical chart for n = {0}")]
    UnsupportedDimension(usize),
    #[error("algebroid metric is degenerate")]
    Degenerate,
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

type Result<T> = std::result::Result<T, RiemannianError>;

/// (φ, g, η) with φ the trivialization carried by the fibre coordinate.
#[derive(Debug, Clone)]
pub struct MetricTriple {
    pub lb: LineBundle,
    pub g: SymTensor2,
    pub eta: KForm,
}

impl MetricTriple {
    pub fn new(lb: &LineBundle, g: SymTensor2, eta: KForm, policy: &ZeroTestPolicy) -> Result<Self> {
        let base = lb.base();
        if g.chart() != base || eta.chart() != base {
            return Err(RiemannianError::Calc(CalcError::ChartMismatch(base.name().to_string(), g.chart().name().to_string())));
        }
        if eta.degree() != 1 {
            return Err(CalcError::Degree { expected: 1, got: eta.degree() }.into());
        }
        definite_on_samples(g.matrix(), base, policy)?;
        Ok(MetricTriple { lb: lb.clone(), g, eta })
    }

    /// g given by upper-triangular rows, η by coefficients.
    pub fn parse(lb: &LineBundle, g_rows: &[&[&str]], eta: &[&str], policy: &ZeroTestPolicy) -> Result<Self> {
        let base = lb.base();
        let n = base.dim();
        let p = |s: &str| base.parse(s).map_err(|e| RiemannianError::Invalid(e.to_string()));
        let mut m = ExprMatrix::zeros(n, n);
        for (i, row) in g_rows.iter().enumerate() {
            for (k, s) in row.iter().enumerate() {
                let j = i + k;
                let e = p(s)?;
                m[(i, j)] = e.clone();
                m[(j, i)] = e;
            }
        }
        let eta = KForm::one_form(base, eta.iter().map(|s| p(s)).collect::<Result<_>>()?)?;
        Self::new(lb, SymTensor2::new(base, m)?, eta, policy)
    }

    pub fn euclidean(lb: &LineBundle) -> Self {
        let base = lb.base();
        MetricTriple { lb: lb.clone(), g: SymTensor2::euclidean(base), eta: KForm::zero(base, 1) }
    }

    pub fn n(&self) -> usize {
        self.lb.n()
    }
}

fn samples(chart: &Chart, policy: &ZeroTestPolicy, salt: u64) -> Result<Vec<Point>> {
    Ok(chart.policy(policy).sample_points(chart.coords(), policy.sample_count, salt ^ policy.seed)?)
}

/// Leading principal minors positive at every sample, by floating Cholesky.
fn definite_on_samples(m: &ExprMatrix, chart: &Chart, policy: &ZeroTestPolicy) -> Result<()> {
    let n = m.rows();
    for p in samples(chart, policy, 0x0d)? {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = m[(i, j)].eval_at(&p).map(|v| v.to_f64()).map_err(|e| RiemannianError::NotDefinite(e.to_string()))?;
            }
        }
        for j in 0..n {
            let mut d = a[j][j];
            for k in 0..j {
                d -= a[j][k] * a[j][k];
            }
            if !(d > 1e-12) {
                let mut at: Vec<_> = p.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                at.sort();
                return Err(RiemannianError::NotDefinite(format!("minor {} fails at ({})", j + 1, at.join(", "))));
            }
            let d = d.sqrt();
            a[j][j] = d;
            for i in j + 1..n {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= a[i][k] * a[j][k];
                }
                a[i][j] = s / d;
            }
        }
    }
    Ok(())
}

fn abs_mu(lb: &LineBundle) -> Expr {
    match lb.branch() {
        Branch::Positive => lb.mu(),
        Branch::Full => lb.mu().abs(),
    }
}

fn symmetric(chart: &Arc<Chart>, n: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Result<SymTensor2> {
    let mut m = ExprMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let e = f(i, j);
            m[(i, j)] = e.clone();
            m[(j, i)] = e;
        }
    }
    Ok(SymTensor2::new(chart, m)?)
}

/// g̃ = |μ|(θ₀⊙θ₀ + g) with θ₀ = dμ/μ − η.
pub fn triple_to_gtilde(t: &MetricTriple) -> Result<SymTensor2> {
    let lb = &t.lb;
    let total = lb.total();
    let n = t.n();
    let fi = lb.fibre_index();
    let mut theta = t.eta.one_form_coeffs().iter().map(|c| -c).collect::<Vec<_>>();
    theta.insert(fi, lb.mu().recip());
    let am = abs_mu(lb);
    symmetric(total, n + 1, |i, j| {
        let lift = if i != fi && j != fi { t.g.get(i, j).clone() } else { Expr::zero() };
        &am * (&theta[i] * &theta[j] + lift)
    })
}

/// ∇_i = ∂_i + η_i ℰ on the total space.
pub fn twisted_lifts(t: &MetricTriple) -> Result<Vec<VectorField>> {
    let base = t.lb.base();
    let eta = t.eta.one_form_coeffs();
    (0..t.n())
        .map(|i| Ok(t.lb.promote_derivation(&VectorField::coord(base, i), &eta[i])?))
        .collect()
}

/// Gram–Schmidt on the coordinate basis; column a is the a-th orthonormal field.
fn orthonormal_columns(g: &ExprMatrix) -> ExprMatrix {
    let n = g.rows();
    let inner = |x: &[Expr], y: &[Expr]| {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !x[i].is_zero_literal() && !y[j].is_zero_literal() && !g[(i, j)].is_zero_literal() {
                    t.push(&x[i] * &g[(i, j)] * &y[j]);
                }
            }
        }
        Expr::add_all(t)
    };
    let mut cols: Vec<Vec<Expr>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v: Vec<Expr> = (0..n).map(|i| if i == a { Expr::one() } else { Expr::zero() }).collect();
        for b in 0..a {
            let c = inner(&v, &cols[b]);
            if c.is_zero_literal() {
                continue;
            }
            v = v.iter().zip(&cols[b]).map(|(vi, ei)| vi - &(&c * ei)).collect();
        }
        let norm = inner(&v, &v).sqrt().recip();
        cols.push(v.iter().map(|vi| vi * &norm).collect());
    }
    ExprMatrix::from_fn(n, n, |i, a| cols[a][i].clone())
}

/// The orthonormal frame |μ|^{-1/2}·(ℰ, Σ_i e^i_a ∇_i) of g̃, where (e_a) is
/// a Gram–Schmidt frame of g.
pub fn frame_from_triple(t: &MetricTriple, policy: &ZeroTestPolicy) -> Result<Frame> {
    let lb = &t.lb;
    let total = lb.total();
    let n = t.n();
    let l = orthonormal_columns(t.g.matrix());
    let lifts = twisted_lifts(t)?;
    let s = abs_mu(lb).pow_q(qr(-1, 2));
    let mut fields = vec![lb.euler().scale(&s)];
    for a in 0..n {
        let mut v = VectorField::new(total, vec![Expr::zero(); n + 1])?;
        for (i, li) in lifts.iter().enumerate() {
            if !l[(i, a)].is_zero_literal() {
                v = v.add(&li.scale(&l[(i, a)]))?;
            }
        }
        fields.push(v.scale(&s));
    }
    Ok(Frame::new(lb, &fields, policy)?)
}

/// g̃ = Σ ξ^a⊙ξ^a for a frame whose degree class in N(O_{n+1})/O_{n+1} is
/// |r|^{1/2}.
pub fn frame_to_gtilde(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<SymTensor2> {
    let lb = sigma.bundle();
    let pol = lb.policy(policy);
    let m = sigma.len();
    let coset = degree_coset(sigma, GroupId::O(m), policy)?;
    let r = Expr::var(&Symbol::action());
    let ok = match &coset.quotient {
        SymbolicQuotient::Scalar(p) => pol.is_zero(&(p - &r))?,
        _ => false,
    } && coset.at_minus_one.as_ref().is_none_or(|v| *v == QuotientValue::Scalar(Q::from_integer(1.into())));
    if !ok {
        return Err(RiemannianError::WrongDegree(format!("quotient {}, at −1 {:?}", coset.quotient, coset.at_minus_one)));
    }
    let d = sigma.dual(policy)?;
    let gt = symmetric(lb.total(), m, |i, j| Expr::add_all((0..m).map(|a| &d[(a, i)] * &d[(a, j)])))?;
    if !lb.is_homogeneous(&AtiyahObject::Sym(gt.clone()), &ScalarDegree::density(), policy)? {
        return Err(RiemannianError::WrongDegree("g̃ is not of degree |r|".into()));
    }
    definite_on_samples(gt.matrix(), lb.total(), policy)?;
    Ok(gt)
}

fn descend(lb: &LineBundle, e: &Expr, what: &str, policy: &ZeroTestPolicy) -> Result<Expr> {
    let d = lb.at_unit_fibre(e);
    if !lb.policy(policy).is_zero(&(e - &d))? {
        return Err(RiemannianError::Invalid(format!("{what} depends on the fibre coordinate")));
    }
    Ok(d)
}

/// The triple of a degree-|r| metric g̃, in the trivialization that makes
/// u = G(𝕀, 𝕀) equal to 1. Returns the triple and u in the original one;
/// the new fibre coordinate is u·μ.
pub fn gtilde_to_triple(lb: &LineBundle, gt: &SymTensor2, policy: &ZeroTestPolicy) -> Result<(MetricTriple, Expr)> {
    let base = lb.base();
    let total = lb.total();
    let n = lb.n();
    let am = abs_mu(lb);
    let e = lb.euler();
    let gee = gt.eval(&e, &e)?;
    let u = descend(lb, &(&gee / &am), "g̃(ℰ,ℰ)/|μ|", policy)?;
    let pts = samples(base, policy, 0x1e)?;
    if pts.iter().any(|p| u.eval_at(p).map(|v| v.to_f64() <= 1e-12).unwrap_or(true)) {
        return Err(RiemannianError::Invalid("g̃(ℰ,ℰ) is not positive".into()));
    }
    let mut c = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    for i in 0..n {
        let ci = descend(lb, &(gt.eval(&VectorField::coord(total, i), &e)? / &gee), "the ℰ-component", policy)?;
        eta.push(u.diff(base.symbol(i)).map_err(CalcError::from)? / &u - &ci);
        c.push(ci);
    }
    let v: Vec<VectorField> = (0..n).map(|i| VectorField::coord(total, i).sub(&e.scale(&c[i]))).collect::<std::result::Result<_, _>>()?;
    let scale = (&am * &u).recip();
    let mut gm = ExprMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let gij = descend(lb, &(gt.eval(&v[i], &v[j])? * &scale), "g", policy)?;
            gm[(i, j)] = gij.clone();
            gm[(j, i)] = gij;
        }
    }
    let t = MetricTriple::new(lb, SymTensor2::new(base, gm)?, KForm::one_form(base, eta)?, policy)?;
    Ok((t, u))
}

/// A basis of sections of D|L| with anchors, actions on |L| and structure
/// constants.
#[derive(Debug, Clone)]
pub struct AlgebroidBasis {
    lb: LineBundle,
    /// ρ(e_a) on the base.
    anchor: Vec<VectorField>,
    /// e_a·s = ρ(e_a)s + f_a s.
    offset: Vec<Expr>,
    /// c[d][a][b]: [e_a, e_b] = c^d_ab e_d.
    structure: Vec<Expr>,
}

impl AlgebroidBasis {
    /// (𝕀, ∇_1, …, ∇_n) of a connection form η.
    pub fn twisted(lb: &LineBundle, eta: &KForm) -> Result<Self> {
        let base = lb.base();
        let n = lb.n();
        let m = n + 1;
        let coeffs = eta.one_form_coeffs();
        let mut anchor = vec![VectorField::new(base, vec![Expr::zero(); n])?];
        let mut offset = vec![Expr::one()];
        for (i, ci) in coeffs.iter().enumerate() {
            anchor.push(VectorField::coord(base, i));
            offset.push(ci.clone());
        }
        let deta = eta.d()?;
        let mut structure = vec![Expr::zero(); m * m * m];
        for i in 0..n {
            for j in 0..n {
                structure[(i + 1) * m + j + 1] = deta.coeff(&[i, j]);
            }
        }
        Ok(AlgebroidBasis { lb: lb.clone(), anchor, offset, structure })
    }
    pub fn len(&self) -> usize {
        self.anchor.len()
    }
    pub fn is_empty(&self) -> bool {
        self.anchor.is_empty()
    }
    pub fn bundle(&self) -> &LineBundle {
        &self.lb
    }
    pub fn anchor(&self, a: usize) -> &VectorField {
        &self.anchor[a]
    }
    pub fn offset(&self, a: usize) -> &Expr {
        &self.offset[a]
    }
    pub fn structure(&self, d: usize, a: usize, b: usize) -> &Expr {
        let m = self.len();
        &self.structure[(d * m + a) * m + b]
    }
    /// e_a acting on a section of |L|.
    pub fn act(&self, a: usize, s: &Expr) -> Result<Expr> {
        Ok(self.anchor[a].apply(s)? + &self.offset[a] * s)
    }
    /// e_a as a degree-0 vector field on the total space.
    pub fn lift(&self, a: usize) -> Result<VectorField> {
        Ok(self.lb.promote_derivation(&self.anchor[a], &self.offset[a])?)
    }

    /// The basis e'_a = Σ_b M_ba e_b.
    pub fn rebase(&self, mm: &ExprMatrix, policy: &ZeroTestPolicy) -> Result<AlgebroidBasis> {
        let m = self.len();
        let base = self.lb.base();
        let inv = mm.inverse(&base.policy(policy))?;
        let combine_fields = |a: usize| -> Result<VectorField> {
            let mut v = VectorField::new(base, vec![Expr::zero(); base.dim()])?;
            for b in 0..m {
                if !mm[(b, a)].is_zero_literal() {
                    v = v.add(&self.anchor[b].scale(&mm[(b, a)]))?;
                }
            }
            Ok(v)
        };
        let anchor: Vec<VectorField> = (0..m).map(combine_fields).collect::<Result<_>>()?;
        let offset: Vec<Expr> = (0..m).map(|a| Expr::add_all((0..m).map(|b| &mm[(b, a)] * &self.offset[b]))).collect();
        let mut structure = vec![Expr::zero(); m * m * m];
        for a in 0..m {
            for b in 0..m {
                // coefficients of [e'_a, e'_b] in the old basis
                let mut old = vec![Vec::new(); m];
                for c in 0..m {
                    for d in 0..m {
                        let w = &mm[(c, a)] * &mm[(d, b)];
                        if w.is_zero_literal() {
                            continue;
                        }
                        for e in 0..m {
                            let s = self.structure(e, c, d);
                            if !s.is_zero_literal() {
                                old[e].push(&w * s);
                            }
                        }
                    }
                }
                for d in 0..m {
                    old[d].push(anchor[a].apply(&mm[(d, b)])?);
                    old[d].push(-anchor[b].apply(&mm[(d, a)])?);
                }
                let old: Vec<Expr> = old.into_iter().map(Expr::add_all).collect();
                for d in 0..m {
                    structure[(d * m + a) * m + b] = Expr::add_all((0..m).map(|e| &inv[(d, e)] * &old[e]));
                }
            }
        }
        Ok(AlgebroidBasis { lb: self.lb.clone(), anchor, offset, structure })
    }
}

/// G over an algebroid basis; entries are sections of |L| in the
/// trivialization.
#[derive(Debug, Clone)]
pub struct AlgebroidMetric {
    pub basis: AlgebroidBasis,
    pub gram: ExprMatrix,
}

impl AlgebroidMetric {
    /// G(𝕀,𝕀) = u.
    pub fn unit(&self) -> &Expr {
        &self.gram[(0, 0)]
    }
    /// Gram matrix Mᵀ G M in the basis e'_a = Σ_b M_ba e_b.
    pub fn rebase(&self, mm: &ExprMatrix, policy: &ZeroTestPolicy) -> Result<AlgebroidMetric> {
        Ok(AlgebroidMetric { basis: self.basis.rebase(mm, policy)?, gram: mm.transpose().mul(&self.gram)?.mul(mm)? })
    }
    /// G(a, b) = g̃(ã, b̃)/|μ| on the lifts of the basis.
    pub fn from_gtilde(basis: AlgebroidBasis, gt: &SymTensor2, policy: &ZeroTestPolicy) -> Result<AlgebroidMetric> {
        let lb = basis.bundle().clone();
        let m = basis.len();
        let lifts: Vec<VectorField> = (0..m).map(|a| basis.lift(a)).collect::<Result<_>>()?;
        let am = abs_mu(&lb);
        let mut gram = ExprMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let e = descend(&lb, &(gt.eval(&lifts[a], &lifts[b])? / &am), "G", policy)?;
                gram[(a, b)] = e.clone();
                gram[(b, a)] = e;
            }
        }
        Ok(AlgebroidMetric { basis, gram })
    }
    pub fn is_definite(&self, policy: &ZeroTestPolicy) -> bool {
        definite_on_samples(&self.gram, self.basis.bundle().base(), policy).is_ok()
    }
}

/// G(𝕀,𝕀) = 1, G(𝕀, ∇_i) = 0, G(∇_i, ∇_j) = g_ij.
#[allow(non_snake_case)]
pub fn triple_to_G(t: &MetricTriple) -> Result<AlgebroidMetric> {
    let basis = AlgebroidBasis::twisted(&t.lb, &t.eta)?;
    let n = t.n();
    let gram = ExprMatrix::from_fn(n + 1, n + 1, |a, b| match (a, b) {
        (0, 0) => Expr::one(),
        (0, _) | (_, 0) => Expr::zero(),
        _ => t.g.get(a - 1, b - 1).clone(),
    });
    Ok(AlgebroidMetric { basis, gram })
}

/// ∇^D_{e_a} e_b = Γ^d_ab e_d.
#[derive(Debug, Clone)]
pub struct AlgebroidConnection {
    pub metric: AlgebroidMetric,
    gamma: Vec<Expr>,
}

impl AlgebroidConnection {
    pub fn gamma(&self, d: usize, a: usize, b: usize) -> &Expr {
        let m = self.metric.basis.len();
        &self.gamma[(d * m + a) * m + b]
    }
    pub fn all(&self) -> &[Expr] {
        &self.gamma
    }

    /// ∇_a e_b − ∇_b e_a − [e_a, e_b].
    pub fn symmetry_residuals(&self) -> Vec<Expr> {
        let m = self.metric.basis.len();
        let mut out = Vec::new();
        for d in 0..m {
            for a in 0..m {
                for b in a + 1..m {
                    out.push(self.gamma(d, a, b) - self.gamma(d, b, a) - self.metric.basis.structure(d, a, b));
                }
            }
        }
        out
    }

    /// e_a·G_bc − G(∇_a e_b, e_c) − G(e_b, ∇_a e_c).
    pub fn metricity_residuals(&self) -> Result<Vec<Expr>> {
        let m = self.metric.basis.len();
        let g = &self.metric.gram;
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                for c in b..m {
                    let mut t = vec![self.metric.basis.act(a, &g[(b, c)])?];
                    for d in 0..m {
                        t.push(-(self.gamma(d, a, b) * &g[(d, c)]));
                        t.push(-(self.gamma(d, a, c) * &g[(b, d)]));
                    }
                    out.push(Expr::add_all(t));
                }
            }
        }
        Ok(out)
    }

    pub fn residuals_vanish(&self, policy: &ZeroTestPolicy) -> Result<(bool, bool)> {
        let pol = self.metric.basis.bundle().base().policy(policy);
        Ok((pol.all_zero(&self.symmetry_residuals())?, pol.all_zero(&self.metricity_residuals()?)?))
    }
}

/// Christoffels from 2G(∇_a b, c) = a·G_bc + b·G_ac − c·G_ab + G([a,b],c)
/// − G([a,c],b) − G([b,c],a).
pub fn koszul_connection(metric: &AlgebroidMetric, policy: &ZeroTestPolicy) -> Result<AlgebroidConnection> {
    let basis = &metric.basis;
    let m = basis.len();
    let g = &metric.gram;
    let pol = basis.bundle().base().policy(policy);
    if pol.is_zero(&g.det(&pol)?)? {
        return Err(RiemannianError::Degenerate);
    }
    let ginv = g.inverse(&pol).map_err(|_| RiemannianError::Degenerate)?;
    let lower = |a: usize, b: usize, c: usize| Expr::add_all((0..m).map(|e| basis.structure(e, a, b) * &g[(e, c)]));
    let mut k = vec![Expr::zero(); m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let t = vec![
                    basis.act(a, &g[(b, c)])?,
                    basis.act(b, &g[(a, c)])?,
                    -basis.act(c, &g[(a, b)])?,
                    lower(a, b, c),
                    -lower(a, c, b),
                    -lower(b, c, a),
                ];
                k[(a * m + b) * m + c] = Expr::add_all(t);
            }
        }
    }
    let half = Expr::rational(1, 2);
    let mut gamma = vec![Expr::zero(); m * m * m];
    for d in 0..m {
        for a in 0..m {
            for b in 0..m {
                let s = Expr::add_all((0..m).filter(|c| !ginv[(d, *c)].is_zero_literal()).map(|c| &ginv[(d, c)] * &k[(a * m + b) * m + c]));
                gamma[(d * m + a) * m + b] = &half * &s;
            }
        }
    }
    Ok(AlgebroidConnection { metric: metric.clone(), gamma })
}

/// R[f][c][a][b]: the e_f component of R^D(e_a, e_b)e_c.
#[derive(Debug, Clone)]
pub struct CurvatureRD {
    m: usize,
    data: Vec<Expr>,
}

impl CurvatureRD {
    pub fn get(&self, f: usize, c: usize, a: usize, b: usize) -> &Expr {
        let m = self.m;
        &self.data[((f * m + c) * m + a) * m + b]
    }
    pub fn all(&self) -> &[Expr] {
        &self.data
    }
    pub fn dim(&self) -> usize {
        self.m
    }
    /// Splits a flat index back into (f, c, a, b).
    pub fn index(&self, i: usize) -> (usize, usize, usize, usize) {
        let m = self.m;
        (i / (m * m * m), (i / (m * m)) % m, (i / m) % m, i % m)
    }
    pub fn antisymmetry_residuals(&self) -> Vec<Expr> {
        let m = self.m;
        let mut out = Vec::new();
        for f in 0..m {
            for c in 0..m {
                for a in 0..m {
                    for b in a..m {
                        out.push(self.get(f, c, a, b) + self.get(f, c, b, a));
                    }
                }
            }
        }
        out
    }
}

/// R^D(a,b)c = ∇_a∇_b c − ∇_b∇_a c − ∇_{[a,b]}c.
pub fn curvature_rd(conn: &AlgebroidConnection) -> Result<CurvatureRD> {
    let basis = &conn.metric.basis;
    let m = basis.len();
    let mut data = vec![Expr::zero(); m * m * m * m];
    for f in 0..m {
        for c in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let mut t = vec![basis.anchor(a).apply(conn.gamma(f, b, c))?, -basis.anchor(b).apply(conn.gamma(f, a, c))?];
                    for d in 0..m {
                        t.push(conn.gamma(d, b, c) * conn.gamma(f, a, d));
                        t.push(-(conn.gamma(d, a, c) * conn.gamma(f, b, d)));
                        let s = basis.structure(d, a, b);
                        if !s.is_zero_literal() {
                            t.push(-(s * conn.gamma(f, d, c)));
                        }
                    }
                    data[((f * m + c) * m + a) * m + b] = Expr::add_all(t);
                }
            }
        }
    }
    Ok(CurvatureRD { m, data })
}

/// R^D of a triple in the basis (𝕀, ∇_i).
pub fn rd_of_triple(t: &MetricTriple, policy: &ZeroTestPolicy) -> Result<CurvatureRD> {
    curvature_rd(&koszul_connection(&triple_to_G(t)?, policy)?)
}

/// Coordinate arrays on the base. `a[j][i]` is the ∂_j component of A(∂_i),
/// `b[w][i][j]` that of B(∂_i, ∂_j), likewise for C, and `d[w][i][j][k]` that
/// of D(∂_i, ∂_j, ∂_k). The `_low` arrays carry the index lowered by g.
#[derive(Debug, Clone)]
pub struct Abcd {
    pub n: usize,
    pub a_low: Vec<Expr>,
    pub a: Vec<Expr>,
    pub b_low: Vec<Expr>,
    pub b: Vec<Expr>,
    pub c: Vec<Expr>,
    pub d_low: Vec<Expr>,
    pub d: Vec<Expr>,
}

impl Abcd {
    pub fn a(&self, j: usize, i: usize) -> &Expr {
        &self.a[j * self.n + i]
    }
    pub fn b(&self, w: usize, i: usize, j: usize) -> &Expr {
        let n = self.n;
        &self.b[(w * n + i) * n + j]
    }
    pub fn c(&self, w: usize, i: usize, j: usize) -> &Expr {
        let n = self.n;
        &self.c[(w * n + i) * n + j]
    }
    pub fn d(&self, w: usize, i: usize, j: usize, k: usize) -> &Expr {
        let n = self.n;
        &self.d[((w * n + i) * n + j) * n + k]
    }
    /// g(A(∂_i), ∂_j).
    pub fn a_low(&self, i: usize, j: usize) -> &Expr {
        &self.a_low[i * self.n + j]
    }
    /// g(D(∂_i, ∂_j, ∂_k), ∂_w).
    pub fn d_low(&self, i: usize, j: usize, k: usize, w: usize) -> &Expr {
        let n = self.n;
        &self.d_low[((i * n + j) * n + k) * n + w]
    }
}

/// Which version of the curvature formulas to use.
///
/// `Printed` takes them literally. `Corrected` differs in two signs: the
/// 𝕀-term of R^D(∇X,∇Y)∇Z is +¼g(C(X,Y),Z)𝕀, as G-skewness of R^D and the
/// formula for R^D(∇X,∇Y)𝕀 demand, and the quadratic term of D reads
/// dη(X,Y)dη(Z,W). A, B and C are the same in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaSet {
    Printed,
    Corrected,
}

pub fn tensors_abcd(t: &MetricTriple, policy: &ZeroTestPolicy) -> Result<Abcd> {
    tensors_abcd_with(t, FormulaSet::Printed, policy)
}

pub fn tensors_abcd_with(t: &MetricTriple, set: FormulaSet, policy: &ZeroTestPolicy) -> Result<Abcd> {
    let n = t.n();
    let metric = Metric::new(t.g.clone(), &t.lb.base().policy(policy))?;
    let g = t.g.matrix();
    let gi = metric.inverse();
    let eta = t.eta.one_form_coeffs();
    let deta_form = t.eta.d()?;
    let de = deta_form.two_form_matrix();
    // ∇η[i][j] = (∇_{∂i}η)(∂j)
    let mut ne = ExprMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ne[(i, j)] = metric.nabla_form(&t.eta, i, &[j])?;
        }
    }
    let eta_up: Vec<Expr> = (0..n).map(|a| Expr::add_all((0..n).map(|b| &gi[(a, b)] * &eta[b]))).collect();
    let eta_sq = Expr::add_all((0..n).map(|a| &eta_up[a] * &eta[a]));
    // (i_{η♯}dη)_j = dη(η♯, ∂_j)
    let i_eta_de: Vec<Expr> = (0..n).map(|j| Expr::add_all((0..n).map(|a| &eta_up[a] * &de[(a, j)]))).collect();

    let mut a_low = vec![Expr::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = vec![ne[(i, j)].clone(), ne[(j, i)].clone(), -(&eta[i] * &eta[j]), &eta_sq * &g[(i, j)]];
            for a in 0..n {
                for b in 0..n {
                    if !gi[(a, b)].is_zero_literal() {
                        s.push(-(&de[(i, a)] * &gi[(a, b)] * &de[(j, b)]));
                    }
                }
            }
            a_low[i * n + j] = Expr::add_all(s);
        }
    }
    let raise = |low: &dyn Fn(usize) -> Expr, w: usize| Expr::add_all((0..n).map(|v| &gi[(w, v)] * &low(v)));
    let mut a = vec![Expr::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            a[j * n + i] = raise(&|v| a_low[i * n + v].clone(), j);
        }
    }

    let mut b_low = vec![Expr::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for w in 0..n {
                let t1 = metric.nabla_form(&deta_form, i, &[j, w])?.scale(&Q::from_integer(2.into()));
                let t2 = -((&eta[j] + &i_eta_de[j]) * &g[(i, w)]);
                let t3 = &g[(i, j)] * &(&eta[w] + &i_eta_de[w]);
                b_low[(i * n + j) * n + w] = Expr::add_all([t1, t2, t3]);
            }
        }
    }
    let mut b = vec![Expr::zero(); n * n * n];
    let mut c = vec![Expr::zero(); n * n * n];
    for w in 0..n {
        for i in 0..n {
            for j in 0..n {
                b[(w * n + i) * n + j] = raise(&|v| b_low[(i * n + j) * n + v].clone(), w);
            }
        }
    }
    for w in 0..n {
        for i in 0..n {
            for j in 0..n {
                c[(w * n + i) * n + j] = &b[(w * n + i) * n + j] - &b[(w * n + j) * n + i];
            }
        }
    }

    let riem = metric.riemann()?;
    // g(R(∂x,∂y)∂z, ∂w)
    let gr = |x: usize, y: usize, z: usize, w: usize| Expr::add_all((0..n).map(|a| &g[(w, a)] * riem.get(a, z, x, y)));
    let e = |x: usize, y: usize, z: usize, w: usize| {
        Expr::add_all([
            gr(x, y, z, w).scale(&Q::from_integer(2.into())),
            &g[(x, z)] * &g[(y, w)],
            (&ne[(x, z)] + &ne[(z, x)] - &eta[x] * &eta[z] + &eta_sq * &g[(x, z)]) * &g[(y, w)],
            -((&ne[(x, w)] + &ne[(w, x)] - &eta[x] * &eta[w]) * &g[(y, z)]),
            match set {
                FormulaSet::Printed => &de[(x, y)] * &de[(w, z)],
                FormulaSet::Corrected => &de[(x, y)] * &de[(z, w)],
            },
            &de[(x, z)] * &de[(y, w)],
        ])
    };
    let mut d_low = vec![Expr::zero(); n * n * n * n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    d_low[((x * n + y) * n + z) * n + w] = e(x, y, z, w) - e(y, x, z, w);
                }
            }
        }
    }
    let mut d = vec![Expr::zero(); n * n * n * n];
    for w in 0..n {
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    d[((w * n + x) * n + y) * n + z] = raise(&|v| d_low[((x * n + y) * n + z) * n + v].clone(), w);
                }
            }
        }
    }
    Ok(Abcd { n, a_low, a, b_low, b, c, d_low, d })
}

/// R^D in the basis (𝕀, ∇_i) as predicted by
///   R^D(𝕀,∇X)𝕀 = ¼∇_{A(X)},
///   R^D(𝕀,∇X)∇Y = ¼(∇_{B(X,Y)} − g(A(X),Y)𝕀),
///   R^D(∇X,∇Y)𝕀 = −¼∇_{C(X,Y)},
///   R^D(∇X,∇Y)∇Z = ¼(∇_{D(X,Y,Z)} − g(C(X,Y),Z)𝕀),
/// extended by antisymmetry in the two arguments. `Corrected` flips the sign
/// of the last 𝕀-term.
pub fn predicted_rd(t: &MetricTriple, abcd: &Abcd, set: FormulaSet) -> CurvatureRD {
    let n = t.n();
    let m = n + 1;
    let g = t.g.matrix();
    let q = Expr::rational(1, 4);
    let mut data = vec![Expr::zero(); m * m * m * m];
    let idx = |f: usize, c: usize, a: usize, b: usize| ((f * m + c) * m + a) * m + b;
    let c_low = |i: usize, j: usize, k: usize| Expr::add_all((0..n).map(|w| abcd.c(w, i, j) * &g[(w, k)]));
    for x in 0..n {
        // first argument 𝕀
        for f in 0..n {
            let v = &q * abcd.a(f, x);
            data[idx(f + 1, 0, 0, x + 1)] = v.clone();
            data[idx(f + 1, 0, x + 1, 0)] = -v;
        }
        for y in 0..n {
            let v0 = -(&q * abcd.a_low(x, y));
            data[idx(0, y + 1, 0, x + 1)] = v0.clone();
            data[idx(0, y + 1, x + 1, 0)] = -v0;
            for f in 0..n {
                let v = &q * abcd.b(f, x, y);
                data[idx(f + 1, y + 1, 0, x + 1)] = v.clone();
                data[idx(f + 1, y + 1, x + 1, 0)] = -v;
            }
            // both arguments horizontal
            for f in 0..n {
                data[idx(f + 1, 0, x + 1, y + 1)] = -(&q * abcd.c(f, x, y));
            }
            for z in 0..n {
                let v = &q * &c_low(x, y, z);
                data[idx(0, z + 1, x + 1, y + 1)] = match set {
                    FormulaSet::Printed => -v,
                    FormulaSet::Corrected => v,
                };
                for f in 0..n {
                    data[idx(f + 1, z + 1, x + 1, y + 1)] = &q * abcd.d(f, x, y, z);
                }
            }
        }
    }
    CurvatureRD { m, data }
}

#[derive(Debug, Clone)]
pub struct RdComparison {
    pub agree: bool,
    /// First disagreeing component as (f, c, a, b) with the sample witness.
    pub witness: Option<String>,
}

/// Compares R^D from the Koszul connection against the four displayed
/// formulas, component by component under the zero test.
pub fn verify_rd_formulas(t: &MetricTriple, policy: &ZeroTestPolicy) -> Result<RdComparison> {
    verify_rd_formulas_with(t, FormulaSet::Printed, policy)
}

pub fn verify_rd_formulas_with(t: &MetricTriple, set: FormulaSet, policy: &ZeroTestPolicy) -> Result<RdComparison> {
    let rd = rd_of_triple(t, policy)?;
    let abcd = tensors_abcd_with(t, set, policy)?;
    compare_rd(t, &rd, &predicted_rd(t, &abcd, set), policy)
}

pub fn compare_rd(t: &MetricTriple, rd: &CurvatureRD, predicted: &CurvatureRD, policy: &ZeroTestPolicy) -> Result<RdComparison> {
    let pol = t.lb.base().policy(policy);
    let diffs: Vec<Expr> = rd.all().iter().zip(predicted.all()).map(|(a, b)| a - b).collect();
    Ok(match pol.check_all(&diffs)? {
        ZeroVerdict::NonZero(w) => {
            let (f, c, a, b) = rd.index(w.index);
            RdComparison { agree: false, witness: Some(format!("component ({f}, {c}, {a}, {b}): {w}")) }
        }
        _ => RdComparison { agree: true, witness: None },
    })
}

#[derive(Debug, Clone)]
pub struct RiemannianReport {
    pub rd_zero: bool,
    pub a_zero: bool,
    pub b_zero: bool,
    pub c_zero: bool,
    pub d_zero: bool,
    /// The printed formulas reproduce R^D.
    pub formulas_agree: bool,
    /// The corrected formulas reproduce R^D.
    pub corrected_agree: bool,
    /// D of the corrected set vanishes.
    pub d_corrected_zero: bool,
    /// Flatness of g̃ computed upstairs through its own Riemann tensor.
    pub gtilde_flat: bool,
    pub integrable: bool,
    pub homogeneous_integrable: Option<bool>,
    pub witness: Option<String>,
    pub note: &'static str,
}

impl RiemannianReport {
    pub fn abd_zero(&self) -> bool {
        self.a_zero && self.b_zero && self.d_zero
    }
    /// R^D = 0 ⇔ A = B = D = 0 ⇔ riemann(g̃) = 0, and B = 0 ⇒ C = 0.
    pub fn equivalence_violated(&self) -> bool {
        self.rd_zero != self.abd_zero() || self.rd_zero != self.gtilde_flat || (self.b_zero && !self.c_zero)
    }
    pub fn falsification(&self) -> bool {
        !self.formulas_agree || self.equivalence_violated()
    }
}

fn verdict_of(pol: &ZeroTestPolicy, es: &[Expr], name: &str, witness: &mut Option<String>) -> Result<bool> {
    match pol.check_all(es)? {
        ZeroVerdict::NonZero(w) => {
            if witness.is_none() {
                *witness = Some(format!("{name}[{}] {w}", w.index));
            }
            Ok(false)
        }
        _ => Ok(true),
    }
}

pub fn integrability_report_o(t: &MetricTriple, policy: &ZeroTestPolicy) -> Result<RiemannianReport> {
    let pol = t.lb.base().policy(policy);
    let rd = rd_of_triple(t, policy)?;
    let abcd = tensors_abcd(t, policy)?;
    let cmp = compare_rd(t, &rd, &predicted_rd(t, &abcd, FormulaSet::Printed), policy)?;
    let fixed = tensors_abcd_with(t, FormulaSet::Corrected, policy)?;
    let corrected = compare_rd(t, &rd, &predicted_rd(t, &fixed, FormulaSet::Corrected), policy)?;
    let d_corrected_zero = pol.all_zero(&fixed.d)?;
    let mut witness = None;
    let a_zero = verdict_of(&pol, &abcd.a, "A", &mut witness)?;
    let b_zero = verdict_of(&pol, &abcd.b, "B", &mut witness)?;
    let c_zero = verdict_of(&pol, &abcd.c, "C", &mut witness)?;
    let d_zero = verdict_of(&pol, &abcd.d, "D", &mut witness)?;
    let rd_zero = pol.all_zero(rd.all())?;
    let gt = triple_to_gtilde(t)?;
    let tpol = t.lb.policy(policy);
    let gtilde_flat = tpol.all_zero(Metric::new(gt, &tpol)?.riemann()?.all())?;
    let eta_zero = t.eta.is_zero(policy)?;
    Ok(RiemannianReport {
        rd_zero,
        a_zero,
        b_zero,
        c_zero,
        d_zero,
        formulas_agree: cmp.agree,
        corrected_agree: corrected.agree,
        d_corrected_zero,
        gtilde_flat,
        integrable: gtilde_flat,
        homogeneous_integrable: eta_zero.then_some(gtilde_flat),
        witness: cmp.witness.map(|w| format!("printed formulas: {w}")).or(witness),
        note: if eta_zero {
            "η = 0: integrable and homogeneous integrable coincide; flat charts are built for the round sphere of radius 2"
        } else {
            "η ≠ 0: homogeneous integrability is not decided"
        },
    })
}

/// Flat homogeneous chart for (4g(Sⁿ), η = 0) on μ > 0.
#[derive(Debug, Clone)]
pub struct SphereChart {
    pub triple: MetricTriple,
    pub gtilde: SymTensor2,
    pub chi: Vec<Expr>,
    /// riemann(g̃) = 0.
    pub flat: bool,
    /// g̃ = dR⊙dR + R²g(Sⁿ) with R = 2μ^{1/2}.
    pub polar_form: bool,
    /// g̃ = Σ dχ^i⊙dχ^i.
    pub normal_form: bool,
    /// χ^i(x, rμ) = r^{1/2}χ^i(x, μ) for r > 0.
    pub homogeneous: bool,
}

impl SphereChart {
    pub fn passed(&self) -> bool {
        self.flat && self.polar_form && self.normal_form && self.homogeneous
    }
}

/// Spherical coordinates z1…zn with 0 < z_i < 3 for i < n.
pub fn sphere_bundle(n: usize) -> Result<LineBundle> {
    if !(1..=3).contains(&n) {
        return Err(RiemannianError::UnsupportedDimension(n));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("z{i}")).collect();
    let mut cons = Vec::new();
    for nm in &names[..n - 1] {
        cons.push(Constraint::gt(nm, Q::from_integer(0.into())));
        cons.push(Constraint::lt(nm, Q::from_integer(3.into())));
    }
    let base = Chart::with_constraints(&format!("S{n}"), names.iter().map(|s| Symbol::real(s)).collect(), cons)?;
    Ok(LineBundle::new(&base, Branch::Positive)?)
}

/// The round metric of Sⁿ: dz1² + sin²z1 dz2² + sin²z1 sin²z2 dz3² + ….
pub fn round_sphere(base: &Arc<Chart>) -> Result<SymTensor2> {
    let n = base.dim();
    let mut diag = vec![Expr::one()];
    for i in 1..n {
        diag.push(&diag[i - 1] * &base.coord(i - 1).sin().powi(2));
    }
    Ok(SymTensor2::new(base, ExprMatrix::diagonal(&diag))?)
}

/// Y^i(z) with R·Y the Cartesian coordinates.
fn sphere_embedding(base: &Chart) -> Vec<Expr> {
    let n = base.dim();
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = Expr::one();
    for i in 0..n {
        out.push(&prod * &base.coord(i).cos());
        prod = &prod * &base.coord(i).sin();
    }
    out.push(prod);
    out
}

pub fn sphere_flat_chart(n: usize, policy: &ZeroTestPolicy) -> Result<SphereChart> {
    let lb = sphere_bundle(n)?;
    let base = lb.base();
    let total = lb.total();
    let gs = round_sphere(base)?;
    let triple = MetricTriple::new(&lb, gs.scale(&Expr::int(4)), KForm::zero(base, 1), policy)?;
    let gt = triple_to_gtilde(&triple)?;
    let pol = lb.policy(policy);
    let fi = lb.fibre_index();

    let big_r = Expr::int(2) * lb.mu().sqrt();
    let chi: Vec<Expr> = sphere_embedding(base).iter().map(|y| &big_r * y).collect();

    let flat = pol.all_zero(Metric::new(gt.clone(), &pol)?.riemann()?.all())?;

    let dr: Vec<Expr> = total.coords().iter().map(|s| big_r.diff(s)).collect::<std::result::Result<_, _>>().map_err(CalcError::from)?;
    let r2 = big_r.powi(2);
    let polar = symmetric(total, n + 1, |i, j| {
        let sph = if i != fi && j != fi { &r2 * gs.get(i, j) } else { Expr::zero() };
        &dr[i] * &dr[j] + sph
    })?;
    let polar_form = gt.equals(&polar, &pol)?;

    let jac: Vec<Vec<Expr>> = chi
        .iter()
        .map(|c| total.coords().iter().map(|s| c.diff(s)).collect::<std::result::Result<Vec<_>, _>>())
        .collect::<std::result::Result<_, _>>()
        .map_err(CalcError::from)?;
    let euclid = symmetric(total, n + 1, |i, j| Expr::add_all(jac.iter().map(|row| &row[i] * &row[j])))?;
    let normal_form = gt.equals(&euclid, &pol)?;

    let r = Expr::var(&Symbol::action());
    let scaled_mu = &r * &lb.mu();
    let root_r = r.sqrt();
    let homog: Vec<Expr> = chi.iter().map(|c| c.subst1(lb.mu_symbol(), &scaled_mu) - &root_r * c).collect();
    let homogeneous = pol.all_zero(&homog)?;

    Ok(SphereChart { triple, gtilde: gt, chi, flat, polar_form, normal_form, homogeneous })
}
