//! Trivial-degree homogeneous Sp_k-structures: degree-0 symplectic forms
//! ω̃ = Ω + (dμ/μ)∧η on L̃_U and the cosymplectic pairs (Ω, η) on U.
//!
//! Sign convention: with the interior product on the first slot,
//! i_ℰω̃ = η.


use thiserror::Error;

use crate::calculus::{CalcError, KForm, VectorField};
use crate::contact::canonical_form_of_frame;
use crate::exprcore::{Expr, ExprMatrix, MatrixError, ZeroTestError, ZeroTestPolicy, Q};
use crate::groups::{GroupId, QMatrix, SymbolicQuotient};
use crate::homframe::{degree_coset, is_homogeneous_chart, Frame, HomFrameError};
use crate::linebundle::{AtiyahObject, Branch, LineBundle, LineBundleError, ScalarDegree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CosymplecticError {
    #[error("base has dimension {got}, expected 2k − 1 = {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("form is not homogeneous of degree 0")]
    Degree,
    #[error("frame has the wrong degree: {0}")]
    WrongDegree(String),
    #[error(transparent)]
    LineBundle(#[from] LineBundleError),
    #[error(transparent)]
    Frame(#[from] HomFrameError),
    #[error(transparent)]
    Contact(#[from] crate::contact::ContactError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

#[derive(Debug, Clone)]
pub struct CosymplecticPair {
    pub lb: LineBundle,
    pub big_omega: KForm,
    pub eta: KForm,
}

impl CosymplecticPair {
    pub fn new(lb: &LineBundle, big_omega: KForm, eta: KForm) -> Result<Self, CosymplecticError> {
        for (w, d) in [(&big_omega, 2), (&eta, 1)] {
            if **w.chart() != **lb.base() {
                return Err(CalcError::ChartMismatch(w.chart().to_string(), lb.base().to_string()).into());
            }
            if w.degree() != d {
                return Err(CalcError::Degree { expected: d, got: w.degree() }.into());
            }
        }
        Ok(CosymplecticPair { lb: lb.clone(), big_omega, eta })
    }
}

fn dlog_mu(lb: &LineBundle) -> KForm {
    lb.dmu().scale(&lb.mu().recip())
}

/// ω̃ = Ω + (dμ/μ)∧η.
pub fn pair_to_omega0(pair: &CosymplecticPair) -> Result<KForm, CosymplecticError> {
    let lb = &pair.lb;
    let eta = lb.lift_form(&pair.eta)?;
    Ok(lb.lift_form(&pair.big_omega)?.add(&dlog_mu(lb).wedge(&eta)?)?)
}

/// (Ω, η) of a degree-0 2-form: η = i_ℰω̃ and Ω = ω̃ − (dμ/μ)∧η, both basic
/// and μ-free.
pub fn omega0_to_pair(lb: &LineBundle, omega: &KForm, policy: &ZeroTestPolicy) -> Result<CosymplecticPair, CosymplecticError> {
    require_degree_zero(lb, omega, policy)?;
    let eta_up = omega.interior(&lb.euler())?;
    let rest = omega.sub(&dlog_mu(lb).wedge(&eta_up)?)?;
    // μ·(degree-0 basic form) is degree 1 and basic, so descent applies
    let eta = lb.descend_form(&eta_up.scale(&lb.mu()), policy)?;
    let big_omega = lb.descend_form(&rest.scale(&lb.mu()), policy)?;
    CosymplecticPair::new(lb, big_omega, eta)
}

fn require_degree_zero(lb: &LineBundle, omega: &KForm, policy: &ZeroTestPolicy) -> Result<(), CosymplecticError> {
    if !lb.is_homogeneous(&AtiyahObject::Form(omega.clone()), &ScalarDegree::trivial(), policy)? {
        return Err(CosymplecticError::Degree);
    }
    Ok(())
}

/// η∧Ω^{k−1}.
pub fn volume_form(pair: &CosymplecticPair, k: usize) -> Result<KForm, CosymplecticError> {
    let mut v = pair.eta.clone();
    for _ in 1..k {
        v = v.wedge(&pair.big_omega)?;
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosymplecticCheck {
    pub volume: bool,
    pub d_big_omega_zero: bool,
    pub d_eta_zero: bool,
    pub omega_nondegenerate: bool,
    pub omega_closed: bool,
}

impl CosymplecticCheck {
    pub fn cocycle(&self) -> bool {
        self.d_big_omega_zero && self.d_eta_zero
    }
    /// Nondegeneracy ⇔ volume, and closedness ⇔ dΩ = dη = 0.
    pub fn equivalences_hold(&self) -> bool {
        self.omega_nondegenerate == self.volume && self.omega_closed == self.cocycle()
    }
}

pub fn check_cosymplectic(pair: &CosymplecticPair, k: usize, policy: &ZeroTestPolicy) -> Result<CosymplecticCheck, CosymplecticError> {
    let n = pair.lb.n();
    if k == 0 || n != 2 * k - 1 {
        return Err(CosymplecticError::Dimension { expected: (2 * k).saturating_sub(1), got: n });
    }
    let bpol = pair.lb.base().policy(policy);
    let vol = volume_form(pair, k)?;
    let top: Vec<usize> = (0..n).collect();
    let volume = !bpol.is_zero(&vol.coeff(&top))?;
    let d_big_omega_zero = pair.big_omega.d()?.is_zero(&bpol)?;
    let d_eta_zero = pair.eta.d()?.is_zero(&bpol)?;
    let w = pair_to_omega0(pair)?;
    let tpol = pair.lb.policy(policy);
    let omega_nondegenerate = !tpol.is_zero(&w.two_form_matrix().det(&tpol)?)?;
    let omega_closed = w.d()?.is_zero(&tpol)?;
    Ok(CosymplecticCheck { volume, d_big_omega_zero, d_eta_zero, omega_nondegenerate, omega_closed })
}

/// ω̃ of a frame whose degree class in N(Sp_k)/Sp_k is trivial.
pub fn frame_to_omega0(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<KForm, CosymplecticError> {
    let lb = sigma.bundle();
    let k = sigma.len() / 2;
    let coset = degree_coset(sigma, GroupId::Sp(k), policy)?;
    let pol = lb.policy(policy);
    let trivial = match &coset.quotient {
        SymbolicQuotient::Scalar(p) => pol.is_zero(&(p - Expr::one()))?,
        _ => false,
    };
    let trivial_neg = coset.at_minus_one.is_none_or(|v| v == GroupId::Sp(k).neutral());
    if !trivial || !trivial_neg {
        return Err(CosymplecticError::WrongDegree(format!("quotient {:?}", coset.quotient)));
    }
    let w = canonical_form_of_frame(sigma, policy)?;
    require_degree_zero(lb, &w, policy)?;
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct IntegrabilityReport0 {
    pub homogeneous_integrable: Option<bool>,
    pub integrable: bool,
    pub cocycle: bool,
    pub chart: Option<Vec<Expr>>,
    pub note: Option<String>,
}

impl IntegrabilityReport0 {
    pub fn falsification(&self) -> bool {
        self.integrable != self.cocycle || self.homogeneous_integrable.is_some_and(|h| h != self.cocycle)
    }
}

/// Linear Darboux coordinates of a constant 2-form in the coordinates
/// (x_1, …, x_n, t). Returns the rows of a matrix M with ω = Σ dχ^i∧dχ^{k+i}
/// for χ = M·(x, t), and with ∂/∂χ¹ = ∂_t.
fn linear_darboux(w: &QMatrix, first: usize) -> Option<QMatrix> {
    let n1 = w.rows();
    let pair = |a: &[Q], b: &[Q]| -> Q {
        let mut s = Q::from_integer(0.into());
        for i in 0..n1 {
            for j in 0..n1 {
                s += &a[i] * &w[(i, j)] * &b[j];
            }
        }
        s
    };
    let unit = |i: usize| -> Vec<Q> { (0..n1).map(|j| Q::from_integer(((i == j) as i64).into())).collect() };
    let mut pool: Vec<Vec<Q>> = std::iter::once(unit(first)).chain((0..n1).filter(|&i| i != first).map(unit)).collect();
    let (mut es, mut fs) = (Vec::new(), Vec::new());
    while !pool.is_empty() {
        let e = pool.remove(0);
        let b = pool.iter().position(|v| !num_traits::Zero::is_zero(&pair(&e, v)))?;
        let v = pool.remove(b);
        let c = pair(&e, &v);
        let f: Vec<Q> = v.iter().map(|x| x / &c).collect();
        pool = pool
            .into_iter()
            .map(|x| {
                let a = pair(&x, &f);
                let b = pair(&x, &e);
                (0..n1).map(|i| &x[i] - &a * &e[i] + &b * &f[i]).collect()
            })
            .collect();
        es.push(e);
        fs.push(f);
    }
    // frame F = (e_1 … e_k f_1 … f_k) as columns; χ = F^{-1}·y
    let mut cols = es;
    cols.extend(fs);
    let f = QMatrix::from_fn(n1, n1, |i, j| cols[j][i].clone());
    f.inverse().ok()
}

/// cocycle := dω̃ = 0; integrable := dΩ = dη = 0 for the descended pair;
/// homogeneous integrable := a chart χ with trivial A is verified. For
/// constant (Ω, η) the chart is χ = M·(x, log|μ|) from a linear Darboux basis
/// whose first vector is ℰ.
pub fn integrability_report0(lb: &LineBundle, omega: &KForm, policy: &ZeroTestPolicy) -> Result<IntegrabilityReport0, CosymplecticError> {
    let pair = omega0_to_pair(lb, omega, policy)?;
    let tpol = lb.policy(policy);
    let bpol = lb.base().policy(policy);
    let nondeg = !tpol.is_zero(&omega.two_form_matrix().det(&tpol)?)?;
    let cocycle = omega.d()?.is_zero(&tpol)? && nondeg;
    let integrable = pair.big_omega.d()?.is_zero(&bpol)? && pair.eta.d()?.is_zero(&bpol)? && nondeg;
    if !cocycle {
        return Ok(IntegrabilityReport0 { homogeneous_integrable: Some(false), integrable, cocycle, chart: None, note: None });
    }
    let n = lb.n();
    let constant = pair.big_omega.terms().values().chain(pair.eta.terms().values()).all(|c| c.as_const().is_some());
    if !constant {
        let note = Some("no chart construction for non-constant coefficients".to_string());
        return Ok(IntegrabilityReport0 { homogeneous_integrable: None, integrable, cocycle, chart: None, note });
    }
    // ω̃ in coordinates (x, t = log|μ|): Ω + dt∧η
    let n1 = n + 1;
    let mut w = QMatrix::zeros(n1, n1);
    for i in 0..n1 {
        for j in 0..n1 {
            let c = if i < n && j < n {
                pair.big_omega.coeff(&[i, j])
            } else if i == n && j < n {
                pair.eta.coeff(&[j])
            } else if j == n && i < n {
                -pair.eta.coeff(&[i])
            } else {
                Expr::zero()
            };
            w[(i, j)] = c.as_const().cloned().expect("constant coefficients");
        }
    }
    let Some(m) = linear_darboux(&w, n) else {
        return Ok(IntegrabilityReport0 { homogeneous_integrable: Some(false), integrable, cocycle, chart: None, note: Some("degenerate".into()) });
    };
    let t = match lb.branch() {
        Branch::Positive => lb.mu().log(),
        Branch::Full => lb.mu().abs().log(),
    };
    let mut y: Vec<Expr> = (0..n).map(|i| lb.total().coord(i)).collect();
    y.push(t);
    let chi: Vec<Expr> = (0..n1).map(|a| Expr::add_all((0..n1).map(|b| Expr::constant(m[(a, b)].clone()) * &y[b]))).collect();
    let verified = verify_trivial_chart(lb, omega, &chi, policy)?;
    Ok(IntegrabilityReport0 {
        homogeneous_integrable: Some(verified),
        integrable,
        cocycle,
        chart: verified.then_some(chi),
        note: (!verified).then(|| "constructed chart failed verification".to_string()),
    })
}

/// The chart is homogeneous with A = I, b = (log r, 0, …, 0), and its coordinate
/// frame is symplectic for ω̃.
pub fn verify_trivial_chart(lb: &LineBundle, omega: &KForm, chi: &[Expr], policy: &ZeroTestPolicy) -> Result<bool, CosymplecticError> {
    let pol = lb.policy(policy);
    let rep = match is_homogeneous_chart(lb, chi, policy) {
        Ok(r) => r,
        Err(HomFrameError::NotHomogeneous(_)) | Err(HomFrameError::Degenerate) => return Ok(false),
        Err(e) => return Err(e.into()),
    };
    let n1 = chi.len();
    let r = Expr::var(&crate::exprcore::Symbol::action());
    let mut b = vec![Expr::zero(); n1];
    b[0] = r.log();
    let b_ok = pol.all_zero(&rep.b.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>())?;
    let a_ok = rep.a.equals(&ExprMatrix::identity(n1), &pol)?;
    let sigma = Frame::of_chart(lb, chi, policy)?;
    let first_is_euler = sigma.field(0).equals(&lb.euler(), &pol)?;
    let symplectic = canonical_form_of_frame(&sigma, policy)?.equals(omega, &pol)?;
    Ok(a_ok && b_ok && rep.cocycle && first_is_euler && symplectic)
}

/// The coordinate Euler frame (∂_1, …, ∂_n, ℰ).
pub fn euler_frame(lb: &LineBundle, policy: &ZeroTestPolicy) -> Result<Frame, CosymplecticError> {
    let mut cols: Vec<VectorField> = (0..lb.n()).map(|i| VectorField::coord(lb.total(), i)).collect();
    cols.push(lb.euler());
    Ok(Frame::new(lb, &cols, policy)?)
}
