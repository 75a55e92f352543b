//! Trivial-degree homogeneous GL_k(ℂ)-structures: degree-0 almost complex
//! structures j̃ on L̃_U and their Nijenhuis torsion.
//!
//! Only the trivial degree is handled; the sign degree would need a second
//! frame convention and is left out.


use std::sync::Arc;

use thiserror::Error;

use crate::calculus::{CalcError, Chart, Endo11, VectorField};
use crate::exprcore::{Expr, ExprMatrix, MatrixError, ZeroTestError, ZeroTestPolicy, ZeroVerdict};
use crate::groups::{GroupId, QMatrix, QuotientValue, SymbolicQuotient};
use crate::homframe::{degree_coset, Frame, HomFrameError};
use crate::linebundle::{AtiyahObject, LineBundle, LineBundleError, ScalarDegree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexError {
    #[error("J̃² is not −1: {0}")]
    NotComplex(String),
    #[error("J̃ is not invariant under the action")]
    Degree,
    #[error("frame has the wrong degree: {0}")]
    WrongDegree(String),
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

/// A degree-0 endomorphism with J̃² = −1.
#[derive(Debug, Clone)]
pub struct AlmostComplex {
    lb: LineBundle,
    j: Endo11,
}

impl AlmostComplex {
    pub fn new(lb: &LineBundle, j: Endo11, policy: &ZeroTestPolicy) -> Result<Self, ComplexError> {
        let pol = lb.policy(policy);
        let n1 = lb.total().dim();
        let sq = j.matrix().mul(j.matrix())?.add(&ExprMatrix::identity(n1))?;
        if let ZeroVerdict::NonZero(w) = pol.check_all(sq.entries())? {
            return Err(ComplexError::NotComplex(w.to_string()));
        }
        if !lb.is_homogeneous(&AtiyahObject::Endo(j.clone()), &ScalarDegree::trivial(), policy)? {
            return Err(ComplexError::Degree);
        }
        Ok(AlmostComplex { lb: lb.clone(), j })
    }
    pub fn bundle(&self) -> &LineBundle {
        &self.lb
    }
    pub fn endo(&self) -> &Endo11 {
        &self.j
    }
    pub fn matrix(&self) -> &ExprMatrix {
        self.j.matrix()
    }
    pub fn apply(&self, x: &VectorField) -> Result<VectorField, ComplexError> {
        Ok(self.j.apply(x)?)
    }
}

/// J₀ = [[0, −I], [I, 0]]: X_i ↦ Y_i, Y_i ↦ −X_i.
pub fn j0(k: usize) -> QMatrix {
    let z = QMatrix::zeros(k, k);
    let i = QMatrix::identity(k);
    QMatrix::blocks(&z, &i.scale(&-crate::exprcore::q(1)), &i, &z)
}

/// j̃ = ξ^i⊗Y_i − η^i⊗X_i = S·J₀·S^{-1}, for a frame S = (X_1…X_k, Y_1…Y_k) of
/// trivial degree class in N(GL_k(ℂ))/GL_k(ℂ).
pub fn frame_to_j(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<AlmostComplex, ComplexError> {
    let lb = sigma.bundle();
    let k = sigma.len() / 2;
    let coset = degree_coset(sigma, GroupId::Glc(k), policy)?;
    let trivial = coset.quotient == SymbolicQuotient::Parity(false) && coset.at_minus_one.as_ref().is_none_or(|v| *v == QuotientValue::Parity(false));
    if !trivial {
        return Err(ComplexError::WrongDegree(format!("quotient {}, at −1 {:?}", coset.quotient, coset.at_minus_one)));
    }
    let s = sigma.matrix();
    let m = s.mul(&j0(k).to_expr())?.mul(&sigma.dual(policy)?)?;
    AlmostComplex::new(lb, Endo11::new(lb.total(), m)?, policy)
}

/// A (1,2)-tensor by components: entry [a][b][c] is the ∂_a component of
/// T(∂_b, ∂_c).
#[derive(Debug, Clone)]
pub struct Tensor12 {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl Tensor12 {
    pub fn get(&self, a: usize, b: usize, c: usize) -> &Expr {
        let n = self.chart.dim();
        &self.comps[(a * n + b) * n + c]
    }
    pub fn all(&self) -> &[Expr] {
        &self.comps
    }
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    /// T(X, Y) by bilinearity.
    pub fn apply(&self, x: &VectorField, y: &VectorField) -> VectorField {
        let n = self.chart.dim();
        let comps = (0..n)
            .map(|a| {
                let mut terms = Vec::new();
                for b in 0..n {
                    for c in 0..n {
                        let t = self.get(a, b, c);
                        if !t.is_zero_literal() {
                            terms.push(t * x.comp(b) * y.comp(c));
                        }
                    }
                }
                Expr::add_all(terms)
            })
            .collect();
        VectorField::new(&self.chart, comps).expect("matching dimension")
    }
    pub fn check_zero(&self, policy: &ZeroTestPolicy) -> Result<ZeroVerdict, ZeroTestError> {
        self.chart.policy(policy).check_all(&self.comps)
    }
}

/// N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] + J²[X,Y] for arbitrary fields.
pub fn nijenhuis_apply(j: &Endo11, x: &VectorField, y: &VectorField) -> Result<VectorField, ComplexError> {
    let jx = j.apply(x)?;
    let jy = j.apply(y)?;
    let t1 = jx.bracket(&jy)?;
    let t2 = j.apply(&jx.bracket(y)?)?;
    let t3 = j.apply(&x.bracket(&jy)?)?;
    let t4 = j.apply(&j.apply(&x.bracket(y)?)?)?;
    Ok(t1.sub(&t2)?.sub(&t3)?.add(&t4)?)
}

/// The torsion on the coordinate frame.
pub fn nijenhuis(j: &AlmostComplex) -> Result<Tensor12, ComplexError> {
    let chart = j.bundle().total().clone();
    let n = chart.dim();
    let mut comps = vec![Expr::zero(); n * n * n];
    for b in 0..n {
        for c in b + 1..n {
            let v = nijenhuis_apply(j.endo(), &VectorField::coord(&chart, b), &VectorField::coord(&chart, c))?;
            for a in 0..n {
                comps[(a * n + b) * n + c] = v.comp(a).clone();
                comps[(a * n + c) * n + b] = -v.comp(a);
            }
        }
    }
    Ok(Tensor12 { chart, comps })
}

#[derive(Debug, Clone)]
pub struct ComplexReport {
    pub torsion_zero: bool,
    /// Integrability through the torsion criterion.
    pub integrable: bool,
    /// J̃ has constant coefficients in the chart (x, log|μ|), which certifies
    /// integrability directly.
    pub constant_in_chart: bool,
    /// Homogeneous integrability is read off the torsion criterion only; no
    /// homogeneous chart is constructed.
    pub homogeneous_integrable_by_torsion: bool,
    pub witness: Option<String>,
    pub note: &'static str,
}

impl ComplexReport {
    pub fn falsification(&self) -> bool {
        self.constant_in_chart && !self.torsion_zero
    }
}

pub fn integrability_report_c(sigma: &Frame, policy: &ZeroTestPolicy) -> Result<ComplexReport, ComplexError> {
    let j = frame_to_j(sigma, policy)?;
    report_for(&j, policy)
}

pub fn report_for(j: &AlmostComplex, policy: &ZeroTestPolicy) -> Result<ComplexReport, ComplexError> {
    let n = nijenhuis(j)?;
    let verdict = n.check_zero(policy)?;
    let torsion_zero = verdict.is_zero();
    let witness = verdict.witness().map(|w| {
        let nn = j.bundle().total().dim();
        let idx = w.index;
        let (a, b, c) = (idx / (nn * nn), (idx / nn) % nn, idx % nn);
        format!("N^{a}_({b},{c}) {w}")
    });
    // entries in the basis (∂_1…∂_n, μ∂_μ), i.e. in the chart (x, log|μ|)
    let nn = j.bundle().total().dim();
    let fi = j.bundle().fibre_index();
    let mu = j.bundle().mu();
    let e = ExprMatrix::diagonal(&(0..nn).map(|i| if i == fi { mu.clone() } else { Expr::one() }).collect::<Vec<_>>());
    let e_inv = ExprMatrix::diagonal(&(0..nn).map(|i| if i == fi { mu.recip() } else { Expr::one() }).collect::<Vec<_>>());
    let log_chart = e_inv.mul(j.matrix())?.mul(&e)?;
    let constant_in_chart = log_chart.entries().iter().all(|e| e.as_const().is_some());
    Ok(ComplexReport {
        torsion_zero,
        integrable: torsion_zero,
        constant_in_chart,
        homogeneous_integrable_by_torsion: torsion_zero,
        witness,
        note: "homogeneous integrability by torsion criterion; no homogeneous chart is constructed",
    })
}
