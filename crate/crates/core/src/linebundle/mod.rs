//! The trivialized total space L̃_U = U × ℝ^× of a line bundle, the action
//! h_r(x, μ) = (x, rμ), and the dictionary between sections, derivations and
//! Atiyah forms downstairs and homogeneous objects upstairs.
//!
//! Base coordinates are shared with the total chart, so an expression on U is
//! also an expression on L̃_U. The fibre coordinate μ comes after them.

#[cfg(test)]
mod tests;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::calculus::{CalcError, Chart, Endo11, KForm, SmoothMap, SymTensor2, VectorField};
use crate::exprcore::{Assumption, Expr, Symbol, ZeroTestError, ZeroTestPolicy, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineBundleError {
    #[error("form is not basic: i_E of it is nonzero ({0})")]
    NotBasic(String),
    #[error("coefficient {0} is not of degree one in the fibre coordinate")]
    NotFibreLinear(String),
    #[error("object is not homogeneous of degree {0}")]
    Degree(ScalarDegree),
    #[error("object lives on chart {0}, expected {1}")]
    WrongChart(String, String),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

/// Which part of ℝ^× the fibre coordinate ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// μ ≠ 0; the reflection r = −1 is checked as well.
    Full,
    /// μ > 0 only.
    Positive,
}

/// φ(r) = |r|^b, times sign(r) when odd.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScalarDegree {
    pub exponent: Q,
    pub odd: bool,
}

impl fmt::Display for ScalarDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.odd && self.exponent.is_one() {
            return f.write_str("r");
        }
        write!(f, "|r|^{}", self.exponent)?;
        if self.odd {
            f.write_str("·sign(r)")?;
        }
        Ok(())
    }
}

impl ScalarDegree {
    pub fn new(exponent: Q, odd: bool) -> Self {
        ScalarDegree { exponent, odd }
    }
    /// φ(r) = r.
    pub fn identity() -> Self {
        Self::new(Q::one(), true)
    }
    /// φ(r) = |r|.
    pub fn density() -> Self {
        Self::new(Q::one(), false)
    }
    /// φ(r) = 1.
    pub fn trivial() -> Self {
        Self::new(Q::zero(), false)
    }
    /// φ₁·φ₂.
    pub fn times(&self, o: &ScalarDegree) -> Self {
        Self::new(&self.exponent + &o.exponent, self.odd ^ o.odd)
    }
    /// φ(r) as an expression.
    pub fn factor(&self, r: &Expr) -> Expr {
        let base = r.abs().pow_q(self.exponent.clone());
        if self.odd {
            base * r.signum()
        } else {
            base
        }
    }
}

/// A function, field or tensor upstairs, to be tested for homogeneity.
#[derive(Debug, Clone)]
pub enum AtiyahObject {
    Function(Expr),
    Field(VectorField),
    Form(KForm),
    Sym(SymTensor2),
    Endo(Endo11),
}

#[derive(Debug, Clone)]
pub struct LineBundle {
    base: Arc<Chart>,
    total: Arc<Chart>,
    branch: Branch,
}

impl LineBundle {
    pub fn new(base: &Arc<Chart>, branch: Branch) -> Result<Self, LineBundleError> {
        Self::with_fibre(base, branch, "mu")
    }

    pub fn with_fibre(base: &Arc<Chart>, branch: Branch, fibre: &str) -> Result<Self, LineBundleError> {
        let assumption = match branch {
            Branch::Full => Assumption::NonZero,
            Branch::Positive => Assumption::Positive,
        };
        let mut coords = base.coords().to_vec();
        coords.push(Symbol::new(fibre, assumption));
        let total = Chart::with_constraints(&format!("{}~", base.name()), coords, base.constraints().to_vec())?;
        Ok(LineBundle { base: base.clone(), total, branch })
    }

    pub fn base(&self) -> &Arc<Chart> {
        &self.base
    }
    pub fn total(&self) -> &Arc<Chart> {
        &self.total
    }
    pub fn branch(&self) -> Branch {
        self.branch
    }
    /// n, the base dimension.
    pub fn n(&self) -> usize {
        self.base.dim()
    }
    pub fn fibre_index(&self) -> usize {
        self.base.dim()
    }
    pub fn mu_symbol(&self) -> &Symbol {
        self.total.symbol(self.fibre_index())
    }
    pub fn mu(&self) -> Expr {
        self.total.coord(self.fibre_index())
    }
    pub fn dmu(&self) -> KForm {
        KForm::dx(&self.total, self.fibre_index())
    }
    /// ℰ = μ∂μ.
    pub fn euler(&self) -> VectorField {
        let mut comps = vec![Expr::zero(); self.total.dim()];
        comps[self.fibre_index()] = self.mu();
        VectorField::new(&self.total, comps).expect("matching dimension")
    }
    /// The policy with the total chart's constraints.
    pub fn policy(&self, base: &ZeroTestPolicy) -> ZeroTestPolicy {
        self.total.policy(base)
    }

    /// h_r for an arbitrary nonzero expression r.
    pub fn action(&self, r: &Expr) -> SmoothMap {
        let n = self.fibre_index();
        let fwd: Vec<Expr> = (0..=n).map(|i| if i == n { r * self.mu() } else { self.total.coord(i) }).collect();
        let inv: Vec<Expr> = (0..=n).map(|i| if i == n { self.mu() / r } else { self.total.coord(i) }).collect();
        SmoothMap::new(&self.total, &self.total, fwd).and_then(|m| m.with_inverse(inv)).expect("dimensions match")
    }
    /// h_r with the formal positive parameter r.
    pub fn action_r(&self) -> SmoothMap {
        self.action(&Expr::var(&Symbol::action()))
    }

    /// The bundle projection p(x, μ) = x.
    pub fn bundle_projection(&self) -> SmoothMap {
        let comps = (0..self.n()).map(|i| self.total.coord(i)).collect();
        SmoothMap::new(&self.total, &self.base, comps).expect("dimensions match")
    }

    /// h_r∘h_s = h_{rs} for symbolic r, s > 0.
    pub fn check_action_law(&self, policy: &ZeroTestPolicy) -> Result<bool, LineBundleError> {
        let r = Expr::var(&Symbol::action());
        let s = Expr::var(&Symbol::action2());
        let lhs = self.action(&r).compose(&self.action(&s))?;
        let rhs = self.action(&(&r * &s));
        Ok(lhs.equals(&rhs, policy)?)
    }

    /// Base vector field extended by a zero fibre component.
    pub fn lift_field(&self, x: &VectorField) -> Result<VectorField, LineBundleError> {
        self.expect_base(x.chart())?;
        let mut comps = x.comps().to_vec();
        comps.push(Expr::zero());
        Ok(VectorField::new(&self.total, comps)?)
    }
    /// Base form seen on the total chart.
    pub fn lift_form(&self, w: &KForm) -> Result<KForm, LineBundleError> {
        self.expect_base(w.chart())?;
        Ok(KForm::from_terms(&self.total, w.degree(), w.terms().iter().map(|(k, v)| (k.clone(), v.clone())).collect())?)
    }
    fn expect_base(&self, c: &Arc<Chart>) -> Result<(), LineBundleError> {
        if **c != *self.base {
            return Err(LineBundleError::WrongChart(c.to_string(), self.base.to_string()));
        }
        Ok(())
    }
    fn expect_total(&self, c: &Arc<Chart>) -> Result<(), LineBundleError> {
        if **c != *self.total {
            return Err(LineBundleError::WrongChart(c.to_string(), self.total.to_string()));
        }
        Ok(())
    }

    fn pull(&self, obj: &AtiyahObject, r: &Expr, policy: &ZeroTestPolicy) -> Result<AtiyahObject, LineBundleError> {
        let h = self.action(r);
        Ok(match obj {
            AtiyahObject::Function(f) => AtiyahObject::Function(h.pull_fn(f)),
            AtiyahObject::Form(w) => AtiyahObject::Form(h.pullback(w)?),
            AtiyahObject::Sym(g) => AtiyahObject::Sym(h.pullback_sym(g)?),
            AtiyahObject::Endo(j) => AtiyahObject::Endo(h.pullback_endo(j, policy)?),
            // the pushforward by h_r^{-1} plays the part of the pullback
            AtiyahObject::Field(x) => AtiyahObject::Field(self.action(&r.recip()).pushforward(x)?),
        })
    }

    /// h_r^* obj = φ(r)·obj for symbolic r > 0, and at r = −1 on the full branch.
    /// Vector fields and (1,1)-tensors are compared with φ = 1.
    pub fn is_homogeneous(&self, obj: &AtiyahObject, phi: &ScalarDegree, policy: &ZeroTestPolicy) -> Result<bool, LineBundleError> {
        let pol = self.policy(policy);
        let mut params = vec![Expr::var(&Symbol::action())];
        if self.branch == Branch::Full {
            params.push(Expr::int(-1));
        }
        for r in params {
            let c = phi.factor(&r);
            let pulled = self.pull(obj, &r, &pol)?;
            let ok = match (&pulled, obj) {
                (AtiyahObject::Function(a), AtiyahObject::Function(b)) => pol.is_zero(&(a - c * b))?,
                (AtiyahObject::Form(a), AtiyahObject::Form(b)) => a.equals(&b.scale(&c), &pol)?,
                (AtiyahObject::Sym(a), AtiyahObject::Sym(b)) => a.equals(&b.scale(&c), &pol)?,
                (AtiyahObject::Field(a), AtiyahObject::Field(b)) => a.equals(&b.scale(&c), &pol)?,
                (AtiyahObject::Endo(a), AtiyahObject::Endo(b)) => {
                    a.equals(&Endo11::new(b.chart(), b.matrix().scale(&c))?, &pol)?
                }
                _ => unreachable!("pull preserves the variant"),
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// λ = s·λ₀ ↦ λ̃ = μs.
    pub fn promote_section(&self, s: &Expr) -> Expr {
        self.mu() * s
    }

    /// Inverse of [`promote_section`](Self::promote_section).
    pub fn descend_section(&self, f: &Expr, policy: &ZeroTestPolicy) -> Result<Expr, LineBundleError> {
        self.fibre_linear(f, policy)
    }

    /// f/μ with μ = 1 substituted, after checking ∂μ(f/μ) = 0.
    fn fibre_linear(&self, f: &Expr, policy: &ZeroTestPolicy) -> Result<Expr, LineBundleError> {
        let g = f / self.mu();
        let dg = g.diff(self.mu_symbol()).map_err(CalcError::from)?;
        if !self.policy(policy).is_zero(&dg)? {
            return Err(LineBundleError::NotFibreLinear(f.to_string()));
        }
        Ok(g.subst1(self.mu_symbol(), &Expr::one()))
    }

    /// Δ(sλ₀) = (X(s) + f s)λ₀ ↦ X + f·ℰ.
    pub fn promote_derivation(&self, x: &VectorField, f: &Expr) -> Result<VectorField, LineBundleError> {
        Ok(self.lift_field(x)?.add(&self.euler().scale(f))?)
    }

    /// (X, f) of a degree-0 field X + f·ℰ; the coefficients must be μ-free.
    pub fn descend_derivation(&self, y: &VectorField, policy: &ZeroTestPolicy) -> Result<(VectorField, Expr), LineBundleError> {
        self.expect_total(y.chart())?;
        let n = self.n();
        let pol = self.policy(policy);
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let c = y.comp(i);
            if !pol.is_zero(&c.diff(self.mu_symbol()).map_err(CalcError::from)?)? {
                return Err(LineBundleError::Degree(ScalarDegree::trivial()));
            }
            comps.push(c.subst1(self.mu_symbol(), &Expr::one()));
        }
        let f = self.fibre_linear(y.comp(n), policy)?;
        Ok((VectorField::new(&self.base, comps)?, f))
    }

    /// ω = a + e∧b (e dual to 𝕀) ↦ ω̃ = μ·a + dμ∧b.
    pub fn promote_atiyah_form(&self, a: &KForm, b: &KForm) -> Result<KForm, LineBundleError> {
        if b.degree() + 1 != a.degree() {
            return Err(CalcError::Degree { expected: a.degree() - 1, got: b.degree() }.into());
        }
        let a = self.lift_form(a)?;
        let b = self.lift_form(b)?;
        Ok(a.scale(&self.mu()).add(&self.dmu().wedge(&b)?)?)
    }

    /// L-valued form on U of a basic degree-1 form Ω̃ (i_ℰΩ̃ = 0).
    pub fn descend_form(&self, w: &KForm, policy: &ZeroTestPolicy) -> Result<KForm, LineBundleError> {
        self.expect_total(w.chart())?;
        let pol = self.policy(policy);
        if let Some(wit) = w.interior(&self.euler())?.check_zero(&pol)?.witness() {
            return Err(LineBundleError::NotBasic(wit.to_string()));
        }
        let mut terms = Vec::new();
        for (idx, c) in w.terms() {
            if idx.contains(&self.fibre_index()) {
                // only reachable when the zero test missed a tiny fibre component
                return Err(LineBundleError::NotBasic(format!("component {idx:?} = {c}")));
            }
            terms.push((idx.clone(), self.fibre_linear(c, policy)?));
        }
        Ok(KForm::from_terms(&self.base, w.degree(), terms)?)
    }

    /// (a, b) with ω̃ = μ·a + dμ∧b, for any degree-1 form.
    pub fn descend_atiyah_form(&self, w: &KForm, policy: &ZeroTestPolicy) -> Result<(KForm, KForm), LineBundleError> {
        self.expect_total(w.chart())?;
        let ie = w.interior(&self.euler())?;
        // i_ℰ(μa + dμ∧b) = μ b, and i_ℰ kills b since b is basic
        let b_up = ie.scale(&self.mu().recip());
        let db = if w.degree() == 0 { KForm::zero(&self.total, 0) } else { self.dmu().wedge(&b_up)? };
        let rest = w.sub(&db)?;
        let a = self.descend_form(&rest, policy)?;
        let b = if w.degree() == 0 { KForm::zero(&self.base, 0) } else { self.descend_form(&ie, policy)? };
        Ok((a, b))
    }

    fn require_degree_one(&self, w: &KForm, policy: &ZeroTestPolicy) -> Result<(), LineBundleError> {
        let phi = ScalarDegree::identity();
        if !self.is_homogeneous(&AtiyahObject::Form(w.clone()), &phi, policy)? {
            return Err(LineBundleError::Degree(phi));
        }
        Ok(())
    }

    /// The Atiyah differential: plain d upstairs, on verified degree-1 forms.
    pub fn d_d(&self, w: &KForm, policy: &ZeroTestPolicy) -> Result<KForm, LineBundleError> {
        self.expect_total(w.chart())?;
        self.require_degree_one(w, policy)?;
        Ok(w.d()?)
    }

    /// Insertion of 𝕀: i_ℰ upstairs, on verified degree-1 forms.
    pub fn i_identity(&self, w: &KForm, policy: &ZeroTestPolicy) -> Result<KForm, LineBundleError> {
        self.expect_total(w.chart())?;
        self.require_degree_one(w, policy)?;
        Ok(w.interior(&self.euler())?)
    }

    /// μ = 1 slice.
    pub fn at_unit_fibre(&self, e: &Expr) -> Expr {
        e.subst1(self.mu_symbol(), &Expr::one())
    }

    /// Substitution map sending μ to `by`.
    pub fn fibre_subst(&self, by: &Expr) -> HashMap<Symbol, Expr> {
        let mut m = HashMap::new();
        m.insert(self.mu_symbol().clone(), by.clone());
        m
    }
}
