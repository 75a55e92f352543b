use std::collections::HashMap;
use std::sync::Arc;

use crate::exprcore::{Differentiator, Expr, ExprMatrix, Substituter, Symbol, ZeroTestPolicy};

use super::chart::{same_chart, Chart};
use super::fields::{gradient, Endo11, KForm, SymTensor2, VectorField};
use super::CalcError;

/// Map between charts, one expression in source coordinates per target coordinate.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    comps: Vec<Expr>,
    /// Source coordinates as expressions in target coordinates.
    inverse: Option<Vec<Expr>>,
}

impl SmoothMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, comps: Vec<Expr>) -> Result<Self, CalcError> {
        if comps.len() != target.dim() {
            return Err(CalcError::Dimension(format!("{} components for target {}", comps.len(), target)));
        }
        Ok(SmoothMap { source: source.clone(), target: target.clone(), comps, inverse: None })
    }
    pub fn with_inverse(mut self, inverse: Vec<Expr>) -> Result<Self, CalcError> {
        if inverse.len() != self.source.dim() {
            return Err(CalcError::Dimension(format!("{} inverse components for {}", inverse.len(), self.source)));
        }
        self.inverse = Some(inverse);
        Ok(self)
    }
    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }
    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }
    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }
    pub fn inverse(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }

    fn forward_map(&self) -> HashMap<Symbol, Expr> {
        self.target.coords().iter().cloned().zip(self.comps.iter().cloned()).collect()
    }
    fn inverse_map(&self) -> Result<HashMap<Symbol, Expr>, CalcError> {
        let inv = self.inverse.as_ref().ok_or(CalcError::MissingInverse)?;
        Ok(self.source.coords().iter().cloned().zip(inv.iter().cloned()).collect())
    }

    /// f∘F for a function on the target.
    pub fn pull_fn(&self, f: &Expr) -> Expr {
        f.subst(&self.forward_map())
    }

    /// Jacobian ∂F^i/∂x^j.
    pub fn jacobian(&self) -> Result<ExprMatrix, CalcError> {
        let rows: Vec<Vec<Expr>> = self.comps.iter().map(|c| gradient(&self.source, c)).collect::<Result<_, _>>()?;
        Ok(ExprMatrix::from_rows(rows)?)
    }

    pub fn pullback(&self, w: &KForm) -> Result<KForm, CalcError> {
        same_chart(&self.target, w.chart())?;
        let dfs: Vec<KForm> = self.comps.iter().map(|c| KForm::exact(&self.source, c)).collect::<Result<_, _>>()?;
        let fm = self.forward_map();
        let mut sub = Substituter::new(&fm);
        let mut acc = KForm::zero(&self.source, w.degree());
        for (idx, c) in w.terms() {
            let mut t = KForm::scalar(&self.source, sub.apply(c));
            for &i in idx {
                t = t.wedge(&dfs[i])?;
            }
            acc = acc.add(&t)?;
        }
        Ok(acc)
    }

    pub fn pullback_sym(&self, g: &SymTensor2) -> Result<SymTensor2, CalcError> {
        same_chart(&self.target, g.chart())?;
        let j = self.jacobian()?;
        let gf = g.matrix().subst(&self.forward_map());
        let m = j.transpose().mul(&gf)?.mul(&j)?;
        // products of symmetric factors are symmetric only up to simplification
        let n = m.rows();
        let sym = ExprMatrix::from_fn(n, n, |a, b| if a <= b { m[(a, b)].clone() } else { m[(b, a)].clone() });
        SymTensor2::new(&self.source, sym)
    }

    /// F_* X, expressed in target coordinates through the inverse map.
    pub fn pushforward(&self, x: &VectorField) -> Result<VectorField, CalcError> {
        same_chart(&self.source, x.chart())?;
        let inv = self.inverse_map()?;
        let j = self.jacobian()?;
        let comps = j.mul_vec(x.comps())?;
        let mut sub = Substituter::new(&inv);
        VectorField::new(&self.target, comps.iter().map(|c| sub.apply(c)).collect())
    }

    /// F^*J = DF^{-1} J(F) DF for a self-map.
    pub fn pullback_endo(&self, jt: &Endo11, policy: &ZeroTestPolicy) -> Result<Endo11, CalcError> {
        same_chart(&self.target, jt.chart())?;
        let d = self.jacobian()?;
        let dinv = d.inverse(&self.source.policy(policy))?;
        let jf = jt.matrix().subst(&self.forward_map());
        Endo11::new(&self.source, dinv.mul(&jf)?.mul(&d)?)
    }

    /// self∘other.
    pub fn compose(&self, other: &SmoothMap) -> Result<SmoothMap, CalcError> {
        same_chart(&self.source, &other.target)?;
        let comps = self.comps.iter().map(|c| other.pull_fn(c)).collect();
        let inverse = match (&self.inverse, &other.inverse) {
            (Some(a), Some(b)) => {
                let m: HashMap<Symbol, Expr> = self.source.coords().iter().cloned().zip(a.iter().cloned()).collect();
                Some(b.iter().map(|e| e.subst(&m)).collect())
            }
            _ => None,
        };
        Ok(SmoothMap { source: other.source.clone(), target: self.target.clone(), comps, inverse })
    }

    /// Component-wise equality under the zero test.
    pub fn equals(&self, o: &SmoothMap, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        same_chart(&self.source, &o.source)?;
        same_chart(&self.target, &o.target)?;
        let diffs: Vec<Expr> = self.comps.iter().zip(&o.comps).map(|(a, b)| a - b).collect();
        Ok(self.source.policy(policy).all_zero(&diffs)?)
    }

    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> SmoothMap {
        SmoothMap {
            source: self.source.clone(),
            target: self.target.clone(),
            comps: self.comps.iter().map(|c| c.subst(map)).collect(),
            inverse: self.inverse.as_ref().map(|v| v.iter().map(|c| c.subst(map)).collect()),
        }
    }

    pub fn derivative_in(&self, v: &Symbol) -> Result<Vec<Expr>, CalcError> {
        let mut d = Differentiator::new(v);
        self.comps.iter().map(|c| Ok(d.diff(c)?)).collect()
    }
}
