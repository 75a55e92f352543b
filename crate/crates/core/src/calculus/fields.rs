use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::exprcore::{Differentiator, Expr, ExprMatrix, Substituter, Symbol, ZeroTestPolicy, ZeroVerdict};

use super::chart::{same_chart, Chart};
use super::CalcError;

/// Partial derivatives of `f` along every coordinate of `chart`.
pub fn gradient(chart: &Chart, f: &Expr) -> Result<Vec<Expr>, CalcError> {
    chart.coords().iter().map(|s| Ok(Differentiator::new(s).diff(f)?)).collect()
}

#[derive(Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero_literal() {
                continue;
            }
            let name = self.chart.symbol(i).name();
            if c.is_one_literal() {
                parts.push(format!("d/d{name}"));
            } else {
                parts.push(format!("({c})*d/d{name}"));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<Self, CalcError> {
        if comps.len() != chart.dim() {
            return Err(CalcError::Dimension(format!("{} components on {}", comps.len(), chart)));
        }
        Ok(VectorField { chart: chart.clone(), comps })
    }
    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField { chart: chart.clone(), comps: vec![Expr::zero(); chart.dim()] }
    }
    /// Coordinate field d/dx^i.
    pub fn coord(chart: &Arc<Chart>, i: usize) -> Self {
        let mut v = Self::zero(chart);
        v.comps[i] = Expr::one();
        v
    }
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }
    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    /// Directional derivative X(f).
    pub fn apply(&self, f: &Expr) -> Result<Expr, CalcError> {
        let mut terms = Vec::new();
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero_literal() {
                continue;
            }
            let d = Differentiator::new(self.chart.symbol(i)).diff(f)?;
            if !d.is_zero_literal() {
                terms.push(c * &d);
            }
        }
        Ok(Expr::add_all(terms))
    }

    pub fn bracket(&self, other: &VectorField) -> Result<VectorField, CalcError> {
        same_chart(&self.chart, &other.chart)?;
        let mut comps = Vec::with_capacity(self.comps.len());
        for i in 0..self.comps.len() {
            comps.push(self.apply(&other.comps[i])? - other.apply(&self.comps[i])?);
        }
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    pub fn add(&self, o: &VectorField) -> Result<VectorField, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        Ok(self.zip(o, |a, b| a + b))
    }
    pub fn sub(&self, o: &VectorField) -> Result<VectorField, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        Ok(self.zip(o, |a, b| a - b))
    }
    fn zip(&self, o: &VectorField, f: impl Fn(&Expr, &Expr) -> Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect() }
    }
    pub fn scale(&self, c: &Expr) -> VectorField {
        self.map(|e| c * e)
    }
    pub fn neg(&self) -> VectorField {
        self.map(|e| -e)
    }
    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> VectorField {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(&mut f).collect() }
    }
    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> VectorField {
        let mut s = Substituter::new(map);
        self.map(|e| s.apply(e))
    }
    /// Linear combination Σ c_a X_a.
    pub fn combination(chart: &Arc<Chart>, cs: &[Expr], xs: &[VectorField]) -> Result<VectorField, CalcError> {
        let mut comps = vec![Vec::new(); chart.dim()];
        for (c, x) in cs.iter().zip(xs) {
            same_chart(chart, &x.chart)?;
            if c.is_zero_literal() {
                continue;
            }
            for (i, e) in x.comps.iter().enumerate() {
                if !e.is_zero_literal() {
                    comps[i].push(c * e);
                }
            }
        }
        Ok(VectorField { chart: chart.clone(), comps: comps.into_iter().map(Expr::add_all).collect() })
    }
    pub fn check_zero(&self, policy: &ZeroTestPolicy) -> Result<ZeroVerdict, CalcError> {
        Ok(self.chart.policy(policy).check_all(&self.comps)?)
    }
    pub fn is_zero(&self, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        Ok(self.check_zero(policy)?.is_zero())
    }
    pub fn equals(&self, o: &VectorField, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        self.sub(o)?.is_zero(policy)
    }
}

/// Sign of the permutation sorting `idx`, or None if an index repeats.
pub(crate) fn sort_sign(idx: &[usize]) -> Option<(Vec<usize>, i64)> {
    let mut v = idx.to_vec();
    let mut sign = 1i64;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Differential k-form with coefficients over increasing multi-indices.
#[derive(Clone, PartialEq)]
pub struct KForm {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let basis: Vec<String> = k.iter().map(|&i| format!("d{}", self.chart.symbol(i).name())).collect();
                if k.is_empty() {
                    format!("{c}")
                } else if c.is_one_literal() {
                    basis.join("^")
                } else {
                    format!("({c})*{}", basis.join("^"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl KForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        KForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }
    pub fn scalar(chart: &Arc<Chart>, f: Expr) -> Self {
        let mut k = Self::zero(chart, 0);
        k.insert(vec![], f);
        k
    }
    /// dx^i.
    pub fn dx(chart: &Arc<Chart>, i: usize) -> Self {
        let mut k = Self::zero(chart, 1);
        k.insert(vec![i], Expr::one());
        k
    }
    /// Differential of a function.
    pub fn exact(chart: &Arc<Chart>, f: &Expr) -> Result<Self, CalcError> {
        Self::one_form(chart, gradient(chart, f)?)
    }
    pub fn one_form(chart: &Arc<Chart>, coeffs: Vec<Expr>) -> Result<Self, CalcError> {
        if coeffs.len() != chart.dim() {
            return Err(CalcError::Dimension(format!("{} coefficients on {}", coeffs.len(), chart)));
        }
        let mut k = Self::zero(chart, 1);
        for (i, c) in coeffs.into_iter().enumerate() {
            k.insert(vec![i], c);
        }
        Ok(k)
    }
    /// Builds from possibly unsorted index lists; repeated indices drop out.
    pub fn from_terms(chart: &Arc<Chart>, degree: usize, terms: Vec<(Vec<usize>, Expr)>) -> Result<Self, CalcError> {
        // above the dimension only the zero form exists
        if degree > chart.dim() && !terms.is_empty() {
            return Err(CalcError::Dimension(format!("degree {degree} exceeds dimension {}", chart.dim())));
        }
        let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (idx, c) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= chart.dim()) {
                return Err(CalcError::Dimension(format!("bad multi-index {idx:?} for degree {degree}")));
            }
            if let Some((sorted, sign)) = sort_sign(&idx) {
                acc.entry(sorted).or_default().push(if sign < 0 { -c } else { c });
            }
        }
        let mut k = Self::zero(chart, degree);
        for (idx, cs) in acc {
            k.insert(idx, Expr::add_all(cs));
        }
        Ok(k)
    }
    fn insert(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero_literal() {
            self.terms.remove(&idx);
        } else {
            self.terms.insert(idx, c);
        }
    }
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }
    pub fn coeffs(&self) -> Vec<Expr> {
        self.terms.values().cloned().collect()
    }
    /// Coefficient at any ordering of a multi-index, with the permutation sign.
    pub fn coeff(&self, idx: &[usize]) -> Expr {
        match sort_sign(idx) {
            None => Expr::zero(),
            Some((sorted, sign)) => match self.terms.get(&sorted) {
                None => Expr::zero(),
                Some(c) => {
                    if sign < 0 {
                        -c
                    } else {
                        c.clone()
                    }
                }
            },
        }
    }
    /// Coefficient vector of a 1-form.
    pub fn one_form_coeffs(&self) -> Vec<Expr> {
        (0..self.chart.dim()).map(|i| self.coeff(&[i])).collect()
    }
    /// Antisymmetric coefficient matrix of a 2-form.
    pub fn two_form_matrix(&self) -> ExprMatrix {
        let n = self.chart.dim();
        ExprMatrix::from_fn(n, n, |i, j| self.coeff(&[i, j]))
    }
    pub fn from_two_form_matrix(chart: &Arc<Chart>, m: &ExprMatrix) -> Self {
        let mut k = Self::zero(chart, 2);
        for i in 0..chart.dim() {
            for j in i + 1..chart.dim() {
                k.insert(vec![i, j], m[(i, j)].clone());
            }
        }
        k
    }

    fn check(&self, o: &KForm) -> Result<(), CalcError> {
        same_chart(&self.chart, &o.chart)?;
        if self.degree != o.degree {
            return Err(CalcError::Degree { expected: self.degree, got: o.degree });
        }
        Ok(())
    }
    pub fn add(&self, o: &KForm) -> Result<KForm, CalcError> {
        self.check(o)?;
        let mut out = self.clone();
        for (k, c) in &o.terms {
            let v = match out.terms.get(k) {
                Some(a) => a + c,
                None => c.clone(),
            };
            out.insert(k.clone(), v);
        }
        Ok(out)
    }
    pub fn sub(&self, o: &KForm) -> Result<KForm, CalcError> {
        self.add(&o.neg())
    }
    pub fn neg(&self) -> KForm {
        self.map(|c| -c)
    }
    pub fn scale(&self, f: &Expr) -> KForm {
        self.map(|c| f * c)
    }
    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> KForm {
        let mut out = KForm::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            out.insert(k.clone(), f(c));
        }
        out
    }
    pub fn try_map(&self, mut f: impl FnMut(&Expr) -> Result<Expr, CalcError>) -> Result<KForm, CalcError> {
        let mut out = KForm::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            out.insert(k.clone(), f(c)?);
        }
        Ok(out)
    }
    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> KForm {
        let mut s = Substituter::new(map);
        self.map(|e| s.apply(e))
    }
    /// Same coefficients reinterpreted on another chart with the same dimension.
    pub fn rechart(&self, chart: &Arc<Chart>) -> KForm {
        KForm { chart: chart.clone(), degree: self.degree, terms: self.terms.clone() }
    }

    pub fn wedge(&self, o: &KForm) -> Result<KForm, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        let deg = self.degree + o.degree;
        if deg > self.chart.dim() {
            return Ok(KForm::zero(&self.chart, deg.min(self.chart.dim() + 1)));
        }
        let mut terms = Vec::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                if a.iter().any(|i| b.contains(i)) {
                    continue;
                }
                let mut idx = a.clone();
                idx.extend(b.iter().copied());
                terms.push((idx, ca * cb));
            }
        }
        KForm::from_terms(&self.chart, deg, terms)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Result<KForm, CalcError> {
        let n = self.chart.dim();
        if self.degree >= n {
            return Ok(KForm::zero(&self.chart, self.degree + 1));
        }
        let mut terms = Vec::new();
        for l in 0..n {
            let mut diff = Differentiator::new(self.chart.symbol(l));
            for (idx, c) in &self.terms {
                if idx.contains(&l) {
                    continue;
                }
                let dc = diff.diff(c)?;
                if dc.is_zero_literal() {
                    continue;
                }
                let mut full = vec![l];
                full.extend(idx.iter().copied());
                terms.push((full, dc));
            }
        }
        KForm::from_terms(&self.chart, self.degree + 1, terms)
    }

    /// Interior product i_X, contracting the first slot.
    pub fn interior(&self, x: &VectorField) -> Result<KForm, CalcError> {
        same_chart(&self.chart, x.chart())?;
        if self.degree == 0 {
            return Ok(KForm::zero(&self.chart, 0));
        }
        let mut terms = Vec::new();
        for (idx, c) in &self.terms {
            for (j, &i) in idx.iter().enumerate() {
                let xi = x.comp(i);
                if xi.is_zero_literal() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(j);
                let v = xi * c;
                terms.push((rest, if j % 2 == 1 { -v } else { v }));
            }
        }
        KForm::from_terms(&self.chart, self.degree - 1, terms)
    }

    /// ω(X_1, …, X_k).
    pub fn eval(&self, xs: &[VectorField]) -> Result<Expr, CalcError> {
        if xs.len() != self.degree {
            return Err(CalcError::Degree { expected: self.degree, got: xs.len() });
        }
        let mut w = self.clone();
        for x in xs {
            w = w.interior(x)?;
        }
        Ok(w.coeff(&[]))
    }

    /// Lie derivative from the coordinate formula
    /// (L_X ω)_I = X(ω_I) + Σ_j ω_{I[j→l]} ∂_{i_j} X^l.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<KForm, CalcError> {
        same_chart(&self.chart, x.chart())?;
        let n = self.chart.dim();
        let mut dx: Vec<Vec<Expr>> = Vec::with_capacity(n);
        for l in 0..n {
            dx.push(gradient(&self.chart, x.comp(l))?);
        }
        let mut terms = Vec::new();
        for idx in increasing_indices(n, self.degree) {
            let mut t = vec![x.apply(&self.coeff(&idx))?];
            for j in 0..idx.len() {
                for (l, dxl) in dx.iter().enumerate() {
                    let g = &dxl[idx[j]];
                    if g.is_zero_literal() {
                        continue;
                    }
                    let mut k = idx.clone();
                    k[j] = l;
                    let c = self.coeff(&k);
                    if !c.is_zero_literal() {
                        t.push(&c * g);
                    }
                }
            }
            terms.push((idx, Expr::add_all(t)));
        }
        KForm::from_terms(&self.chart, self.degree, terms)
    }

    pub fn check_zero(&self, policy: &ZeroTestPolicy) -> Result<ZeroVerdict, CalcError> {
        Ok(self.chart.policy(policy).check_all(&self.coeffs())?)
    }
    pub fn is_zero(&self, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        Ok(self.check_zero(policy)?.is_zero())
    }
    pub fn equals(&self, o: &KForm, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        self.sub(o)?.is_zero(policy)
    }
}

/// All strictly increasing index lists of length k below n.
pub fn increasing_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Symmetric covariant 2-tensor.
#[derive(Clone, PartialEq)]
pub struct SymTensor2 {
    chart: Arc<Chart>,
    m: ExprMatrix,
}

impl fmt::Debug for SymTensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymTensor2 {}", self.m)
    }
}

impl SymTensor2 {
    pub fn new(chart: &Arc<Chart>, m: ExprMatrix) -> Result<Self, CalcError> {
        let n = chart.dim();
        if m.rows() != n || m.cols() != n {
            return Err(CalcError::Dimension(format!("{}x{} matrix on {}", m.rows(), m.cols(), chart)));
        }
        for i in 0..n {
            for j in i + 1..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(CalcError::NotSymmetric(i, j));
                }
            }
        }
        Ok(SymTensor2 { chart: chart.clone(), m })
    }
    pub fn zero(chart: &Arc<Chart>) -> Self {
        SymTensor2 { chart: chart.clone(), m: ExprMatrix::zeros(chart.dim(), chart.dim()) }
    }
    pub fn euclidean(chart: &Arc<Chart>) -> Self {
        SymTensor2 { chart: chart.clone(), m: ExprMatrix::identity(chart.dim()) }
    }
    /// a⊙b = ½(a⊗b + b⊗a), so that a⊙a = a⊗a.
    pub fn sym_product(a: &KForm, b: &KForm) -> Result<Self, CalcError> {
        same_chart(a.chart(), b.chart())?;
        if a.degree() != 1 || b.degree() != 1 {
            return Err(CalcError::Degree { expected: 1, got: a.degree().max(b.degree()) });
        }
        let (x, y) = (a.one_form_coeffs(), b.one_form_coeffs());
        let n = x.len();
        let half = Expr::rational(1, 2);
        let m = ExprMatrix::from_fn(n, n, |i, j| &half * (&x[i] * &y[j] + &x[j] * &y[i]));
        Ok(SymTensor2 { chart: a.chart().clone(), m })
    }
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    pub fn matrix(&self) -> &ExprMatrix {
        &self.m
    }
    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.m[(i, j)]
    }
    pub fn eval(&self, x: &VectorField, y: &VectorField) -> Result<Expr, CalcError> {
        same_chart(&self.chart, x.chart())?;
        same_chart(&self.chart, y.chart())?;
        let gy = self.m.mul_vec(y.comps())?;
        Ok(Expr::add_all(x.comps().iter().zip(&gy).map(|(a, b)| a * b)))
    }
    pub fn add(&self, o: &SymTensor2) -> Result<SymTensor2, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        Ok(SymTensor2 { chart: self.chart.clone(), m: self.m.add(&o.m)? })
    }
    pub fn sub(&self, o: &SymTensor2) -> Result<SymTensor2, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        Ok(SymTensor2 { chart: self.chart.clone(), m: self.m.sub(&o.m)? })
    }
    pub fn scale(&self, c: &Expr) -> SymTensor2 {
        SymTensor2 { chart: self.chart.clone(), m: self.m.scale(c) }
    }
    pub fn map(&self, f: impl FnMut(&Expr) -> Expr) -> SymTensor2 {
        SymTensor2 { chart: self.chart.clone(), m: self.m.map(f) }
    }
    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> SymTensor2 {
        SymTensor2 { chart: self.chart.clone(), m: self.m.subst(map) }
    }
    pub fn check_zero(&self, policy: &ZeroTestPolicy) -> Result<ZeroVerdict, CalcError> {
        Ok(self.chart.policy(policy).check_all(self.m.entries())?)
    }
    pub fn is_zero(&self, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        Ok(self.check_zero(policy)?.is_zero())
    }
    pub fn equals(&self, o: &SymTensor2, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        self.sub(o)?.is_zero(policy)
    }
}

/// (1,1)-tensor; column j is the image of d/dx^j.
#[derive(Clone, PartialEq)]
pub struct Endo11 {
    chart: Arc<Chart>,
    m: ExprMatrix,
}

impl fmt::Debug for Endo11 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Endo11 {}", self.m)
    }
}

impl Endo11 {
    pub fn new(chart: &Arc<Chart>, m: ExprMatrix) -> Result<Self, CalcError> {
        if m.rows() != chart.dim() || m.cols() != chart.dim() {
            return Err(CalcError::Dimension(format!("{}x{} matrix on {}", m.rows(), m.cols(), chart)));
        }
        Ok(Endo11 { chart: chart.clone(), m })
    }
    pub fn identity(chart: &Arc<Chart>) -> Self {
        Endo11 { chart: chart.clone(), m: ExprMatrix::identity(chart.dim()) }
    }
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    pub fn matrix(&self) -> &ExprMatrix {
        &self.m
    }
    pub fn apply(&self, x: &VectorField) -> Result<VectorField, CalcError> {
        same_chart(&self.chart, x.chart())?;
        VectorField::new(&self.chart, self.m.mul_vec(x.comps())?)
    }
    pub fn compose(&self, o: &Endo11) -> Result<Endo11, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        Ok(Endo11 { chart: self.chart.clone(), m: self.m.mul(&o.m)? })
    }
    pub fn sub(&self, o: &Endo11) -> Result<Endo11, CalcError> {
        same_chart(&self.chart, &o.chart)?;
        Ok(Endo11 { chart: self.chart.clone(), m: self.m.sub(&o.m)? })
    }
    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> Endo11 {
        Endo11 { chart: self.chart.clone(), m: self.m.subst(map) }
    }
    pub fn equals(&self, o: &Endo11, policy: &ZeroTestPolicy) -> Result<bool, CalcError> {
        Ok(self.chart.policy(policy).all_zero(self.sub(o)?.m.entries())?)
    }
}
