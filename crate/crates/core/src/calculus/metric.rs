use std::sync::Arc;

use crate::exprcore::{Differentiator, Expr, ExprMatrix, ZeroTestPolicy};

use super::chart::{same_chart, Chart};
use super::fields::{KForm, SymTensor2, VectorField};
use super::CalcError;

/// Christoffel symbols with ∇_{∂i}∂j = Γ^k_ij ∂k, stored as `gamma[k][i][j]`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    n: usize,
    data: Vec<Expr>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.data[(k * self.n + i) * self.n + j]
    }
    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn all(&self) -> &[Expr] {
        &self.data
    }
}

/// Components R^a_{bcd}: the ∂a coefficient of R(∂c,∂d)∂b.
#[derive(Clone, Debug)]
pub struct Riemann {
    n: usize,
    data: Vec<Expr>,
}

impl Riemann {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> &Expr {
        let n = self.n;
        &self.data[((a * n + b) * n + c) * n + d]
    }
    pub fn all(&self) -> &[Expr] {
        &self.data
    }
    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Nondegenerate metric with its inverse and Levi-Civita data.
#[derive(Clone, Debug)]
pub struct Metric {
    g: SymTensor2,
    inv: ExprMatrix,
    gamma: Christoffel,
}

impl Metric {
    pub fn new(g: SymTensor2, policy: &ZeroTestPolicy) -> Result<Self, CalcError> {
        let pol = g.chart().policy(policy);
        let det = g.matrix().det(&pol)?;
        if pol.is_zero(&det)? {
            return Err(CalcError::Degenerate);
        }
        let inv = g.matrix().inverse(&pol).map_err(|_| CalcError::Degenerate)?;
        let gamma = christoffel(&g, &inv)?;
        Ok(Metric { g, inv, gamma })
    }
    pub fn tensor(&self) -> &SymTensor2 {
        &self.g
    }
    pub fn chart(&self) -> &Arc<Chart> {
        self.g.chart()
    }
    pub fn inverse(&self) -> &ExprMatrix {
        &self.inv
    }
    pub fn christoffel(&self) -> &Christoffel {
        &self.gamma
    }

    pub fn inner(&self, x: &VectorField, y: &VectorField) -> Result<Expr, CalcError> {
        self.g.eval(x, y)
    }

    pub fn sharp(&self, a: &KForm) -> Result<VectorField, CalcError> {
        same_chart(self.chart(), a.chart())?;
        if a.degree() != 1 {
            return Err(CalcError::Degree { expected: 1, got: a.degree() });
        }
        VectorField::new(self.chart(), self.inv.mul_vec(&a.one_form_coeffs())?)
    }

    pub fn flat(&self, x: &VectorField) -> Result<KForm, CalcError> {
        same_chart(self.chart(), x.chart())?;
        KForm::one_form(self.chart(), self.g.matrix().mul_vec(x.comps())?)
    }

    /// ∇_X Y.
    pub fn covariant(&self, x: &VectorField, y: &VectorField) -> Result<VectorField, CalcError> {
        let n = self.gamma.n;
        let mut comps = Vec::with_capacity(n);
        for k in 0..n {
            let mut t = vec![x.apply(y.comp(k))?];
            for i in 0..n {
                for j in 0..n {
                    let g = self.gamma.get(k, i, j);
                    if !g.is_zero_literal() {
                        t.push(g * x.comp(i) * y.comp(j));
                    }
                }
            }
            comps.push(Expr::add_all(t));
        }
        VectorField::new(self.chart(), comps)
    }

    /// Component (∇_{∂i} ω)_{J} of a covariant k-form.
    pub fn nabla_form(&self, w: &KForm, i: usize, idx: &[usize]) -> Result<Expr, CalcError> {
        let n = self.gamma.n;
        let mut t = vec![Differentiator::new(self.chart().symbol(i)).diff(&w.coeff(idx))?];
        for (a, &ja) in idx.iter().enumerate() {
            for l in 0..n {
                let g = self.gamma.get(l, i, ja);
                if g.is_zero_literal() {
                    continue;
                }
                let mut k = idx.to_vec();
                k[a] = l;
                let c = w.coeff(&k);
                if !c.is_zero_literal() {
                    t.push(-(g * &c));
                }
            }
        }
        Ok(Expr::add_all(t))
    }

    pub fn riemann(&self) -> Result<Riemann, CalcError> {
        let n = self.gamma.n;
        let chart = self.chart().clone();
        // dgamma[c][a][d][b] = ∂_c Γ^a_{db}
        let mut dgamma = Vec::with_capacity(n);
        for c in 0..n {
            let mut diff = Differentiator::new(chart.symbol(c));
            let v: Vec<Expr> = self.gamma.data.iter().map(|e| diff.diff(e)).collect::<Result<_, _>>()?;
            dgamma.push(v);
        }
        let dg = |c: usize, a: usize, d: usize, b: usize| &dgamma[c][(a * n + d) * n + b];
        let mut data = Vec::with_capacity(n * n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut t = vec![dg(c, a, d, b).clone(), -dg(d, a, c, b)];
                        for e in 0..n {
                            t.push(self.gamma.get(a, c, e) * self.gamma.get(e, d, b));
                            t.push(-(self.gamma.get(a, d, e) * self.gamma.get(e, c, b)));
                        }
                        data.push(Expr::add_all(t));
                    }
                }
            }
        }
        Ok(Riemann { n, data })
    }

    /// R(X,Y)Z = ∇_X∇_YZ − ∇_Y∇_XZ − ∇_{[X,Y]}Z, evaluated from components.
    pub fn riemann_apply(r: &Riemann, x: &VectorField, y: &VectorField, z: &VectorField) -> Result<VectorField, CalcError> {
        let n = r.n;
        let mut comps = Vec::with_capacity(n);
        for a in 0..n {
            let mut t = Vec::new();
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let e = r.get(a, b, c, d);
                        if !e.is_zero_literal() {
                            t.push(e * z.comp(b) * x.comp(c) * y.comp(d));
                        }
                    }
                }
            }
            comps.push(Expr::add_all(t));
        }
        VectorField::new(x.chart(), comps)
    }

    /// g(R(X,Y)Y,X) / (|X|²|Y|² − g(X,Y)²).
    pub fn sectional(&self, r: &Riemann, x: &VectorField, y: &VectorField) -> Result<Expr, CalcError> {
        let ryx = Self::riemann_apply(r, x, y, y)?;
        let num = self.inner(&ryx, x)?;
        let den = self.inner(x, x)? * self.inner(y, y)? - self.inner(x, y)?.powi(2);
        Ok(num / den)
    }
}

fn christoffel(g: &SymTensor2, inv: &ExprMatrix) -> Result<Christoffel, CalcError> {
    let chart = g.chart();
    let n = chart.dim();
    // dg[l][i][j] = ∂_l g_ij
    let mut dg = Vec::with_capacity(n);
    for l in 0..n {
        dg.push(g.matrix().diff(chart.symbol(l))?);
    }
    // first kind: Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let half = Expr::rational(1, 2);
    let mut first = vec![Expr::zero(); n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                first[(l * n + i) * n + j] = &half * (&dg[i][(j, l)] + &dg[j][(i, l)] - &dg[l][(i, j)]);
            }
        }
    }
    let mut data = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let t: Vec<Expr> = (0..n)
                    .filter(|&l| !inv[(k, l)].is_zero_literal())
                    .map(|l| &inv[(k, l)] * &first[(l * n + i) * n + j])
                    .collect();
                data.push(Expr::add_all(t));
            }
        }
    }
    Ok(Christoffel { n, data })
}
