use std::collections::{BTreeSet, HashMap};

use num_traits::One;
use thiserror::Error;

use super::build::{add, func, mul, pow, q};
use super::node::{Expr, Func, Kind, Node, Symbol, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("cannot differentiate {func}({arg}): the sign of the argument is not fixed on the domain")]
    SignNotFixed { func: &'static str, arg: String },
}

/// Memoized differentiation with respect to one variable.
pub struct Differentiator<'a> {
    var: &'a Symbol,
    memo: HashMap<*const Node, Expr>,
    // memo keys are pointers; keep the nodes alive while the memo lives
    keep: Vec<Expr>,
}

impl<'a> Differentiator<'a> {
    pub fn new(var: &'a Symbol) -> Self {
        Differentiator { var, memo: HashMap::new(), keep: Vec::new() }
    }

    pub fn diff(&mut self, e: &Expr) -> Result<Expr, DiffError> {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return Ok(d.clone());
        }
        let d = self.compute(e)?;
        self.memo.insert(e.ptr(), d.clone());
        self.keep.push(e.clone());
        Ok(d)
    }

    fn compute(&mut self, e: &Expr) -> Result<Expr, DiffError> {
        Ok(match e.kind() {
            Kind::Const(_) => Expr::zero(),
            Kind::Var(s) => {
                if s == self.var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Add(ts) => {
                let mut v = Vec::with_capacity(ts.len());
                for t in ts {
                    v.push(self.diff(t)?);
                }
                add(v)
            }
            Kind::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let df = self.diff(f)?;
                    if df.is_zero_literal() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = Vec::with_capacity(fs.len());
                    for (j, g) in fs.iter().enumerate() {
                        if i != j {
                            prod.push(g.clone());
                        }
                    }
                    prod.push(df);
                    terms.push(mul(prod));
                }
                add(terms)
            }
            Kind::Pow(b, p) => {
                let db = self.diff(b)?;
                if db.is_zero_literal() {
                    return Ok(Expr::zero());
                }
                mul(vec![Expr::constant(p.clone()), pow(b, p - Q::one()), db])
            }
            Kind::Func(f, a) => {
                let da = self.diff(a)?;
                if da.is_zero_literal() {
                    return Ok(Expr::zero());
                }
                let outer = match f {
                    Func::Exp => e.clone(),
                    Func::Log => pow(a, q(-1)),
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Abs | Func::Sign => {
                        if a.sign().may_be_zero() {
                            return Err(DiffError::SignNotFixed { func: f.name(), arg: a.to_string() });
                        }
                        if *f == Func::Abs {
                            a.signum()
                        } else {
                            Expr::zero()
                        }
                    }
                };
                mul(vec![outer, da])
            }
        })
    }
}

/// Memoized simultaneous substitution of variables.
pub struct Substituter<'a> {
    map: &'a HashMap<Symbol, Expr>,
    memo: HashMap<*const Node, Expr>,
    keep: Vec<Expr>,
}

impl<'a> Substituter<'a> {
    pub fn new(map: &'a HashMap<Symbol, Expr>) -> Self {
        Substituter { map, memo: HashMap::new(), keep: Vec::new() }
    }

    pub fn apply(&mut self, e: &Expr) -> Expr {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return d.clone();
        }
        let out = match e.kind() {
            Kind::Const(_) => e.clone(),
            Kind::Var(s) => self.map.get(s).cloned().unwrap_or_else(|| e.clone()),
            Kind::Add(ts) => add(ts.iter().map(|t| self.apply(t)).collect()),
            Kind::Mul(fs) => mul(fs.iter().map(|t| self.apply(t)).collect()),
            Kind::Pow(b, p) => pow(&self.apply(b), p.clone()),
            Kind::Func(f, a) => func(*f, &self.apply(a)),
        };
        self.memo.insert(e.ptr(), out.clone());
        self.keep.push(e.clone());
        out
    }
}

impl Expr {
    pub fn diff(&self, v: &Symbol) -> Result<Expr, DiffError> {
        Differentiator::new(v).diff(self)
    }

    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> Expr {
        Substituter::new(map).apply(self)
    }

    pub fn subst1(&self, v: &Symbol, by: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(v.clone(), by.clone());
        self.subst(&m)
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            match e.kind() {
                Kind::Var(s) => {
                    out.insert(s.clone());
                }
                Kind::Const(_) => {}
                _ => stack.extend(e.children()),
            }
        }
        out
    }

    pub fn depends_on(&self, v: &Symbol) -> bool {
        self.free_symbols().contains(v)
    }

    /// Number of distinct DAG nodes.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if seen.insert(e.ptr()) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }
}
