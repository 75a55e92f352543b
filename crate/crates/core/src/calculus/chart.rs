use std::fmt;
use std::sync::Arc;

use crate::exprcore::{parse, Constraint, Expr, ParseError, Symbol, ZeroTestPolicy};

use super::CalcError;

/// Named coordinate system with domain constraints.
#[derive(Debug, PartialEq)]
pub struct Chart {
    name: String,
    coords: Vec<Symbol>,
    constraints: Vec<Constraint>,
}

impl Chart {
    pub fn new(name: &str, coords: Vec<Symbol>) -> Result<Arc<Chart>, CalcError> {
        Self::with_constraints(name, coords, Vec::new())
    }

    pub fn with_constraints(name: &str, coords: Vec<Symbol>, constraints: Vec<Constraint>) -> Result<Arc<Chart>, CalcError> {
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].iter().any(|d| d.name() == c.name()) {
                return Err(CalcError::Dimension(format!("coordinate `{}` declared twice", c.name())));
            }
            if c.name() == "r" || c.name() == "s" {
                return Err(CalcError::Dimension(format!("`{}` is reserved for the action parameter", c.name())));
            }
        }
        Ok(Arc::new(Chart { name: name.to_string(), coords, constraints }))
    }

    /// Real coordinates by name.
    pub fn real(name: &str, names: &[&str]) -> Arc<Chart> {
        Self::new(name, names.iter().map(|n| Symbol::real(n)).collect()).expect("distinct names")
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
    pub fn coords(&self) -> &[Symbol] {
        &self.coords
    }
    pub fn symbol(&self, i: usize) -> &Symbol {
        &self.coords[i]
    }
    pub fn coord(&self, i: usize) -> Expr {
        Expr::var(&self.coords[i])
    }
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|s| s.name() == name)
    }
    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        let mut syms = self.coords.clone();
        syms.push(Symbol::action2());
        parse(text, &syms)
    }

    /// The policy with this chart's domain constraints added.
    pub fn policy(&self, base: &ZeroTestPolicy) -> ZeroTestPolicy {
        base.constrained(&self.constraints)
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.coords.iter().map(|s| s.name()).collect();
        write!(f, "{}({})", self.name, names.join(", "))
    }
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<(), CalcError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(CalcError::ChartMismatch(a.to_string(), b.to_string()))
    }
}
