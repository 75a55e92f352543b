use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::node::{Expr, Kind, Q};

fn write_q(out: &mut String, c: &Q) {
    if c.is_integer() {
        let _ = write!(out, "{}", c.numer());
    } else {
        let _ = write!(out, "{}/{}", c.numer(), c.denom());
    }
}

fn is_atomic(e: &Expr) -> bool {
    match e.kind() {
        Kind::Var(_) | Kind::Func(..) => true,
        Kind::Const(c) => c.is_integer() && !c.is_negative(),
        Kind::Pow(_, p) => *p == Q::new(1.into(), 2.into()),
        _ => false,
    }
}

/// Print as a factor: anything looser than a power gets parentheses.
fn write_factor(out: &mut String, e: &Expr) {
    match e.kind() {
        Kind::Add(_) | Kind::Mul(_) => {
            out.push('(');
            write_expr(out, e);
            out.push(')');
        }
        Kind::Const(c) if !c.is_integer() || c.is_negative() => {
            out.push('(');
            write_q(out, c);
            out.push(')');
        }
        Kind::Pow(_, p) if p.is_negative() => {
            out.push('(');
            write_expr(out, e);
            out.push(')');
        }
        _ => write_expr(out, e),
    }
}

fn write_pow_pos(out: &mut String, b: &Expr, p: &Q) {
    if p.is_one() {
        write_factor(out, b);
    } else if *p == Q::new(1.into(), 2.into()) {
        out.push_str("sqrt(");
        write_expr(out, b);
        out.push(')');
    } else {
        if is_atomic(b) {
            write_expr(out, b);
        } else {
            out.push('(');
            write_expr(out, b);
            out.push(')');
        }
        if p.is_integer() {
            let _ = write!(out, "^{}", p.numer());
        } else {
            out.push_str("^(");
            write_q(out, p);
            out.push(')');
        }
    }
}

/// Writes a product-like term: coefficient, numerator factors, `/` denominators.
fn write_product(out: &mut String, coeff: &Q, factors: &[Expr]) {
    let mut num: Vec<(&Expr, Q)> = Vec::new();
    let mut den: Vec<(&Expr, Q)> = Vec::new();
    for f in factors {
        match f.kind() {
            Kind::Pow(b, p) if p.is_negative() => den.push((b, -p.clone())),
            Kind::Pow(b, p) => num.push((b, p.clone())),
            _ => num.push((f, Q::one())),
        }
    }
    let mut c = coeff.clone();
    if c.is_negative() {
        out.push('-');
        c = -c;
    }
    let mut first = true;
    if !c.numer().is_one() || num.is_empty() {
        let _ = write!(out, "{}", c.numer());
        first = false;
    }
    for (b, p) in &num {
        if !first {
            out.push('*');
        }
        first = false;
        write_pow_pos(out, b, p);
    }
    if !c.denom().is_one() {
        let _ = write!(out, "/{}", c.denom());
    }
    for (b, p) in &den {
        out.push('/');
        write_pow_pos(out, b, p);
    }
}

pub(crate) fn write_expr(out: &mut String, e: &Expr) {
    match e.kind() {
        Kind::Const(c) => write_q(out, c),
        Kind::Var(s) => out.push_str(s.name()),
        Kind::Add(ts) => {
            let mut ordered: Vec<&Expr> = ts.iter().filter(|t| t.as_const().is_none()).collect();
            ordered.extend(ts.iter().filter(|t| t.as_const().is_some()));
            for (i, t) in ordered.into_iter().enumerate() {
                if i == 0 {
                    write_expr(out, t);
                } else if t.looks_negative() {
                    out.push_str(" - ");
                    write_expr(out, &-t);
                } else {
                    out.push_str(" + ");
                    write_expr(out, t);
                }
            }
        }
        Kind::Mul(fs) => match fs[0].as_const() {
            Some(c) => write_product(out, c, &fs[1..]),
            None => write_product(out, &Q::one(), fs),
        },
        Kind::Pow(b, p) => {
            if p.is_negative() {
                write_product(out, &Q::one(), std::slice::from_ref(e));
            } else {
                write_pow_pos(out, b, p);
            }
        }
        Kind::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}
