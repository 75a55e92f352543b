//! Smart constructors. Every expression is built through these, so the
//! interned DAG is always in the normal form the printer and parser agree on.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow as _, Signed, ToPrimitive, Zero};

use super::node::{canonical_cmp, intern, Expr, Func, Kind, SignSet, Symbol, Q};

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    pub fn constant(c: Q) -> Expr {
        intern(Kind::Const(c))
    }
    pub fn int(n: i64) -> Expr {
        Expr::constant(q(n))
    }
    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::constant(qr(n, d))
    }
    pub fn zero() -> Expr {
        Expr::int(0)
    }
    pub fn one() -> Expr {
        Expr::int(1)
    }
    pub fn var(s: &Symbol) -> Expr {
        intern(Kind::Var(s.clone()))
    }

    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        add(terms.into_iter().collect())
    }
    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        mul(factors.into_iter().collect())
    }
    pub fn pow_q(&self, e: Q) -> Expr {
        pow(self, e)
    }
    pub fn powi(&self, n: i64) -> Expr {
        pow(self, q(n))
    }
    pub fn sqrt(&self) -> Expr {
        pow(self, qr(1, 2))
    }
    pub fn recip(&self) -> Expr {
        pow(self, q(-1))
    }
    pub fn exp(&self) -> Expr {
        func(Func::Exp, self)
    }
    pub fn log(&self) -> Expr {
        func(Func::Log, self)
    }
    pub fn abs(&self) -> Expr {
        func(Func::Abs, self)
    }
    pub fn signum(&self) -> Expr {
        func(Func::Sign, self)
    }
    pub fn sin(&self) -> Expr {
        func(Func::Sin, self)
    }
    pub fn cos(&self) -> Expr {
        func(Func::Cos, self)
    }
    pub fn apply(f: Func, arg: &Expr) -> Expr {
        func(f, arg)
    }
    pub fn scale(&self, c: &Q) -> Expr {
        mul(vec![Expr::constant(c.clone()), self.clone()])
    }

    /// True when the leading coefficient is negative, the printer's cue for `-`.
    pub fn looks_negative(&self) -> bool {
        match self.kind() {
            Kind::Const(c) => c.is_negative(),
            Kind::Mul(v) => v[0].as_const().is_some_and(|c| c.is_negative()),
            Kind::Add(v) => v.iter().find(|t| t.as_const().is_none()).unwrap_or(&v[0]).looks_negative(),
            _ => false,
        }
    }
}

/// Split a term into a rational coefficient and the remaining monomial.
pub(crate) fn split_coeff(t: &Expr) -> (Q, Expr) {
    match t.kind() {
        Kind::Const(c) => (c.clone(), Expr::one()),
        Kind::Mul(v) => match v[0].as_const() {
            Some(c) => {
                let rest = if v.len() == 2 { v[1].clone() } else { intern(Kind::Mul(v[1..].to_vec())) };
                (c.clone(), rest)
            }
            None => (Q::one(), t.clone()),
        },
        _ => (Q::one(), t.clone()),
    }
}

fn term(c: Q, rest: &Expr) -> Expr {
    if c.is_one() {
        return rest.clone();
    }
    let mut v = vec![Expr::constant(c)];
    match rest.kind() {
        Kind::Mul(fs) => v.extend(fs.iter().cloned()),
        _ => v.push(rest.clone()),
    }
    intern(Kind::Mul(v))
}

pub fn add(terms: Vec<Expr>) -> Expr {
    let mut constant = Q::zero();
    let mut order: Vec<Expr> = Vec::new();
    let mut coeffs: HashMap<Expr, Q> = HashMap::new();
    let mut stack: Vec<Expr> = terms;
    stack.reverse();
    while let Some(t) = stack.pop() {
        match t.kind() {
            Kind::Const(c) => constant += c,
            Kind::Add(v) => {
                for x in v.iter().rev() {
                    stack.push(x.clone());
                }
            }
            Kind::Mul(v) if v.len() == 2 && v[0].as_const().is_some() && matches!(v[1].kind(), Kind::Add(_)) => {
                // a scaled sum inside a sum is spread over its terms
                let Kind::Add(ts) = v[1].kind() else { unreachable!() };
                for x in ts.iter().rev() {
                    stack.push(mul(vec![v[0].clone(), x.clone()]));
                }
            }
            _ => {
                let (c, rest) = split_coeff(&t);
                match coeffs.get_mut(&rest) {
                    Some(acc) => *acc += c,
                    None => {
                        order.push(rest.clone());
                        coeffs.insert(rest, c);
                    }
                }
            }
        }
    }
    let mut keyed: Vec<(Expr, Expr)> = order
        .into_iter()
        .filter_map(|rest| {
            let c = coeffs.remove(&rest).unwrap();
            if c.is_zero() { None } else { Some((term(c, &rest), rest)) }
        })
        .collect();
    keyed.sort_by(|a, b| canonical_cmp(&a.1, &b.1));
    let mut out: Vec<Expr> = keyed.into_iter().map(|(t, _)| t).collect();
    if !constant.is_zero() {
        out.insert(0, Expr::constant(constant));
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => intern(Kind::Add(out)),
    }
}

pub fn mul(factors: Vec<Expr>) -> Expr {
    let mut coeff = Q::one();
    let mut order: Vec<Expr> = Vec::new();
    let mut exps: HashMap<Expr, Q> = HashMap::new();
    let mut stack = factors;
    stack.reverse();
    while let Some(f) = stack.pop() {
        match f.kind() {
            Kind::Const(c) => {
                if c.is_zero() {
                    return Expr::zero();
                }
                coeff *= c;
            }
            Kind::Mul(v) => {
                for x in v.iter().rev() {
                    stack.push(x.clone());
                }
            }
            _ => {
                let (b, e) = match f.kind() {
                    Kind::Pow(b, e) => (b.clone(), e.clone()),
                    _ => (f.clone(), Q::one()),
                };
                match exps.get_mut(&b) {
                    Some(acc) => *acc += e,
                    None => {
                        order.push(b.clone());
                        exps.insert(b, e);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut again = Vec::new();
    for b in order {
        let e = exps.remove(&b).unwrap();
        if e.is_zero() {
            continue;
        }
        let p = pow(&b, e);
        match p.kind() {
            Kind::Const(c) => {
                if c.is_zero() {
                    return Expr::zero();
                }
                coeff *= c;
            }
            Kind::Mul(_) => again.push(p),
            _ => out.push(p),
        }
    }
    if !again.is_empty() {
        again.extend(out);
        again.push(Expr::constant(coeff));
        return mul(again);
    }
    out.sort_by(canonical_cmp);
    if out.is_empty() {
        return Expr::constant(coeff);
    }
    if coeff.is_one() && out.len() == 1 {
        return out.pop().unwrap();
    }
    if !coeff.is_one() {
        out.insert(0, Expr::constant(coeff));
    }
    intern(Kind::Mul(out))
}

/// Exact `q`-th root of a nonnegative integer, if it exists.
fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    let r = n.nth_root(k);
    if (&r).pow(k) == *n { Some(r) } else { None }
}

/// Exact real value of `c^e` when it is rational.
pub(crate) fn rational_pow(c: &Q, e: &Q) -> Option<Q> {
    if c.is_zero() {
        return if e.is_positive() { Some(Q::zero()) } else { None };
    }
    let k = e.denom().to_u32()?;
    let neg = c.is_negative();
    if neg && k % 2 == 0 {
        return None;
    }
    let a = c.abs();
    let rn = int_root(a.numer(), k)?;
    let rd = int_root(a.denom(), k)?;
    let mut root = Q::new(rn, rd);
    if neg {
        root = -root;
    }
    let p = e.numer().to_i32()?;
    if p.unsigned_abs() > 4096 {
        return None;
    }
    Some(if p >= 0 { root.pow(p) } else { root.recip().pow(-p) })
}

fn nonneg(e: &Expr) -> bool {
    e.sign().subset_of(SignSet::NONNEG)
}

pub fn pow(base: &Expr, e: Q) -> Expr {
    if e.is_zero() {
        return Expr::one();
    }
    if e.is_one() {
        return base.clone();
    }
    match base.kind() {
        Kind::Const(c) => {
            if let Some(v) = rational_pow(c, &e) {
                return Expr::constant(v);
            }
            if c.is_one() {
                return Expr::one();
            }
            intern(Kind::Pow(base.clone(), e))
        }
        Kind::Pow(b, a) => {
            let ae = a * &e;
            if e.is_integer() || nonneg(b) {
                pow(b, ae)
            } else if a.is_integer() && a.numer().is_even() {
                pow(&b.abs(), ae)
            } else if a.is_integer() && e.denom().is_odd() {
                pow(b, ae)
            } else {
                intern(Kind::Pow(base.clone(), e))
            }
        }
        Kind::Mul(fs) => {
            if e.is_integer() {
                return mul(fs.iter().map(|f| pow(f, e.clone())).collect());
            }
            let mut split = Vec::new();
            let mut rest = Vec::new();
            for f in fs {
                if nonneg(f) || e.denom().is_odd() {
                    split.push(pow(f, e.clone()));
                } else {
                    rest.push(f.clone());
                }
            }
            if split.is_empty() {
                return intern(Kind::Pow(base.clone(), e));
            }
            if !rest.is_empty() {
                let r = mul(rest);
                split.push(if let Kind::Mul(_) = r.kind() { intern(Kind::Pow(r, e)) } else { pow(&r, e) });
            }
            mul(split)
        }
        Kind::Func(Func::Abs, x) if e.is_integer() && e.numer().is_even() => pow(x, e),
        Kind::Func(Func::Sign, x) if e.is_integer() && !x.sign().may_be_zero() => {
            if e.numer().is_even() { Expr::one() } else { base.clone() }
        }
        Kind::Func(Func::Exp, x) => mul(vec![Expr::constant(e), x.clone()]).exp(),
        _ => intern(Kind::Pow(base.clone(), e)),
    }
}

fn negate(e: &Expr) -> Expr {
    mul(vec![Expr::int(-1), e.clone()])
}

/// Negation that spreads over sums, so the result never looks negative again.
fn flip(e: &Expr) -> Expr {
    match e.kind() {
        Kind::Add(ts) => add(ts.iter().map(negate).collect()),
        _ => negate(e),
    }
}

pub fn func(f: Func, arg: &Expr) -> Expr {
    let s = arg.sign();
    match f {
        Func::Exp => match arg.kind() {
            Kind::Const(c) if c.is_zero() => Expr::one(),
            Kind::Func(Func::Log, x) => x.clone(),
            _ => intern(Kind::Func(f, arg.clone())),
        },
        Func::Log => match arg.kind() {
            Kind::Const(c) if c.is_one() => Expr::zero(),
            Kind::Func(Func::Exp, x) => x.clone(),
            Kind::Mul(fs) if fs.iter().all(|x| x.sign() == SignSet::POS) => {
                add(fs.iter().map(|x| x.log()).collect())
            }
            Kind::Pow(b, e) if b.sign() == SignSet::POS => mul(vec![Expr::constant(e.clone()), b.log()]),
            _ => intern(Kind::Func(f, arg.clone())),
        },
        Func::Abs => {
            if let Kind::Const(c) = arg.kind() {
                return Expr::constant(c.abs());
            }
            if s.subset_of(SignSet::NONNEG) {
                return arg.clone();
            }
            if s.subset_of(SignSet::NONPOS) {
                return negate(arg);
            }
            match arg.kind() {
                Kind::Mul(fs) => mul(fs.iter().map(|x| x.abs()).collect()),
                Kind::Pow(b, e) if e.is_integer() => pow(&b.abs(), e.clone()),
                Kind::Func(Func::Sign, _) if !s.may_be_zero() => Expr::one(),
                _ => intern(Kind::Func(f, arg.clone())),
            }
        }
        Func::Sign => {
            if let Kind::Const(c) = arg.kind() {
                return Expr::constant(if c.is_zero() {
                    Q::zero()
                } else if c.is_positive() {
                    Q::one()
                } else {
                    -Q::one()
                });
            }
            if s == SignSet::POS {
                return Expr::one();
            }
            if s == SignSet::NEG {
                return Expr::int(-1);
            }
            match arg.kind() {
                Kind::Mul(fs) => mul(fs.iter().map(|x| x.signum()).collect()),
                Kind::Pow(b, e) if e.is_integer() => pow(&b.signum(), e.clone()),
                Kind::Func(Func::Sign, _) => arg.clone(),
                Kind::Func(Func::Abs, x) if !x.sign().may_be_zero() => Expr::one(),
                _ => intern(Kind::Func(f, arg.clone())),
            }
        }
        Func::Sin => {
            if arg.is_zero_literal() {
                return Expr::zero();
            }
            if arg.looks_negative() {
                return negate(&flip(arg).sin());
            }
            intern(Kind::Func(f, arg.clone()))
        }
        Func::Cos => {
            if arg.is_zero_literal() {
                return Expr::one();
            }
            if arg.looks_negative() {
                return flip(arg).cos();
            }
            intern(Kind::Func(f, arg.clone()))
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                std::ops::$tr::$m(&self, &rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(&self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                std::ops::$tr::$m(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| add(vec![a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| add(vec![a.clone(), negate(b)]));
binop!(Mul, mul, |a, b| mul(vec![a.clone(), b.clone()]));
binop!(Div, div, |a, b| mul(vec![a.clone(), pow(b, q(-1))]));

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        negate(self)
    }
}
impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        negate(&self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}
impl From<Q> for Expr {
    fn from(c: Q) -> Expr {
        Expr::constant(c)
    }
}
