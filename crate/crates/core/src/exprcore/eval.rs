use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::build::rational_pow;
use super::node::{Expr, Func, Kind, Node, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a nonpositive value")]
    LogDomain,
    #[error("even root of a negative value")]
    RootDomain,
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("floating result is not finite")]
    NonFinite,
}

/// Exact while the computation stays rational, floating once it leaves.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Q),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }
    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Approx(x) => write!(f, "{x:e}"),
        }
    }
}

/// Value paired with a magnitude scale of the computation that produced it;
/// floating results are compared against the scale, not against one.
#[derive(Clone, Debug)]
pub struct Evaluated {
    pub value: Value,
    pub scale: f64,
}

/// A point assigns rationals to variable names.
pub type Point = HashMap<String, Q>;

/// Memoized evaluator for a single point.
pub struct Evaluator<'a> {
    point: &'a Point,
    memo: HashMap<*const Node, Result<Evaluated, EvalError>>,
}

fn finite(x: f64) -> Result<f64, EvalError> {
    if x.is_finite() { Ok(x) } else { Err(EvalError::NonFinite) }
}

impl<'a> Evaluator<'a> {
    pub fn new(point: &'a Point) -> Self {
        Evaluator { point, memo: HashMap::new() }
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Evaluated, EvalError> {
        if let Some(r) = self.memo.get(&e.ptr()) {
            return r.clone();
        }
        let r = self.compute(e);
        self.memo.insert(e.ptr(), r.clone());
        r
    }

    fn compute(&mut self, e: &Expr) -> Result<Evaluated, EvalError> {
        match e.kind() {
            Kind::Const(c) => {
                let s = c.to_f64().unwrap_or(0.0).abs();
                Ok(Evaluated { value: Value::Exact(c.clone()), scale: s })
            }
            Kind::Var(s) => {
                let v = self.point.get(s.name()).ok_or_else(|| EvalError::Unbound(s.name().to_string()))?;
                Ok(Evaluated { value: Value::Exact(v.clone()), scale: v.to_f64().unwrap_or(0.0).abs() })
            }
            Kind::Add(ts) => {
                let mut exact = Q::zero();
                let mut approx = 0.0f64;
                let mut is_exact = true;
                let mut scale = 0.0f64;
                for t in ts {
                    let v = self.eval(t)?;
                    scale = scale.max(v.scale);
                    match v.value {
                        Value::Exact(q) if is_exact => exact += q,
                        other => {
                            if is_exact {
                                approx = exact.to_f64().unwrap_or(f64::NAN);
                                is_exact = false;
                            }
                            approx += other.to_f64();
                        }
                    }
                }
                let value = if is_exact { Value::Exact(exact) } else { Value::Approx(finite(approx)?) };
                Ok(Evaluated { value, scale })
            }
            Kind::Mul(fs) => {
                let mut exact = Q::one();
                let mut approx = 1.0f64;
                let mut is_exact = true;
                let mut scale = 1.0f64;
                for f in fs {
                    let v = self.eval(f)?;
                    scale *= v.scale.max(v.value.to_f64().abs());
                    match v.value {
                        Value::Exact(q) if is_exact => exact *= q,
                        other => {
                            if is_exact {
                                approx = exact.to_f64().unwrap_or(f64::NAN);
                                is_exact = false;
                            }
                            approx *= other.to_f64();
                        }
                    }
                }
                let value = if is_exact { Value::Exact(exact) } else { Value::Approx(finite(approx)?) };
                Ok(Evaluated { value, scale: finite(scale)? })
            }
            Kind::Pow(b, p) => {
                let v = self.eval(b)?;
                let base = v.value.to_f64();
                if base == 0.0 && !p.is_positive() {
                    return Err(EvalError::DivisionByZero);
                }
                if base < 0.0 && p.denom().to_u64().is_some_and(|d| d % 2 == 0) {
                    return Err(EvalError::RootDomain);
                }
                let pf = p.to_f64().unwrap_or(f64::NAN);
                if let Value::Exact(c) = &v.value {
                    if let Some(r) = rational_pow(c, p) {
                        let s = r.to_f64().unwrap_or(0.0).abs();
                        return Ok(Evaluated { value: Value::Exact(r), scale: s.max(v.scale.powf(pf)) });
                    }
                }
                let mag = base.abs().powf(pf);
                let odd_num = p.numer().to_i64().is_some_and(|n| n % 2 != 0);
                let x = if base < 0.0 && odd_num { -mag } else { mag };
                let x = finite(x)?;
                let scale = if v.scale > 0.0 { finite(v.scale.powf(pf)).unwrap_or(x.abs()) } else { x.abs() };
                Ok(Evaluated { value: Value::Approx(x), scale: scale.max(x.abs()) })
            }
            Kind::Func(f, a) => {
                let v = self.eval(a)?;
                let x = v.value.to_f64();
                let res = match f {
                    Func::Abs => {
                        return Ok(match v.value {
                            Value::Exact(q) => Evaluated { value: Value::Exact(q.abs()), scale: v.scale },
                            Value::Approx(y) => Evaluated { value: Value::Approx(y.abs()), scale: v.scale },
                        });
                    }
                    Func::Sign => {
                        let s = match &v.value {
                            Value::Exact(q) => {
                                if q.is_zero() {
                                    0
                                } else if q.is_positive() {
                                    1
                                } else {
                                    -1
                                }
                            }
                            Value::Approx(y) => {
                                if *y > 0.0 {
                                    1
                                } else if *y < 0.0 {
                                    -1
                                } else {
                                    0
                                }
                            }
                        };
                        return Ok(Evaluated { value: Value::Exact(Q::from_integer(s.into())), scale: 1.0 });
                    }
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(EvalError::LogDomain);
                        }
                        if let Value::Exact(q) = &v.value {
                            if q.is_one() {
                                return Ok(Evaluated { value: Value::Exact(Q::zero()), scale: 1.0 });
                            }
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                };
                let res = finite(res)?;
                Ok(Evaluated { value: Value::Approx(res), scale: res.abs().max(1.0) })
            }
        }
    }
}

impl Expr {
    /// One-shot evaluation at a point.
    pub fn eval_at(&self, point: &Point) -> Result<Value, EvalError> {
        Evaluator::new(point).eval(self).map(|e| e.value)
    }
}
