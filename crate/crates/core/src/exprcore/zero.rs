//! Probabilistic zero testing: structural check first, then evaluation at
//! random rational points of the constrained domain.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::eval::{Evaluator, Point, Value};
use super::node::{Assumption, Expr, Symbol, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Relation {
    Gt(Q),
    Lt(Q),
    Ne(Q),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub var: String,
    pub relation: Relation,
}

impl Constraint {
    pub fn gt(var: &str, c: Q) -> Self {
        Constraint { var: var.to_string(), relation: Relation::Gt(c) }
    }
    pub fn lt(var: &str, c: Q) -> Self {
        Constraint { var: var.to_string(), relation: Relation::Lt(c) }
    }
    pub fn ne(var: &str, c: Q) -> Self {
        Constraint { var: var.to_string(), relation: Relation::Ne(c) }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.relation {
            Relation::Gt(c) => write!(f, "{} > {}", self.var, c),
            Relation::Lt(c) => write!(f, "{} < {}", self.var, c),
            Relation::Ne(c) => write!(f, "{} != {}", self.var, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("policy is invalid: {0}")]
    BadPolicy(String),
    #[error("domain constraints on `{0}` are unsatisfiable")]
    Unsatisfiable(String),
    #[error("no sample point in the domain gave a defined value for `{0}`")]
    NoValidSample(String),
}

#[derive(Clone, Debug)]
pub struct ZeroTestPolicy {
    pub sample_count: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub constraints: Vec<Constraint>,
}

impl Default for ZeroTestPolicy {
    fn default() -> Self {
        ZeroTestPolicy { sample_count: 20, tolerance: 1e-9, seed: 0, constraints: Vec::new() }
    }
}

/// A point at which an expression was found nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub index: usize,
    pub point: BTreeMap<String, Q>,
    pub value: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts: Vec<String> = self.point.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        write!(f, "value {} at ({})", self.value, pts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    Zero,
    NonZero(Witness),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero)
    }
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::Zero => None,
            ZeroVerdict::NonZero(w) => Some(w),
        }
    }
}

#[derive(Clone, Debug)]
struct Domain {
    lo: Option<Q>,
    hi: Option<Q>,
    excluded: Vec<Q>,
}

fn small_rational<R: Rng>(rng: &mut R, lo: &Q, hi: &Q) -> Q {
    // lo + (hi - lo) * a/b with a small denominator
    let b: i64 = rng.random_range(2..=12);
    let a: i64 = rng.random_range(1..b);
    lo + (hi - lo) * Q::new(BigInt::from(a), BigInt::from(b))
}

/// Rational approximation of sqrt(x) rounded up (`up`) or down.
fn sqrt_bound(x: &Q, up: bool) -> Q {
    let f = x.to_f64().unwrap_or(0.0).max(0.0).sqrt();
    let scale = 64i64;
    let mut n = if up { (f * scale as f64).ceil() as i64 } else { (f * scale as f64).floor() as i64 };
    loop {
        let c = Q::new(BigInt::from(n), BigInt::from(scale));
        let sq = &c * &c;
        if up && sq < *x {
            n += 1;
        } else if !up && sq > *x {
            n -= 1;
        } else {
            return c;
        }
    }
}

impl Domain {
    fn sample<R: Rng>(&self, rng: &mut R, nonzero: bool) -> Q {
        let width = Q::from_integer(BigInt::from(3));
        let (lo, hi) = match (&self.lo, &self.hi) {
            (Some(l), Some(h)) => (l.clone(), h.clone()),
            (Some(l), None) => (l.clone(), l + &width + &width),
            (None, Some(h)) => (h - &width - &width, h.clone()),
            (None, None) => (-width.clone(), width),
        };
        for _ in 0..64 {
            let v = if !lo.is_negative() {
                // squares keep square roots exact
                let (a, b) = (sqrt_bound(&lo, true), sqrt_bound(&hi, false));
                if a < b {
                    let s = small_rational(rng, &a, &b);
                    &s * &s
                } else {
                    small_rational(rng, &lo, &hi)
                }
            } else if !hi.is_positive() {
                let (a, b) = (sqrt_bound(&-&hi, true), sqrt_bound(&-&lo, false));
                if a < b {
                    let s = small_rational(rng, &a, &b);
                    -(&s * &s)
                } else {
                    small_rational(rng, &lo, &hi)
                }
            } else if rng.random_bool(0.5) {
                let b = sqrt_bound(&hi, false);
                let s = small_rational(rng, &Q::zero(), &b);
                &s * &s
            } else {
                let b = sqrt_bound(&-&lo, false);
                let s = small_rational(rng, &Q::zero(), &b);
                -(&s * &s)
            };
            let inside = self.lo.as_ref().is_none_or(|l| v > *l) && self.hi.as_ref().is_none_or(|h| v < *h);
            if inside && !(nonzero && v.is_zero()) && !self.excluded.contains(&v) {
                return v;
            }
        }
        // fall back to a plain rational in the window
        loop {
            let v = small_rational(rng, &lo, &hi);
            if !(nonzero && v.is_zero()) && !self.excluded.contains(&v) {
                return v;
            }
        }
    }
}

impl ZeroTestPolicy {
    pub fn with_seed(seed: u64) -> Self {
        ZeroTestPolicy { seed, ..Default::default() }
    }

    pub fn constrained(&self, extra: &[Constraint]) -> Self {
        let mut p = self.clone();
        p.constraints.extend(extra.iter().cloned());
        p
    }

    fn domain_for(&self, s: &Symbol) -> Result<(Domain, bool), ZeroTestError> {
        let mut d = Domain { lo: None, hi: None, excluded: Vec::new() };
        let mut nonzero = false;
        match s.assumption() {
            Assumption::Real => {}
            Assumption::NonZero => nonzero = true,
            Assumption::Positive => d.lo = Some(Q::zero()),
        }
        for c in self.constraints.iter().filter(|c| c.var == s.name()) {
            match &c.relation {
                Relation::Gt(v) => {
                    if d.lo.as_ref().is_none_or(|l| v > l) {
                        d.lo = Some(v.clone())
                    }
                }
                Relation::Lt(v) => {
                    if d.hi.as_ref().is_none_or(|h| v < h) {
                        d.hi = Some(v.clone())
                    }
                }
                Relation::Ne(v) => {
                    if v.is_zero() {
                        nonzero = true;
                    }
                    d.excluded.push(v.clone());
                }
            }
        }
        if let (Some(l), Some(h)) = (&d.lo, &d.hi) {
            if l >= h {
                return Err(ZeroTestError::Unsatisfiable(s.name().to_string()));
            }
        }
        Ok((d, nonzero))
    }

    fn validate(&self) -> Result<(), ZeroTestError> {
        if self.sample_count == 0 {
            return Err(ZeroTestError::BadPolicy("sample_count must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(ZeroTestError::BadPolicy("tolerance must be positive".into()));
        }
        Ok(())
    }

    fn close_to_zero(&self, v: &Value, scale: f64) -> bool {
        match v {
            Value::Exact(q) => q.is_zero(),
            Value::Approx(x) => x.abs() <= self.tolerance * scale.max(1.0),
        }
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool, ZeroTestError> {
        Ok(self.check(e)?.is_zero())
    }

    pub fn check(&self, e: &Expr) -> Result<ZeroVerdict, ZeroTestError> {
        self.check_all(std::slice::from_ref(e))
    }

    pub fn all_zero(&self, es: &[Expr]) -> Result<bool, ZeroTestError> {
        Ok(self.check_all(es)?.is_zero())
    }

    /// Tests every expression, sharing sample points. Reports the first
    /// nonzero found (lowest point index, then lowest expression index).
    pub fn check_all(&self, es: &[Expr]) -> Result<ZeroVerdict, ZeroTestError> {
        self.validate()?;
        let live: Vec<(usize, &Expr)> = es.iter().enumerate().filter(|(_, e)| !e.is_zero_literal()).collect();
        if live.is_empty() {
            return Ok(ZeroVerdict::Zero);
        }
        // a nonzero constant needs no sampling
        for (i, e) in &live {
            if let Some(c) = e.as_const() {
                return Ok(ZeroVerdict::NonZero(Witness { index: *i, point: BTreeMap::new(), value: c.to_string() }));
            }
        }
        let mut syms: BTreeSet<Symbol> = BTreeSet::new();
        let mut fp: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, e) in &live {
            syms.extend(e.free_symbols());
            fp = (fp ^ e.fingerprint()).wrapping_mul(0x100_0000_01b3);
        }
        let mut doms = Vec::new();
        for s in &syms {
            doms.push((s.clone(), self.domain_for(s)?));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fp);
        let mut defined = vec![0usize; es.len()];
        let mut valid_points = 0;
        let max_attempts = self.sample_count * 10 + 20;
        for _ in 0..max_attempts {
            if valid_points >= self.sample_count {
                break;
            }
            let mut point: Point = HashMap::new();
            for (s, (d, nz)) in &doms {
                point.insert(s.name().to_string(), d.sample(&mut rng, *nz));
            }
            let mut ev = Evaluator::new(&point);
            let mut results = Vec::with_capacity(live.len());
            let mut ok = true;
            for (i, e) in &live {
                match ev.eval(e) {
                    Ok(v) => results.push((*i, v)),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            valid_points += 1;
            for (i, v) in results {
                defined[i] += 1;
                if !self.close_to_zero(&v.value, v.scale) {
                    let point = point.into_iter().collect();
                    return Ok(ZeroVerdict::NonZero(Witness { index: i, point, value: v.value.to_string() }));
                }
            }
        }
        if valid_points == 0 {
            return Err(ZeroTestError::NoValidSample(live[0].1.to_string()));
        }
        Ok(ZeroVerdict::Zero)
    }

    /// Deterministic sample points of the domain over the given symbols.
    pub fn sample_points(&self, syms: &[Symbol], count: usize, salt: u64) -> Result<Vec<Point>, ZeroTestError> {
        let mut doms = Vec::new();
        for s in syms {
            doms.push((s.clone(), self.domain_for(s)?));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        Ok((0..count)
            .map(|_| doms.iter().map(|(s, (d, nz))| (s.name().to_string(), d.sample(&mut rng, *nz))).collect())
            .collect())
    }
}
