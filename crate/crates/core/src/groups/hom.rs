use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exprcore::{Expr, ExprMatrix, Symbol, ZeroTestPolicy, Q};

use super::{GroupError, GroupId, QMatrix, QuotientValue, SymbolicQuotient};

/// A homomorphism ℝ^× → GL(ℝ) written as A(r) = exp(B log r) for r > 0 and
/// A(r) = C exp(B log|r|) for r < 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeHom {
    b: QMatrix,
    c: QMatrix,
}

/// How much of A(r) can be written down exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HomClass {
    /// Rational spectrum: closed form in r, r^λ and log r.
    Symbolic,
    /// Some eigenvalue of B is irrational or complex.
    NumericOnly,
}

impl DegreeHom {
    pub fn new(b: QMatrix, c: QMatrix) -> Result<Self, GroupError> {
        if !b.is_square() || b.rows() != c.rows() || b.cols() != c.cols() {
            return Err(GroupError::Size(format!("B is {}x{}, C is {}x{}", b.rows(), b.cols(), c.rows(), c.cols())));
        }
        let n = b.rows();
        if c.mul(&c)? != QMatrix::identity(n) {
            return Err(GroupError::InvalidHom(format!("C² ≠ I for C = {c}")));
        }
        if c.mul(&b)? != b.mul(&c)? {
            return Err(GroupError::InvalidHom(format!("C = {c} does not commute with B = {b}")));
        }
        Ok(DegreeHom { b, c })
    }
    pub fn trivial(n: usize) -> Self {
        DegreeHom { b: QMatrix::zeros(n, n), c: QMatrix::identity(n) }
    }
    /// B = diag(0_k, I_k), C = diag(I_k, −I_k): the lift r ↦ diag(I, rI) of the
    /// identity degree, on all of ℝ^×.
    pub fn contact(k: usize) -> Self {
        let mut d = vec![Q::zero(); k];
        d.extend(std::iter::repeat_n(Q::one(), k));
        let mut c = vec![Q::one(); k];
        c.extend(std::iter::repeat_n(-Q::one(), k));
        DegreeHom { b: QMatrix::diagonal(&d), c: QMatrix::diagonal(&c) }
    }
    /// B = q·I, C = I: the lift r ↦ |r|^q I.
    pub fn scalar(n: usize, q: Q) -> Self {
        DegreeHom { b: QMatrix::scalar(n, q), c: QMatrix::identity(n) }
    }
    pub fn b(&self) -> &QMatrix {
        &self.b
    }
    pub fn c(&self) -> &QMatrix {
        &self.c
    }
    pub fn dim(&self) -> usize {
        self.b.rows()
    }

    pub fn class(&self) -> HomClass {
        if eigenvalues(&self.b).is_some() {
            HomClass::Symbolic
        } else {
            HomClass::NumericOnly
        }
    }

    /// exp(B log r) with `r` a positive symbol.
    pub fn eval_symbolic(&self, r: &Symbol) -> Result<ExprMatrix, GroupError> {
        self.eval_positive(&Expr::var(r))
    }

    fn eval_positive(&self, r: &Expr) -> Result<ExprMatrix, GroupError> {
        let n = self.dim();
        let eig = eigenvalues(&self.b).ok_or(GroupError::Unsupported)?;
        // generalized eigenspace bases, concatenated into P
        let mut cols: Vec<Vec<Q>> = Vec::new();
        let mut blocks = Vec::new();
        for (lam, m) in &eig {
            let shifted = self.b.sub(&QMatrix::scalar(n, lam.clone()))?;
            let basis = shifted.powi(*m as u32).nullspace();
            blocks.push((lam.clone(), *m, cols.len(), basis.len()));
            cols.extend(basis);
        }
        let p = QMatrix::from_fn(n, n, |i, j| cols[j][i].clone());
        let pinv = p.inverse()?;
        let logr = r.log();
        let mut acc = ExprMatrix::zeros(n, n);
        for (lam, m, start, len) in blocks {
            let sel = QMatrix::from_fn(n, n, |i, j| if i == j && i >= start && i < start + len { Q::one() } else { Q::zero() });
            let proj = p.mul(&sel)?.mul(&pinv)?;
            let shifted = self.b.sub(&QMatrix::scalar(n, lam.clone()))?;
            let rl = r.pow_q(lam);
            let mut nil = QMatrix::identity(n);
            let mut fact = Q::one();
            for j in 0..m {
                if j > 0 {
                    nil = nil.mul(&shifted)?;
                    fact *= Q::from_integer(BigInt::from(j));
                }
                let term = nil.mul(&proj)?;
                if term.is_zero() {
                    break;
                }
                let coeff = &rl * logr.powi(j as i64) * Expr::constant(fact.recip());
                acc = acc.add(&term.to_expr().scale(&coeff))?;
            }
        }
        Ok(acc)
    }

    /// A(r) for a rational r ≠ 0.
    pub fn eval(&self, r: &Q) -> Result<ExprMatrix, GroupError> {
        if r.is_zero() {
            return Err(GroupError::ZeroParameter);
        }
        let pos = self.eval_positive(&Expr::constant(r.abs()))?;
        if r.is_negative() {
            Ok(self.c.to_expr().mul(&pos)?)
        } else {
            Ok(pos)
        }
    }

    /// A(r) for an expression r that is nonzero on the domain; the reflection
    /// enters as ½(I + C) + ½ sign(r)(I − C).
    pub fn eval_expr(&self, r: &Expr) -> Result<ExprMatrix, GroupError> {
        let pos = self.eval_positive(&r.abs())?;
        let n = self.dim();
        if self.c == QMatrix::identity(n) {
            return Ok(pos);
        }
        let half = Q::new(1.into(), 2.into());
        let id = QMatrix::identity(n);
        let even = id.add(&self.c)?.scale(&half).to_expr();
        let odd = id.sub(&self.c)?.scale(&half).to_expr().scale(&r.signum());
        Ok(even.add(&odd)?.mul(&pos)?)
    }

    /// Floating-point A(r), available for every B.
    pub fn eval_f64(&self, r: f64) -> Result<Vec<Vec<f64>>, GroupError> {
        if r == 0.0 {
            return Err(GroupError::ZeroParameter);
        }
        let n = self.dim();
        let t = r.abs().ln();
        let bf: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| self.b[(i, j)].to_f64().unwrap_or(f64::NAN) * t).collect()).collect();
        let mut e = expm(&bf);
        if r < 0.0 {
            let cf: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| self.c[(i, j)].to_f64().unwrap_or(f64::NAN)).collect()).collect();
            e = matmul_f64(&cf, &e);
        }
        Ok(e)
    }

    /// Checks A(r) ∈ N(G) symbolically for r > 0, then exactly at r = 2, 1/3 and −1.
    /// Returns the symbolic quotient value r ↦ A(r)G.
    pub fn lands_in_normalizer(&self, g: GroupId, policy: &ZeroTestPolicy) -> Result<SymbolicQuotient, GroupError> {
        let r = Symbol::action();
        let a = self.eval_symbolic(&r)?;
        let v = g.normalizer_expr(&a, policy)?;
        for s in [Q::from_integer(2.into()), Q::new(1.into(), 3.into()), -Q::one()] {
            let m = self.eval(&s)?;
            match QMatrix::from_expr(&m) {
                Some(exact) => {
                    g.normalizer_p(&exact)?;
                }
                None => {
                    g.normalizer_expr(&m, policy)?;
                }
            }
        }
        Ok(v)
    }

    /// The value of r ↦ A(r)G at r = −1.
    pub fn quotient_at_minus_one(&self, g: GroupId) -> Result<QuotientValue, GroupError> {
        g.normalizer_p(&self.c)
    }

    /// A1 ≡ A2 mod G: A1(r)A2(r)^{-1} ∈ G for symbolic r > 0 and for r = −1.
    pub fn coset_eq(&self, o: &DegreeHom, g: GroupId, policy: &ZeroTestPolicy) -> Result<bool, GroupError> {
        self.lands_in_normalizer(g, policy)?;
        o.lands_in_normalizer(g, policy)?;
        let r = Symbol::action();
        let a1 = self.eval_symbolic(&r)?;
        // A2(r)^{-1} = A2(1/r) on the positive branch
        let a2inv = o.eval_positive(&Expr::var(&r).recip())?;
        if !g.member_expr(&a1.mul(&a2inv)?, policy)? {
            return Ok(false);
        }
        g.member(&self.c.mul(&o.c)?)
    }
}

/// Rational eigenvalues of M with algebraic multiplicities, or `None` when the
/// characteristic polynomial does not split over ℚ.
pub fn eigenvalues(m: &QMatrix) -> Option<Vec<(Q, usize)>> {
    let mut poly = m.charpoly();
    let n = poly.len() - 1;
    let mut out = Vec::new();
    let mut zeros = 0;
    while poly.len() > 1 && poly[0].is_zero() {
        poly.remove(0);
        zeros += 1;
    }
    if zeros > 0 {
        out.push((Q::zero(), zeros));
    }
    // integer coefficients for the rational root test
    let lcm = poly.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut ints: Vec<BigInt> = poly.iter().map(|c| (c * Q::from_integer(lcm.clone())).to_integer()).collect();
    let candidates = {
        let a0 = ints[0].abs();
        let an = ints[ints.len() - 1].abs();
        let mut c = Vec::new();
        for p in divisors(&a0) {
            for q in divisors(&an) {
                let v = Q::new(p.clone(), q);
                c.push(v.clone());
                c.push(-v);
            }
        }
        c.sort();
        c.dedup();
        c
    };
    for cand in candidates {
        let mut mult = 0;
        loop {
            if ints.len() <= 1 {
                break;
            }
            match divide_root(&ints, &cand) {
                Some(q) => {
                    ints = q;
                    mult += 1;
                }
                None => break,
            }
        }
        if mult > 0 {
            out.push((cand, mult));
        }
    }
    let total: usize = out.iter().map(|x| x.1).sum();
    (total == n).then_some(out)
}

/// Divides an integer polynomial (constant term first) by (t − root) when the
/// quotient stays integral after rescaling.
fn divide_root(p: &[BigInt], root: &Q) -> Option<Vec<BigInt>> {
    let deg = p.len() - 1;
    let qs: Vec<Q> = p.iter().map(|c| Q::from_integer(c.clone())).collect();
    // synthetic division from the top
    let mut quot = vec![Q::zero(); deg];
    let mut carry = Q::zero();
    for i in (0..=deg).rev() {
        let v = &qs[i] + &carry * root;
        if i == 0 {
            if !v.is_zero() {
                return None;
            }
        } else {
            quot[i - 1] = v.clone();
            carry = v;
        }
    }
    let lcm = quot.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    Some(quot.iter().map(|c| (c * Q::from_integer(lcm.clone())).to_integer()).collect())
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    if n.is_zero() {
        return vec![BigInt::one()];
    }
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            let e = n / &d;
            if e != d {
                out.push(e);
            }
        }
        d += 1;
    }
    out
}

fn matmul_f64(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Matrix exponential by scaling and squaring with a Taylor core.
fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 2f64.powi(-s);
    let x: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut term: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut sum = term.clone();
    for k in 1..20 {
        term = matmul_f64(&term, &x).into_iter().map(|r| r.into_iter().map(|v| v / k as f64).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = matmul_f64(&sum, &sum);
    }
    sum
}
