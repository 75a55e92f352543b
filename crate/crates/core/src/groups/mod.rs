//! The structure groups Sp_k, GL_k(ℂ), O_m and GL_m inside GL_{n+1}(ℝ), their
//! normalizers, the splittings of N(G) → N(G)/G, and degree homomorphisms
//! ℝ^× → GL_{n+1}(ℝ).
//!
//! Exact work happens in [`QMatrix`]; the `*_expr` variants decide the same
//! conditions for matrices of expressions through the zero test.

mod hom;
mod qmatrix;


use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::exprcore::{Expr, ExprMatrix, MatrixError, Symbol, ZeroTestError, ZeroTestPolicy, Q};

pub use hom::{eigenvalues, DegreeHom, HomClass};
pub use qmatrix::QMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("size mismatch: {0}")]
    Size(String),
    #[error("matrix is singular")]
    Singular,
    #[error("not in the normalizer of {group}: {reason}")]
    NotInNormalizer { group: GroupId, reason: String },
    #[error("invalid quotient value {value} for {group}")]
    InvalidValue { group: GroupId, value: String },
    #[error("invalid degree homomorphism: {0}")]
    InvalidHom(String),
    #[error("B has eigenvalues outside ℚ; only pointwise numeric evaluation is available")]
    Unsupported,
    #[error("r = 0 is not in ℝ^×")]
    ZeroParameter,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupId {
    Sp(usize),
    Glc(usize),
    O(usize),
    Gl(usize),
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Sp(k) => write!(f, "Sp({k})"),
            GroupId::Glc(k) => write!(f, "GLC({k})"),
            GroupId::O(m) => write!(f, "O({m})"),
            GroupId::Gl(m) => write!(f, "GL({m})"),
        }
    }
}

/// An element of N(G)/G: ℝ^× for Sp, ℤ₂ for GL(ℂ), ℝ^×₊ for O, trivial for GL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientValue {
    Scalar(Q),
    Parity(bool),
    Trivial,
}

impl fmt::Display for QuotientValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuotientValue::Scalar(q) => write!(f, "{q}"),
            QuotientValue::Parity(p) => write!(f, "{}", if *p { "1" } else { "0" }),
            QuotientValue::Trivial => f.write_str("trivial"),
        }
    }
}

/// Quotient value of a matrix of expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolicQuotient {
    Scalar(Expr),
    Parity(bool),
    Trivial,
}

impl fmt::Display for SymbolicQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolicQuotient::Scalar(e) => write!(f, "{e}"),
            SymbolicQuotient::Parity(p) => write!(f, "{}", if *p { "1" } else { "0" }),
            SymbolicQuotient::Trivial => f.write_str("trivial"),
        }
    }
}

/// J = [[0, I_k], [−I_k, 0]].
pub fn std_j(k: usize) -> QMatrix {
    let z = QMatrix::zeros(k, k);
    let i = QMatrix::identity(k);
    QMatrix::blocks(&z, &i, &i.scale(&-Q::one()), &z)
}

/// V = [[0, I_k], [I_k, 0]], the splitting of the nontrivial parity.
pub fn block_swap(k: usize) -> QMatrix {
    let z = QMatrix::zeros(k, k);
    let i = QMatrix::identity(k);
    QMatrix::blocks(&z, &i, &i, &z)
}

impl GroupId {
    /// Size of the ambient GL.
    pub fn ambient(&self) -> usize {
        match *self {
            GroupId::Sp(k) | GroupId::Glc(k) => 2 * k,
            GroupId::O(m) | GroupId::Gl(m) => m,
        }
    }

    fn check_size(&self, m: usize, n: usize) -> Result<(), GroupError> {
        if m != self.ambient() || n != self.ambient() {
            return Err(GroupError::Size(format!("{m}x{n} matrix for {self}")));
        }
        Ok(())
    }

    fn half(&self) -> usize {
        self.ambient() / 2
    }

    pub fn member(&self, m: &QMatrix) -> Result<bool, GroupError> {
        self.check_size(m.rows(), m.cols())?;
        let n = self.ambient();
        Ok(match self {
            GroupId::Sp(k) => {
                let j = std_j(*k);
                m.transpose().mul(&j)?.mul(m)? == j
            }
            GroupId::Glc(k) => {
                let j = std_j(*k);
                !m.det()?.is_zero() && m.mul(&j)? == j.mul(m)?
            }
            GroupId::O(_) => m.transpose().mul(m)? == QMatrix::identity(n),
            GroupId::Gl(_) => !m.det()?.is_zero(),
        })
    }

    /// The defining product whose scalarity decides membership in N(G).
    pub fn normalizer_product(&self, b: &QMatrix) -> Result<QMatrix, GroupError> {
        self.check_size(b.rows(), b.cols())?;
        if b.det()?.is_zero() {
            return Err(GroupError::Singular);
        }
        Ok(match self {
            GroupId::Sp(k) => {
                let j = std_j(*k);
                j.transpose().mul(&b.transpose())?.mul(&j)?.mul(b)?
            }
            GroupId::Glc(k) => {
                let j = std_j(*k);
                j.inverse()?.mul(&b.inverse()?)?.mul(&j)?.mul(b)?
            }
            GroupId::O(_) => b.transpose().mul(b)?,
            GroupId::Gl(m) => QMatrix::identity(*m),
        })
    }

    pub fn normalizer_p(&self, b: &QMatrix) -> Result<QuotientValue, GroupError> {
        let prod = self.normalizer_product(b)?;
        let not_in = |reason: String| GroupError::NotInNormalizer { group: *self, reason };
        let c = prod.as_scalar().ok_or_else(|| not_in(format!("product {prod} is not scalar")))?;
        match self {
            GroupId::Sp(_) => Ok(QuotientValue::Scalar(c)),
            GroupId::Glc(_) => {
                if c.is_one() {
                    Ok(QuotientValue::Parity(false))
                } else if c == -Q::one() {
                    Ok(QuotientValue::Parity(true))
                } else {
                    Err(not_in(format!("product is {c}·I, not ±I")))
                }
            }
            GroupId::O(_) => {
                if c.is_positive() {
                    Ok(QuotientValue::Scalar(c))
                } else {
                    Err(not_in(format!("product is {c}·I with non-positive scalar")))
                }
            }
            GroupId::Gl(_) => Ok(QuotientValue::Trivial),
        }
    }

    pub fn in_normalizer(&self, b: &QMatrix) -> Result<bool, GroupError> {
        match self.normalizer_p(b) {
            Ok(_) => Ok(true),
            Err(GroupError::NotInNormalizer { .. }) | Err(GroupError::Singular) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// The neutral element of N(G)/G.
    pub fn neutral(&self) -> QuotientValue {
        match self {
            GroupId::Sp(_) | GroupId::O(_) => QuotientValue::Scalar(Q::one()),
            GroupId::Glc(_) => QuotientValue::Parity(false),
            GroupId::Gl(_) => QuotientValue::Trivial,
        }
    }

    pub fn splitting(&self, v: &QuotientValue) -> Result<QMatrix, GroupError> {
        let invalid = || GroupError::InvalidValue { group: *self, value: v.to_string() };
        let n = self.ambient();
        match (self, v) {
            (GroupId::Sp(k), QuotientValue::Scalar(r)) if !r.is_zero() => {
                let mut d = vec![Q::one(); *k];
                d.extend(std::iter::repeat_n(r.clone(), *k));
                Ok(QMatrix::diagonal(&d))
            }
            (GroupId::Glc(_), QuotientValue::Parity(false)) => Ok(QMatrix::identity(n)),
            (GroupId::Glc(k), QuotientValue::Parity(true)) => Ok(block_swap(*k)),
            (GroupId::O(_), QuotientValue::Scalar(r)) if r.is_positive() => {
                let s = rational_sqrt(r).ok_or_else(invalid)?;
                Ok(QMatrix::scalar(n, s))
            }
            (GroupId::Gl(_), QuotientValue::Trivial) => Ok(QMatrix::identity(n)),
            _ => Err(invalid()),
        }
    }

    /// Splitting with expression entries; the O splitting √r·I is exact for every r > 0 here.
    pub fn splitting_expr(&self, v: &SymbolicQuotient) -> Result<ExprMatrix, GroupError> {
        let n = self.ambient();
        match (self, v) {
            (GroupId::Sp(k), SymbolicQuotient::Scalar(r)) => {
                let mut d = vec![Expr::one(); *k];
                d.extend(std::iter::repeat_n(r.clone(), *k));
                Ok(ExprMatrix::diagonal(&d))
            }
            (GroupId::O(_), SymbolicQuotient::Scalar(r)) => Ok(ExprMatrix::identity(n).scale(&r.sqrt())),
            (GroupId::Glc(_), SymbolicQuotient::Parity(p)) => {
                Ok(self.splitting(&QuotientValue::Parity(*p))?.to_expr())
            }
            (GroupId::Gl(_), SymbolicQuotient::Trivial) => Ok(ExprMatrix::identity(n)),
            _ => Err(GroupError::InvalidValue { group: *self, value: v.to_string() }),
        }
    }

    /// Membership of a matrix of expressions, decided by the zero test.
    pub fn member_expr(&self, m: &ExprMatrix, policy: &ZeroTestPolicy) -> Result<bool, GroupError> {
        self.check_size(m.rows(), m.cols())?;
        let n = self.ambient();
        match self {
            GroupId::Sp(k) => {
                let j = std_j(*k).to_expr();
                Ok(m.transpose().mul(&j)?.mul(m)?.equals(&j, policy)?)
            }
            GroupId::Glc(k) => {
                let j = std_j(*k).to_expr();
                if policy.is_zero(&m.det(policy)?)? {
                    return Ok(false);
                }
                Ok(m.mul(&j)?.equals(&j.mul(m)?, policy)?)
            }
            GroupId::O(_) => Ok(m.transpose().mul(m)?.equals(&ExprMatrix::identity(n), policy)?),
            GroupId::Gl(_) => Ok(!policy.is_zero(&m.det(policy)?)?),
        }
    }

    /// Quotient value of a matrix of expressions, or `NotInNormalizer`.
    /// For GL(ℂ) the equivalent condition JB = ±BJ is used to avoid B^{-1}.
    pub fn normalizer_expr(&self, b: &ExprMatrix, policy: &ZeroTestPolicy) -> Result<SymbolicQuotient, GroupError> {
        self.check_size(b.rows(), b.cols())?;
        let n = self.ambient();
        let not_in = |reason: String| GroupError::NotInNormalizer { group: *self, reason };
        if policy.is_zero(&b.det(policy)?)? {
            return Err(GroupError::Singular);
        }
        match self {
            GroupId::Glc(k) => {
                let j = std_j(*k).to_expr();
                let jb = j.mul(b)?;
                let bj = b.mul(&j)?;
                if jb.equals(&bj, policy)? {
                    Ok(SymbolicQuotient::Parity(false))
                } else if jb.equals(&bj.scale(&Expr::int(-1)), policy)? {
                    Ok(SymbolicQuotient::Parity(true))
                } else {
                    Err(not_in("J·B is neither B·J nor −B·J".into()))
                }
            }
            GroupId::Gl(_) => Ok(SymbolicQuotient::Trivial),
            GroupId::Sp(k) => {
                let j = std_j(*k).to_expr();
                let prod = j.transpose().mul(&b.transpose())?.mul(&j)?.mul(b)?;
                let c = scalar_part(&prod, n, policy)?.ok_or_else(|| not_in(format!("product {prod} is not scalar")))?;
                Ok(SymbolicQuotient::Scalar(c))
            }
            GroupId::O(_) => {
                let prod = b.transpose().mul(b)?;
                let c = scalar_part(&prod, n, policy)?.ok_or_else(|| not_in(format!("product {prod} is not scalar")))?;
                if !is_positive_on_samples(&c, policy)? {
                    return Err(not_in(format!("scalar {c} is not positive")));
                }
                Ok(SymbolicQuotient::Scalar(c))
            }
        }
    }

    /// Random element of G from a Cayley transform of a random Lie algebra
    /// element, times a reflection half of the time for O.
    pub fn random_element<R: Rng>(&self, rng: &mut R) -> QMatrix {
        let n = self.ambient();
        loop {
            let x = self.random_algebra(rng);
            let id = QMatrix::identity(n);
            let Ok(inv) = id.sub(&x).expect("square").inverse() else { continue };
            let mut g = inv.mul(&id.add(&x).expect("square")).expect("square");
            if g.det().expect("square").is_zero() {
                continue;
            }
            if matches!(self, GroupId::O(_)) && rng.random_bool(0.5) {
                let mut d = vec![Q::one(); n];
                d[0] = -Q::one();
                g = g.mul(&QMatrix::diagonal(&d)).expect("square");
            }
            return g;
        }
    }

    fn random_algebra<R: Rng>(&self, rng: &mut R) -> QMatrix {
        let n = self.ambient();
        let mut small = || Q::new(rng.random_range(-3i64..=3).into(), rng.random_range(1i64..=3).into());
        match self {
            GroupId::Sp(k) => {
                // X = J·S with S symmetric satisfies XᵗJ + JX = 0
                let mut s = QMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = small();
                        s[(i, j)] = v.clone();
                        s[(j, i)] = v;
                    }
                }
                std_j(*k).mul(&s).expect("square")
            }
            GroupId::Glc(_) => {
                let k = self.half();
                let a = QMatrix::from_fn(k, k, |_, _| small());
                let b = QMatrix::from_fn(k, k, |_, _| small());
                QMatrix::blocks(&a, &b.scale(&-Q::one()), &b, &a)
            }
            GroupId::O(_) => {
                let mut x = QMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i + 1..n {
                        let v = small();
                        x[(i, j)] = v.clone();
                        x[(j, i)] = -v;
                    }
                }
                x
            }
            GroupId::Gl(_) => QMatrix::from_fn(n, n, |_, _| small()),
        }
    }

    /// Generators of the Lie algebra of GL_k(ℂ) as real 2k×2k matrices.
    pub fn glc_generators(k: usize) -> Vec<QMatrix> {
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let mut e = QMatrix::zeros(k, k);
                e[(i, j)] = Q::one();
                let z = QMatrix::zeros(k, k);
                out.push(QMatrix::blocks(&e, &z, &z, &e));
                out.push(QMatrix::blocks(&z, &e.scale(&-Q::one()), &e, &z));
            }
        }
        out
    }
}

/// Basis of the real matrices commuting with every generator of GL_k(ℂ).
pub fn glc_centralizer(k: usize) -> Vec<QMatrix> {
    let n = 2 * k;
    let gens = GroupId::glc_generators(k);
    // unknown C flattened row-major; each generator X contributes CX − XC = 0
    let mut rows = Vec::new();
    for x in &gens {
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![Q::zero(); n * n];
                for l in 0..n {
                    row[i * n + l] += &x[(l, j)];
                    row[l * n + j] -= &x[(i, l)];
                }
                rows.push(row);
            }
        }
    }
    let system = QMatrix::from_rows(rows).expect("rectangular system");
    system
        .nullspace()
        .into_iter()
        .map(|v| QMatrix::from_fn(n, n, |i, j| v[i * n + j].clone()))
        .collect()
}

fn scalar_part(m: &ExprMatrix, n: usize, policy: &ZeroTestPolicy) -> Result<Option<Expr>, GroupError> {
    let c = m[(0, 0)].clone();
    let mut diffs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            diffs.push(if i == j { &m[(i, j)] - &c } else { m[(i, j)].clone() });
        }
    }
    Ok(policy.all_zero(&diffs)?.then_some(c))
}

/// True when `e` is positive at every sample point of its free symbols.
pub fn is_positive_on_samples(e: &Expr, policy: &ZeroTestPolicy) -> Result<bool, GroupError> {
    if let Some(c) = e.as_const() {
        return Ok(c.is_positive());
    }
    if e.sign().subset_of(crate::exprcore::SignSet::POS) {
        return Ok(true);
    }
    let syms: Vec<Symbol> = e.free_symbols().into_iter().collect();
    let pts = policy.sample_points(&syms, policy.sample_count, e.fingerprint())?;
    for p in pts {
        match e.eval_at(&p) {
            Ok(v) if v.to_f64() > 0.0 => {}
            Ok(_) => return Ok(false),
            Err(_) => {}
        }
    }
    Ok(true)
}

/// Exact square root of a nonnegative rational, if it exists.
pub fn rational_sqrt(r: &Q) -> Option<Q> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| Q::new(n, d))
}
