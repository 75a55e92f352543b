use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::node::{Expr, Symbol};
use super::ops::DiffError;
use super::zero::{ZeroTestError, ZeroTestPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular on the sampled domain")]
    Singular,
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// Dense row-major matrix of expressions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl fmt::Debug for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl std::ops::Index<(usize, usize)> for ExprMatrix {
    type Output = Expr;
    fn index(&self, (i, j): (usize, usize)) -> &Expr {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ExprMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Expr {
        &mut self.data[i * self.cols + j]
    }
}

impl ExprMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExprMatrix { rows, cols, data: vec![Expr::zero(); rows * cols] }
    }
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Expr::one();
        }
        m
    }
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ExprMatrix { rows, cols, data }
    }
    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(MatrixError::Shape("ragged rows".into()));
        }
        Ok(ExprMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }
    pub fn diagonal(d: &[Expr]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, e) in d.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn entries(&self) -> &[Expr] {
        &self.data
    }
    pub fn row(&self, i: usize) -> Vec<Expr> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }
    pub fn col(&self, j: usize) -> Vec<Expr> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }
    pub fn map(&self, f: impl FnMut(&Expr) -> Expr) -> Self {
        ExprMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
    pub fn try_map<E>(&self, f: impl FnMut(&Expr) -> Result<Expr, E>) -> Result<Self, E> {
        Ok(ExprMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect::<Result<_, _>>()? })
    }
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }
    pub fn scale(&self, c: &Expr) -> Self {
        self.map(|e| e * c)
    }
    pub fn add(&self, o: &Self) -> Result<Self, MatrixError> {
        self.same_shape(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &o[(i, j)]))
    }
    pub fn sub(&self, o: &Self) -> Result<Self, MatrixError> {
        self.same_shape(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &o[(i, j)]))
    }
    fn same_shape(&self, o: &Self) -> Result<(), MatrixError> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(MatrixError::Shape(format!("{}x{} vs {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        Ok(())
    }
    pub fn mul(&self, o: &Self) -> Result<Self, MatrixError> {
        if self.cols != o.rows {
            return Err(MatrixError::Shape(format!("{}x{} times {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        Ok(Self::from_fn(self.rows, o.cols, |i, j| {
            Expr::add_all((0..self.cols).map(|k| &self[(i, k)] * &o[(k, j)]))
        }))
    }
    pub fn mul_vec(&self, v: &[Expr]) -> Result<Vec<Expr>, MatrixError> {
        if self.cols != v.len() {
            return Err(MatrixError::Shape(format!("{}x{} times vector of {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows).map(|i| Expr::add_all((0..self.cols).map(|k| &self[(i, k)] * &v[k]))).collect())
    }
    pub fn subst(&self, map: &HashMap<Symbol, Expr>) -> Self {
        let mut s = super::ops::Substituter::new(map);
        self.map(|e| s.apply(e))
    }
    pub fn subst1(&self, v: &Symbol, by: &Expr) -> Self {
        let mut m = HashMap::new();
        m.insert(v.clone(), by.clone());
        self.subst(&m)
    }
    pub fn diff(&self, v: &Symbol) -> Result<Self, MatrixError> {
        let mut d = super::ops::Differentiator::new(v);
        Ok(self.try_map(|e| d.diff(e))?)
    }
    pub fn is_zero(&self, policy: &ZeroTestPolicy) -> Result<bool, MatrixError> {
        Ok(policy.all_zero(&self.data)?)
    }
    pub fn equals(&self, o: &Self, policy: &ZeroTestPolicy) -> Result<bool, MatrixError> {
        self.sub(o)?.is_zero(policy)
    }

    fn pivot(&self, col: usize, from: usize, policy: &ZeroTestPolicy) -> Result<Option<usize>, MatrixError> {
        // constant pivots first, then the first entry that is not identically zero
        for i in from..self.rows {
            if self[(i, col)].as_const().is_some_and(|c| !num_traits::Zero::is_zero(c)) {
                return Ok(Some(i));
            }
        }
        for i in from..self.rows {
            let e = &self[(i, col)];
            if !e.is_zero_literal() && !policy.is_zero(e)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn det(&self, policy: &ZeroTestPolicy) -> Result<Expr, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Expr::one());
        }
        if n == 1 {
            return Ok(self.data[0].clone());
        }
        if n == 2 {
            return Ok(&self[(0, 0)] * &self[(1, 1)] - &self[(0, 1)] * &self[(1, 0)]);
        }
        if n == 3 {
            let m = |i, j| &self[(i, j)];
            return Ok(m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)));
        }
        let mut a = self.clone();
        let mut det = Expr::one();
        for c in 0..n {
            let Some(p) = a.pivot(c, c, policy)? else {
                return Ok(Expr::zero());
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let piv = a[(c, c)].clone();
            det = &det * &piv;
            let inv = piv.recip();
            for i in c + 1..n {
                let f = &a[(i, c)] * &inv;
                if f.is_zero_literal() {
                    continue;
                }
                for j in c..n {
                    let v = &a[(i, j)] - &f * &a[(c, j)];
                    a[(i, j)] = v;
                }
            }
        }
        Ok(det)
    }

    /// Gauss-Jordan inverse with pivots chosen by the zero test.
    pub fn inverse(&self, policy: &ZeroTestPolicy) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        if (2..=3).contains(&n) && self.data.iter().any(|e| e.as_const().is_none()) {
            return self.adjugate_inverse(policy);
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let Some(p) = a.pivot(c, c, policy)? else {
                return Err(MatrixError::Singular);
            };
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            let piv_inv = a[(c, c)].recip();
            if !piv_inv.is_one_literal() {
                for j in 0..n {
                    a[(c, j)] = &a[(c, j)] * &piv_inv;
                    inv[(c, j)] = &inv[(c, j)] * &piv_inv;
                }
            }
            for i in 0..n {
                if i == c {
                    continue;
                }
                let f = a[(i, c)].clone();
                if f.is_zero_literal() {
                    continue;
                }
                for j in 0..n {
                    let v = &a[(i, j)] - &f * &a[(c, j)];
                    a[(i, j)] = v;
                    let w = &inv[(i, j)] - &f * &inv[(c, j)];
                    inv[(i, j)] = w;
                }
            }
        }
        Ok(inv)
    }

    /// Inverse as adjugate over determinant; keeps one common denominator.
    fn adjugate_inverse(&self, policy: &ZeroTestPolicy) -> Result<Self, MatrixError> {
        let n = self.rows;
        let det = self.det(policy)?;
        if policy.is_zero(&det)? {
            return Err(MatrixError::Singular);
        }
        let dinv = det.recip();
        let minor = |skip_r: usize, skip_c: usize| -> Result<Expr, MatrixError> {
            let rows: Vec<Vec<Expr>> = (0..n)
                .filter(|&i| i != skip_r)
                .map(|i| (0..n).filter(|&j| j != skip_c).map(|j| self[(i, j)].clone()).collect())
                .collect();
            ExprMatrix::from_rows(rows)?.det(policy)
        };
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let m = minor(j, i)?;
                let c = if (i + j) % 2 == 0 { m } else { -m };
                out[(i, j)] = &c * &dinv;
            }
        }
        Ok(out)
    }
}
