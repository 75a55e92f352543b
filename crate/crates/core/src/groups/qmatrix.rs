use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::{One, Signed, Zero};

use crate::exprcore::{Expr, ExprMatrix, Q};

use super::GroupError;

/// Dense exact rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QMatrix {
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

impl Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }
    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Q::one())
    }
    pub fn scalar(n: usize, c: Q) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c.clone();
        }
        m
    }
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMatrix { rows, cols, data }
    }
    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self, GroupError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(GroupError::Size("ragged rows".into()));
        }
        Ok(QMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }
    pub fn from_i64(rows: &[&[i64]]) -> Result<Self, GroupError> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| Q::from_integer(x.into())).collect()).collect())
    }
    pub fn diagonal(d: &[Q]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, e) in d.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }
    /// Block matrix [[a, b], [c, d]] with square k×k blocks.
    pub fn blocks(a: &QMatrix, b: &QMatrix, c: &QMatrix, d: &QMatrix) -> Self {
        let k = a.rows;
        Self::from_fn(2 * k, 2 * k, |i, j| match (i < k, j < k) {
            (true, true) => a[(i, j)].clone(),
            (true, false) => b[(i, j - k)].clone(),
            (false, true) => c[(i - k, j)].clone(),
            (false, false) => d[(i - k, j - k)].clone(),
        })
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
    pub fn entries(&self) -> &[Q] {
        &self.data
    }
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }
    pub fn scale(&self, c: &Q) -> Self {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }
    fn same_shape(&self, o: &Self) -> Result<(), GroupError> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(GroupError::Size(format!("{}x{} vs {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        Ok(())
    }
    pub fn add(&self, o: &Self) -> Result<Self, GroupError> {
        self.same_shape(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &o[(i, j)]))
    }
    pub fn sub(&self, o: &Self) -> Result<Self, GroupError> {
        self.same_shape(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &o[(i, j)]))
    }
    pub fn mul(&self, o: &Self) -> Result<Self, GroupError> {
        if self.cols != o.rows {
            return Err(GroupError::Size(format!("{}x{} times {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        Ok(Self::from_fn(self.rows, o.cols, |i, j| {
            let mut s = Q::zero();
            for k in 0..self.cols {
                if !self[(i, k)].is_zero() && !o[(k, j)].is_zero() {
                    s += &self[(i, k)] * &o[(k, j)];
                }
            }
            s
        }))
    }
    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::identity(self.rows);
        for _ in 0..n {
            out = out.mul(self).expect("square");
        }
        out
    }
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }
    /// `Some(c)` when the matrix is c·I.
    pub fn as_scalar(&self) -> Option<Q> {
        if !self.is_square() || self.rows == 0 {
            return None;
        }
        let c = self[(0, 0)].clone();
        (0..self.rows)
            .all(|i| (0..self.cols).all(|j| if i == j { self[(i, j)] == c } else { self[(i, j)].is_zero() }))
            .then_some(c)
    }

    pub fn det(&self) -> Result<Q, GroupError> {
        if !self.is_square() {
            return Err(GroupError::Size("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Q::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a[(i, c)].is_zero()) else {
                return Ok(Q::zero());
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let piv = a[(c, c)].clone();
            det *= &piv;
            for i in c + 1..n {
                let f = &a[(i, c)] / &piv;
                if f.is_zero() {
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

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn inverse(&self) -> Result<Self, GroupError> {
        if !self.is_square() {
            return Err(GroupError::Size("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let p = (c..n).find(|&i| !a[(i, c)].is_zero()).ok_or(GroupError::Singular)?;
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            let piv = a[(c, c)].clone();
            for j in 0..n {
                a[(c, j)] = &a[(c, j)] / &piv;
                inv[(c, j)] = &inv[(c, j)] / &piv;
            }
            for i in 0..n {
                if i == c || a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone();
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

    /// Basis of the right nullspace, from the reduced row echelon form.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let (rref, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -rref[(r, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for c in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(p) = (row..a.rows).find(|&i| !a[(i, c)].is_zero()) else {
                continue;
            };
            a.swap_rows(p, row);
            let piv = a[(row, c)].clone();
            for j in 0..a.cols {
                a[(row, j)] = &a[(row, j)] / &piv;
            }
            for i in 0..a.rows {
                if i != row && !a[(i, c)].is_zero() {
                    let f = a[(i, c)].clone();
                    for j in 0..a.cols {
                        let v = &a[(i, j)] - &f * &a[(row, j)];
                        a[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            row += 1;
        }
        (a, pivots)
    }

    /// Characteristic polynomial det(tI − M), coefficients from the constant term up.
    pub fn charpoly(&self) -> Vec<Q> {
        // Faddeev–LeVerrier: M_k = M·M_{k−1} + c_{n−k+1} I, c_{n−k} = −tr(M·M_k)/k
        let n = self.rows;
        let mut coeffs = vec![Q::zero(); n + 1];
        coeffs[n] = Q::one();
        let mut mk = QMatrix::zeros(n, n);
        for k in 1..=n {
            let prev = self.mul(&mk).expect("square").add(&QMatrix::scalar(n, coeffs[n - k + 1].clone())).expect("square");
            let am = self.mul(&prev).expect("square");
            let tr: Q = (0..n).map(|i| am[(i, i)].clone()).sum();
            coeffs[n - k] = -tr / Q::from_integer((k as i64).into());
            mk = prev;
        }
        coeffs
    }

    pub fn to_expr(&self) -> ExprMatrix {
        ExprMatrix::from_fn(self.rows, self.cols, |i, j| Expr::constant(self[(i, j)].clone()))
    }

    /// Exact conversion from a matrix whose entries are all rational constants.
    pub fn from_expr(m: &ExprMatrix) -> Option<QMatrix> {
        let data: Option<Vec<Q>> = m.entries().iter().map(|e| e.as_const().cloned()).collect();
        Some(QMatrix { rows: m.rows(), cols: m.cols(), data: data? })
    }

    pub fn max_abs(&self) -> Q {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(Q::zero)
    }
}
