//! Coordinate tensor calculus on a single chart.
//!
//! Conventions: (α∧β)(X,Y) = α(X)β(Y) − α(Y)β(X) with no factorials,
//! dη(X,Y) = X(η(Y)) − Y(η(X)) − η([X,Y]), a⊙b = ½(a⊗b + b⊗a), and
//! R(X,Y)Z = ∇_X∇_YZ − ∇_Y∇_XZ − ∇_{[X,Y]}Z.

mod chart;
mod fields;
mod maps;
mod metric;

use thiserror::Error;

use crate::exprcore::{DiffError, MatrixError, ParseError, ZeroTestError};

pub use chart::Chart;
pub use fields::{gradient, increasing_indices, Endo11, KForm, SymTensor2, VectorField};
pub use maps::SmoothMap;
pub use metric::{Christoffel, Metric, Riemann};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalcError {
    #[error("chart mismatch: {0} vs {1}")]
    ChartMismatch(String, String),
    #[error("degree mismatch: expected {expected}, got {got}")]
    Degree { expected: usize, got: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("coefficient matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("metric is degenerate on the sampled domain")]
    Degenerate,
    #[error("pushforward needs an explicit inverse map")]
    MissingInverse,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[cfg(test)]
mod tests;
