//! Symbolic expression kernel.
//!
//! Expressions are hash-consed: building the same expression twice yields the
//! same node, so equality and hashing are pointer-cheap. Construction always
//! goes through the smart constructors in [`build`], which flatten, collect
//! like terms and powers, fold constants and sort operands canonically. There
//! is no expansion of products over sums; identities that need expansion are
//! left to [`ZeroTestPolicy`].

mod build;
mod eval;
mod matrix;
mod node;
mod ops;
mod parse;
mod print;
mod zero;

pub use build::{add, func, mul, pow, q, qr};
pub use eval::{EvalError, Evaluated, Evaluator, Point, Value};
pub use matrix::{ExprMatrix, MatrixError};
pub use node::{canonical_cmp, Assumption, Expr, Func, Kind, SignSet, Symbol, Q};
pub use ops::{DiffError, Differentiator, Substituter};
pub use parse::{parse, parse_with, ParseError};
pub use zero::{Constraint, Relation, Witness, ZeroTestError, ZeroTestPolicy, ZeroVerdict};
