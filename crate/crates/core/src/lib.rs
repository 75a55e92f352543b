//! Chart-level engine for homogeneous G-structures on line bundles.

pub mod exprcore;
pub mod random;
pub mod calculus;
pub mod groups;
pub mod linebundle;
pub mod homframe;
pub mod contact;
pub mod cosymplectic;
pub mod complex;
pub mod riemannian;
