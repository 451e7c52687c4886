//! Order isomorphisms between operator intervals of finite-dimensional
//! C*-algebras: Loewner-order primitives, the projection lattice, effect
//! algebra identities, canonical map families and algorithms that recover
//! canonical parameters from black-box order isomorphisms.

// Negated comparisons are deliberate: they send NaN down the failure path.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod decompose;
pub mod effects;
pub mod error;
pub mod harness;
pub mod interchange;
pub mod interval;
pub mod maps;
pub mod projections;
pub mod random;

pub use algebra::{leq, lt_strict, Algebra, CMat, Element, Tolerances};
pub use error::{Error, Result};
pub use interval::IntervalKind;
