//! Finite fields, matrices over them, and exact rationals for read accounting.

pub mod field;
pub mod matrix;
pub mod rational;

pub use field::{Field, FieldSpec};
pub use matrix::{cauchy_matrix, Mat};
pub use rational::Ratio;
