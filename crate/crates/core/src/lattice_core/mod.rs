//! Exact integer and rational lattice arithmetic.

pub mod group;
pub mod lattice;
pub mod matrix;
pub mod normal_form;

pub use group::FiniteGroupStructure;
pub use lattice::Lattice;
pub use matrix::{int, int_mat, rat, Int, IntMat, Matrix, Rat, RatMat};
pub use normal_form::{hnf, integer_kernel, snf, Hnf, Snf};
