//! Exact computation of Fourier–Mukai partners of abelian varieties given as
//! polarizable complex tori.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod io;
pub mod lattice_core;
pub mod partners;
pub mod product_audit;
pub mod regress;
pub mod slopes;
pub mod varieties;

pub use error::{Error, Result};
