//! Sato-Tate groups of the Jacobians of `y^2 = x^m + 1` (odd `m`) and numerical checks of a
//! generalized Gross-Koblitz formula.

pub mod arith;
pub mod cache;
pub mod character;
pub mod cli;
pub mod error;
pub mod galois;
pub mod gross_koblitz;
pub mod intmat;
pub mod cyclo;
pub mod empirics;
pub mod lattice;
pub mod lll;
pub mod numerics;
pub mod padic;
pub mod sato_tate;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
