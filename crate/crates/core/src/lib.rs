//! Exact symbolic kernel for Novikov conformal algebras.
//!
//! The crate is organised bottom-up:
//!
//! - [`exactnum`]: rationals, binomials, the exact sparse solver
//! - [`diffpoly`]: differential polynomials in `a^(p)(n)` with weight and `d`
//! - [`distribution`]: finite formal distributions, coefficients, residues
//! - [`confalg`]: presented conformal algebras and lambda-bracket calculus
//! - [`coeffalg`]: the coefficient algebra of a presented conformal algebra
//! - [`idealkit`]: locality-generator families and bounded ideal membership
//! - [`embedharness`]: scenario runners for the embedding and counterexample
//! - [`dsl`]: the `.cnv` presentation and check-script language

pub mod exactnum;
pub mod diffpoly;
pub mod distribution;
pub mod sampling;
pub mod confalg;
pub mod coeffalg;
pub mod idealkit;
pub mod embedharness;
pub mod dsl;

pub use diffpoly::{DiffPoly, DiffVar, Gen, Monomial, Weight};
pub use distribution::{Distribution, FVar, Laurent};
pub use exactnum::Rational;
