//! Potential-theoretic diagnostics for iterated polynomials and Hénon maps.
//!
//! The crate evaluates Green functions with certified error, samples
//! equilibrium measures, finds all roots of `(f^n)^(m) - a` for high-degree
//! iterates, measures how fast their root measures approach the equilibrium
//! measure, computes canonical heights over the rationals, and studies the
//! shifted Jacobian determinants `det(D(f^n) - A)` of Hénon maps.

pub mod arith;
pub mod dynamics;
pub mod equidist;
pub mod henon;
pub mod error;
pub mod poly;
pub mod roots;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{CRational, CScalar, MpComplex, Precision, Ring, XComplex};
