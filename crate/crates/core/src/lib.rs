//! Spectra of polynomials in free semicircular and circular variables.
//!
//! Operators act on the full Fock space over words. Membership of a point
//! in the spectrum is decided from the decay of the resolvent coefficients,
//! from a 6x6 transfer matrix for quadratics in two circular variables, or
//! from closed forms for homogeneous polynomials and free walks. Ginibre
//! matrix models give eigenvalue clouds to compare against.

pub mod error;
pub mod families;
pub mod figure;
pub mod fock;
pub mod linalg;
pub mod ncpoly;
pub mod quadratic;
pub mod region;
pub mod resolvent;
pub mod rmt;
pub mod verdict;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use ncpoly::{Letter, NCPolynomial, QuadraticForm, VariableKind, Word};
pub use verdict::{Diagnostics, MembershipVerdict, Verdict};
