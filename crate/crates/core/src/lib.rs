//! Degenerate oscillatory integrals with Hessian-determinant cutoffs.
//!
//! The crate is organised around the pieces of the analysis:
//!
//! - [`polyphase`]: exact polynomial phases and their derivatives;
//! - [`newton`]: Newton polygons, edge polynomials and fold checks;
//! - [`geomschrod`]: the Schrödinger-type operator attached to a
//!   nondegenerate critical point and the stationary-phase expansion it
//!   generates;
//! - [`foldcut`]: the fold curve of a nondegenerate cutoff and the reduced
//!   one-dimensional phase along it;
//! - [`oscquad`]: brute-force panel quadrature for the integrals above;
//! - [`vdc`]: explicit one-dimensional van der Corput type bounds;
//! - [`decayscan`]: decay-rate scans, exponent fitting and dyadic box
//!   diagnostics.

pub mod bump;
pub mod decayscan;
pub mod error;
pub mod foldcut;
pub mod gauss;
pub mod geomschrod;
pub mod interval;
pub mod jet;
pub mod newton;
pub mod oscquad;
pub mod polyphase;
pub mod vdc;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use polyphase::{rat, rat_int, FloatPoly, PolyPhase, Rational};
