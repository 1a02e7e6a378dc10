//! Solver toolkit for semi-explicit partial differential-algebraic
//! systems in one space dimension: a coupled pair of diffusion
//! equations driven by an algebraic field that is pinned, at every
//! instant, by a fourth-order clamped boundary-value problem.
//!
//! The toolkit eliminates the algebraic field through a cached
//! constraint solve, integrates the reduced evolution in mild
//! (variation-of-constants) form with exponential steppers, and ships
//! an executable verification harness for the operator properties the
//! reduction rests on: dissipativity and maximality of the generator,
//! the contraction semigroup it induces, coercivity of the constraint
//! form, and local Lipschitz bounds for the nonlinearity.
//!
//! Organized as a library; the `pdae` binary exposes `solve`, `verify`,
//! and `converge` subcommands over JSON run configurations, and the
//! examples directory demonstrates each capability programmatically.

pub mod banded;
pub mod cli;
pub mod constraint;
pub mod error;
pub mod grid;
pub mod integrate;
pub mod operators;
pub mod reduced_rhs;

pub use error::{PdaeError, Result};
